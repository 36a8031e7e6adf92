/*
 * Copyright 2026 The retrans Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// retrans: command-line front end for the retranslation simulator.
//
// Exit codes: 0 success, 1 internal error, 2 bad input or configuration.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retrans/core.hpp"
#include "retrans/errors.hpp"
#include "retrans/metrics.hpp"
#include "retrans/predict.hpp"
#include "retrans/sim.hpp"
#include "retrans/sweep.hpp"
#include "retrans/synthetic.hpp"

namespace {

using namespace retrans;

constexpr int kExitInternal = 1;
constexpr int kExitBadInput = 2;

void write_csv(const std::string& path, std::span<const TradeoffPoint> points) {
  if (path.empty() || path == "-") {
    write_tradeoff_csv(std::cout, points);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  write_tradeoff_csv(out, points);
}

struct RunOverrides {
  std::string config;
  std::optional<std::string> strategy;
  std::optional<int> k;
  std::optional<int> k_mask;
  std::optional<int> pred_k;
  std::optional<int> n;
  std::optional<std::string> predictor;
  std::optional<double> beta;
  std::optional<double> instability;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::optional<std::string> source;
  std::optional<std::string> reference;
  std::optional<std::string> label;
  std::optional<std::string> erasure;
  bool char_mode = false;
  std::string traces;
  std::string metrics = "-";

  RunConfig resolve() const {
    RunConfig cfg = load_run_config(config);
    if (strategy) cfg.strategy.kind = parse_strategy_kind(*strategy);
    if (predictor) cfg.strategy.predictor.strategy = parse_predictor_strategy(*predictor);
    if (k) {
      if (cfg.strategy.kind == StrategyKind::kMaskK) {
        cfg.strategy.k_mask = *k;
      } else {
        cfg.strategy.predictor.k = *k;
      }
    }
    if (k_mask) cfg.strategy.k_mask = *k_mask;
    if (pred_k) cfg.strategy.predictor.k = *pred_k;
    if (n) cfg.strategy.predictor.n = *n;
    if (beta) cfg.strategy.bias_beta = *beta;
    if (instability) cfg.translator.toy.instability = *instability;
    if (seed) {
      cfg.seed = *seed;
      cfg.strategy.predictor.seed = *seed;
    }
    if (parallelism) cfg.parallelism = *parallelism;
    if (source) cfg.source = *source;
    if (reference) cfg.reference = *reference;
    if (label) cfg.label = *label;
    if (erasure) {
      if (*erasure == "mean") {
        cfg.erasure = ErasureAggregation::kMeanOfSentences;
      } else if (*erasure == "corpus_ratio") {
        cfg.erasure = ErasureAggregation::kCorpusRatio;
      } else {
        throw InputError("--erasure must be 'mean' or 'corpus_ratio'");
      }
    }
    if (char_mode) cfg.char_mode = true;
    cfg.strategy.validate();
    if (cfg.parallelism < 1) throw InputError("--parallelism must be >= 1");
    return cfg;
  }
};

int cmd_run(const RunOverrides& opts) {
  const auto cfg = opts.resolve();
  const auto result = run_corpus(cfg);
  if (result.point.n_empty_final > 0) {
    std::cerr << "warning: " << result.point.n_empty_final
              << " sentence(s) have an empty final output; their AL is reported as 0\n";
  }
  if (!opts.traces.empty()) {
    write_traces(opts.traces, result.traces, {cfg.char_mode, run_config_hash(cfg), cfg.effective_label()});
    std::ofstream(opts.traces + ".config.json") << "{\"config_hash\": \"" << run_config_hash(cfg)
                                                << "\",\n\"config\": " << run_config_to_json(cfg) << "}\n";
  }
  write_csv(opts.metrics, std::span(&result.point, 1));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retranslation simulator: masking strategies, biased beam search and latency/flicker/quality metrics"};
  app.require_subcommand(1);

  // train-lm
  std::string lm_corpus, lm_out;
  int lm_order = 3;
  double lm_alpha = 0.1;
  auto* train = app.add_subcommand("train-lm", "Train an add-alpha n-gram LM on a source corpus");
  train->add_option("--corpus", lm_corpus, "Source text, one sentence per line")->required();
  train->add_option("--order", lm_order, "n-gram order (1-4)")->capture_default_str();
  train->add_option("--alpha", lm_alpha, "Additive smoothing constant")->capture_default_str();
  train->add_option("--out,-o", lm_out, "Output LM file")->required();

  // run
  RunOverrides run_opts;
  auto* run = app.add_subcommand("run", "Simulate a corpus under one strategy");
  run->add_option("config", run_opts.config, "Run config (JSON)")->required();
  run->add_option("--strategy", run_opts.strategy, "none | mask_k | dynamic | oracle");
  run->add_option("--k", run_opts.k, "Mask length for mask_k, extension length for dynamic");
  run->add_option("--k-mask", run_opts.k_mask, "Mask length for mask_k");
  run->add_option("--pred-k", run_opts.pred_k, "Tokens per source extension");
  run->add_option("--n", run_opts.n, "Number of source extensions");
  run->add_option("--predictor", run_opts.predictor, "lm_sample | lm_greedy | unknown | random");
  run->add_option("--beta", run_opts.beta, "Biased beam search weight in [0, 1]");
  run->add_option("--instability", run_opts.instability, "Toy translator instability");
  run->add_option("--seed", run_opts.seed, "Global seed");
  run->add_option("--parallelism,-j", run_opts.parallelism, "Worker threads");
  run->add_option("--source", run_opts.source, "Source corpus");
  run->add_option("--reference", run_opts.reference, "Reference corpus");
  run->add_option("--label", run_opts.label, "Strategy label for the CSV row");
  run->add_option("--erasure", run_opts.erasure, "Corpus NE aggregation: mean | corpus_ratio");
  run->add_flag("--char-mode", run_opts.char_mode, "Score target side on characters");
  run->add_option("--traces", run_opts.traces, "Write per-sentence traces (JSONL)");
  run->add_option("--metrics", run_opts.metrics, "Write the metrics CSV here (default stdout)");

  // sweep
  std::string sweep_spec, sweep_out = "-", sweep_traces;
  bool sweep_pareto = false;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run every cell of a sweep and tabulate AL/NE/BLEU");
  sweep->add_option("spec", sweep_spec, "Sweep spec (JSON)")->required();
  sweep->add_option("--out,-o", sweep_out, "CSV output (default stdout)");
  sweep->add_option("--traces-dir", sweep_traces, "Write each cell's traces here");
  sweep->add_option("--parallelism,-j", sweep_jobs, "Cells run concurrently")->capture_default_str();
  sweep->add_flag("--pareto", sweep_pareto, "Also emit the (AL, NE) Pareto frontier");

  // metrics
  std::vector<std::string> metric_files;
  std::string metric_erasure = "mean";
  auto* metrics = app.add_subcommand("metrics", "Recompute AL/NE/BLEU from trace files");
  metrics->add_option("traces", metric_files, "Trace JSONL files")->required();
  metrics->add_option("--erasure", metric_erasure, "mean | corpus_ratio")->capture_default_str();

  // mask-hist
  std::vector<std::string> hist_files;
  auto* hist = app.add_subcommand("mask-hist", "Histogram of mask lengths over non-final steps");
  hist->add_option("traces", hist_files, "Trace JSONL files")->required();

  // make-synthetic
  SyntheticSpec synth;
  std::string synth_out;
  auto* make = app.add_subcommand("make-synthetic", "Write the pinned synthetic corpus, lexicon and configs");
  make->add_option("--out,-o", synth_out, "Output directory")->required();
  make->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  make->add_option("--sentences", synth.n_sentences, "Test sentences")->capture_default_str();
  make->add_option("--train-sentences", synth.n_train_sentences, "LM training sentences")->capture_default_str();
  make->add_option("--vocab", synth.vocab_size, "Source vocabulary size")->capture_default_str();
  make->add_option("--min-len", synth.min_len, "Minimum sentence length")->capture_default_str();
  make->add_option("--max-len", synth.max_len, "Maximum sentence length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    if (*train) {
      const auto corpus = load_corpus(lm_corpus);
      const auto lm = NgramLM::train(corpus, lm_order, lm_alpha);
      lm.save(std::filesystem::path(lm_out));
      std::cout << "vocab " << lm.vocabulary().size() << " tokens " << lm.token_count() << '\n';
    } else if (*run) {
      return cmd_run(run_opts);
    } else if (*sweep) {
      const auto spec = load_sweep(sweep_spec);
      std::optional<std::filesystem::path> dir;
      if (!sweep_traces.empty()) dir = sweep_traces;
      const auto result = run_sweep(spec, sweep_jobs, dir);
      write_csv(sweep_out, result.points);
      if (sweep_pareto) {
        const auto frontier = pareto_frontier(result.points);
        if (sweep_out.empty() || sweep_out == "-") {
          std::cout << "# pareto\n";
          write_csv("-", frontier);
        } else {
          auto path = std::filesystem::path(sweep_out);
          write_csv((path.parent_path() / (path.stem().string() + ".pareto.csv")).string(), frontier);
        }
      }
    } else if (*metrics) {
      std::vector<TradeoffPoint> points;
      for (const auto& file : metric_files) {
        TraceFileHeader header;
        const auto traces = read_traces(file, &header);
        if (traces.empty()) throw InputError(file + ": no traces");
        const auto agg = metric_erasure == "corpus_ratio" ? ErasureAggregation::kCorpusRatio
                                                          : ErasureAggregation::kMeanOfSentences;
        points.push_back(evaluate_traces(header.strategy_label, traces, header.char_mode, agg));
      }
      write_tradeoff_csv(std::cout, points);
    } else if (*hist) {
      std::vector<SessionTrace> all;
      for (const auto& file : hist_files) {
        auto traces = read_traces(file);
        all.insert(all.end(), traces.begin(), traces.end());
      }
      const auto h = mask_histogram(all);
      std::cout << "mask_length,count\n";
      for (const auto& [mask, count] : h.counts) std::cout << mask << ',' << count << '\n';
      std::cerr << "steps " << h.total << " mean " << h.mean() << " median " << h.median() << '\n';
    } else if (*make) {
      write_synthetic(make_synthetic(synth), synth_out);
      std::cout << "wrote " << synth.n_sentences << " test sentences to " << synth_out << '\n';
    }
  } catch (const retrans::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
