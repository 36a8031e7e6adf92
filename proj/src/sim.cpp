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

#include "retrans/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace retrans {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run config

namespace {

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
      throw InputError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(where + "." + key + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string erasure_name(ErasureAggregation e) {
  return e == ErasureAggregation::kMeanOfSentences ? "mean" : "corpus_ratio";
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& name) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(name, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  check_keys(j, name, {"schema_version", "source", "reference", "translator", "strategy", "lm", "char_mode",
                       "seed", "parallelism", "erasure", "label"});
  if (get_or<int>(j, "schema_version", kRunConfigSchemaVersion, name) != kRunConfigSchemaVersion) {
    throw SchemaMismatch(name + ": unsupported run config schema_version");
  }
  RunConfig cfg;
  cfg.source = resolve(base_dir, get_or<std::string>(j, "source", "", name));
  cfg.reference = resolve(base_dir, get_or<std::string>(j, "reference", "", name));
  cfg.char_mode = get_or<bool>(j, "char_mode", false, name);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, name);
  cfg.parallelism = get_or<int>(j, "parallelism", 1, name);
  cfg.label = get_or<std::string>(j, "label", "", name);
  const auto erasure = get_or<std::string>(j, "erasure", "mean", name);
  if (erasure == "mean") {
    cfg.erasure = ErasureAggregation::kMeanOfSentences;
  } else if (erasure == "corpus_ratio") {
    cfg.erasure = ErasureAggregation::kCorpusRatio;
  } else {
    throw InputError(name + ".erasure: expected 'mean' or 'corpus_ratio'");
  }

  if (j.contains("translator")) {
    const auto& t = j.at("translator");
    const std::string where = name + ".translator";
    check_keys(t, where, {"kind", "lexicon", "beam_size", "distortion", "instability", "eos_prob_final",
                          "eos_prob_nonfinal", "max_len_ratio", "seed", "script", "identity_fallback"});
    const auto kind = get_or<std::string>(t, "kind", "toy", where);
    auto& spec = cfg.translator;
    if (kind == "toy") {
      spec.kind = TranslatorKind::kToy;
    } else if (kind == "scripted") {
      spec.kind = TranslatorKind::kScripted;
    } else {
      throw InputError(where + ".kind: expected 'toy' or 'scripted'");
    }
    spec.lexicon = resolve(base_dir, get_or<std::string>(t, "lexicon", "", where));
    spec.script = resolve(base_dir, get_or<std::string>(t, "script", "", where));
    spec.identity_fallback = get_or<bool>(t, "identity_fallback", false, where);
    auto& toy = spec.toy;
    toy.beam_size = get_or<int>(t, "beam_size", toy.beam_size, where);
    toy.distortion = get_or<double>(t, "distortion", toy.distortion, where);
    toy.instability = get_or<double>(t, "instability", toy.instability, where);
    toy.eos_prob_final = get_or<double>(t, "eos_prob_final", toy.eos_prob_final, where);
    toy.eos_prob_nonfinal = get_or<double>(t, "eos_prob_nonfinal", toy.eos_prob_nonfinal, where);
    toy.max_len_ratio = get_or<double>(t, "max_len_ratio", toy.max_len_ratio, where);
    toy.seed = get_or<std::uint64_t>(t, "seed", toy.seed, where);
  }

  cfg.strategy.predictor.seed = cfg.seed;
  if (j.contains("strategy")) {
    const auto& s = j.at("strategy");
    const std::string where = name + ".strategy";
    check_keys(s, where, {"kind", "k_mask", "bias_beta", "predictor"});
    try {
      cfg.strategy.kind = parse_strategy_kind(get_or<std::string>(s, "kind", "none", where));
    } catch (const InputError& e) {
      throw InputError(where + ".kind: " + e.what());
    }
    cfg.strategy.k_mask = get_or<int>(s, "k_mask", 0, where);
    cfg.strategy.bias_beta = get_or<double>(s, "bias_beta", 0.0, where);
    if (s.contains("predictor")) {
      const auto& p = s.at("predictor");
      const std::string pwhere = where + ".predictor";
      check_keys(p, pwhere, {"strategy", "k", "n", "seed"});
      auto& pred = cfg.strategy.predictor;
      try {
        pred.strategy = parse_predictor_strategy(get_or<std::string>(p, "strategy", "lm_greedy", pwhere));
      } catch (const InputError& e) {
        throw InputError(pwhere + ".strategy: " + e.what());
      }
      pred.k = get_or<int>(p, "k", 1, pwhere);
      pred.n = get_or<int>(p, "n", 1, pwhere);
      pred.seed = get_or<std::uint64_t>(p, "seed", cfg.seed, pwhere);
    }
  }
  cfg.strategy.validate();

  if (j.contains("lm")) {
    const auto& l = j.at("lm");
    const std::string where = name + ".lm";
    check_keys(l, where, {"path", "train", "order", "alpha"});
    cfg.lm.path = resolve(base_dir, get_or<std::string>(l, "path", "", where));
    cfg.lm.train_corpus = resolve(base_dir, get_or<std::string>(l, "train", "", where));
    cfg.lm.order = get_or<int>(l, "order", 3, where);
    cfg.lm.alpha = get_or<double>(l, "alpha", 0.1, where);
  }
  if (cfg.parallelism < 1) throw InputError(name + ".parallelism must be >= 1");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path(), path.string());
}

std::string run_config_to_json(const RunConfig& cfg) {
  Json j;
  j["schema_version"] = kRunConfigSchemaVersion;
  j["source"] = cfg.source.string();
  j["reference"] = cfg.reference.string();
  Json t;
  if (cfg.translator.kind == TranslatorKind::kToy) {
    const auto& toy = cfg.translator.toy;
    t["kind"] = "toy";
    t["lexicon"] = cfg.translator.lexicon.string();
    t["beam_size"] = toy.beam_size;
    t["distortion"] = toy.distortion;
    t["instability"] = toy.instability;
    t["eos_prob_final"] = toy.eos_prob_final;
    t["eos_prob_nonfinal"] = toy.eos_prob_nonfinal;
    t["max_len_ratio"] = toy.max_len_ratio;
    t["seed"] = toy.seed;
  } else {
    t["kind"] = "scripted";
    t["script"] = cfg.translator.script.string();
    t["identity_fallback"] = cfg.translator.identity_fallback;
  }
  j["translator"] = t;
  Json s;
  s["kind"] = std::string(to_string(cfg.strategy.kind));
  s["k_mask"] = cfg.strategy.k_mask;
  s["bias_beta"] = cfg.strategy.bias_beta;
  s["predictor"] = {{"strategy", std::string(to_string(cfg.strategy.predictor.strategy))},
                    {"k", cfg.strategy.predictor.k},
                    {"n", cfg.strategy.predictor.n},
                    {"seed", cfg.strategy.predictor.seed}};
  j["strategy"] = s;
  j["lm"] = {{"path", cfg.lm.path.string()},
             {"train", cfg.lm.train_corpus.string()},
             {"order", cfg.lm.order},
             {"alpha", cfg.lm.alpha}};
  j["char_mode"] = cfg.char_mode;
  j["seed"] = cfg.seed;
  j["parallelism"] = cfg.parallelism;
  j["erasure"] = erasure_name(cfg.erasure);
  j["label"] = cfg.label;
  return j.dump(2);
}

std::string run_config_hash(const RunConfig& cfg) {
  // Parallelism does not affect results, so it is excluded from the digest.
  RunConfig canonical = cfg;
  canonical.parallelism = 1;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(token_digest(run_config_to_json(canonical))));
  return buf;
}

// ---------------------------------------------------------------------------
// Models

Models load_models(const RunConfig& cfg, std::span<const SentencePair> corpus) {
  Models models;
  const bool needs_lm = cfg.strategy.kind == StrategyKind::kDynamic &&
                        (cfg.strategy.predictor.strategy == PredictorStrategy::kLmGreedy ||
                         cfg.strategy.predictor.strategy == PredictorStrategy::kLmSample);
  if (!cfg.lm.path.empty()) {
    models.lm = std::make_shared<NgramLM>(NgramLM::load(cfg.lm.path));
  } else if (!cfg.lm.train_corpus.empty()) {
    const auto text = load_corpus(cfg.lm.train_corpus);
    models.lm = std::make_shared<NgramLM>(NgramLM::train(text, cfg.lm.order, cfg.lm.alpha));
  } else if (needs_lm) {
    throw MissingLM();
  }

  if (cfg.translator.kind == TranslatorKind::kToy) {
    if (cfg.translator.lexicon.empty()) throw InputError("toy translator needs a lexicon path");
    auto toy = cfg.translator.toy;
    toy.lexicon = load_lexicon(cfg.translator.lexicon).lexicon;
    for (const auto& [src, entries] : toy.lexicon) models.vocab.push_back(src);
    models.translator = std::make_shared<ToyTranslator>(std::move(toy));
  } else {
    if (cfg.translator.script.empty()) throw InputError("scripted translator needs a script path");
    models.translator =
        std::make_shared<ScriptedTranslator>(load_script(cfg.translator.script, cfg.translator.identity_fallback));
    if (models.lm) {
      models.vocab = models.lm->corpus_vocabulary();
    } else {
      std::set<Token> vocab;
      for (const auto& pair : corpus) vocab.insert(pair.source.begin(), pair.source.end());
      models.vocab.assign(vocab.begin(), vocab.end());
    }
  }
  return models;
}

// ---------------------------------------------------------------------------
// Sessions

SessionTrace run_sentence(const StrategyConfig& strategy, const SentencePair& pair, const Models& models) {
  if (pair.source.empty()) throw InputError("run_sentence: empty source");
  if (!models.translator) throw InputError("run_sentence: no translator");
  const auto& translator = *models.translator;
  const std::span<const Token> source(pair.source);
  const auto n = static_cast<std::int64_t>(source.size());

  SessionTrace trace;
  trace.sentence_id = pair.sentence_id;
  trace.source = pair.source;
  trace.reference = pair.reference;

  std::int64_t step = 0;
  try {
    TokenSeq full_translation;
    std::int64_t pending_calls = 0;
    if (strategy.kind == StrategyKind::kOracle) {
      full_translation = translator.translate(source, std::nullopt, true).tokens;
      pending_calls = 1;
    }
    EmissionState state;
    state.sentence_id = pair.sentence_id;
    for (step = 1; step <= n; ++step) {
      state.step_index = step;
      const bool is_final = step == n;
      const auto prefix = source.first(static_cast<std::size_t>(step));
      std::optional<BiasSpec> bias;
      if (strategy.kind != StrategyKind::kOracle && strategy.bias_beta > 0.0) {
        bias = BiasSpec{state.previous_output, strategy.bias_beta};
      }

      StepRecord rec;
      rec.step_index = step;
      rec.source_prefix.assign(prefix.begin(), prefix.end());
      rec.is_final = is_final;
      rec.raw_hypothesis = translator.translate(prefix, bias, is_final).tokens;
      rec.n_translate_calls = 1 + pending_calls;
      pending_calls = 0;

      switch (strategy.kind) {
        case StrategyKind::kNone:
          rec.emitted_output = emit_none(rec.raw_hypothesis);
          break;
        case StrategyKind::kMaskK:
          rec.emitted_output = emit_mask_k(rec.raw_hypothesis, strategy.k_mask, is_final);
          break;
        case StrategyKind::kOracle:
          rec.emitted_output = emit_oracle(rec.raw_hypothesis, full_translation, is_final, state.previous_output);
          break;
        case StrategyKind::kDynamic: {
          std::vector<TokenSeq> probe_translations;
          if (!is_final) {
            const auto extensions = predict_extensions(strategy.predictor, models.lm.get(), models.vocab,
                                                       prefix, {pair.sentence_id, step});
            for (const auto& ext : extensions) {
              auto tr = translator.translate(ext, bias, false).tokens;
              ++rec.n_translate_calls;
              probe_translations.push_back(tr);
              rec.probes.push_back({ext, std::move(tr)});
            }
          }
          auto emission = emit_dynamic(rec.raw_hypothesis, probe_translations, state, is_final);
          rec.emitted_output = std::move(emission.output);
          rec.frozen = emission.frozen;
          break;
        }
      }
      rec.mask_length = mask_length(rec.raw_hypothesis, rec.emitted_output);
      state.previous_output = rec.emitted_output;
      trace.records.push_back(std::move(rec));
    }
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationError(pair.sentence_id, std::min(step, n), e.what());
  }
  trace.final_output = trace.records.back().emitted_output;
  return trace;
}

RunResult run_corpus(const RunConfig& cfg, std::span<const SentencePair> corpus, const Models& models) {
  if (corpus.empty()) throw EmptyCorpus();
  cfg.strategy.validate();
  RunResult result;
  result.traces.resize(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      try {
        result.traces[i] = run_sentence(cfg.strategy, corpus[i], models);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, cfg.parallelism));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, corpus.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  std::stable_sort(result.traces.begin(), result.traces.end(),
                   [](const SessionTrace& a, const SessionTrace& b) { return a.sentence_id < b.sentence_id; });
  result.point = evaluate_traces(cfg.effective_label(), result.traces, cfg.char_mode, cfg.erasure);
  for (const auto& trace : result.traces) result.per_sentence.push_back(sentence_metrics(trace, cfg.char_mode));
  return result;
}

RunResult run_corpus(const RunConfig& cfg) {
  const auto corpus = load_parallel_corpus(cfg.source, cfg.reference, cfg.char_mode);
  if (corpus.empty()) throw EmptyCorpus();
  const auto models = load_models(cfg, corpus);
  return run_corpus(cfg, corpus, models);
}

std::string validate_session(const SessionTrace& trace, const StrategyConfig& strategy) {
  if (auto err = validate_trace(trace); !err.empty()) return err;
  const TokenSeq* previous = nullptr;
  for (const auto& rec : trace.records) {
    const auto where = "step " + std::to_string(rec.step_index) + ": ";
    switch (strategy.kind) {
      case StrategyKind::kNone:
        if (rec.emitted_output != rec.raw_hypothesis) return where + "output differs from hypothesis";
        break;
      case StrategyKind::kMaskK:
        if (rec.emitted_output != emit_mask_k(rec.raw_hypothesis, strategy.k_mask, rec.is_final)) {
          return where + "output is not the masked hypothesis";
        }
        break;
      case StrategyKind::kDynamic: {
        const bool frozen = previous && rec.emitted_output == *previous;
        if (!frozen && !is_prefix(rec.emitted_output, rec.raw_hypothesis)) {
          return where + "output is neither a hypothesis prefix nor the previous output";
        }
        if (previous && !rec.is_final && rec.emitted_output.size() < previous->size() &&
            is_prefix(rec.emitted_output, *previous)) {
          return where + "output shrank to a strict prefix of the previous output";
        }
        break;
      }
      case StrategyKind::kOracle:
        if (!is_prefix(rec.emitted_output, trace.final_output)) {
          return where + "output is not a prefix of the final translation";
        }
        break;
    }
    previous = &rec.emitted_output;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Trace JSONL

std::string trace_to_json_line(const SessionTrace& trace, const TraceFileHeader& header) {
  Json j;
  j["schema_version"] = kTraceSchemaVersion;
  j["strategy"] = header.strategy_label;
  j["config_hash"] = header.config_hash;
  j["char_mode"] = header.char_mode;
  j["sentence_id"] = trace.sentence_id;
  j["source"] = trace.source;
  j["reference"] = trace.reference;
  Json records = Json::array();
  for (const auto& rec : trace.records) {
    Json r;
    r["step"] = rec.step_index;
    r["source_prefix"] = rec.source_prefix;
    r["raw_hypothesis"] = rec.raw_hypothesis;
    r["emitted_output"] = rec.emitted_output;
    r["mask_length"] = rec.mask_length;
    r["is_final"] = rec.is_final;
    r["frozen"] = rec.frozen;
    r["n_translate_calls"] = rec.n_translate_calls;
    Json probes = Json::array();
    for (const auto& p : rec.probes) probes.push_back({{"extension", p.extension}, {"translation", p.translation}});
    r["probes"] = std::move(probes);
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  j["final_output"] = trace.final_output;
  return j.dump();
}

SessionTrace trace_from_json_line(const std::string& line, TraceFileHeader* header) {
  const auto j = Json::parse(line);
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kTraceSchemaVersion) {
    throw SchemaMismatch("trace schema_version must be " + std::to_string(kTraceSchemaVersion));
  }
  if (header) {
    header->strategy_label = j.value("strategy", "");
    header->config_hash = j.value("config_hash", "");
    header->char_mode = j.value("char_mode", false);
  }
  SessionTrace trace;
  trace.sentence_id = j.at("sentence_id").get<std::int64_t>();
  trace.source = j.at("source").get<TokenSeq>();
  trace.reference = j.at("reference").get<TokenSeq>();
  for (const auto& r : j.at("records")) {
    StepRecord rec;
    rec.step_index = r.at("step").get<std::int64_t>();
    rec.source_prefix = r.at("source_prefix").get<TokenSeq>();
    rec.raw_hypothesis = r.at("raw_hypothesis").get<TokenSeq>();
    rec.emitted_output = r.at("emitted_output").get<TokenSeq>();
    rec.mask_length = r.at("mask_length").get<std::int64_t>();
    rec.is_final = r.at("is_final").get<bool>();
    rec.frozen = r.value("frozen", false);
    rec.n_translate_calls = r.value("n_translate_calls", std::int64_t{1});
    if (r.contains("probes")) {
      for (const auto& p : r.at("probes")) {
        rec.probes.push_back({p.at("extension").get<TokenSeq>(), p.at("translation").get<TokenSeq>()});
      }
    }
    trace.records.push_back(std::move(rec));
  }
  trace.final_output = j.at("final_output").get<TokenSeq>();
  return trace;
}

void write_traces(std::ostream& out, std::span<const SessionTrace> traces, const TraceFileHeader& header) {
  for (const auto& t : traces) out << trace_to_json_line(t, header) << '\n';
}

void write_traces(const std::filesystem::path& path, std::span<const SessionTrace> traces,
                  const TraceFileHeader& header) {
  // Write to a sibling temp file and rename so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InputError("cannot write " + tmp.string());
    write_traces(out, traces, header);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<SessionTrace> read_traces(std::istream& in, TraceFileHeader* header, const std::string& name) {
  std::vector<SessionTrace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      traces.push_back(trace_from_json_line(line, header));
    } catch (const SchemaMismatch& e) {
      throw SchemaMismatch(name + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  return traces;
}

std::vector<SessionTrace> read_traces(const std::filesystem::path& path, TraceFileHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open traces " + path.string());
  return read_traces(in, header, path.string());
}

// ---------------------------------------------------------------------------
// Mask histogram

MaskHistogram mask_histogram(std::span<const SessionTrace> traces) {
  MaskHistogram h;
  for (const auto& t : traces) {
    for (const auto& rec : t.records) {
      if (rec.is_final) continue;
      ++h.counts[rec.mask_length];
      ++h.total;
    }
  }
  return h;
}

double MaskHistogram::mean() const {
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (const auto& [mask, count] : counts) sum += static_cast<double>(mask) * static_cast<double>(count);
  return sum / static_cast<double>(total);
}

double MaskHistogram::median() const {
  if (total == 0) return 0.0;
  auto nth = [&](std::int64_t index) {  // 0-based rank
    std::int64_t seen = 0;
    for (const auto& [mask, count] : counts) {
      seen += count;
      if (index < seen) return mask;
    }
    return counts.rbegin()->first;
  };
  if (total % 2 == 1) return static_cast<double>(nth(total / 2));
  return 0.5 * static_cast<double>(nth(total / 2 - 1) + nth(total / 2));
}

double MaskHistogram::fraction_at_most(std::int64_t mask) const {
  if (total == 0) return 0.0;
  std::int64_t n = 0;
  for (const auto& [m, count] : counts) {
    if (m <= mask) n += count;
  }
  return static_cast<double>(n) / static_cast<double>(total);
}

}  // namespace retrans
