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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "retrans/core.hpp"
#include "retrans/errors.hpp"
#include "retrans/metrics.hpp"
#include "retrans/predict.hpp"
#include "retrans/sim.hpp"
#include "retrans/strategy.hpp"
#include "retrans/sweep.hpp"
#include "retrans/synthetic.hpp"
#include "retrans/translator.hpp"

namespace py = pybind11;
using namespace retrans;

namespace {

std::optional<BiasSpec> bias_of(const std::optional<TokenSeq>& previous, double beta) {
  if (!previous) return std::nullopt;
  return BiasSpec{*previous, beta};
}

Models models_with(std::shared_ptr<const Translator> translator, std::shared_ptr<const NgramLM> lm,
                   std::vector<Token> vocab) {
  Models m;
  m.translator = std::move(translator);
  m.lm = std::move(lm);
  m.vocab = std::move(vocab);
  return m;
}

}  // namespace

PYBIND11_MODULE(_retrans, m) {
  m.doc() = "Retranslation strategies for online translation: masking, biased beam search, metrics.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto parse_error = py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<UnknownSourceToken>(m, "UnknownSourceToken", error.ptr());
  py::register_exception<ScriptMiss>(m, "ScriptMiss", error.ptr());
  py::register_exception<MissingLM>(m, "MissingLM", error.ptr());
  py::register_exception<EmptyCorpus>(m, "EmptyCorpus", error.ptr());
  py::register_exception<SchemaMismatch>(m, "SchemaMismatch", error.ptr());
  py::register_exception<SimulationError>(m, "SimulationError", error.ptr());
  (void)parse_error;

  m.attr("UNK") = std::string(kUnkToken);
  m.attr("EOS") = std::string(kEosToken);

  m.def("tokenize", &tokenize, py::arg("line"), py::arg("char_mode") = false);
  m.def(
      "longest_common_prefix", [](const TokenSeq& a, const TokenSeq& b) { return longest_common_prefix(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "is_prefix", [](const TokenSeq& a, const TokenSeq& b) { return is_prefix(a, b); }, py::arg("a"), py::arg("b"));

  // Data model
  py::class_<SentencePair>(m, "SentencePair")
      .def(py::init<>())
      .def(py::init([](TokenSeq source, TokenSeq reference, std::int64_t id) {
             return SentencePair{std::move(source), std::move(reference), id};
           }),
           py::arg("source"), py::arg("reference"), py::arg("sentence_id") = 0)
      .def_readwrite("source", &SentencePair::source)
      .def_readwrite("reference", &SentencePair::reference)
      .def_readwrite("sentence_id", &SentencePair::sentence_id);
  m.def("load_parallel_corpus", &load_parallel_corpus, py::arg("source"), py::arg("reference"),
        py::arg("char_mode") = false);

  py::class_<Probe>(m, "Probe")
      .def_readonly("extension", &Probe::extension)
      .def_readonly("translation", &Probe::translation);
  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("step_index", &StepRecord::step_index)
      .def_readonly("source_prefix", &StepRecord::source_prefix)
      .def_readonly("raw_hypothesis", &StepRecord::raw_hypothesis)
      .def_readonly("emitted_output", &StepRecord::emitted_output)
      .def_readonly("mask_length", &StepRecord::mask_length)
      .def_readonly("is_final", &StepRecord::is_final)
      .def_readonly("frozen", &StepRecord::frozen)
      .def_readonly("n_translate_calls", &StepRecord::n_translate_calls)
      .def_readonly("probes", &StepRecord::probes);
  py::class_<SessionTrace>(m, "SessionTrace")
      .def_readonly("sentence_id", &SessionTrace::sentence_id)
      .def_readonly("source", &SessionTrace::source)
      .def_readonly("reference", &SessionTrace::reference)
      .def_readonly("records", &SessionTrace::records)
      .def_readonly("final_output", &SessionTrace::final_output)
      .def("__eq__", [](const SessionTrace& a, const SessionTrace& b) { return a == b; });

  // Translators
  py::class_<Translation>(m, "Translation")
      .def_readonly("tokens", &Translation::tokens)
      .def_readonly("score", &Translation::score);
  py::class_<Translator, std::shared_ptr<Translator>>(m, "Translator")
      .def(
          "translate",
          [](const Translator& t, const TokenSeq& source, std::optional<TokenSeq> previous_output, double beta,
             bool source_complete) { return t.translate(source, bias_of(previous_output, beta), source_complete); },
          py::arg("source"), py::arg("previous_output") = std::nullopt, py::arg("beta") = 0.0,
          py::arg("source_complete") = false, py::call_guard<py::gil_scoped_release>());
  py::class_<ScriptedTranslator, Translator, std::shared_ptr<ScriptedTranslator>>(m, "ScriptedTranslator")
      .def(py::init([](const std::map<std::string, std::string>& script, bool identity_fallback) {
             auto t = std::make_shared<ScriptedTranslator>();
             t->set_identity_fallback(identity_fallback);
             for (const auto& [src, tgt] : script) t->add(tokenize(src), tokenize(tgt));
             return t;
           }),
           py::arg("script") = std::map<std::string, std::string>{}, py::arg("identity_fallback") = false)
      .def(
          "add", [](ScriptedTranslator& t, const TokenSeq& prefix, TokenSeq translation) { t.add(prefix, translation); },
          py::arg("prefix"), py::arg("translation"))
      .def("__len__", &ScriptedTranslator::size);
  m.def(
      "load_script",
      [](const std::filesystem::path& path, bool identity_fallback) {
        return std::make_shared<ScriptedTranslator>(load_script(path, identity_fallback));
      },
      py::arg("path"), py::arg("identity_fallback") = false);

  py::class_<LexEntry>(m, "LexEntry")
      .def(py::init([](Token target, double prob) { return LexEntry{std::move(target), prob}; }), py::arg("target"),
           py::arg("prob"))
      .def_readwrite("target", &LexEntry::target)
      .def_readwrite("prob", &LexEntry::prob)
      .def("__repr__", [](const LexEntry& e) { return "LexEntry(" + e.target + ", " + std::to_string(e.prob) + ")"; });
  py::class_<ToyModelConfig>(m, "ToyModelConfig")
      .def(py::init<>())
      .def_readwrite("lexicon", &ToyModelConfig::lexicon)
      .def_readwrite("beam_size", &ToyModelConfig::beam_size)
      .def_readwrite("distortion", &ToyModelConfig::distortion)
      .def_readwrite("instability", &ToyModelConfig::instability)
      .def_readwrite("eos_prob_final", &ToyModelConfig::eos_prob_final)
      .def_readwrite("eos_prob_nonfinal", &ToyModelConfig::eos_prob_nonfinal)
      .def_readwrite("max_len_ratio", &ToyModelConfig::max_len_ratio)
      .def_readwrite("seed", &ToyModelConfig::seed)
      .def("validate", &ToyModelConfig::validate);
  m.def("load_lexicon", &load_lexicon, py::arg("path"));
  py::class_<StepCandidate>(m, "StepCandidate")
      .def_readonly("token", &StepCandidate::token)
      .def_readonly("source_position", &StepCandidate::source_position)
      .def_readonly("prob", &StepCandidate::prob)
      .def_property_readonly("is_eos", &StepCandidate::is_eos);
  py::class_<ToyTranslator, Translator, std::shared_ptr<ToyTranslator>>(m, "ToyTranslator")
      .def(py::init<ToyModelConfig>(), py::arg("config"))
      .def_property_readonly("config", &ToyTranslator::config)
      .def(
          "step_distribution",
          [](const ToyTranslator& t, const TokenSeq& target_so_far, const std::vector<bool>& coverage,
             const TokenSeq& source, bool final_sentence) {
            return t.step_distribution({target_so_far, coverage, 0.0}, source, final_sentence);
          },
          py::arg("target_so_far"), py::arg("coverage"), py::arg("source"), py::arg("source_is_final_sentence") = false);

  // Prediction
  py::class_<NgramLM, std::shared_ptr<NgramLM>>(m, "NgramLM")
      .def_static(
          "train",
          [](const std::vector<TokenSeq>& corpus, int order, double alpha) {
            return std::make_shared<NgramLM>(NgramLM::train(corpus, order, alpha));
          },
          py::arg("corpus"), py::arg("order") = 3, py::arg("alpha") = 0.1)
      .def_static(
          "load", [](const std::filesystem::path& p) { return std::make_shared<NgramLM>(NgramLM::load(p)); },
          py::arg("path"))
      .def("save", py::overload_cast<const std::filesystem::path&>(&NgramLM::save, py::const_), py::arg("path"))
      .def("dumps",
           [](const NgramLM& lm) {
             std::ostringstream out;
             lm.save(out);
             return out.str();
           })
      .def_property_readonly("order", &NgramLM::order)
      .def_property_readonly("alpha", &NgramLM::alpha)
      .def_property_readonly("vocabulary", &NgramLM::vocabulary)
      .def_property_readonly("token_count", &NgramLM::token_count)
      .def("prob", [](const NgramLM& lm, const TokenSeq& ctx, const std::string& tok) { return lm.prob(ctx, tok); },
           py::arg("context"), py::arg("token"))
      .def("distribution", [](const NgramLM& lm, const TokenSeq& ctx) { return lm.distribution(ctx); },
           py::arg("context"));

  py::enum_<PredictorStrategy>(m, "PredictorStrategy")
      .value("LM_SAMPLE", PredictorStrategy::kLmSample)
      .value("LM_GREEDY", PredictorStrategy::kLmGreedy)
      .value("UNKNOWN", PredictorStrategy::kUnknown)
      .value("RANDOM", PredictorStrategy::kRandom);
  py::class_<PredictorConfig>(m, "PredictorConfig")
      .def(py::init([](PredictorStrategy s, int k, int n, std::uint64_t seed) { return PredictorConfig{s, k, n, seed}; }),
           py::arg("strategy") = PredictorStrategy::kLmGreedy, py::arg("k") = 1, py::arg("n") = 1,
           py::arg("seed") = 0)
      .def_readwrite("strategy", &PredictorConfig::strategy)
      .def_readwrite("k", &PredictorConfig::k)
      .def_readwrite("n", &PredictorConfig::n)
      .def_readwrite("seed", &PredictorConfig::seed);
  m.def(
      "predict_extensions",
      [](const PredictorConfig& cfg, const std::shared_ptr<NgramLM>& lm, const std::vector<Token>& vocab,
         const TokenSeq& prefix, std::int64_t sentence_id, std::int64_t step_index) {
        return predict_extensions(cfg, lm.get(), vocab, prefix, {sentence_id, step_index});
      },
      py::arg("config"), py::arg("lm") = nullptr, py::arg("vocab") = std::vector<Token>{}, py::arg("prefix"),
      py::arg("sentence_id") = 0, py::arg("step_index") = 0);

  // Strategies
  py::enum_<StrategyKind>(m, "StrategyKind")
      .value("NONE", StrategyKind::kNone)
      .value("MASK_K", StrategyKind::kMaskK)
      .value("DYNAMIC", StrategyKind::kDynamic)
      .value("ORACLE", StrategyKind::kOracle);
  py::class_<StrategyConfig>(m, "StrategyConfig")
      .def(py::init([](StrategyKind kind, int k_mask, PredictorConfig predictor, double bias_beta) {
             StrategyConfig s{kind, k_mask, predictor, bias_beta};
             s.validate();
             return s;
           }),
           py::arg("kind") = StrategyKind::kNone, py::arg("k_mask") = 0, py::arg("predictor") = PredictorConfig{},
           py::arg("bias_beta") = 0.0)
      .def_readwrite("kind", &StrategyConfig::kind)
      .def_readwrite("k_mask", &StrategyConfig::k_mask)
      .def_readwrite("predictor", &StrategyConfig::predictor)
      .def_readwrite("bias_beta", &StrategyConfig::bias_beta)
      .def_property_readonly("label", &StrategyConfig::label);

  m.def(
      "emit_none", [](const TokenSeq& hyp) { return emit_none(hyp); }, py::arg("hypothesis"));
  m.def(
      "emit_mask_k", [](const TokenSeq& hyp, int k, bool is_final) { return emit_mask_k(hyp, k, is_final); },
      py::arg("hypothesis"), py::arg("k"), py::arg("is_final") = false);
  m.def(
      "emit_dynamic",
      [](const TokenSeq& hyp, const std::vector<TokenSeq>& probes, const TokenSeq& previous_output, bool is_final) {
        const auto e = emit_dynamic(hyp, probes, {previous_output, 0, 0}, is_final);
        return py::make_tuple(e.output, e.mask_length, e.frozen);
      },
      py::arg("hypothesis"), py::arg("probe_translations"), py::arg("previous_output") = TokenSeq{},
      py::arg("is_final") = false, "Returns (output, mask_length, frozen).");
  m.def(
      "emit_oracle",
      [](const TokenSeq& hyp, const TokenSeq& full, bool is_final, const TokenSeq& previous) {
        return emit_oracle(hyp, full, is_final, previous);
      },
      py::arg("hypothesis"), py::arg("full_sentence_translation"), py::arg("is_final") = false,
      py::arg("previous_output") = TokenSeq{});

  // Metrics
  m.def("average_lag", &average_lag, py::arg("trace"), py::arg("char_mode") = false);
  m.def("normalized_erasure", &normalized_erasure, py::arg("trace"), py::arg("char_mode") = false);
  m.def(
      "corpus_bleu",
      [](const std::vector<TokenSeq>& hyps, const std::vector<TokenSeq>& refs) { return corpus_bleu(hyps, refs); },
      py::arg("hypotheses"), py::arg("references"));
  py::class_<TradeoffPoint>(m, "TradeoffPoint")
      .def_readonly("strategy_label", &TradeoffPoint::strategy_label)
      .def_readonly("average_lag", &TradeoffPoint::average_lag)
      .def_readonly("normalized_erasure", &TradeoffPoint::normalized_erasure)
      .def_readonly("bleu", &TradeoffPoint::bleu)
      .def_readonly("n_sentences", &TradeoffPoint::n_sentences)
      .def_readonly("n_empty_final", &TradeoffPoint::n_empty_final)
      .def("__repr__", [](const TradeoffPoint& p) { return to_csv_row(p); });
  m.def(
      "evaluate_traces",
      [](const std::string& label, const std::vector<SessionTrace>& traces, bool char_mode) {
        return evaluate_traces(label, traces, char_mode);
      },
      py::arg("label"), py::arg("traces"), py::arg("char_mode") = false);
  m.def(
      "pareto_frontier", [](const std::vector<TradeoffPoint>& pts) { return pareto_frontier(pts); },
      py::arg("points"));

  // Simulation
  m.def(
      "run_sentence",
      [](const StrategyConfig& s, const SentencePair& pair, std::shared_ptr<const Translator> translator,
         std::shared_ptr<const NgramLM> lm, std::vector<Token> vocab) {
        return run_sentence(s, pair, models_with(std::move(translator), std::move(lm), std::move(vocab)));
      },
      py::arg("strategy"), py::arg("pair"), py::arg("translator"), py::arg("lm") = nullptr,
      py::arg("vocab") = std::vector<Token>{}, py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_corpus",
      [](const std::filesystem::path& config, std::optional<StrategyConfig> strategy, std::optional<int> parallelism) {
        auto cfg = load_run_config(config);
        if (strategy) {
          strategy->predictor.seed = cfg.strategy.predictor.seed;
          cfg.strategy = *strategy;
        }
        if (parallelism) cfg.parallelism = *parallelism;
        py::gil_scoped_release release;
        auto result = run_corpus(cfg);
        return std::make_pair(std::move(result.traces), std::move(result.point));
      },
      py::arg("config"), py::arg("strategy") = std::nullopt, py::arg("parallelism") = std::nullopt,
      "Runs a JSON run config; returns (traces, TradeoffPoint).");
  m.def("validate_session", &validate_session, py::arg("trace"), py::arg("strategy"));

  py::class_<MaskHistogram>(m, "MaskHistogram")
      .def_readonly("counts", &MaskHistogram::counts)
      .def_readonly("total", &MaskHistogram::total)
      .def("mean", &MaskHistogram::mean)
      .def("median", &MaskHistogram::median)
      .def("fraction_at_most", &MaskHistogram::fraction_at_most, py::arg("mask"));
  m.def(
      "mask_histogram", [](const std::vector<SessionTrace>& traces) { return mask_histogram(traces); },
      py::arg("traces"));
  m.def(
      "read_traces", [](const std::filesystem::path& p) { return read_traces(p); }, py::arg("path"));

  m.def(
      "make_synthetic",
      [](const std::filesystem::path& out, std::uint64_t seed, int n_sentences) {
        SyntheticSpec spec;
        spec.seed = seed;
        spec.n_sentences = n_sentences;
        write_synthetic(make_synthetic(spec), out);
      },
      py::arg("out"), py::arg("seed") = 42, py::arg("n_sentences") = 200,
      "Writes the synthetic benchmark (corpus, lexicon, run.json, sweep.json) into out.");
  m.def(
      "run_sweep",
      [](const std::filesystem::path& spec, int parallelism) {
        const auto s = load_sweep(spec);
        py::gil_scoped_release release;
        return run_sweep(s, parallelism).points;
      },
      py::arg("spec"), py::arg("parallelism") = 1);
}
