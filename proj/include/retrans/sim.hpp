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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retrans/core.hpp"
#include "retrans/errors.hpp"
#include "retrans/metrics.hpp"
#include "retrans/predict.hpp"
#include "retrans/strategy.hpp"
#include "retrans/translator.hpp"

namespace retrans {

inline constexpr int kTraceSchemaVersion = 1;
inline constexpr int kRunConfigSchemaVersion = 1;

enum class TranslatorKind { kToy, kScripted };

struct TranslatorSpec {
  TranslatorKind kind = TranslatorKind::kToy;
  std::filesystem::path lexicon;  // toy
  ToyModelConfig toy;             // decoder parameters; lexicon filled from the file on load
  std::filesystem::path script;   // scripted
  bool identity_fallback = false;
};

// Where the extension LM comes from: a saved model, or a corpus trained at load time.
struct LmSpec {
  std::filesystem::path path;
  std::filesystem::path train_corpus;
  int order = 3;
  double alpha = 0.1;

  bool empty() const { return path.empty() && train_corpus.empty(); }
};

struct RunConfig {
  std::filesystem::path source;
  std::filesystem::path reference;
  TranslatorSpec translator;
  StrategyConfig strategy;
  LmSpec lm;
  bool char_mode = false;
  std::uint64_t seed = 0;
  int parallelism = 1;
  ErasureAggregation erasure = ErasureAggregation::kMeanOfSentences;
  std::string label;  // empty: strategy.label()

  std::string effective_label() const { return label.empty() ? strategy.label() : label; }
};

/// Parses a JSON run config. Relative paths are resolved against base_dir.
/// Throws ParseError (with line number for syntax errors) or InputError.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& name = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON echo of a resolved config.
std::string run_config_to_json(const RunConfig& cfg);
/// Hex digest of run_config_to_json.
std::string run_config_hash(const RunConfig& cfg);

// Shared read-only models for a run.
struct Models {
  std::shared_ptr<const Translator> translator;
  std::shared_ptr<const NgramLM> lm;
  std::vector<Token> vocab;  // sampling pool for the random predictor
};

Models load_models(const RunConfig& cfg, std::span<const SentencePair> corpus = {});

// A failure inside a session, annotated with where it happened.
class SimulationError : public Error {
 public:
  SimulationError(std::int64_t sentence_id, std::int64_t step_index, const std::string& what)
      : Error("sentence " + std::to_string(sentence_id) + ", step " + std::to_string(step_index) + ": " +
              what),
        sentence_id_(sentence_id),
        step_index_(step_index) {}
  std::int64_t sentence_id() const { return sentence_id_; }
  std::int64_t step_index() const { return step_index_; }

 private:
  std::int64_t sentence_id_;
  std::int64_t step_index_;
};

/// Reveals the source one token at a time and records every step.
SessionTrace run_sentence(const StrategyConfig& strategy, const SentencePair& pair, const Models& models);

struct RunResult {
  std::vector<SessionTrace> traces;  // ordered by sentence_id
  std::vector<SentenceMetrics> per_sentence;
  TradeoffPoint point;
};

RunResult run_corpus(const RunConfig& cfg, std::span<const SentencePair> corpus, const Models& models);
RunResult run_corpus(const RunConfig& cfg);

/// Structural checks plus the strategy's own output invariants. Empty string when valid.
std::string validate_session(const SessionTrace& trace, const StrategyConfig& strategy);

// Trace JSONL: one object per line with "schema_version".
struct TraceFileHeader {
  bool char_mode = false;
  std::string config_hash;
  std::string strategy_label;
};

std::string trace_to_json_line(const SessionTrace& trace, const TraceFileHeader& header);
SessionTrace trace_from_json_line(const std::string& line, TraceFileHeader* header = nullptr);
void write_traces(std::ostream& out, std::span<const SessionTrace> traces, const TraceFileHeader& header);
void write_traces(const std::filesystem::path& path, std::span<const SessionTrace> traces,
                  const TraceFileHeader& header);
std::vector<SessionTrace> read_traces(std::istream& in, TraceFileHeader* header = nullptr,
                                      const std::string& name = "<stream>");
std::vector<SessionTrace> read_traces(const std::filesystem::path& path, TraceFileHeader* header = nullptr);

// Mask lengths over all non-final steps.
struct MaskHistogram {
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t total = 0;

  double mean() const;
  double median() const;
  double fraction_at_most(std::int64_t mask) const;
};

MaskHistogram mask_histogram(std::span<const SessionTrace> traces);

}  // namespace retrans
