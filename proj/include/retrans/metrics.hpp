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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "retrans/core.hpp"

namespace retrans {

// Collects g(t): the step at which the displayed output first reached
// length t. Later shrinking does not reset an entry.
class LatencyAccumulator {
 public:
  void observe(std::int64_t step_index, std::size_t output_length);

  /// Average lag for a sentence of source_len tokens whose full-source
  /// output has target_len tokens (tau == target_len). Returns 0 when
  /// target_len is 0.
  double average_lag(std::int64_t source_len, std::size_t target_len) const;

  const std::vector<std::int64_t>& first_reached() const { return g_; }

 private:
  std::vector<std::int64_t> g_;
};

// Sums |O_{i-1}| - |LCP(O_{i-1}, O_i)| over consecutive outputs.
class FlickerAccumulator {
 public:
  void observe(const TokenSeq& output);

  std::int64_t erased_total() const { return erased_; }
  /// erased_total / final_len; 0 for an empty final output without erasure.
  /// Throws FlickerOnEmptyFinal when tokens were erased but final_len is 0.
  double normalized(std::size_t final_len) const;

 private:
  TokenSeq previous_;
  bool started_ = false;
  std::int64_t erased_ = 0;
};

/// Average lag of a complete trace, in tokens (characters with char_mode).
double average_lag(const SessionTrace& trace, bool char_mode = false);

/// Normalized erasure of a complete trace.
double normalized_erasure(const SessionTrace& trace, bool char_mode = false);
std::int64_t erased_tokens(const SessionTrace& trace, bool char_mode = false);

/// Corpus BLEU-4 in [0, 100]. Zero higher-order matches are smoothed to
/// 1 / (total + 1).
double corpus_bleu(std::span<const TokenSeq> hypotheses, std::span<const TokenSeq> references);

struct SentenceMetrics {
  std::int64_t sentence_id = 0;
  double average_lag = 0.0;
  double normalized_erasure = 0.0;
  std::int64_t erased = 0;
  std::size_t final_length = 0;
  bool empty_final = false;  // AL defined as 0
};

SentenceMetrics sentence_metrics(const SessionTrace& trace, bool char_mode = false);

enum class ErasureAggregation {
  kMeanOfSentences,  // mean of per-sentence NE
  kCorpusRatio,      // total erased / total final length
};

struct TradeoffPoint {
  std::string strategy_label;
  double average_lag = 0.0;
  double normalized_erasure = 0.0;
  double bleu = 0.0;
  std::int64_t n_sentences = 0;
  std::int64_t n_empty_final = 0;  // sentences whose AL was defined as 0

  bool operator==(const TradeoffPoint&) const = default;
};

/// Aggregates per-sentence metrics in the given order (callers sort by sentence_id).
TradeoffPoint aggregate(std::string label, std::span<const SentenceMetrics> per_sentence,
                        std::span<const TokenSeq> final_outputs, std::span<const TokenSeq> references,
                        ErasureAggregation erasure = ErasureAggregation::kMeanOfSentences);

TradeoffPoint evaluate_traces(std::string label, std::span<const SessionTrace> traces, bool char_mode = false,
                              ErasureAggregation erasure = ErasureAggregation::kMeanOfSentences);

inline constexpr const char* kTradeoffCsvHeader = "strategy,AL,NE,BLEU,n_sentences";
std::string to_csv_row(const TradeoffPoint& point);
void write_tradeoff_csv(std::ostream& out, std::span<const TradeoffPoint> points);

/// Points not dominated on (AL, NE): no other point is <= on both and < on one.
std::vector<TradeoffPoint> pareto_frontier(std::span<const TradeoffPoint> points);
bool dominates(const TradeoffPoint& a, const TradeoffPoint& b);

}  // namespace retrans
