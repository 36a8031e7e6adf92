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

#include "retrans/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "retrans/errors.hpp"

namespace retrans {

void LatencyAccumulator::observe(std::int64_t step_index, std::size_t output_length) {
  while (g_.size() < output_length) g_.push_back(step_index);
}

double LatencyAccumulator::average_lag(std::int64_t source_len, std::size_t target_len) const {
  if (target_len == 0) return 0.0;
  if (g_.size() < target_len) throw Error("latency: output never reached the final length");
  const double ratio = static_cast<double>(source_len) / static_cast<double>(target_len);
  double sum = 0.0;
  for (std::size_t t = 1; t <= target_len; ++t) {
    sum += static_cast<double>(g_[t - 1]) - static_cast<double>(t - 1) * ratio;
  }
  return sum / static_cast<double>(target_len);
}

void FlickerAccumulator::observe(const TokenSeq& output) {
  if (started_) {
    erased_ += static_cast<std::int64_t>(previous_.size() - common_prefix_length(previous_, output));
  }
  previous_ = output;
  started_ = true;
}

double FlickerAccumulator::normalized(std::size_t final_len) const {
  if (final_len == 0) {
    if (erased_ != 0) throw FlickerOnEmptyFinal();
    return 0.0;
  }
  return static_cast<double>(erased_) / static_cast<double>(final_len);
}

namespace {

TokenSeq granular(const TokenSeq& seq, bool char_mode) { return char_mode ? to_characters(seq) : seq; }

void require_complete(const SessionTrace& trace) {
  if (trace.records.empty() || !trace.records.back().is_final) throw EmptyTrace();
}

}  // namespace

SentenceMetrics sentence_metrics(const SessionTrace& trace, bool char_mode) {
  require_complete(trace);
  LatencyAccumulator latency;
  FlickerAccumulator flicker;
  for (const auto& rec : trace.records) {
    const auto out = granular(rec.emitted_output, char_mode);
    latency.observe(rec.step_index, out.size());
    flicker.observe(out);
  }
  const auto final_len = granular(trace.records.back().emitted_output, char_mode).size();
  SentenceMetrics m;
  m.sentence_id = trace.sentence_id;
  m.final_length = final_len;
  m.empty_final = final_len == 0;
  m.average_lag = latency.average_lag(static_cast<std::int64_t>(trace.source.size()), final_len);
  m.erased = flicker.erased_total();
  m.normalized_erasure = flicker.normalized(final_len);
  return m;
}

double average_lag(const SessionTrace& trace, bool char_mode) {
  return sentence_metrics(trace, char_mode).average_lag;
}

double normalized_erasure(const SessionTrace& trace, bool char_mode) {
  return sentence_metrics(trace, char_mode).normalized_erasure;
}

std::int64_t erased_tokens(const SessionTrace& trace, bool char_mode) {
  return sentence_metrics(trace, char_mode).erased;
}

double corpus_bleu(std::span<const TokenSeq> hypotheses, std::span<const TokenSeq> references) {
  if (hypotheses.size() != references.size()) {
    throw LengthMismatch("BLEU: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                         std::to_string(references.size()) + " references");
  }
  if (hypotheses.empty()) throw InputError("BLEU: no sentences");
  constexpr int kMaxOrder = 4;
  std::int64_t matches[kMaxOrder] = {};
  std::int64_t totals[kMaxOrder] = {};
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<std::int64_t>(hyp.size());
    ref_len += static_cast<std::int64_t>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      std::map<TokenSeq, int> ref_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[TokenSeq(ref.begin() + i, ref.begin() + i + n)];
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
        ++totals[n - 1];
        auto it = ref_counts.find(TokenSeq(hyp.begin() + i, hyp.begin() + i + n));
        if (it != ref_counts.end() && it->second > 0) {
          --it->second;  // clipping
          ++matches[n - 1];
        }
      }
    }
  }
  if (matches[0] == 0) return 0.0;
  double log_precision = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    double p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    if (n > 0 && matches[n] == 0) p = 1.0 / (static_cast<double>(totals[n]) + 1.0);
    log_precision += std::log(p) / kMaxOrder;
  }
  const double bp = hyp_len < ref_len
                        ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                        : 1.0;
  return 100.0 * bp * std::exp(log_precision);
}

TradeoffPoint aggregate(std::string label, std::span<const SentenceMetrics> per_sentence,
                        std::span<const TokenSeq> final_outputs, std::span<const TokenSeq> references,
                        ErasureAggregation erasure) {
  TradeoffPoint point;
  point.strategy_label = std::move(label);
  point.n_sentences = static_cast<std::int64_t>(per_sentence.size());
  if (per_sentence.empty()) return point;
  double al = 0.0;
  double ne = 0.0;
  std::int64_t erased = 0;
  std::int64_t final_len = 0;
  for (const auto& m : per_sentence) {
    al += m.average_lag;
    ne += m.normalized_erasure;
    erased += m.erased;
    final_len += static_cast<std::int64_t>(m.final_length);
    if (m.empty_final) ++point.n_empty_final;
  }
  const auto n = static_cast<double>(per_sentence.size());
  point.average_lag = al / n;
  if (erasure == ErasureAggregation::kMeanOfSentences) {
    point.normalized_erasure = ne / n;
  } else {
    point.normalized_erasure = final_len ? static_cast<double>(erased) / static_cast<double>(final_len) : 0.0;
  }
  point.bleu = corpus_bleu(final_outputs, references);
  return point;
}

TradeoffPoint evaluate_traces(std::string label, std::span<const SessionTrace> traces, bool char_mode,
                              ErasureAggregation erasure) {
  std::vector<SentenceMetrics> per_sentence;
  std::vector<TokenSeq> finals;
  std::vector<TokenSeq> refs;
  for (const auto& trace : traces) {
    per_sentence.push_back(sentence_metrics(trace, char_mode));
    finals.push_back(granular(trace.final_output, char_mode));
    refs.push_back(granular(trace.reference, char_mode));
  }
  return aggregate(std::move(label), per_sentence, finals, refs, erasure);
}

std::string to_csv_row(const TradeoffPoint& p) {
  std::string label = p.strategy_label;
  if (label.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : label) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    label = quoted + "\"";
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%lld", p.average_lag, p.normalized_erasure, p.bleu,
                static_cast<long long>(p.n_sentences));
  return label + buf;
}

void write_tradeoff_csv(std::ostream& out, std::span<const TradeoffPoint> points) {
  out << kTradeoffCsvHeader << '\n';
  for (const auto& p : points) out << to_csv_row(p) << '\n';
}

bool dominates(const TradeoffPoint& a, const TradeoffPoint& b) {
  return a.average_lag <= b.average_lag && a.normalized_erasure <= b.normalized_erasure &&
         (a.average_lag < b.average_lag || a.normalized_erasure < b.normalized_erasure);
}

std::vector<TradeoffPoint> pareto_frontier(std::span<const TradeoffPoint> points) {
  std::vector<TradeoffPoint> out;
  for (const auto& p : points) {
    const bool dominated = std::any_of(points.begin(), points.end(),
                                       [&](const TradeoffPoint& q) { return dominates(q, p); });
    if (!dominated) out.push_back(p);
  }
  return out;
}

}  // namespace retrans
