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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "retrans/errors.hpp"
#include "retrans/metrics.hpp"
#include "test_support.hpp"

namespace retrans {
namespace {

using testing::toks;

// Builds a trace whose step i displays outputs[i - 1].
SessionTrace trace_of(const std::vector<TokenSeq>& outputs) {
  SessionTrace t;
  for (std::size_t i = 0; i < outputs.size(); ++i) t.source.push_back("s" + std::to_string(i));
  t.reference = toks("r");
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    StepRecord r;
    r.step_index = static_cast<std::int64_t>(i + 1);
    r.source_prefix.assign(t.source.begin(), t.source.begin() + static_cast<std::ptrdiff_t>(i + 1));
    r.raw_hypothesis = outputs[i];
    r.emitted_output = outputs[i];
    r.is_final = i + 1 == outputs.size();
    t.records.push_back(r);
  }
  t.final_output = outputs.back();
  return t;
}

std::vector<TokenSeq> synchronous(int n) {
  std::vector<TokenSeq> out;
  TokenSeq cur;
  for (int i = 0; i < n; ++i) {
    cur.push_back("t" + std::to_string(i));
    out.push_back(cur);
  }
  return out;
}

std::vector<TokenSeq> full_sentence_only(int n) {
  std::vector<TokenSeq> out(static_cast<std::size_t>(n));
  out.back() = synchronous(n).back();
  return out;
}

TEST(AverageLag, Synchronous) {
  EXPECT_DOUBLE_EQ(average_lag(trace_of(synchronous(3))), 1.0);
  for (int n : {1, 2, 7, 40}) EXPECT_NEAR(average_lag(trace_of(synchronous(n))), 1.0, 1e-12);
}

TEST(AverageLag, FullSentenceOnly) {
  EXPECT_DOUBLE_EQ(average_lag(trace_of(full_sentence_only(4))), 2.5);
  for (int n : {1, 4, 10, 33}) EXPECT_NEAR(average_lag(trace_of(full_sentence_only(n))), (n + 1) / 2.0, 1e-12);
}

TEST(AverageLag, FirstReachCountsEvenAfterShrinking) {
  // Length 2 is first reached at step 1 and kept in g even though step 2 shrinks.
  const auto t = trace_of({toks("a b"), toks("c"), toks("c d")});
  LatencyAccumulator acc;
  for (const auto& r : t.records) acc.observe(r.step_index, r.emitted_output.size());
  EXPECT_EQ(acc.first_reached(), (std::vector<std::int64_t>{1, 1}));
  EXPECT_NEAR(average_lag(t), ((1 - 0) + (1 - 1.5)) / 2.0, 1e-12);
}

TEST(AverageLag, EmptyFinalIsZero) {
  auto t = trace_of({TokenSeq{}, TokenSeq{}});
  EXPECT_EQ(average_lag(t), 0.0);
  const auto m = sentence_metrics(t);
  EXPECT_TRUE(m.empty_final);
}

TEST(AverageLag, CharacterMode) {
  const auto t = trace_of({toks("ab"), toks("ab cd")});
  // Characters: length 2 at step 1, length 4 at step 2; |S| = 2, |T| = 4.
  const double expect = ((1 - 0.0) + (1 - 0.5) + (2 - 1.0) + (2 - 1.5)) / 4.0;
  EXPECT_NEAR(average_lag(t, true), expect, 1e-12);
}

TEST(AverageLag, RequiresFinalRecord) {
  auto t = trace_of({toks("a"), toks("a b")});
  t.records.back().is_final = false;
  EXPECT_THROW(average_lag(t), EmptyTrace);
  EXPECT_THROW(normalized_erasure(SessionTrace{}), EmptyTrace);
}

TEST(NormalizedErasure, RewrittenSuffix) {
  const auto t = trace_of({toks("p q r"), toks("p q s t")});
  EXPECT_EQ(erased_tokens(t), 1);
  EXPECT_DOUBLE_EQ(normalized_erasure(t), 0.25);
}

TEST(NormalizedErasure, GrowingOutputsDoNotFlicker) {
  EXPECT_EQ(normalized_erasure(trace_of(synchronous(6))), 0.0);
  EXPECT_EQ(normalized_erasure(trace_of(full_sentence_only(6))), 0.0);
}

TEST(NormalizedErasure, CharacterMode) {
  const auto t = trace_of({toks("abc"), toks("abd")});
  EXPECT_EQ(erased_tokens(t), 1);
  EXPECT_EQ(erased_tokens(t, true), 1);
  EXPECT_NEAR(normalized_erasure(t, true), 1.0 / 3.0, 1e-15);
}

TEST(NormalizedErasure, EmptyFinal) {
  EXPECT_EQ(normalized_erasure(trace_of({TokenSeq{}, TokenSeq{}})), 0.0);
  EXPECT_THROW(normalized_erasure(trace_of({toks("a"), TokenSeq{}})), FlickerOnEmptyFinal);
}

std::vector<TokenSeq> random_schedule(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 9), out_len(0, 6), sym(0, 2);
  std::vector<TokenSeq> outs(static_cast<std::size_t>(len(rng)));
  for (auto& o : outs) {
    o.resize(static_cast<std::size_t>(out_len(rng)));
    for (auto& t : o) t = std::string(1, static_cast<char>('a' + sym(rng)));
  }
  if (outs.back().empty()) outs.back().push_back("z");
  return outs;
}

TEST(MetricsProperty, MatchesDirectEvaluation) {
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 3000; ++iter) {
    const auto outs = random_schedule(rng);
    const auto t = trace_of(outs);
    EXPECT_NEAR(average_lag(t), testing::rescore_average_lag(outs), 1e-12);
    const auto erased = testing::rescore_erasure(outs);
    EXPECT_EQ(erased_tokens(t), erased);
    EXPECT_DOUBLE_EQ(normalized_erasure(t), static_cast<double>(erased) / outs.back().size());
    bool extending = true;
    for (std::size_t i = 1; i < outs.size(); ++i) extending = extending && is_prefix(outs[i - 1], outs[i]);
    EXPECT_EQ(normalized_erasure(t) == 0.0, extending);
  }
}

TEST(MetricsProperty, EarlierEmissionLowersLag) {
  for (int n = 2; n <= 12; ++n) {
    const double baseline = average_lag(trace_of(full_sentence_only(n)));
    for (int step = 1; step < n; ++step) {
      auto outs = full_sentence_only(n);
      outs[static_cast<std::size_t>(step - 1)] = TokenSeq{outs.back()[0]};
      EXPECT_LT(average_lag(trace_of(outs)), baseline);
    }
  }
}

TEST(Bleu, Identical) {
  const std::vector<TokenSeq> refs{toks("a b c d e"), toks("x y z w")};
  EXPECT_EQ(corpus_bleu(refs, refs), 100.0);
}

TEST(Bleu, SmoothedFourGram) {
  const std::vector<TokenSeq> hyp{toks("a b c d")}, ref{toks("a b c e")};
  const double expect = 100.0 * std::pow(3.0 / 4 * 2.0 / 3 * 1.0 / 2 * 1.0 / 2, 0.25);
  EXPECT_NEAR(corpus_bleu(hyp, ref), expect, 1e-9);
  EXPECT_NEAR(corpus_bleu(hyp, ref), 59.46, 5e-3);
}

TEST(Bleu, BrevityAndClipping) {
  // Clipped unigram matches: "a" counts once against a single reference "a".
  const std::vector<TokenSeq> hyp{toks("a a a a")}, ref{toks("a b c d")};
  const double p1 = 1.0 / 4, p2 = 1.0 / 4, p3 = 1.0 / 3, p4 = 1.0 / 2;
  EXPECT_NEAR(corpus_bleu(hyp, ref), 100.0 * std::pow(p1 * p2 * p3 * p4, 0.25), 1e-9);
  const std::vector<TokenSeq> short_hyp{toks("a b c d")}, long_ref{toks("a b c d e f")};
  EXPECT_NEAR(corpus_bleu(short_hyp, long_ref), 100.0 * std::exp(1.0 - 6.0 / 4.0), 1e-9);
}

TEST(Bleu, Errors) {
  const std::vector<TokenSeq> one{toks("a")}, two{toks("a"), toks("b")};
  EXPECT_THROW(corpus_bleu(one, two), LengthMismatch);
  EXPECT_THROW(corpus_bleu(std::vector<TokenSeq>{}, std::vector<TokenSeq>{}), Error);
  const std::vector<TokenSeq> empty_hyp{TokenSeq{}};
  EXPECT_EQ(corpus_bleu(empty_hyp, one), 0.0);
}

TEST(Aggregate, MeanAndCorpusRatio) {
  std::vector<SessionTrace> traces{trace_of(synchronous(3)), trace_of(full_sentence_only(4)),
                                   trace_of({toks("p q r"), toks("p q s t")})};
  for (std::size_t i = 0; i < traces.size(); ++i) {
    traces[i].sentence_id = static_cast<std::int64_t>(i);
    traces[i].reference = traces[i].final_output;
  }
  const auto mean = evaluate_traces("x", traces);
  // Third sentence: g = (1, 1, 1, 2) with |S| = 2, |T| = 4 gives AL 0.5.
  EXPECT_NEAR(mean.average_lag, (1.0 + 2.5 + 0.5) / 3.0, 1e-12);
  EXPECT_NEAR(mean.normalized_erasure, 0.25 / 3.0, 1e-15);
  EXPECT_EQ(mean.bleu, 100.0);
  EXPECT_EQ(mean.n_sentences, 3);

  const auto ratio = evaluate_traces("x", traces, false, ErasureAggregation::kCorpusRatio);
  EXPECT_NEAR(ratio.normalized_erasure, 1.0 / (3 + 4 + 4), 1e-15);
}

TEST(TradeoffCsv, Format) {
  TradeoffPoint p{"mask_k:k=2", 1.5, 0.25, 42.0, 7, 0};
  std::ostringstream out;
  write_tradeoff_csv(out, std::vector<TradeoffPoint>{p});
  EXPECT_EQ(out.str(), "strategy,AL,NE,BLEU,n_sentences\nmask_k:k=2,1.5,0.25,42,7\n");
}

TEST(Pareto, Frontier) {
  const std::vector<TradeoffPoint> pts{{"a", 1, 3, 0, 1, 0}, {"b", 2, 2, 0, 1, 0}, {"c", 2, 3, 0, 1, 0},
                                       {"d", 3, 1, 0, 1, 0}, {"e", 3, 1, 0, 1, 0}};
  EXPECT_TRUE(dominates(pts[1], pts[2]));
  EXPECT_FALSE(dominates(pts[3], pts[4]));
  const auto front = pareto_frontier(pts);
  std::vector<std::string> labels;
  for (const auto& p : front) labels.push_back(p.strategy_label);
  EXPECT_EQ(labels, (std::vector<std::string>{"a", "b", "d", "e"}));
}

}  // namespace
}  // namespace retrans
