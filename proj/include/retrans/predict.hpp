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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "retrans/core.hpp"

namespace retrans {

// Add-alpha smoothed n-gram model over the source language. A context that
// was never seen as a history backs off by dropping its oldest token, down to
// the unigram distribution. Sentences are padded on the left with BOS and
// terminated with EOS; EOS and UNK are part of the predicted vocabulary.
class NgramLM {
 public:
  NgramLM() = default;

  static NgramLM train(std::span<const TokenSeq> corpus, int order = 3, double alpha = 0.1);

  int order() const { return order_; }
  double alpha() const { return alpha_; }

  /// Predictable outcomes in sorted order: corpus tokens, UNK, EOS.
  const std::vector<Token>& vocabulary() const { return vocab_; }
  /// Corpus tokens only (no reserved symbols), sorted.
  std::vector<Token> corpus_vocabulary() const;
  std::uint64_t token_count() const { return token_count_; }

  /// p(token | context). Only the last order-1 context tokens are used;
  /// out-of-vocabulary tokens are mapped to UNK.
  double prob(std::span<const Token> context, std::string_view token) const;
  /// Full next-token distribution, aligned with vocabulary().
  std::vector<double> distribution(std::span<const Token> context) const;

  /// Versioned text dump of the counts ("retrans-ngram 1"), byte-stable for
  /// a given model.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static NgramLM load(std::istream& in, const std::string& name = "<stream>");
  static NgramLM load(const std::filesystem::path& path);

  bool operator==(const NgramLM&) const = default;

 private:
  using Ngram = std::vector<int>;  // token ids; kBosId for sentence-start padding

  int id_of(std::string_view token) const;
  Ngram history(std::span<const Token> context) const;
  void rebuild_totals();

  int order_ = 3;
  double alpha_ = 0.1;
  std::vector<Token> vocab_;
  std::map<Token, int, std::less<>> ids_;
  std::uint64_t token_count_ = 0;
  // counts_[n - 1] holds n-gram counts: history (n-1 ids) followed by the predicted id.
  std::vector<std::map<Ngram, std::uint64_t>> counts_;
  // totals_[n - 1] maps an (n-1)-id history to the number of times it was followed by anything.
  std::vector<std::map<Ngram, std::uint64_t>> totals_;

  static constexpr int kBosId = -1;
};

enum class PredictorStrategy { kLmSample, kLmGreedy, kUnknown, kRandom };

std::string_view to_string(PredictorStrategy s);
/// Accepts "lm_sample", "lm_greedy", "unknown", "random" (hyphens allowed).
PredictorStrategy parse_predictor_strategy(std::string_view name);

struct PredictorConfig {
  PredictorStrategy strategy = PredictorStrategy::kLmGreedy;
  int k = 1;  // tokens per extension
  int n = 1;  // number of extensions
  std::uint64_t seed = 0;

  /// Number of extensions actually produced: deterministic strategies give one.
  int effective_n() const;
};

// Identifies one prediction call for seeding.
struct PredictionSite {
  std::int64_t sentence_id = 0;
  std::int64_t step_index = 0;
};

/// Seed of the RNG stream for one extension sample.
std::uint64_t sample_seed(std::uint64_t seed, std::int64_t sentence_id, std::int64_t step_index,
                          std::int64_t sample_index);

/// Returns effective_n() extensions, each beginning with prefix. LM strategies
/// stop early when EOS is predicted, so an extension may be shorter than
/// |prefix| + k. vocab is the sampling pool for the random strategy.
std::vector<TokenSeq> predict_extensions(const PredictorConfig& cfg, const NgramLM* lm,
                                         std::span<const Token> vocab, std::span<const Token> prefix,
                                         PredictionSite site = {});

}  // namespace retrans
