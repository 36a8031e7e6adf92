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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "retrans/core.hpp"

namespace retrans {

// Biasing target for biased beam search: each step's probability becomes
// (1 - beta) * p + beta * [candidate == previous_output[i]] until the
// hypothesis diverges from previous_output.
struct BiasSpec {
  TokenSeq previous_output;
  double beta = 0.0;
};

struct Translation {
  TokenSeq tokens;
  double score = 0.0;  // log-probability of the search objective; 0 for scripted lookups
};

// Produces a translation for any source prefix. Implementations are
// immutable after construction and safe to call concurrently.
class Translator {
 public:
  virtual ~Translator() = default;

  /// source_complete tells the model that no further source tokens follow.
  virtual Translation translate(std::span<const Token> source,
                                const std::optional<BiasSpec>& bias = std::nullopt,
                                bool source_complete = false) const = 0;
};

// ---------------------------------------------------------------------------
// Scripted translator: exact prefix lookup.

class ScriptedTranslator final : public Translator {
 public:
  ScriptedTranslator() = default;
  explicit ScriptedTranslator(std::map<std::string, TokenSeq> script, bool identity_fallback = false)
      : script_(std::move(script)), identity_fallback_(identity_fallback) {}

  Translation translate(std::span<const Token> source, const std::optional<BiasSpec>& bias = std::nullopt,
                        bool source_complete = false) const override;

  /// Adds an entry; throws DuplicatePrefix if the prefix is already scripted.
  void add(std::span<const Token> prefix, TokenSeq translation);
  std::size_t size() const { return script_.size(); }
  bool identity_fallback() const { return identity_fallback_; }
  void set_identity_fallback(bool on) { identity_fallback_ = on; }

 private:
  std::map<std::string, TokenSeq> script_;  // keyed by the prefix joined with single spaces
  bool identity_fallback_ = false;
};

/// Reads "source prefix<TAB>translation" lines.
ScriptedTranslator load_script(const std::filesystem::path& path, bool identity_fallback = false);

// ---------------------------------------------------------------------------
// Toy lexical decoder.

struct LexEntry {
  Token target;
  double prob = 0.0;
};

struct ToyModelConfig {
  std::map<Token, std::vector<LexEntry>> lexicon;
  int beam_size = 4;
  double distortion = 0.5;        // gamma in (0, 1]
  double instability = 0.0;       // lambda >= 0
  double eos_prob_final = 0.9;
  double eos_prob_nonfinal = 0.1;
  double max_len_ratio = 1.0;
  std::uint64_t seed = 0;

  /// Throws InputError / NonNormalizedLexicon on out-of-range values.
  void validate() const;
};

/// Reads "src ||| tgt ||| prob" lines ('#' starts a comment). Decoder
/// parameters keep their defaults.
ToyModelConfig load_lexicon(const std::filesystem::path& path);

struct DecoderState {
  TokenSeq target_so_far;
  std::vector<bool> coverage;  // one flag per source position
  double accumulated_logprob = 0.0;
};

// One possible decoder move. source_position is 0-based; EOS has none.
struct StepCandidate {
  Token token;
  std::optional<std::size_t> source_position;
  double prob = 0.0;

  bool is_eos() const { return !source_position.has_value(); }
};

// Instability hash. The byte-level definition is part of the trace format:
//   mix64        splitmix64 finalizer
//   token_digest h = kDigestInit; for each byte b: h = mix64(h ^ b); h = mix64(h ^ length)
//   source_digest h = kDigestInit; for each token: h = mix64(h ^ token_digest); h = mix64(h ^ count)
//   instability_hash = mix64(mix64(mix64(seed ^ source_digest) ^ target_index) ^ token_digest(candidate))
inline constexpr std::uint64_t kDigestInit = 0x9E3779B97F4A7C15ULL;
std::uint64_t mix64(std::uint64_t x);
std::uint64_t token_digest(std::string_view token);
std::uint64_t source_digest(std::span<const Token> source);
std::uint64_t instability_hash(std::uint64_t seed, std::uint64_t source_digest,
                               std::uint64_t target_index, std::uint64_t candidate_digest);
/// Maps the top 53 bits of h uniformly into [-1, 1).
double hash_to_symmetric_unit(std::uint64_t h);

class ToyTranslator final : public Translator {
 public:
  explicit ToyTranslator(ToyModelConfig config);

  Translation translate(std::span<const Token> source, const std::optional<BiasSpec>& bias = std::nullopt,
                        bool source_complete = false) const override;

  /// Normalized next-move distribution for a decoder state. Candidates are
  /// ordered by source position, then lexicon order, with EOS last.
  std::vector<StepCandidate> step_distribution(const DecoderState& state,
                                               std::span<const Token> source,
                                               bool source_is_final_sentence) const;

  const ToyModelConfig& config() const { return config_; }

 private:
  struct Entry {
    Token target;
    double prob;
    std::uint64_t digest;
  };
  const std::vector<Entry>& entries_for(const Token& source_token) const;
  std::vector<StepCandidate> distribution(const std::vector<bool>& coverage, std::size_t target_len,
                                          std::span<const Token> source, std::uint64_t src_digest,
                                          bool source_is_final_sentence) const;

  ToyModelConfig config_;
  std::unordered_map<Token, std::vector<Entry>> entries_;
  std::vector<Entry> unk_entries_;
};

/// Free-function form of ToyTranslator::step_distribution.
std::vector<StepCandidate> step_distribution(const ToyModelConfig& model, const DecoderState& state,
                                             std::span<const Token> source,
                                             bool source_is_final_sentence);

bool ends_with_sentence_punctuation(std::span<const Token> source);

}  // namespace retrans
