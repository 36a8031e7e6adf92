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

#include "retrans/translator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <utility>

#include "retrans/errors.hpp"

namespace retrans {

// ---------------------------------------------------------------------------
// Hashing

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t token_digest(std::string_view token) {
  std::uint64_t h = kDigestInit;
  for (unsigned char b : token) h = mix64(h ^ b);
  return mix64(h ^ token.size());
}

std::uint64_t source_digest(std::span<const Token> source) {
  std::uint64_t h = kDigestInit;
  for (const auto& tok : source) h = mix64(h ^ token_digest(tok));
  return mix64(h ^ source.size());
}

std::uint64_t instability_hash(std::uint64_t seed, std::uint64_t src_digest,
                               std::uint64_t target_index, std::uint64_t candidate_digest) {
  return mix64(mix64(mix64(seed ^ src_digest) ^ target_index) ^ candidate_digest);
}

double hash_to_symmetric_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

bool ends_with_sentence_punctuation(std::span<const Token> source) {
  if (source.empty()) return false;
  const auto& last = source.back();
  return last == "." || last == "?" || last == "!";
}

// ---------------------------------------------------------------------------
// Scripted translator

Translation ScriptedTranslator::translate(std::span<const Token> source,
                                          const std::optional<BiasSpec>& /*bias*/,
                                          bool /*source_complete*/) const {
  if (source.empty()) throw InputError("translate: empty source");
  const auto key = join(source);
  if (auto it = script_.find(key); it != script_.end()) return {it->second, 0.0};
  if (identity_fallback_) return {TokenSeq(source.begin(), source.end()), 0.0};
  throw ScriptMiss(key);
}

void ScriptedTranslator::add(std::span<const Token> prefix, TokenSeq translation) {
  auto [it, inserted] = script_.emplace(join(prefix), std::move(translation));
  if (!inserted) throw DuplicatePrefix("script", 0, "duplicate prefix '" + it->first + "'");
}

ScriptedTranslator load_script(const std::filesystem::path& path, bool identity_fallback) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open script " + path.string());
  ScriptedTranslator script({}, identity_fallback);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path.string(), lineno, "missing TAB separator");
    const auto prefix = tokenize(std::string_view(line).substr(0, tab));
    if (prefix.empty()) throw ParseError(path.string(), lineno, "empty source prefix");
    try {
      script.add(prefix, tokenize(std::string_view(line).substr(tab + 1)));
    } catch (const DuplicatePrefix&) {
      throw DuplicatePrefix(path.string(), lineno, "duplicate prefix '" + join(prefix) + "'");
    }
  }
  return script;
}

// ---------------------------------------------------------------------------
// Toy model config

void ToyModelConfig::validate() const {
  if (beam_size < 1) throw InputError("beam_size must be >= 1");
  if (!(distortion > 0.0 && distortion <= 1.0)) throw InputError("distortion must be in (0, 1]");
  if (!(instability >= 0.0)) throw InputError("instability must be >= 0");
  if (!(eos_prob_final > 0.0 && eos_prob_final < 1.0)) throw InputError("eos_prob_final must be in (0, 1)");
  if (!(eos_prob_nonfinal > 0.0 && eos_prob_nonfinal < 1.0)) {
    throw InputError("eos_prob_nonfinal must be in (0, 1)");
  }
  if (!(max_len_ratio > 0.0)) throw InputError("max_len_ratio must be > 0");
  for (const auto& [src, entries] : lexicon) {
    if (entries.empty()) throw NonNormalizedLexicon("no entries for source token '" + src + "'");
    double sum = 0.0;
    for (const auto& e : entries) {
      if (!(e.prob > 0.0 && e.prob <= 1.0)) {
        throw NonNormalizedLexicon("probability out of (0, 1] for '" + src + "' -> '" + e.target + "'");
      }
      sum += e.prob;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw NonNormalizedLexicon("probabilities for '" + src + "' sum to " + std::to_string(sum));
    }
  }
}

ToyModelConfig load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon " + path.string());
  ToyModelConfig cfg;
  std::set<std::pair<Token, Token>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields_view = tokenize(line);
    if (fields_view.empty()) continue;
    // Split on the literal "|||" separators.
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto sep = line.find("|||", start);
      fields.push_back(line.substr(start, sep == std::string::npos ? std::string::npos : sep - start));
      if (sep == std::string::npos) break;
      start = sep + 3;
    }
    if (fields.size() != 3) throw ParseError(path.string(), lineno, "expected 'src ||| tgt ||| prob'");
    const auto src = tokenize(fields[0]);
    const auto tgt = tokenize(fields[1]);
    const auto prob_tok = tokenize(fields[2]);
    if (src.size() != 1 || tgt.size() != 1 || prob_tok.size() != 1) {
      throw ParseError(path.string(), lineno, "each field must hold exactly one token");
    }
    double prob = 0.0;
    try {
      std::size_t used = 0;
      prob = std::stod(prob_tok[0], &used);
      if (used != prob_tok[0].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(path.string(), lineno, "bad probability '" + prob_tok[0] + "'");
    }
    if (!(prob > 0.0 && prob <= 1.0)) throw ParseError(path.string(), lineno, "probability must be in (0, 1]");
    if (!seen.emplace(src[0], tgt[0]).second) {
      throw ParseError(path.string(), lineno, "duplicate entry '" + src[0] + " ||| " + tgt[0] + "'");
    }
    cfg.lexicon[src[0]].push_back({tgt[0], prob});
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Toy translator

ToyTranslator::ToyTranslator(ToyModelConfig config) : config_(std::move(config)) {
  config_.validate();
  for (const auto& [src, entries] : config_.lexicon) {
    auto& out = entries_[src];
    for (const auto& e : entries) out.push_back({e.target, e.prob, token_digest(e.target)});
  }
  unk_entries_.push_back({Token(kUnkToken), 1.0, token_digest(kUnkToken)});
}

const std::vector<ToyTranslator::Entry>& ToyTranslator::entries_for(const Token& source_token) const {
  if (auto it = entries_.find(source_token); it != entries_.end()) return it->second;
  if (source_token == kUnkToken) return unk_entries_;
  throw UnknownSourceToken(source_token);
}

std::vector<StepCandidate> ToyTranslator::distribution(const std::vector<bool>& coverage,
                                                       std::size_t target_len,
                                                       std::span<const Token> source,
                                                       std::uint64_t src_digest,
                                                       bool source_is_final_sentence) const {
  std::vector<StepCandidate> out;
  std::size_t expected_next = 0;
  bool full = true;
  for (std::size_t j = 0; j < coverage.size(); ++j) {
    if (coverage[j]) {
      expected_next = j + 1;
    } else {
      full = false;
    }
  }
  for (std::size_t j = 0; j < source.size(); ++j) {
    if (coverage[j]) continue;
    const auto distance = j > expected_next ? j - expected_next : expected_next - j;
    const double reorder = std::pow(config_.distortion, static_cast<double>(distance));
    for (const auto& e : entries_for(source[j])) {
      double score = e.prob * reorder;
      if (config_.instability != 0.0) {
        const double u = hash_to_symmetric_unit(
            instability_hash(config_.seed, src_digest, target_len, e.digest));
        score *= std::exp(config_.instability * u);
      }
      out.push_back({e.target, j, score});
    }
  }
  if (full || static_cast<double>(target_len) >=
                  config_.max_len_ratio * static_cast<double>(source.size())) {
    const bool final_like = source_is_final_sentence || ends_with_sentence_punctuation(source);
    out.push_back({Token(kEosToken), std::nullopt,
                   final_like ? config_.eos_prob_final : config_.eos_prob_nonfinal});
  }
  double total = 0.0;
  for (const auto& c : out) total += c.prob;
  for (auto& c : out) c.prob /= total;
  return out;
}

std::vector<StepCandidate> ToyTranslator::step_distribution(const DecoderState& state,
                                                            std::span<const Token> source,
                                                            bool source_is_final_sentence) const {
  if (state.coverage.size() != source.size()) {
    throw InputError("decoder state coverage does not match source length");
  }
  return distribution(state.coverage, state.target_so_far.size(), source, source_digest(source),
                      source_is_final_sentence);
}

std::vector<StepCandidate> step_distribution(const ToyModelConfig& model, const DecoderState& state,
                                             std::span<const Token> source,
                                             bool source_is_final_sentence) {
  return ToyTranslator(model).step_distribution(state, source, source_is_final_sentence);
}

namespace {

struct Hypothesis {
  TokenSeq target;
  std::vector<bool> coverage;
  double score = 0.0;
  bool diverged = false;  // no longer follows the bias target
};

struct Expansion {
  std::size_t parent;
  std::size_t candidate;
  double score;
  bool diverged;
};

}  // namespace

Translation ToyTranslator::translate(std::span<const Token> source, const std::optional<BiasSpec>& bias,
                                     bool source_complete) const {
  if (source.empty()) throw InputError("translate: empty source");
  const auto beam = static_cast<std::size_t>(config_.beam_size);
  const auto src_digest = source_digest(source);
  const TokenSeq* prev = nullptr;
  double beta = 0.0;
  if (bias && bias->beta > 0.0) {
    if (bias->beta > 1.0) throw InputError("bias beta must be in [0, 1]");
    prev = &bias->previous_output;
    beta = bias->beta;
  }

  std::vector<Hypothesis> active(1);
  active[0].coverage.assign(source.size(), false);
  std::vector<Hypothesis> finished;

  // Every non-EOS move consumes a source position, so |source| + 1 steps suffice.
  for (std::size_t step = 0; step <= source.size() && !active.empty(); ++step) {
    std::vector<std::vector<StepCandidate>> dists(active.size());
    std::vector<Expansion> expansions;
    for (std::size_t h = 0; h < active.size(); ++h) {
      const auto& hyp = active[h];
      dists[h] = distribution(hyp.coverage, hyp.target.size(), source, src_digest, source_complete);
      const auto& dist = dists[h];
      const std::size_t pos = hyp.target.size();
      const bool biased = prev && !hyp.diverged && pos < prev->size();
      bool reachable = false;
      if (biased) {
        reachable = std::any_of(dist.begin(), dist.end(), [&](const StepCandidate& c) {
          return !c.is_eos() && c.token == (*prev)[pos];
        });
      }
      // With beta == 1 and an unreachable bias target every p^B would be zero;
      // fall back to the model distribution and treat the hypothesis as diverged.
      const bool apply = biased && (reachable || beta < 1.0);
      for (std::size_t c = 0; c < dist.size(); ++c) {
        const auto& cand = dist[c];
        double p = cand.prob;
        bool diverged = hyp.diverged;
        if (biased) {
          const bool match = !cand.is_eos() && cand.token == (*prev)[pos];
          if (apply) p = (1.0 - beta) * p + (match ? beta : 0.0);
          diverged = diverged || !match;
        }
        if (p <= 0.0) continue;
        expansions.push_back({h, c, hyp.score + std::log(p), diverged});
      }
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.score > b.score; });

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < expansions.size() && i < beam; ++i) {
      const auto& ex = expansions[i];
      const auto& parent = active[ex.parent];
      const auto& cand = dists[ex.parent][ex.candidate];
      Hypothesis hyp{parent.target, parent.coverage, ex.score, ex.diverged};
      if (cand.is_eos()) {
        finished.push_back(std::move(hyp));
        continue;
      }
      hyp.target.push_back(cand.token);
      hyp.coverage[*cand.source_position] = true;
      next.push_back(std::move(hyp));
    }
    active = std::move(next);

    // Scores only decrease, so once the beam of finished hypotheses is full
    // and beats every live one the search is done.
    if (finished.size() >= beam && !active.empty()) {
      double best_finished = finished.front().score;
      for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
      double best_active = active.front().score;
      for (const auto& a : active) best_active = std::max(best_active, a.score);
      if (best_finished >= best_active) break;
    }
  }
  if (finished.empty()) throw Error("beam search produced no complete hypothesis");
  const Hypothesis* best = &finished.front();
  for (const auto& f : finished) {
    if (f.score > best->score) best = &f;
  }
  return {best->target, best->score};
}

}  // namespace retrans
