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

#include "retrans/predict.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "retrans/errors.hpp"
#include "retrans/translator.hpp"

namespace retrans {
namespace {

constexpr std::string_view kMagic = "retrans-ngram";
constexpr int kFormatVersion = 1;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

// ---------------------------------------------------------------------------
// NgramLM

NgramLM NgramLM::train(std::span<const TokenSeq> corpus, int order, double alpha) {
  if (corpus.empty()) throw EmptyCorpus();
  if (order < 1 || order > 4) throw InputError("n-gram order must be in [1, 4]");
  if (!(alpha > 0.0)) throw InputError("smoothing alpha must be > 0");

  NgramLM lm;
  lm.order_ = order;
  lm.alpha_ = alpha;
  std::set<Token> vocab{Token(kUnkToken), Token(kEosToken)};
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) {
      if (is_reserved(tok)) throw InputError("reserved symbol '" + tok + "' in LM training corpus");
      vocab.insert(tok);
    }
  }
  lm.vocab_.assign(vocab.begin(), vocab.end());
  for (std::size_t i = 0; i < lm.vocab_.size(); ++i) lm.ids_.emplace(lm.vocab_[i], static_cast<int>(i));
  lm.counts_.resize(static_cast<std::size_t>(order));

  const int eos = lm.id_of(kEosToken);
  for (const auto& sent : corpus) {
    Ngram padded(static_cast<std::size_t>(order - 1), kBosId);
    for (const auto& tok : sent) padded.push_back(lm.id_of(tok));
    padded.push_back(eos);
    lm.token_count_ += sent.size();
    for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
      for (int n = 1; n <= order; ++n) {
        Ngram gram(padded.begin() + static_cast<std::ptrdiff_t>(i) - (n - 1),
                   padded.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        ++lm.counts_[static_cast<std::size_t>(n - 1)][gram];
      }
    }
  }
  lm.rebuild_totals();
  return lm;
}

void NgramLM::rebuild_totals() {
  totals_.assign(counts_.size(), {});
  for (std::size_t n = 0; n < counts_.size(); ++n) {
    for (const auto& [gram, count] : counts_[n]) {
      totals_[n][Ngram(gram.begin(), gram.end() - 1)] += count;
    }
  }
}

std::vector<Token> NgramLM::corpus_vocabulary() const {
  std::vector<Token> out;
  for (const auto& tok : vocab_) {
    if (!is_reserved(tok)) out.push_back(tok);
  }
  return out;
}

int NgramLM::id_of(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  if (token == kBosToken) return kBosId;
  return ids_.find(kUnkToken)->second;
}

NgramLM::Ngram NgramLM::history(std::span<const Token> context) const {
  const auto len = static_cast<std::size_t>(order_ - 1);
  Ngram h(len, kBosId);
  const std::size_t take = std::min(len, context.size());
  for (std::size_t i = 0; i < take; ++i) {
    h[len - take + i] = id_of(context[context.size() - take + i]);
  }
  return h;
}

std::vector<double> NgramLM::distribution(std::span<const Token> context) const {
  if (vocab_.empty()) throw Error("language model is not trained");
  const Ngram h = history(context);
  const double v = static_cast<double>(vocab_.size());
  // Longest history seen in training; the empty history always exists.
  for (int n = order_; n >= 1; --n) {
    const Ngram hist(h.end() - (n - 1), h.end());
    const auto& totals = totals_[static_cast<std::size_t>(n - 1)];
    const auto it = totals.find(hist);
    if (it == totals.end() || it->second == 0) continue;
    const double denom = static_cast<double>(it->second) + alpha_ * v;
    std::vector<double> dist(vocab_.size());
    Ngram gram = hist;
    gram.push_back(0);
    const auto& counts = counts_[static_cast<std::size_t>(n - 1)];
    for (std::size_t w = 0; w < vocab_.size(); ++w) {
      gram.back() = static_cast<int>(w);
      const auto c = counts.find(gram);
      dist[w] = ((c == counts.end() ? 0.0 : static_cast<double>(c->second)) + alpha_) / denom;
    }
    return dist;
  }
  throw Error("language model has no unigram counts");
}

double NgramLM::prob(std::span<const Token> context, std::string_view token) const {
  const auto dist = distribution(context);
  return dist[static_cast<std::size_t>(id_of(token))];
}

void NgramLM::save(std::ostream& out) const {
  auto name = [&](int id) -> std::string_view {
    return id == kBosId ? kBosToken : std::string_view(vocab_[static_cast<std::size_t>(id)]);
  };
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << order_ << '\n';
  out << "alpha " << format_double(alpha_) << '\n';
  out << "tokens " << token_count_ << '\n';
  out << "vocab " << vocab_.size() << '\n';
  for (const auto& tok : vocab_) out << tok << '\n';
  for (std::size_t n = 0; n < counts_.size(); ++n) {
    out << "ngrams " << n + 1 << ' ' << counts_[n].size() << '\n';
    for (const auto& [gram, count] : counts_[n]) {
      out << count;
      for (int id : gram) out << ' ' << name(id);
      out << '\n';
    }
  }
}

void NgramLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  save(out);
}

NgramLM NgramLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open LM file " + path.string());
  return load(in, path.string());
}

NgramLM NgramLM::load(std::istream& in, const std::string& where) {
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::vector<Token> {
    if (!std::getline(in, line)) throw ParseError(where, lineno + 1, "unexpected end of file");
    ++lineno;
    return tokenize(line);
  };
  auto number = [&](const std::string& s) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError(where, lineno, "expected a number, got '" + s + "'");
  };
  auto keyed = [&](std::string_view key) -> std::string {
    const auto f = next();
    if (f.size() != 2 || f[0] != key) throw ParseError(where, lineno, "expected '" + std::string(key) + " <value>'");
    return f[1];
  };

  auto header = next();
  if (header.size() != 2 || header[0] != kMagic) throw ParseError(where, lineno, "not an n-gram LM file");
  if (number(header[1]) != kFormatVersion) {
    throw SchemaMismatch(where + ": unsupported LM format version " + header[1]);
  }
  NgramLM lm;
  lm.order_ = static_cast<int>(number(keyed("order")));
  if (lm.order_ < 1 || lm.order_ > 4) throw ParseError(where, lineno, "order must be in [1, 4]");
  try {
    lm.alpha_ = std::stod(keyed("alpha"));
  } catch (const std::invalid_argument&) {
    throw ParseError(where, lineno, "bad alpha");
  }
  lm.token_count_ = number(keyed("tokens"));
  const auto vsize = number(keyed("vocab"));
  for (std::uint64_t i = 0; i < vsize; ++i) {
    const auto f = next();
    if (f.size() != 1) throw ParseError(where, lineno, "expected one vocabulary token");
    if (!lm.vocab_.empty() && !(lm.vocab_.back() < f[0])) {
      throw ParseError(where, lineno, "vocabulary must be sorted and unique");
    }
    lm.ids_.emplace(f[0], static_cast<int>(lm.vocab_.size()));
    lm.vocab_.push_back(f[0]);
  }
  if (!lm.ids_.contains(kUnkToken) || !lm.ids_.contains(kEosToken)) {
    throw ParseError(where, lineno, "vocabulary lacks reserved symbols");
  }
  lm.counts_.resize(static_cast<std::size_t>(lm.order_));
  for (int n = 1; n <= lm.order_; ++n) {
    const auto f = next();
    if (f.size() != 3 || f[0] != "ngrams" || number(f[1]) != static_cast<std::uint64_t>(n)) {
      throw ParseError(where, lineno, "expected 'ngrams " + std::to_string(n) + " <count>'");
    }
    const auto entries = number(f[2]);
    for (std::uint64_t e = 0; e < entries; ++e) {
      const auto g = next();
      if (g.size() != static_cast<std::size_t>(n) + 1) throw ParseError(where, lineno, "wrong n-gram arity");
      Ngram gram;
      for (std::size_t i = 1; i < g.size(); ++i) {
        if (g[i] == kBosToken) {
          gram.push_back(kBosId);
        } else if (auto it = lm.ids_.find(g[i]); it != lm.ids_.end()) {
          gram.push_back(it->second);
        } else {
          throw ParseError(where, lineno, "token '" + g[i] + "' not in vocabulary");
        }
      }
      lm.counts_[static_cast<std::size_t>(n - 1)][gram] = number(g[0]);
    }
  }
  lm.rebuild_totals();
  return lm;
}

// ---------------------------------------------------------------------------
// Prediction

std::string_view to_string(PredictorStrategy s) {
  switch (s) {
    case PredictorStrategy::kLmSample: return "lm_sample";
    case PredictorStrategy::kLmGreedy: return "lm_greedy";
    case PredictorStrategy::kUnknown: return "unknown";
    case PredictorStrategy::kRandom: return "random";
  }
  return "?";
}

PredictorStrategy parse_predictor_strategy(std::string_view name) {
  std::string norm(name);
  std::replace(norm.begin(), norm.end(), '-', '_');
  if (norm == "lm_sample") return PredictorStrategy::kLmSample;
  if (norm == "lm_greedy") return PredictorStrategy::kLmGreedy;
  if (norm == "unknown") return PredictorStrategy::kUnknown;
  if (norm == "random") return PredictorStrategy::kRandom;
  throw InputError("unknown predictor strategy '" + std::string(name) + "'");
}

int PredictorConfig::effective_n() const {
  if (strategy == PredictorStrategy::kLmGreedy || strategy == PredictorStrategy::kUnknown) return 1;
  return n;
}

std::uint64_t sample_seed(std::uint64_t seed, std::int64_t sentence_id, std::int64_t step_index,
                          std::int64_t sample_index) {
  std::uint64_t h = mix64(seed ^ kDigestInit);
  h = mix64(h ^ static_cast<std::uint64_t>(sentence_id));
  h = mix64(h ^ static_cast<std::uint64_t>(step_index));
  return mix64(h ^ static_cast<std::uint64_t>(sample_index));
}

std::vector<TokenSeq> predict_extensions(const PredictorConfig& cfg, const NgramLM* lm,
                                         std::span<const Token> vocab, std::span<const Token> prefix,
                                         PredictionSite site) {
  if (prefix.empty()) throw InputError("predict_extensions: empty prefix");
  if (cfg.k < 1 || cfg.n < 1) throw InputError("predictor k and n must be >= 1");
  const bool needs_lm = cfg.strategy == PredictorStrategy::kLmSample ||
                        cfg.strategy == PredictorStrategy::kLmGreedy;
  if (needs_lm && lm == nullptr) throw MissingLM();
  if (cfg.strategy == PredictorStrategy::kRandom && vocab.empty()) {
    throw InputError("random predictor needs a non-empty vocabulary");
  }

  std::vector<TokenSeq> out;
  const int n = cfg.effective_n();
  for (int s = 0; s < n; ++s) {
    TokenSeq ext(prefix.begin(), prefix.end());
    std::mt19937_64 rng(sample_seed(cfg.seed, site.sentence_id, site.step_index, s));
    bool ended = false;
    for (int i = 0; i < cfg.k && !ended; ++i) {
      switch (cfg.strategy) {
        case PredictorStrategy::kUnknown:
          ext.emplace_back(kUnkToken);
          break;
        case PredictorStrategy::kRandom: {
          auto idx = static_cast<std::size_t>(unit(rng) * static_cast<double>(vocab.size()));
          ext.push_back(vocab[std::min(idx, vocab.size() - 1)]);
          break;
        }
        case PredictorStrategy::kLmGreedy:
        case PredictorStrategy::kLmSample: {
          const auto dist = lm->distribution(ext);
          std::size_t pick = 0;
          if (cfg.strategy == PredictorStrategy::kLmGreedy) {
            // Vocabulary is sorted, so the first maximum is the lexicographically smallest.
            pick = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
          } else {
            const double u = unit(rng);
            double acc = 0.0;
            pick = dist.size() - 1;
            for (std::size_t w = 0; w < dist.size(); ++w) {
              acc += dist[w];
              if (u < acc) {
                pick = w;
                break;
              }
            }
          }
          const auto& tok = lm->vocabulary()[pick];
          if (tok == kEosToken) {
            ended = true;
          } else {
            ext.push_back(tok);
          }
          break;
        }
      }
    }
    out.push_back(std::move(ext));
  }
  return out;
}

}  // namespace retrans
