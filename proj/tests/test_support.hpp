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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "retrans/core.hpp"
#include "retrans/translator.hpp"

namespace retrans::testing {

inline TokenSeq toks(const std::string& line) { return tokenize(line); }

inline std::filesystem::path data_dir() { return RETRANS_TEST_DATA_DIR; }

// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("retrans_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Exhaustive search over every decoder path, scored with the same
// left-to-right log-probability sum the beam uses.
struct BestPath {
  TokenSeq tokens;
  double score = -INFINITY;
};

inline void enumerate_paths(const ToyTranslator& model, std::span<const Token> source, bool final_sentence,
                            DecoderState& state, BestPath& best) {
  for (const auto& cand : model.step_distribution(state, source, final_sentence)) {
    if (cand.prob <= 0.0) continue;
    const double score = state.accumulated_logprob + std::log(cand.prob);
    if (cand.is_eos()) {
      if (score > best.score) best = {state.target_so_far, score};
      continue;
    }
    DecoderState next = state;
    next.target_so_far.push_back(cand.token);
    next.coverage[*cand.source_position] = true;
    next.accumulated_logprob = score;
    enumerate_paths(model, source, final_sentence, next, best);
  }
}

inline BestPath brute_force_translate(const ToyTranslator& model, std::span<const Token> source,
                                      bool final_sentence = false) {
  DecoderState state;
  state.coverage.assign(source.size(), false);
  BestPath best;
  enumerate_paths(model, source, final_sentence, state, best);
  return best;
}

// Metric definitions evaluated straight from the emitted outputs.
inline std::int64_t rescore_erasure(const std::vector<TokenSeq>& outputs) {
  std::int64_t erased = 0;
  for (std::size_t i = 1; i < outputs.size(); ++i) {
    const auto& a = outputs[i - 1];
    const auto& b = outputs[i];
    std::size_t l = 0;
    while (l < a.size() && l < b.size() && a[l] == b[l]) ++l;
    erased += static_cast<std::int64_t>(a.size() - l);
  }
  return erased;
}

inline double rescore_average_lag(const std::vector<TokenSeq>& outputs) {
  const double s = static_cast<double>(outputs.size());
  const std::size_t tau = outputs.back().size();
  if (tau == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 1; t <= tau; ++t) {
    std::size_t g = 1;
    while (outputs[g - 1].size() < t) ++g;
    sum += static_cast<double>(g) - static_cast<double>(t - 1) * s / static_cast<double>(tau);
  }
  return sum / static_cast<double>(tau);
}

inline std::vector<TokenSeq> outputs_of(const SessionTrace& trace) {
  std::vector<TokenSeq> out;
  for (const auto& rec : trace.records) out.push_back(rec.emitted_output);
  return out;
}

// Random lexicon over source words s0.. with one to three entries each.
inline ToyModelConfig random_toy_model(std::mt19937_64& rng, int n_words, double instability) {
  ToyModelConfig cfg;
  std::uniform_int_distribution<int> entries(1, 3);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  for (int w = 0; w < n_words; ++w) {
    const int k = entries(rng);
    std::vector<double> ws(static_cast<std::size_t>(k));
    double total = 0.0;
    for (auto& x : ws) total += (x = weight(rng));
    auto& row = cfg.lexicon["s" + std::to_string(w)];
    double acc = 0.0;
    for (int e = 0; e < k; ++e) {
      const double p = e + 1 == k ? 1.0 - acc : ws[static_cast<std::size_t>(e)] / total;
      acc += p;
      row.push_back({"t" + std::to_string(w) + static_cast<char>('a' + e), p});
    }
  }
  cfg.beam_size = 3;
  cfg.distortion = 0.4;
  cfg.instability = instability;
  cfg.seed = rng();
  return cfg;
}

inline TokenSeq random_source(std::mt19937_64& rng, int n_words, int min_len, int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> word(0, n_words - 1);
  TokenSeq src(static_cast<std::size_t>(len(rng)));
  for (auto& t : src) t = "s" + std::to_string(word(rng));
  return src;
}

}  // namespace retrans::testing
