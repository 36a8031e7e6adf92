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

#include "retrans/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "retrans/errors.hpp"

namespace retrans {
namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return std::min(static_cast<std::size_t>(unit(rng) * static_cast<double>(n)), n - 1);
}

std::string word_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%02d", i);
  return buf;
}

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

// Successor distribution of the source Markov chain.
struct Transitions {
  std::vector<std::size_t> successors;
  std::vector<double> weights;
};

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticSpec& spec) {
  if (spec.vocab_size < 2 || spec.min_len < 2 || spec.max_len < spec.min_len || spec.n_sentences < 1 ||
      spec.n_train_sentences < 1) {
    throw InputError("invalid synthetic corpus parameters");
  }
  std::mt19937_64 rng(spec.seed);
  const int n_words = spec.vocab_size - 1;  // plus "."
  SyntheticCorpus out;

  // Lexicon: roughly 45% unambiguous words, 35% with two senses, 20% with three.
  std::vector<Token> best(static_cast<std::size_t>(n_words));
  for (int w = 0; w < n_words; ++w) {
    const auto src = word_name(w);
    const std::string tgt = "t" + src.substr(1);
    auto& entries = out.model.lexicon[src];
    const double kind = unit(rng);
    if (kind < 0.45) {
      entries.push_back({tgt + "a", 1.0});
    } else if (kind < 0.80) {
      const double p = 0.5 + 0.25 * unit(rng);
      entries.push_back({tgt + "a", p});
      entries.push_back({tgt + "b", 1.0 - p});
    } else {
      const double p1 = 0.4 + 0.2 * unit(rng);
      const double p2 = (1.0 - p1) * (0.5 + 0.3 * unit(rng));
      entries.push_back({tgt + "a", p1});
      entries.push_back({tgt + "b", p2});
      entries.push_back({tgt + "c", 1.0 - p1 - p2});
    }
    best[static_cast<std::size_t>(w)] = entries.front().target;
  }
  out.model.lexicon["."].push_back({".", 1.0});

  // Source language: each word prefers three successors.
  std::vector<Transitions> chain(static_cast<std::size_t>(n_words));
  for (auto& t : chain) {
    for (double weight : {0.5, 0.25, 0.1}) {
      t.successors.push_back(below(rng, static_cast<std::size_t>(n_words)));
      t.weights.push_back(weight);
    }
  }
  auto next_word = [&](std::size_t prev) {
    const auto& t = chain[prev];
    double u = unit(rng);
    for (std::size_t i = 0; i < t.successors.size(); ++i) {
      if (u < t.weights[i]) return t.successors[i];
      u -= t.weights[i];
    }
    return below(rng, static_cast<std::size_t>(n_words));
  };
  auto sentence = [&]() {
    const auto len = static_cast<std::size_t>(spec.min_len) +
                     below(rng, static_cast<std::size_t>(spec.max_len - spec.min_len + 1));
    std::vector<std::size_t> ids{below(rng, static_cast<std::size_t>(n_words))};
    while (ids.size() + 1 < len) ids.push_back(next_word(ids.back()));
    return ids;
  };

  for (int s = 0; s < spec.n_sentences; ++s) {
    const auto ids = sentence();
    SentencePair pair;
    pair.sentence_id = s;
    for (auto id : ids) pair.source.push_back(word_name(static_cast<int>(id)));
    pair.source.emplace_back(".");
    for (auto id : ids) pair.reference.push_back(best[id]);
    for (std::size_t i = 0; i + 1 < pair.reference.size(); ++i) {
      if (unit(rng) < 0.15) {
        std::swap(pair.reference[i], pair.reference[i + 1]);
        ++i;
      }
    }
    pair.reference.emplace_back(".");
    out.test.push_back(std::move(pair));
  }
  for (int s = 0; s < spec.n_train_sentences; ++s) {
    TokenSeq sent;
    for (auto id : sentence()) sent.push_back(word_name(static_cast<int>(id)));
    sent.emplace_back(".");
    out.train_source.push_back(std::move(sent));
  }
  return out;
}

ToyModelConfig synthetic_decoder_params(double instability) {
  ToyModelConfig cfg;
  cfg.beam_size = 4;
  cfg.distortion = 0.2;
  cfg.instability = instability;
  cfg.eos_prob_final = 0.9;
  cfg.eos_prob_nonfinal = 0.1;
  cfg.max_len_ratio = 1.0;
  cfg.seed = 7;
  return cfg;
}

void write_lexicon(const ToyModelConfig& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# src ||| tgt ||| prob\n";
  for (const auto& [src, entries] : model.lexicon) {
    for (const auto& e : entries) out << src << " ||| " << e.target << " ||| " << format_prob(e.prob) << '\n';
  }
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_lines = [&](const std::string& name, auto&& get) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    for (const auto& line : get()) out << join(line) << '\n';
  };
  write_lines("train.src", [&] { return corpus.train_source; });
  write_lines("test.src", [&] {
    std::vector<TokenSeq> v;
    for (const auto& p : corpus.test) v.push_back(p.source);
    return v;
  });
  write_lines("test.ref", [&] {
    std::vector<TokenSeq> v;
    for (const auto& p : corpus.test) v.push_back(p.reference);
    return v;
  });
  write_lexicon(corpus.model, dir / "lexicon.txt");

  const auto params = synthetic_decoder_params(0.5);
  nlohmann::ordered_json run = {
      {"schema_version", 1},
      {"source", "test.src"},
      {"reference", "test.ref"},
      {"translator",
       {{"kind", "toy"},
        {"lexicon", "lexicon.txt"},
        {"beam_size", params.beam_size},
        {"distortion", params.distortion},
        {"instability", params.instability},
        {"eos_prob_final", params.eos_prob_final},
        {"eos_prob_nonfinal", params.eos_prob_nonfinal},
        {"max_len_ratio", params.max_len_ratio},
        {"seed", params.seed}}},
      {"strategy", {{"kind", "dynamic"}, {"bias_beta", 0.0}, {"predictor", {{"strategy", "lm_greedy"}, {"k", 1}, {"n", 1}}}}},
      {"lm", {{"train", "train.src"}, {"order", 3}, {"alpha", 0.1}}},
      {"char_mode", false},
      {"seed", 42},
      {"parallelism", 1}};
  std::ofstream(dir / "run.json") << run.dump(2) << '\n';

  nlohmann::ordered_json sweep = {
      {"base", run},
      {"groups",
       {{{"kind", "mask_k"}, {"k_mask", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}},
        {{"kind", "dynamic"}, {"predictor", {"lm_greedy"}}, {"k", {1}}, {"n", {1}}},
        {{"kind", "dynamic"}, {"predictor", {"random"}}, {"k", {5}}, {"n", {3}}},
        {{"kind", "dynamic"}, {"predictor", {"lm_sample"}}, {"k", {3}}, {"n", {3}}},
        {{"kind", "oracle"}},
        {{"kind", "none"}}}}};
  std::ofstream(dir / "sweep.json") << sweep.dump(2) << '\n';
}

}  // namespace retrans
