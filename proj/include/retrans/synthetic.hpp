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
#include <vector>

#include "retrans/core.hpp"
#include "retrans/translator.hpp"

namespace retrans {

// Parameters of the self-contained synthetic benchmark: a Markov source
// language ending every sentence with ".", a lexicon with a mix of
// unambiguous and ambiguous words, and references built from the most
// probable translations with occasional local swaps.
struct SyntheticSpec {
  int vocab_size = 50;  // including "."
  int n_sentences = 200;
  int min_len = 3;
  int max_len = 20;
  int n_train_sentences = 2000;
  std::uint64_t seed = 42;
};

struct SyntheticCorpus {
  std::vector<SentencePair> test;
  std::vector<TokenSeq> train_source;
  ToyModelConfig model;  // lexicon only; decoder parameters are defaults
};

SyntheticCorpus make_synthetic(const SyntheticSpec& spec = {});

/// Decoder parameters used by the pinned benchmark, with the given instability.
ToyModelConfig synthetic_decoder_params(double instability);

/// Writes train.src, test.src, test.ref, lexicon.txt, run.json and
/// sweep.json into dir (created if needed).
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

void write_lexicon(const ToyModelConfig& model, const std::filesystem::path& path);

}  // namespace retrans
