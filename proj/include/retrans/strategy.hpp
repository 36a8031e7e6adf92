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
#include <span>
#include <string>
#include <string_view>

#include "retrans/core.hpp"
#include "retrans/predict.hpp"

namespace retrans {

enum class StrategyKind { kNone, kMaskK, kDynamic, kOracle };

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kNone;
  int k_mask = 0;              // mask_k only
  PredictorConfig predictor;   // dynamic only
  double bias_beta = 0.0;      // 0 disables biased beam search; ignored by oracle

  /// Unique, human-readable name used as the CSV strategy column.
  std::string label() const;
  void validate() const;
};

// Per-sentence emission state.
struct EmissionState {
  TokenSeq previous_output;
  std::int64_t sentence_id = 0;
  std::int64_t step_index = 0;
};

struct Emission {
  TokenSeq output;
  std::int64_t mask_length = 0;
  bool frozen = false;  // previous output re-emitted by the freeze rule
};

/// |hypothesis| - |LCP(hypothesis, output)|.
std::int64_t mask_length(std::span<const Token> hypothesis, std::span<const Token> output);

TokenSeq emit_none(std::span<const Token> hypothesis);

/// Withholds the last k tokens unless the source is complete.
TokenSeq emit_mask_k(std::span<const Token> hypothesis, int k, bool is_final);

/// Masks the hypothesis back to its common prefix with every probe
/// translation. When that prefix is itself a prefix of the previous output,
/// the previous output is re-emitted unchanged instead.
Emission emit_dynamic(std::span<const Token> hypothesis, std::span<const TokenSeq> probe_translations,
                      const EmissionState& state, bool is_final);

/// Masks the hypothesis back to its common prefix with the full-sentence
/// translation. Keeps previous_output when the new prefix is shorter, so the
/// displayed output never shrinks.
TokenSeq emit_oracle(std::span<const Token> hypothesis, std::span<const Token> full_sentence_translation,
                     bool is_final, std::span<const Token> previous_output = {});

}  // namespace retrans
