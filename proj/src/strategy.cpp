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

#include "retrans/strategy.hpp"

#include <algorithm>
#include <cstdio>

#include "retrans/errors.hpp"

namespace retrans {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kNone: return "none";
    case StrategyKind::kMaskK: return "mask_k";
    case StrategyKind::kDynamic: return "dynamic";
    case StrategyKind::kOracle: return "oracle";
  }
  return "?";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  if (name == "none") return StrategyKind::kNone;
  if (name == "mask_k" || name == "mask-k") return StrategyKind::kMaskK;
  if (name == "dynamic") return StrategyKind::kDynamic;
  if (name == "oracle") return StrategyKind::kOracle;
  throw InputError("unknown strategy '" + std::string(name) + "'");
}

std::string StrategyConfig::label() const {
  std::string out(to_string(kind));
  switch (kind) {
    case StrategyKind::kMaskK:
      out += ":k=" + std::to_string(k_mask);
      break;
    case StrategyKind::kDynamic:
      out += ":" + std::string(to_string(predictor.strategy)) + ":k=" + std::to_string(predictor.k) +
             ":n=" + std::to_string(predictor.effective_n());
      break;
    default:
      break;
  }
  if (kind != StrategyKind::kOracle && bias_beta > 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ":beta=%g", bias_beta);
    out += buf;
  }
  return out;
}

void StrategyConfig::validate() const {
  if (k_mask < 0) throw InputError("k_mask must be >= 0");
  if (!(bias_beta >= 0.0 && bias_beta <= 1.0)) throw InputError("bias_beta must be in [0, 1]");
  if (kind == StrategyKind::kDynamic && (predictor.k < 1 || predictor.n < 1)) {
    throw InputError("predictor k and n must be >= 1");
  }
}

std::int64_t mask_length(std::span<const Token> hypothesis, std::span<const Token> output) {
  return static_cast<std::int64_t>(hypothesis.size() - common_prefix_length(hypothesis, output));
}

TokenSeq emit_none(std::span<const Token> hypothesis) {
  return TokenSeq(hypothesis.begin(), hypothesis.end());
}

TokenSeq emit_mask_k(std::span<const Token> hypothesis, int k, bool is_final) {
  if (k < 0) throw InputError("mask length must be >= 0");
  if (is_final) return emit_none(hypothesis);
  const std::size_t keep = hypothesis.size() > static_cast<std::size_t>(k)
                               ? hypothesis.size() - static_cast<std::size_t>(k)
                               : 0;
  return TokenSeq(hypothesis.begin(), hypothesis.begin() + static_cast<std::ptrdiff_t>(keep));
}

Emission emit_dynamic(std::span<const Token> hypothesis, std::span<const TokenSeq> probe_translations,
                      const EmissionState& state, bool is_final) {
  if (is_final) return {emit_none(hypothesis), 0, false};
  if (probe_translations.empty()) throw InputError("dynamic masking needs at least one probe");
  std::size_t keep = hypothesis.size();
  for (const auto& probe : probe_translations) {
    keep = std::min(keep, common_prefix_length(hypothesis.first(keep), probe));
  }
  const auto masked = hypothesis.first(keep);
  if (is_prefix(masked, state.previous_output)) {
    return {state.previous_output, mask_length(hypothesis, state.previous_output), true};
  }
  return {TokenSeq(masked.begin(), masked.end()), static_cast<std::int64_t>(hypothesis.size() - keep),
          false};
}

TokenSeq emit_oracle(std::span<const Token> hypothesis, std::span<const Token> full_sentence_translation,
                     bool is_final, std::span<const Token> previous_output) {
  if (is_final) return TokenSeq(full_sentence_translation.begin(), full_sentence_translation.end());
  auto masked = longest_common_prefix(hypothesis, full_sentence_translation);
  if (is_prefix(masked, previous_output)) return TokenSeq(previous_output.begin(), previous_output.end());
  return masked;
}

}  // namespace retrans
