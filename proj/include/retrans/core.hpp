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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retrans {

// A single non-empty, whitespace-free token.
using Token = std::string;
using TokenSeq = std::vector<Token>;

// Reserved symbols. They use U+27E8/U+27E9 brackets so they cannot collide
// with tokens produced by ordinary tokenizers.
inline constexpr std::string_view kUnkToken = "⟨unk⟩";
inline constexpr std::string_view kEosToken = "⟨/s⟩";
inline constexpr std::string_view kBosToken = "⟨s⟩";

bool is_reserved(std::string_view token);
bool is_valid_token(std::string_view token);

/// Splits a line into tokens. With char_mode every non-space code point
/// becomes its own token.
TokenSeq tokenize(std::string_view line, bool char_mode = false);

/// Re-splits a token sequence into one token per code point.
TokenSeq to_characters(std::span<const Token> seq);

std::string join(std::span<const Token> seq, std::string_view sep = " ");

/// Maximal sequence that is a prefix of both a and b.
TokenSeq longest_common_prefix(std::span<const Token> a, std::span<const Token> b);
std::size_t common_prefix_length(std::span<const Token> a, std::span<const Token> b);

/// True iff a is a (possibly empty, possibly equal) prefix of b.
bool is_prefix(std::span<const Token> a, std::span<const Token> b);

struct SentencePair {
  TokenSeq source;
  TokenSeq reference;
  std::int64_t sentence_id = 0;
};

// Reads two parallel one-sentence-per-line files. Throws InputError when a
// file is missing, the line counts differ or a line is blank.
std::vector<SentencePair> load_parallel_corpus(const std::filesystem::path& source,
                                               const std::filesystem::path& reference,
                                               bool char_mode = false);
std::vector<TokenSeq> load_corpus(const std::filesystem::path& path, bool char_mode = false);

// A source extension and the translation it produced.
struct Probe {
  TokenSeq extension;
  TokenSeq translation;

  bool operator==(const Probe&) const = default;
};

struct StepRecord {
  std::int64_t step_index = 0;  // source tokens revealed so far
  TokenSeq source_prefix;
  TokenSeq raw_hypothesis;
  TokenSeq emitted_output;
  std::int64_t mask_length = 0;
  bool is_final = false;
  bool frozen = false;  // the previous output was re-emitted unchanged
  std::int64_t n_translate_calls = 0;
  std::vector<Probe> probes;

  bool operator==(const StepRecord&) const = default;
};

struct SessionTrace {
  std::int64_t sentence_id = 0;
  TokenSeq source;
  TokenSeq reference;
  std::vector<StepRecord> records;
  TokenSeq final_output;

  bool operator==(const SessionTrace&) const = default;
};

/// Checks the structural invariants of a trace: one record per source token,
/// exactly one final record (the last), final output unmasked. Returns an
/// empty string when valid, otherwise a description of the first violation.
std::string validate_trace(const SessionTrace& trace);

}  // namespace retrans
