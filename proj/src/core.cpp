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

#include "retrans/core.hpp"

#include <algorithm>
#include <fstream>

#include "retrans/errors.hpp"

namespace retrans {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Byte length of the UTF-8 sequence starting with lead byte c. Invalid lead
// bytes are treated as single-byte code points.
std::size_t utf8_length(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 1;
}

void split_code_points(std::string_view text, TokenSeq& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(text[i])),
                                     text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

bool is_reserved(std::string_view token) {
  return token == kUnkToken || token == kEosToken || token == kBosToken;
}

bool is_valid_token(std::string_view token) {
  return !token.empty() && std::none_of(token.begin(), token.end(), is_space);
}

TokenSeq tokenize(std::string_view line, bool char_mode) {
  TokenSeq out;
  if (char_mode) {
    split_code_points(line, out);
    return out;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

TokenSeq to_characters(std::span<const Token> seq) {
  TokenSeq out;
  for (const auto& tok : seq) split_code_points(tok, out);
  return out;
}

std::string join(std::span<const Token> seq, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += sep;
    out += seq[i];
  }
  return out;
}

std::size_t common_prefix_length(std::span<const Token> a, std::span<const Token> b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

TokenSeq longest_common_prefix(std::span<const Token> a, std::span<const Token> b) {
  return TokenSeq(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(common_prefix_length(a, b)));
}

bool is_prefix(std::span<const Token> a, std::span<const Token> b) {
  return a.size() <= b.size() && common_prefix_length(a, b) == a.size();
}

std::vector<TokenSeq> load_corpus(const std::filesystem::path& path, bool char_mode) {
  std::vector<TokenSeq> out;
  for (const auto& line : read_lines(path)) out.push_back(tokenize(line, char_mode));
  return out;
}

std::vector<SentencePair> load_parallel_corpus(const std::filesystem::path& source,
                                               const std::filesystem::path& reference,
                                               bool char_mode) {
  // The source side is always word-tokenized: it is revealed one token per step.
  const auto src = load_corpus(source, false);
  const auto ref = load_corpus(reference, char_mode);
  if (src.size() != ref.size()) {
    throw InputError("corpus length mismatch: " + source.string() + " has " +
                     std::to_string(src.size()) + " lines, " + reference.string() + " has " +
                     std::to_string(ref.size()));
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty() || ref[i].empty()) {
      throw ParseError(src[i].empty() ? source.string() : reference.string(), i + 1,
                       "empty sentence");
    }
    pairs.push_back({src[i], ref[i], static_cast<std::int64_t>(i)});
  }
  return pairs;
}

std::string validate_trace(const SessionTrace& trace) {
  if (trace.records.size() != trace.source.size()) {
    return "expected " + std::to_string(trace.source.size()) + " records, got " +
           std::to_string(trace.records.size());
  }
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& rec = trace.records[i];
    const auto step = static_cast<std::int64_t>(i + 1);
    if (rec.step_index != step) return "record " + std::to_string(i) + " has wrong step_index";
    if (rec.source_prefix.size() != i + 1 ||
        !is_prefix(rec.source_prefix, trace.source)) {
      return "step " + std::to_string(step) + ": source prefix mismatch";
    }
    if (rec.is_final != (i + 1 == trace.records.size())) {
      return "step " + std::to_string(step) + ": is_final flag wrong";
    }
    if (rec.mask_length != static_cast<std::int64_t>(rec.raw_hypothesis.size()) -
                               static_cast<std::int64_t>(common_prefix_length(
                                   rec.raw_hypothesis, rec.emitted_output))) {
      return "step " + std::to_string(step) + ": inconsistent mask_length";
    }
  }
  if (trace.records.empty()) return "no records";
  const auto& last = trace.records.back();
  if (trace.final_output != last.emitted_output || last.emitted_output != last.raw_hypothesis) {
    return "final output must equal the unmasked final hypothesis";
  }
  return {};
}

}  // namespace retrans
