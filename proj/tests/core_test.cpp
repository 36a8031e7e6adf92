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

#include <random>

#include <gtest/gtest.h>

#include "retrans/core.hpp"
#include "retrans/errors.hpp"
#include "test_support.hpp"

namespace retrans {
namespace {

using testing::toks;

TEST(LongestCommonPrefix, DivergingTranslations) {
  EXPECT_EQ(longest_common_prefix(toks("p q r"), toks("p q s t")), toks("p q"));
  EXPECT_EQ(longest_common_prefix(toks("Aber Sie wissen es"), toks("Aber wissen Sie , sie wissen schon")),
            toks("Aber"));
}

TEST(LongestCommonPrefix, IdentityAndEmpty) {
  const auto x = toks("a b c");
  EXPECT_EQ(longest_common_prefix(x, x), x);
  EXPECT_TRUE(longest_common_prefix(x, TokenSeq{}).empty());
  EXPECT_TRUE(longest_common_prefix(TokenSeq{}, TokenSeq{}).empty());
}

TEST(IsPrefix, Examples) {
  EXPECT_TRUE(is_prefix(TokenSeq{}, toks("a b")));
  EXPECT_TRUE(is_prefix(TokenSeq{}, TokenSeq{}));
  EXPECT_TRUE(is_prefix(toks("p q"), toks("p q r")));
  EXPECT_TRUE(is_prefix(toks("p q r"), toks("p q r")));
  EXPECT_FALSE(is_prefix(toks("p r"), toks("p q r")));
  EXPECT_FALSE(is_prefix(toks("p q r s"), toks("p q r")));
}

TEST(IsPrefix, CaseSensitive) { EXPECT_FALSE(is_prefix(toks("Um zu"), toks("um zu"))); }

TokenSeq random_seq(std::mt19937_64& rng) {
  // A three-letter alphabet keeps long shared prefixes common.
  std::uniform_int_distribution<int> len(0, 6), sym(0, 2);
  TokenSeq s(static_cast<std::size_t>(len(rng)));
  for (auto& t : s) t = std::string(1, static_cast<char>('a' + sym(rng)));
  return s;
}

TEST(LongestCommonPrefixProperty, AlgebraicLaws) {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 5000; ++iter) {
    const auto a = random_seq(rng), b = random_seq(rng), c = random_seq(rng);
    const auto ab = longest_common_prefix(a, b);
    EXPECT_EQ(ab, longest_common_prefix(b, a));
    EXPECT_EQ(longest_common_prefix(a, a), a);
    EXPECT_EQ(longest_common_prefix(ab, c), longest_common_prefix(a, longest_common_prefix(b, c)));
    EXPECT_LE(ab.size(), std::min(a.size(), b.size()));
    EXPECT_EQ(ab.size(), common_prefix_length(a, b));
    EXPECT_TRUE(is_prefix(ab, a));
    EXPECT_TRUE(is_prefix(ab, b));
    EXPECT_EQ(is_prefix(a, b), longest_common_prefix(a, b) == a);
    if (is_prefix(a, b) && is_prefix(b, a)) EXPECT_EQ(a, b);
  }
}

TEST(Tokenize, Words) {
  EXPECT_EQ(tokenize("  Hier  sind\tzwei "), (TokenSeq{"Hier", "sind", "zwei"}));
  EXPECT_TRUE(tokenize("   ").empty());
}

TEST(Tokenize, CharacterMode) {
  EXPECT_EQ(tokenize("我们 好", true), (TokenSeq{"我", "们", "好"}));
  EXPECT_EQ(to_characters(TokenSeq{"ab", "ü"}), (TokenSeq{"a", "b", "ü"}));
}

TEST(Tokens, Validity) {
  EXPECT_TRUE(is_valid_token("Stärke"));
  EXPECT_FALSE(is_valid_token(""));
  EXPECT_FALSE(is_valid_token("a b"));
  EXPECT_TRUE(is_reserved(kUnkToken));
  EXPECT_TRUE(is_reserved(kEosToken));
  EXPECT_FALSE(is_reserved("unk"));
}

TEST(ParallelCorpus, LoadsAlignedLines) {
  testing::TempDir dir("core");
  testing::write_file(dir / "s.txt", "a b\nc\n");
  testing::write_file(dir / "r.txt", "x y\nzw\n");
  const auto corpus = load_parallel_corpus(dir / "s.txt", dir / "r.txt");
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].source, toks("a b"));
  EXPECT_EQ(corpus[1].reference, toks("zw"));
  EXPECT_EQ(corpus[1].sentence_id, 1);

  const auto chars = load_parallel_corpus(dir / "s.txt", dir / "r.txt", true);
  EXPECT_EQ(chars[1].source, toks("c"));
  EXPECT_EQ(chars[1].reference, toks("z w"));
}

TEST(ParallelCorpus, Errors) {
  testing::TempDir dir("core");
  testing::write_file(dir / "s.txt", "a b\nc\n");
  testing::write_file(dir / "r.txt", "x y\n");
  testing::write_file(dir / "blank.txt", "x\n\n");
  EXPECT_THROW(load_parallel_corpus(dir / "s.txt", dir / "r.txt"), InputError);
  EXPECT_THROW(load_parallel_corpus(dir / "s.txt", dir / "missing.txt"), InputError);
  EXPECT_THROW(load_parallel_corpus(dir / "s.txt", dir / "blank.txt"), Error);
}

SessionTrace tiny_trace() {
  SessionTrace t;
  t.source = toks("a b");
  t.reference = toks("x y");
  for (int i = 1; i <= 2; ++i) {
    StepRecord r;
    r.step_index = i;
    r.source_prefix = TokenSeq(t.source.begin(), t.source.begin() + i);
    r.raw_hypothesis = i == 1 ? toks("x") : toks("x y");
    r.emitted_output = r.raw_hypothesis;
    r.is_final = i == 2;
    t.records.push_back(r);
  }
  t.final_output = toks("x y");
  return t;
}

TEST(ValidateTrace, AcceptsWellFormed) { EXPECT_EQ(validate_trace(tiny_trace()), ""); }

TEST(ValidateTrace, RejectsViolations) {
  auto missing = tiny_trace();
  missing.records.pop_back();
  EXPECT_NE(validate_trace(missing), "");

  auto masked_final = tiny_trace();
  masked_final.records.back().emitted_output = toks("x");
  masked_final.final_output = toks("x");
  EXPECT_NE(validate_trace(masked_final), "");

  auto two_final = tiny_trace();
  two_final.records.front().is_final = true;
  EXPECT_NE(validate_trace(two_final), "");
}

}  // namespace
}  // namespace retrans
