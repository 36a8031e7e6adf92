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

#include <sys/wait.h>

#include <algorithm>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "retrans/metrics.hpp"
#include "retrans/sim.hpp"
#include "test_support.hpp"

namespace retrans {
namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run("make-synthetic --out " + (dir_ / "syn").string() + " --sentences 12 --train-sentences 200").code,
              0);
  }

  CliResult run(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(RETRANS_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::read_file(out), testing::read_file(err)};
  }

  std::string syn(const std::string& name) const { return (dir_ / "syn" / name).string(); }
  std::string tmp(const std::string& name) const { return (dir_ / name).string(); }

  testing::TempDir dir_{"cli"};
};

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

TEST_F(Cli, MissingReferenceIsBadInput) {
  const auto r = run("run " + syn("run.json") + " --reference " + tmp("nope.ref"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(tmp("nope.ref")), std::string::npos) << r.err;
}

TEST_F(Cli, BadConfigNamesLine) {
  testing::write_file(tmp("bad.json"), "{\n  \"seed\": 1,\n  \"strategy\": {\"kind\": \"none\",}\n}\n");
  const auto r = run("run " + tmp("bad.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.json:3"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownFlagIsBadInput) { EXPECT_EQ(run("run " + syn("run.json") + " --frobnicate").code, 2); }

TEST_F(Cli, MaskZeroEqualsNone) {
  ASSERT_EQ(run("run " + syn("run.json") + " --strategy mask_k --k 0 --traces " + tmp("m0.jsonl")).code, 0);
  ASSERT_EQ(run("run " + syn("run.json") + " --strategy none --traces " + tmp("none.jsonl")).code, 0);
  EXPECT_EQ(read_traces(std::filesystem::path(tmp("m0.jsonl"))),
            read_traces(std::filesystem::path(tmp("none.jsonl"))));
}

TEST_F(Cli, OracleHasNoErasure) {
  const auto r = run("run " + syn("run.json") + " --strategy oracle");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = csv_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], kTradeoffCsvHeader);
  std::vector<std::string> cols;
  std::istringstream row(lines[1]);
  for (std::string c; std::getline(row, c, ',');) cols.push_back(c);
  ASSERT_EQ(cols.size(), 5u);
  EXPECT_EQ(cols[0], "oracle");
  EXPECT_EQ(std::stod(cols[2]), 0.0);
}

TEST_F(Cli, MetricsReplayMatchesRun) {
  const auto r = run("run " + syn("run.json") + " --traces " + tmp("dyn.jsonl") + " --metrics " + tmp("dyn.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(tmp("dyn.jsonl.config.json")));
  const auto replay = run("metrics " + tmp("dyn.jsonl"));
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(replay.out, testing::read_file(tmp("dyn.csv")));
}

TEST_F(Cli, TrainLmRoundTrip) {
  testing::write_file(tmp("corpus.txt"), "a b c\nb c d\n");
  ASSERT_EQ(run("train-lm --corpus " + tmp("corpus.txt") + " --order 2 --out " + tmp("a.lm")).code, 0);
  ASSERT_EQ(run("train-lm --corpus " + tmp("corpus.txt") + " --order 2 --out " + tmp("b.lm")).code, 0);
  EXPECT_EQ(testing::read_file(tmp("a.lm")), testing::read_file(tmp("b.lm")));
  const auto lm = NgramLM::load(std::filesystem::path(tmp("a.lm")));
  std::vector<TokenSeq> corpus{testing::toks("a b c"), testing::toks("b c d")};
  EXPECT_EQ(lm, NgramLM::train(corpus, 2, 0.1));

  ASSERT_EQ(run("train-lm --corpus " + tmp("corpus.txt") + " --order 1 --out " + tmp("u.lm")).code, 0);
  const auto unigram = testing::read_file(tmp("u.lm"));
  EXPECT_EQ(unigram.find("ngrams 2"), std::string::npos);
  EXPECT_EQ(run("train-lm --corpus " + tmp("missing.txt") + " --out " + tmp("x.lm")).code, 2);
}

TEST_F(Cli, SweepWithParetoAndHistogram) {
  const auto r = run("sweep " + syn("sweep.json") + " --out " + tmp("sweep.csv") + " --pareto -j 2 --traces-dir " +
                     tmp("traces"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_lines(testing::read_file(tmp("sweep.csv")));
  ASSERT_GT(rows.size(), 2u);
  EXPECT_EQ(rows[0], kTradeoffCsvHeader);
  EXPECT_TRUE(std::is_sorted(rows.begin() + 1, rows.end()));
  EXPECT_TRUE(std::filesystem::exists(tmp("sweep.pareto.csv")));
  EXPECT_TRUE(std::filesystem::exists(tmp("traces/none.jsonl")));

  const auto h = run("mask-hist " + tmp("traces/none.jsonl"));
  ASSERT_EQ(h.code, 0) << h.err;
  const auto lines = csv_lines(h.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "mask_length,count");
  EXPECT_EQ(lines[1].rfind("0,", 0), 0u);
}

TEST_F(Cli, HistogramRejectsForeignSchema) {
  testing::write_file(tmp("v9.jsonl"), "{\"schema_version\": 9}\n");
  EXPECT_EQ(run("mask-hist " + tmp("v9.jsonl")).code, 2);
}

}  // namespace
}  // namespace retrans
