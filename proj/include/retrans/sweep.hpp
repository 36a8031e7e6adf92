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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retrans/metrics.hpp"
#include "retrans/sim.hpp"

namespace retrans {

// One family of sweep cells: the cross-product of its axes, all with the same
// strategy kind. Axes that do not apply to the kind are ignored.
struct SweepGroup {
  StrategyKind kind = StrategyKind::kNone;
  std::vector<int> k_mask{0};
  std::vector<double> bias_beta{0.0};
  std::vector<PredictorStrategy> predictors{PredictorStrategy::kLmGreedy};
  std::vector<int> k{1};
  std::vector<int> n{1};
};

struct SweepSpec {
  RunConfig base;
  std::vector<SweepGroup> groups;
};

SweepSpec parse_sweep(const std::string& text, const std::filesystem::path& base_dir,
                      const std::string& name = "<sweep>");
SweepSpec load_sweep(const std::filesystem::path& path);

/// Run configs for every cell, sorted by label. Cells with identical labels
/// describe identical runs and are merged.
std::vector<RunConfig> expand_sweep(const SweepSpec& spec);

struct SweepResult {
  std::vector<TradeoffPoint> points;  // sorted by strategy_label
  std::vector<RunResult> runs;        // aligned with points
};

/// Runs every cell over shared models. Cells are distributed over
/// `parallelism` workers; when traces_dir is set each cell's traces are
/// written there as <label>.jsonl.
SweepResult run_sweep(const SweepSpec& spec, int parallelism = 1,
                      const std::optional<std::filesystem::path>& traces_dir = std::nullopt);

/// File-system-safe version of a label.
std::string label_to_filename(const std::string& label);

}  // namespace retrans
