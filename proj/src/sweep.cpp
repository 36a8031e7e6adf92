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

#include "retrans/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace retrans {
namespace {

using Json = nlohmann::json;

template <typename T>
std::vector<T> axis(const Json& group, const char* key, std::vector<T> fallback, const std::string& where) {
  if (!group.contains(key)) return fallback;
  const auto& v = group.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const Json::exception& e) {
    throw InputError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

SweepSpec parse_sweep(const std::string& text, const std::filesystem::path& base_dir, const std::string& name) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto upto = text.substr(0, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(name, 1 + static_cast<std::size_t>(std::count(upto.begin(), upto.end(), '\n')), e.what());
  }
  if (!j.is_object()) throw InputError(name + ": expected an object");
  SweepSpec spec;
  if (j.contains("base") && j.contains("base_config")) {
    throw InputError(name + ": give either 'base' or 'base_config', not both");
  }
  if (j.contains("base")) {
    spec.base = parse_run_config(j.at("base").dump(), base_dir, name + ".base");
  } else if (j.contains("base_config")) {
    const auto path = base_dir / j.at("base_config").get<std::string>();
    spec.base = load_run_config(path);
  } else {
    throw InputError(name + ": missing 'base' run config");
  }
  if (!j.contains("groups") || !j.at("groups").is_array() || j.at("groups").empty()) {
    throw InputError(name + ": 'groups' must be a non-empty array");
  }
  std::size_t index = 0;
  for (const auto& g : j.at("groups")) {
    const auto where = name + ".groups[" + std::to_string(index++) + "]";
    if (!g.is_object() || !g.contains("kind")) throw InputError(where + ": needs a 'kind'");
    for (const auto& [key, value] : g.items()) {
      if (key != "kind" && key != "k_mask" && key != "bias_beta" && key != "predictor" && key != "k" &&
          key != "n") {
        throw InputError(where + ": unknown key '" + key + "'");
      }
    }
    SweepGroup group;
    group.kind = parse_strategy_kind(g.at("kind").get<std::string>());
    group.k_mask = axis<int>(g, "k_mask", {spec.base.strategy.k_mask}, where);
    group.bias_beta = axis<double>(g, "bias_beta", {spec.base.strategy.bias_beta}, where);
    group.predictors.clear();
    for (const auto& p : axis<std::string>(g, "predictor", {std::string(to_string(spec.base.strategy.predictor.strategy))}, where)) {
      group.predictors.push_back(parse_predictor_strategy(p));
    }
    group.k = axis<int>(g, "k", {spec.base.strategy.predictor.k}, where);
    group.n = axis<int>(g, "n", {spec.base.strategy.predictor.n}, where);
    spec.groups.push_back(std::move(group));
  }
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sweep " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_sweep(buf.str(), path.parent_path(), path.string());
}

std::vector<RunConfig> expand_sweep(const SweepSpec& spec) {
  std::map<std::string, RunConfig> cells;
  auto add = [&](RunConfig cfg) {
    cfg.label.clear();
    cfg.strategy.validate();
    cells.emplace(cfg.strategy.label(), std::move(cfg));
  };
  for (const auto& g : spec.groups) {
    for (double beta : g.bias_beta) {
      RunConfig cfg = spec.base;
      cfg.strategy.kind = g.kind;
      cfg.strategy.bias_beta = g.kind == StrategyKind::kOracle ? 0.0 : beta;
      switch (g.kind) {
        case StrategyKind::kNone:
        case StrategyKind::kOracle:
          add(cfg);
          break;
        case StrategyKind::kMaskK:
          for (int k : g.k_mask) {
            cfg.strategy.k_mask = k;
            add(cfg);
          }
          break;
        case StrategyKind::kDynamic:
          for (auto p : g.predictors) {
            for (int k : g.k) {
              for (int n : g.n) {
                cfg.strategy.predictor.strategy = p;
                cfg.strategy.predictor.k = k;
                cfg.strategy.predictor.n = n;
                add(cfg);
              }
            }
          }
          break;
      }
    }
  }
  std::vector<RunConfig> out;
  for (auto& [label, cfg] : cells) out.push_back(std::move(cfg));
  return out;
}

std::string label_to_filename(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

SweepResult run_sweep(const SweepSpec& spec, int parallelism,
                      const std::optional<std::filesystem::path>& traces_dir) {
  const auto cells = expand_sweep(spec);
  const auto corpus = load_parallel_corpus(spec.base.source, spec.base.reference, spec.base.char_mode);
  if (corpus.empty()) throw EmptyCorpus();

  // Models do not depend on the sweep axes, except that LM strategies need an LM.
  RunConfig model_cfg = spec.base;
  for (const auto& cell : cells) {
    const auto p = cell.strategy.predictor.strategy;
    if (cell.strategy.kind == StrategyKind::kDynamic &&
        (p == PredictorStrategy::kLmGreedy || p == PredictorStrategy::kLmSample)) {
      model_cfg.strategy = cell.strategy;
    }
  }
  const auto models = load_models(model_cfg, corpus);
  if (traces_dir) std::filesystem::create_directories(*traces_dir);

  SweepResult result;
  result.runs.resize(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        RunConfig cfg = cells[i];
        cfg.parallelism = 1;
        result.runs[i] = run_corpus(cfg, corpus, models);
        if (traces_dir) {
          write_traces(*traces_dir / (label_to_filename(cfg.effective_label()) + ".jsonl"), result.runs[i].traces,
                       {cfg.char_mode, run_config_hash(cfg), cfg.effective_label()});
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = std::min(static_cast<std::size_t>(std::max(1, parallelism)), cells.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error("sweep cell '" + cells[i].effective_label() + "' failed: " + e.what());
    }
  }
  for (const auto& run : result.runs) result.points.push_back(run.point);
  return result;
}

}  // namespace retrans
