// Copyright 2026 The trajact Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJACT__TRAIN__ABLATION_HPP_
#define TRAJACT__TRAIN__ABLATION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/error.hpp"
#include "trajact/model/config.hpp"
#include "trajact/train/metrics.hpp"
#include "trajact/train/trainer.hpp"

namespace trajact
{

/// Parses "full" or a '+'-joined list such as "no_behavior+no_multitask".
inline AblationFlags parse_ablation(const std::string & label)
{
  AblationFlags f;
  if (label.empty() || label == "full") return f;
  std::stringstream ss(label);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "no_behavior") f.no_behavior = true;
    else if (part == "no_interaction") f.no_interaction = true;
    else if (part == "no_focal_attention") f.no_focal_attention = true;
    else if (part == "no_act_label") f.no_act_label = true;
    else if (part == "no_act_location") f.no_act_location = true;
    else if (part == "no_multitask") f.no_multitask = true;
    else fail("bad_config", "unknown ablation flag '", part, "'");
  }
  return f;
}

struct AblationRow
{
  AblationFlags flags;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> reports;  // one per seed
  double mean_ade = 0.0;
  double mean_fde = 0.0;
  std::optional<double> mean_map;
};

using AblationProgress = std::function<void(const AblationFlags &, std::uint64_t, const EvalReport &)>;

/// Trains and evaluates every flag combination once per seed.
template <typename Real>
std::vector<AblationRow> ablation_run(const std::vector<AblationFlags> & variants, const ModelConfig & base,
                                      const Dataset & ds, std::span<const std::size_t> train_idx,
                                      std::span<const std::size_t> test_idx, TrainConfig tc,
                                      const std::vector<std::uint64_t> & seeds, const AblationProgress & progress = {})
{
  if (seeds.empty()) fail("bad_config", "ablation_run: at least one seed is required");
  std::vector<AblationRow> rows;
  for (const auto & flags : variants) {
    AblationRow row;
    row.flags = flags;
    ModelConfig cfg = base;
    cfg.ablation = flags;
    double map_sum = 0.0;
    bool all_map = true;
    for (std::uint64_t seed : seeds) {
      tc.seed = seed;
      const auto trained = train<Real>(cfg, ds, train_idx, tc);
      EvalReport r = evaluate_model(trained.store, cfg, ds, test_idx, tc.batch_size);
      if (progress) progress(flags, seed, r);
      row.mean_ade += r.ade;
      row.mean_fde += r.fde;
      if (r.activity_map) map_sum += *r.activity_map;
      else all_map = false;
      row.seeds.push_back(seed);
      row.reports.push_back(std::move(r));
    }
    const double n = static_cast<double>(seeds.size());
    row.mean_ade /= n;
    row.mean_fde /= n;
    if (all_map) row.mean_map = map_sum / n;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json to_json(const std::vector<AblationRow> & rows)
{
  nlohmann::json out = nlohmann::json::array();
  for (const auto & r : rows) {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      nlohmann::json j = to_json(r.reports[i]);
      j["seed"] = r.seeds[i];
      per.push_back(j);
    }
    out.push_back({{"variant", r.flags.label()},
                   {"mean_ADE", r.mean_ade},
                   {"mean_FDE", r.mean_fde},
                   {"mean_activity_mAP", r.mean_map ? nlohmann::json(*r.mean_map) : nlohmann::json(nullptr)},
                   {"runs", per}});
  }
  return out;
}

}  // namespace trajact

#endif  // TRAJACT__TRAIN__ABLATION_HPP_
