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

#ifndef TRAJACT__TRAIN__METRICS_HPP_
#define TRAJACT__TRAIN__METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/data/catalog.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"
#include "trajact/train/losses.hpp"

namespace trajact
{

inline double point_distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline void check_paths(const std::vector<Path> & pred, const std::vector<Path> & gt)
{
  if (pred.empty() || gt.empty()) fail("empty_input", "no trajectories to evaluate");
  if (pred.size() != gt.size()) fail("shape_mismatch", "prediction count ", pred.size(), " != ", gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gt[i].size() || pred[i].empty()) {
      fail("shape_mismatch", "trajectory ", i, ": ", pred[i].size(), " predicted vs ", gt[i].size(), " true points");
    }
  }
}

inline double path_ade(const Path & pred, const Path & gt)
{
  double s = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) s += point_distance(pred[t], gt[t]);
  return s / static_cast<double>(pred.size());
}

inline double path_fde(const Path & pred, const Path & gt) { return point_distance(pred.back(), gt.back()); }

inline double ade(const std::vector<Path> & pred, const std::vector<Path> & gt)
{
  check_paths(pred, gt);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t t = 0; t < pred[i].size(); ++t) s += point_distance(pred[i][t], gt[i][t]);
    count += pred[i].size();
  }
  return s / static_cast<double>(count);
}

inline double fde(const std::vector<Path> & pred, const std::vector<Path> & gt)
{
  check_paths(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += path_fde(pred[i], gt[i]);
  return s / static_cast<double>(pred.size());
}

/// Average precision of one class: sum of precision at each positive's rank over #positives.
/// Ties keep input order.
inline double average_precision(const std::vector<double> & scores, const std::vector<bool> & positive)
{
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!positive[order[r]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

struct MapResult
{
  double map = 0.0;
  std::size_t classes = 0;  // classes with at least one positive
  std::vector<std::optional<double>> per_class;
};

/// Mean AP over classes that have positives. scores[i] has N_a entries; truths[i] lists class ids.
inline MapResult activity_map(const std::vector<std::vector<double>> & scores, const std::vector<std::vector<int>> & truths)
{
  if (scores.size() != truths.size()) fail("shape_mismatch", "activity_map: ", scores.size(), " vs ", truths.size());
  const std::size_t n_cls = scores.empty() ? kNumActivities : scores.front().size();
  MapResult r;
  r.per_class.assign(n_cls, std::nullopt);
  double total = 0.0;
  for (std::size_t c = 0; c < n_cls; ++c) {
    std::vector<double> s;
    std::vector<bool> pos;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].size() != n_cls) fail("shape_mismatch", "activity_map: ragged score rows");
      s.push_back(scores[i][c]);
      pos.push_back(std::find(truths[i].begin(), truths[i].end(), static_cast<int>(c)) != truths[i].end());
    }
    if (std::none_of(pos.begin(), pos.end(), [](bool b) { return b; })) continue;
    const double ap = average_precision(s, pos);
    r.per_class[c] = ap;
    total += ap;
    ++r.classes;
  }
  if (r.classes == 0) fail("no_positives", "activity_map: no class has a positive sample");
  r.map = total / static_cast<double>(r.classes);
  return r;
}

struct TrajectoryError
{
  std::string id;
  double ade = 0.0;
  double fde = 0.0;
  TrajectoryType type = TrajectoryType::static_;
};

struct EvalReport
{
  double ade = 0.0;
  double fde = 0.0;
  std::optional<double> move_ade, move_fde, static_ade, static_fde;
  std::size_t count = 0;
  std::size_t move_count = 0;
  std::size_t static_count = 0;
  std::optional<double> activity_map;
  std::string note;
  std::vector<TrajectoryError> per_trajectory;

  bool operator==(const EvalReport & o) const
  {
    auto same = [](const TrajectoryError & a, const TrajectoryError & b) {
      return a.id == b.id && a.ade == b.ade && a.fde == b.fde && a.type == b.type;
    };
    return ade == o.ade && fde == o.fde && move_ade == o.move_ade && move_fde == o.move_fde &&
           static_ade == o.static_ade && static_fde == o.static_fde && count == o.count &&
           move_count == o.move_count && static_count == o.static_count && activity_map == o.activity_map &&
           note == o.note &&
           std::equal(per_trajectory.begin(), per_trajectory.end(), o.per_trajectory.begin(), o.per_trajectory.end(), same);
  }
};

inline std::string trajectory_id(const PersonSample & s)
{
  return s.scene_id + ":" + std::to_string(s.person_id) + ":" + std::to_string(s.frames.empty() ? 0 : s.frames.front());
}

/**
 * @brief Aggregates per-trajectory errors and, when labels exist, activity mAP.
 *
 * `activity` may be empty (no scores) or hold one N_a vector per sample.
 */
inline EvalReport evaluate(const std::vector<Path> & pred, const std::vector<const PersonSample *> & samples,
                           const std::vector<std::vector<double>> & activity = {})
{
  std::vector<Path> gt;
  for (const auto * s : samples) gt.push_back(s->future_xy);
  check_paths(pred, gt);
  EvalReport r;
  r.count = pred.size();
  double ms = 0.0, mf = 0.0, ss = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    TrajectoryError e{trajectory_id(*samples[i]), path_ade(pred[i], gt[i]), path_fde(pred[i], gt[i]), samples[i]->type};
    if (e.type == TrajectoryType::moving) {
      ++r.move_count;
      ms += e.ade;
      mf += e.fde;
    } else {
      ++r.static_count;
      ss += e.ade;
      sf += e.fde;
    }
    r.per_trajectory.push_back(std::move(e));
  }
  r.ade = ade(pred, gt);
  r.fde = fde(pred, gt);
  if (r.move_count) {
    r.move_ade = ms / static_cast<double>(r.move_count);
    r.move_fde = mf / static_cast<double>(r.move_count);
  }
  if (r.static_count) {
    r.static_ade = ss / static_cast<double>(r.static_count);
    r.static_fde = sf / static_cast<double>(r.static_count);
  }
  if (activity.empty()) {
    r.note = "no activity scores";
    return r;
  }
  if (activity.size() != pred.size()) fail("shape_mismatch", "activity scores for ", activity.size(), " of ", pred.size(), " samples");
  std::vector<std::vector<double>> sc;
  std::vector<std::vector<int>> truth;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i]->has_activity) continue;
    sc.push_back(activity[i]);
    truth.push_back(samples[i]->future_activity_ids);
  }
  bool any_positive = false;
  for (const auto & t : truth) any_positive = any_positive || !t.empty();
  if (!any_positive) {
    r.note = "activity labels missing; mAP omitted";
    return r;
  }
  r.activity_map = trajact::activity_map(sc, truth).map;
  return r;
}

/// One candidate output per trajectory from one model.
struct CandidateSet
{
  std::vector<Path> paths;
  std::vector<std::vector<double>> activity;  // may be empty
};

/// Per trajectory, keeps the candidate with the lowest ADE (first on ties); FDE and activity scores
/// come from the same candidate.
inline EvalReport best_of_k(const std::vector<CandidateSet> & candidates, const std::vector<const PersonSample *> & samples)
{
  if (candidates.empty()) fail("bad_input", "best_of_k: k must be at least 1");
  const bool with_act = std::all_of(candidates.begin(), candidates.end(), [](const auto & c) { return !c.activity.empty(); });
  std::vector<Path> best;
  std::vector<std::vector<double>> act;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t pick = 0;
    double best_ade = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (candidates[k].paths.size() != samples.size()) fail("shape_mismatch", "best_of_k: candidate ", k, " size");
      const double a = path_ade(candidates[k].paths[i], samples[i]->future_xy);
      if (a < best_ade) {
        best_ade = a;
        pick = k;
      }
    }
    best.push_back(candidates[pick].paths[i]);
    if (with_act) act.push_back(candidates[pick].activity[i]);
  }
  return evaluate(best, samples, act);
}

inline nlohmann::json to_json(const EvalReport & r, bool with_trajectories = false)
{
  auto opt = [](const std::optional<double> & v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"ADE", r.ade},
                      {"FDE", r.fde},
                      {"move_ADE", opt(r.move_ade)},
                      {"move_FDE", opt(r.move_fde)},
                      {"static_ADE", opt(r.static_ade)},
                      {"static_FDE", opt(r.static_fde)},
                      {"count", r.count},
                      {"move_count", r.move_count},
                      {"static_count", r.static_count}};
  if (r.activity_map) j["activity_mAP"] = *r.activity_map;
  if (!r.note.empty()) j["note"] = r.note;
  if (with_trajectories) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto & e : r.per_trajectory) {
      rows.push_back({{"id", e.id}, {"ADE", e.ade}, {"FDE", e.fde}, {"type", to_string(e.type)}});
    }
    j["trajectories"] = rows;
  }
  return j;
}

inline void write_trajectory_csv(const std::string & path, const EvalReport & r)
{
  std::ofstream out(path);
  if (!out) fail("io_error", "cannot write ", path);
  out << "trajectory_id,ade,fde,type\n" << std::setprecision(17);
  for (const auto & e : r.per_trajectory) out << e.id << ',' << e.ade << ',' << e.fde << ',' << to_string(e.type) << '\n';
  if (!out) fail("io_error", "failed writing ", path);
}

}  // namespace trajact

#endif  // TRAJACT__TRAIN__METRICS_HPP_
