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

#ifndef TRAJACT__TRAIN__LOSSES_HPP_
#define TRAJACT__TRAIN__LOSSES_HPP_

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/data/types.hpp"
#include "trajact/error.hpp"
#include "trajact/model/config.hpp"

namespace trajact
{

using Path = std::vector<Point>;

/// Sum over persons and steps of the squared Euclidean error.
inline double l2_trajectory_loss(const std::vector<Path> & pred, const std::vector<Path> & gt)
{
  if (pred.size() != gt.size()) fail("shape_mismatch", "l2_trajectory_loss: ", pred.size(), " vs ", gt.size(), " paths");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gt[i].size()) {
      fail("shape_mismatch", "l2_trajectory_loss: path ", i, " has ", pred[i].size(), " vs ", gt[i].size(), " points");
    }
    for (std::size_t t = 0; t < pred[i].size(); ++t) {
      const double dx = pred[i][t].x - gt[i][t].x, dy = pred[i][t].y - gt[i][t].y;
      total += dx * dx + dy * dy;
    }
  }
  return total;
}

inline double smooth_l1(Point diff, double beta = 1.0)
{
  auto one = [beta](double x) { return std::abs(x) < beta ? 0.5 * x * x / beta : std::abs(x) - 0.5 * beta; };
  return one(diff.x) + one(diff.y);
}

struct LossBreakdown
{
  double l_xy = 0.0;
  double l_grid_cls = 0.0;
  double l_grid_reg = 0.0;
  double l_act = 0.0;
  double lambda = 0.1;
  double total = 0.0;
};

/// total = L_xy + lambda (L_cls + L_reg) + L_act, with terms removed by the ablation flags reported as 0.
inline LossBreakdown total_loss(double l_xy, double l_cls, double l_reg, double l_act, double lambda = 0.1,
                                const AblationFlags & flags = {})
{
  LossBreakdown b;
  b.lambda = lambda;
  b.l_xy = l_xy;
  if (flags.uses_grid_loss()) {
    b.l_grid_cls = l_cls;
    b.l_grid_reg = l_reg;
  }
  if (flags.uses_activity_loss()) b.l_act = l_act;
  b.total = b.l_xy + lambda * (b.l_grid_cls + b.l_grid_reg) + b.l_act;
  return b;
}

inline nlohmann::json to_json(const LossBreakdown & b)
{
  return {{"L_xy", b.l_xy}, {"L_grid_cls", b.l_grid_cls}, {"L_grid_reg", b.l_grid_reg},
          {"L_act", b.l_act}, {"lambda", b.lambda},        {"total", b.total}};
}

}  // namespace trajact

#endif  // TRAJACT__TRAIN__LOSSES_HPP_
