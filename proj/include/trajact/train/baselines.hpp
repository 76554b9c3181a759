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

#ifndef TRAJACT__TRAIN__BASELINES_HPP_
#define TRAJACT__TRAIN__BASELINES_HPP_

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "trajact/data/types.hpp"
#include "trajact/error.hpp"
#include "trajact/model/config.hpp"
#include "trajact/train/metrics.hpp"
#include "trajact/train/trainer.hpp"

namespace trajact
{

/// p_{t+1} = A p_t + b. Falls back to a pure shift (mean step) when the fit is rank deficient.
struct LinearStepModel
{
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  bool affine = false;

  Point step(Point p) const
  {
    const Eigen::Vector2d q = a * Eigen::Vector2d(p.x, p.y) + b;
    return {q.x(), q.y()};
  }
};

inline LinearStepModel fit_linear_step(const std::vector<const PersonSample *> & train)
{
  std::vector<std::pair<Point, Point>> pairs;
  for (const auto * s : train) {
    Path full = s->obs_xy;
    full.insert(full.end(), s->future_xy.begin(), s->future_xy.end());
    for (std::size_t t = 0; t + 1 < full.size(); ++t) pairs.push_back({full[t], full[t + 1]});
  }
  LinearStepModel m;
  if (pairs.empty()) return m;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), 3);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(pairs.size()), 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r) << pairs[i].first.x, pairs[i].first.y, 1.0;
    y.row(r) << pairs[i].second.x, pairs[i].second.y;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  if (cod.rank() == 3) {
    const Eigen::MatrixXd w = cod.solve(y);  // [3, 2]
    m.a = w.topRows(2).transpose();
    m.b = w.row(2).transpose();
    m.affine = true;
    return m;
  }
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
  for (const auto & [p, q] : pairs) shift += Eigen::Vector2d(q.x - p.x, q.y - p.y);
  m.b = shift / static_cast<double>(pairs.size());
  return m;
}

inline std::vector<Path> linear_predict(const LinearStepModel & m, const std::vector<const PersonSample *> & test,
                                        std::size_t pred_len)
{
  std::vector<Path> out;
  for (const auto * s : test) {
    Path p;
    Point cur = s->obs_xy.back();
    for (std::size_t t = 0; t < pred_len; ++t) p.push_back(cur = m.step(cur));
    out.push_back(std::move(p));
  }
  return out;
}

inline EvalReport linear_baseline(const std::vector<const PersonSample *> & train,
                                  const std::vector<const PersonSample *> & test)
{
  if (test.empty()) fail("empty_input", "linear_baseline: no test trajectories");
  return evaluate(linear_predict(fit_linear_step(train), test, test.front()->future_xy.size()), test);
}

/// Neighbor's future offsets, re-anchored at each test trajectory's last observed point.
inline std::vector<Path> nearest_neighbor_predict(const std::vector<const PersonSample *> & train,
                                                  const std::vector<const PersonSample *> & test)
{
  if (train.empty()) fail("empty_dataset", "nearest_neighbor_baseline: no training trajectories");
  auto distance = [](const PersonSample & a, const PersonSample & b) {
    const Point la = a.obs_xy.back(), lb = b.obs_xy.back();
    double d = 0.0;
    for (std::size_t t = 0; t < a.obs_xy.size(); ++t) {
      d += point_distance({a.obs_xy[t].x - la.x, a.obs_xy[t].y - la.y}, {b.obs_xy[t].x - lb.x, b.obs_xy[t].y - lb.y});
    }
    return d;
  };
  std::vector<Path> out;
  for (const auto * s : test) {
    const PersonSample * best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto * c : train) {
      if (c->obs_xy.size() != s->obs_xy.size()) continue;
      const double d = distance(*s, *c);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == nullptr) fail("shape_mismatch", "nearest_neighbor_baseline: no candidate with matching length");
    const Point from = best->obs_xy.back(), to = s->obs_xy.back();
    Path p;
    for (const Point & f : best->future_xy) p.push_back({f.x - from.x + to.x, f.y - from.y + to.y});
    out.push_back(std::move(p));
  }
  return out;
}

inline EvalReport nearest_neighbor_baseline(const std::vector<const PersonSample *> & train,
                                            const std::vector<const PersonSample *> & test)
{
  return evaluate(nearest_neighbor_predict(train, test), test);
}

/// Coordinate-only encoder-decoder trained with the same loop and decoder.
template <typename Real>
EvalReport lstm_baseline(const Dataset & ds, std::span<const std::size_t> train_idx, std::span<const std::size_t> test_idx,
                         ModelConfig cfg, const TrainConfig & tc)
{
  cfg.coords_only = true;
  const auto trained = train<Real>(cfg, ds, train_idx, tc);
  return evaluate_model(trained.store, cfg, ds, test_idx, tc.batch_size);
}

}  // namespace trajact

#endif  // TRAJACT__TRAIN__BASELINES_HPP_
