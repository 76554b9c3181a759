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

#ifndef TRAJACT__MODEL__GRID_HPP_
#define TRAJACT__MODEL__GRID_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <utility>
#include <vector>

#include "trajact/autodiff/graph.hpp"
#include "trajact/data/catalog.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"
#include "trajact/model/config.hpp"

namespace trajact
{

/// Row-major discretization of a frame into w_g x h_g blocks.
struct ManhattanGrid
{
  std::size_t w_g = 32;
  std::size_t h_g = 18;
  double frame_w = 1920.0;
  double frame_h = 1080.0;

  ManhattanGrid() = default;
  ManhattanGrid(std::size_t w, std::size_t h, double fw, double fh) : w_g(w), h_g(h), frame_w(fw), frame_h(fh)
  {
    if (w == 0 || h == 0 || !(fw > 0.0) || !(fh > 0.0)) fail("bad_config", "grid and frame extents must be positive");
  }

  std::size_t num_blocks() const { return w_g * h_g; }
  double block_w() const { return frame_w / static_cast<double>(w_g); }
  double block_h() const { return frame_h / static_cast<double>(h_g); }

  Point center(std::size_t id) const
  {
    if (id >= num_blocks()) fail("bad_block", "block id ", id, " out of range [0, ", num_blocks(), ")");
    const std::size_t row = id / w_g, col = id % w_g;
    return {(static_cast<double>(col) + 0.5) * block_w(), (static_cast<double>(row) + 0.5) * block_h()};
  }
};

struct GridTarget
{
  std::size_t id = 0;
  Point offset;
};

inline GridTarget grid_encode(const ManhattanGrid & grid, Point xy)
{
  auto cell = [](double v, double block, std::size_t n) {
    const double f = std::floor(v / block);
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(n - 1)));
  };
  const std::size_t col = cell(xy.x, grid.block_w(), grid.w_g);
  const std::size_t row = cell(xy.y, grid.block_h(), grid.h_g);
  GridTarget t;
  t.id = row * grid.w_g + col;
  const Point c = grid.center(t.id);
  t.offset = {xy.x - c.x, xy.y - c.y};
  return t;
}

inline Point grid_decode(const ManhattanGrid & grid, std::size_t id, Point offset)
{
  const Point c = grid.center(id);
  return {c.x + offset.x, c.y + offset.y};
}

/// Nearest-neighbor lookup of each grid cell into an h_m x w_m map, as flat map indices.
inline std::vector<std::size_t> grid_resample_indices(std::size_t map_h, std::size_t map_w, std::size_t h_g,
                                                      std::size_t w_g)
{
  std::vector<std::size_t> idx;
  idx.reserve(h_g * w_g);
  for (std::size_t r = 0; r < h_g; ++r) {
    const std::size_t mr = std::min(map_h - 1, (2 * r + 1) * map_h / (2 * h_g));
    for (std::size_t c = 0; c < w_g; ++c) {
      const std::size_t mc = std::min(map_w - 1, (2 * c + 1) * map_w / (2 * w_g));
      idx.push_back(mr * map_w + mc);
    }
  }
  return idx;
}

/**
 * @brief 1x1 convolution heads over [scene features || tiled last states], split by input block.
 *
 * The scene block contributes a per-cell term; the tiled-state block contributes the same
 * value to every cell of a person.
 */
struct GridHeadNodes
{
  NodeId scene_cls;  // [C, 1]
  NodeId state_cls;  // [M*d, 1]
  NodeId b_cls;      // [1]
  NodeId scene_reg;  // [C, 2]
  NodeId state_reg;  // [M*d, 2]
  NodeId b_reg;      // [2]
};

/// Per-cell scene terms of one scene map [h, w, C]: (cls [1, G], reg [G, 2]).
template <typename Real>
std::pair<NodeId, NodeId> grid_scene_terms(Graph<Real> & g, NodeId map, const GridScale & scale,
                                           const GridHeadNodes & p)
{
  const Shape s = g.shape(map);
  const NodeId flat = g.reshape(map, {s[0] * s[1], s[2]});
  const NodeId cells = g.gather(flat, grid_resample_indices(s[0], s[1], scale.h, scale.w));
  const std::size_t cells_n = scale.w * scale.h;
  return {g.reshape(g.matmul(cells, p.scene_cls), {1, cells_n}), g.matmul(cells, p.scene_reg)};
}

/// Classification logits [B, G] given per-person scene terms [B, G] and last states [B, M*d].
template <typename Real>
NodeId grid_cls_logits(Graph<Real> & g, NodeId scene_cls_rows, NodeId last_cat, const GridHeadNodes & p)
{
  const Shape s = g.shape(scene_cls_rows);
  const NodeId state = g.reshape(g.add_bias(g.matmul(last_cat, p.state_cls), p.b_cls), {s[0]});
  return g.add(scene_cls_rows, g.expand(state, 1, s[1]));
}

/// Offsets [B, 2] at selected cells given the matching scene rows [B, 2].
template <typename Real>
NodeId grid_reg_at(Graph<Real> & g, NodeId scene_reg_rows, NodeId last_cat, const GridHeadNodes & p)
{
  return g.add(scene_reg_rows, g.add_bias(g.matmul(last_cat, p.state_reg), p.b_reg));
}

/// Cross-entropy over cells, summed over the batch: -sum onehot * log_softmax.
template <typename Real>
NodeId grid_cls_loss(Graph<Real> & g, NodeId logits, const std::vector<std::size_t> & ids)
{
  const Shape s = g.shape(logits);
  Tensor<Real> onehot(s);
  for (std::size_t b = 0; b < ids.size(); ++b) onehot.at(b, ids[b]) = Real(1);
  return g.scale(g.sum_all(g.mul(g.input(std::move(onehot)), g.log_softmax(logits, 1))), -1.0);
}

template <typename Real>
NodeId grid_reg_loss(Graph<Real> & g, NodeId offsets, NodeId targets, double beta)
{
  return g.sum_all(g.smooth_l1(g.sub(offsets, targets), beta));
}

/// Plain head weights for one scale.
template <typename Real>
struct GridHeadWeights
{
  Tensor<Real> scene_cls, state_cls, b_cls, scene_reg, state_reg, b_reg;
};

template <typename Real>
struct GridScalePrediction
{
  Tensor<Real> cls;  // [G]
  Tensor<Real> reg;  // [G, 2]
};

template <typename Real>
using GridPrediction = std::vector<GridScalePrediction<Real>>;

/// One person, one scale: map [h, w, C], last_cat [M*d].
template <typename Real>
GridScalePrediction<Real> grid_heads_forward(const Tensor<Real> & map, const Tensor<Real> & last_cat,
                                             const GridHeadWeights<Real> & w, const GridScale & scale)
{
  if (map.rank() != 3 || w.scene_cls.rank() != 2 || w.scene_cls.dim(0) != map.dim(2) ||
      w.state_cls.rank() != 2 || w.state_cls.dim(0) != last_cat.size()) {
    fail("shape_mismatch", "grid_heads_forward: map ", shape_str(map.shape()), ", state ",
         shape_str(last_cat.shape()), ", W_scene ", shape_str(w.scene_cls.shape()), ", W_state ",
         shape_str(w.state_cls.shape()));
  }
  Graph<Real> g;
  const GridHeadNodes p{g.input(w.scene_cls), g.input(w.state_cls), g.input(w.b_cls),
                        g.input(w.scene_reg), g.input(w.state_reg), g.input(w.b_reg)};
  const NodeId last = g.input(last_cat.reshaped({1, last_cat.size()}));
  const auto [cls_scene, reg_scene] = grid_scene_terms(g, g.input(map), scale, p);
  const NodeId cls = grid_cls_logits(g, cls_scene, last, p);
  const std::size_t cells = scale.w * scale.h;
  const NodeId state_reg = g.add_bias(g.matmul(last, p.state_reg), p.b_reg);
  const NodeId reg = g.add(reg_scene, g.reshape(g.expand(state_reg, 1, cells), {cells, 2}));
  return {g.value(cls).reshaped({cells}), g.value(reg)};
}

/// Per-scale (cls, reg) losses averaged over scales, for a single person.
template <typename Real>
std::pair<double, double> grid_loss(const GridPrediction<Real> & pred, const std::vector<GridTarget> & truth,
                                    double beta = 1.0)
{
  if (pred.size() != truth.size() || pred.empty()) fail("shape_mismatch", "grid_loss: scale count mismatch");
  double cls = 0.0, reg = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const auto & logits = pred[s].cls;
    const std::size_t id = truth[s].id;
    if (id >= logits.size()) fail("bad_block", "grid_loss: block id out of range");
    double mx = -INFINITY;
    for (std::size_t i = 0; i < logits.size(); ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(static_cast<double>(logits[i]) - mx);
    cls += -(static_cast<double>(logits[id]) - mx - std::log(z));
    const double d[2] = {static_cast<double>(pred[s].reg.at(id, 0)) - truth[s].offset.x,
                         static_cast<double>(pred[s].reg.at(id, 1)) - truth[s].offset.y};
    for (double v : d) reg += std::abs(v) < beta ? 0.5 * v * v / beta : std::abs(v) - 0.5 * beta;
  }
  const double n = static_cast<double>(pred.size());
  return {cls / n, reg / n};
}

/// Activity logits [B, N_a] = last_cat W_a.
template <typename Real>
NodeId activity_logits(Graph<Real> & g, NodeId last_cat, NodeId w_a)
{
  return g.matmul(last_cat, w_a);
}

/// Activity loss summed over labelled persons. `targets` is the multi-hot [B, N_a]; `mask` [B, N_a]
/// zeroes unlabelled rows.
template <typename Real>
NodeId activity_loss(Graph<Real> & g, NodeId logits, const Tensor<Real> & targets, const Tensor<Real> & mask,
                     ActivityMode mode)
{
  if (mode == ActivityMode::softmax) {
    Tensor<Real> dist = targets;
    const std::size_t n = targets.dim(1);
    for (std::size_t b = 0; b < targets.dim(0); ++b) {
      Real total = 0;
      for (std::size_t j = 0; j < n; ++j) total += targets.at(b, j);
      for (std::size_t j = 0; j < n; ++j) {
        dist.at(b, j) = total > 0 ? targets.at(b, j) / total * mask.at(b, j) : Real(0);
      }
    }
    return g.scale(g.sum_all(g.mul(g.input(std::move(dist)), g.log_softmax(logits, 1))), -1.0);
  }
  const NodeId y = g.input(targets);
  const NodeId per = g.sub(g.softplus(logits), g.mul(y, logits));
  return g.sum_all(g.mul(g.input(mask), per));
}

/// Scores for one person from last_cat [M*d] and W_a [M*d, N_a].
template <typename Real>
Tensor<Real> activity_forward(const Tensor<Real> & last_cat, const Tensor<Real> & w_a, ActivityMode mode)
{
  if (w_a.rank() != 2 || w_a.dim(0) != last_cat.size()) {
    fail("shape_mismatch", "activity_forward: state ", shape_str(last_cat.shape()), ", W_a ",
         shape_str(w_a.shape()));
  }
  Graph<Real> g;
  const NodeId z = activity_logits(g, g.input(last_cat.reshaped({1, last_cat.size()})), g.input(w_a));
  const NodeId s = mode == ActivityMode::softmax ? g.softmax(z, 1) : g.sigmoid(z);
  return g.value(s).reshaped({w_a.dim(1)});
}

/// Softmax over all cells of a logit vector.
template <typename Real>
std::vector<double> cell_probabilities(const Tensor<Real> & logits)
{
  double mx = -INFINITY;
  for (std::size_t i = 0; i < logits.size(); ++i) mx = std::max(mx, static_cast<double>(logits[i]));
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(static_cast<double>(logits[i]) - mx);
  for (double & v : p) v /= z;
  return p;
}

/// Writes h_g rows of w_g logits.
template <typename Real>
void write_heatmap_csv(const std::string & path, const Tensor<Real> & logits, const GridScale & scale)
{
  std::ofstream out(path);
  if (!out) fail("io_error", "cannot write ", path);
  out << std::setprecision(9);
  for (std::size_t r = 0; r < scale.h; ++r) {
    for (std::size_t c = 0; c < scale.w; ++c) {
      if (c) out << ',';
      out << static_cast<double>(logits[r * scale.w + c]);
    }
    out << '\n';
  }
  if (!out) fail("io_error", "failed writing ", path);
}

}  // namespace trajact

#endif  // TRAJACT__MODEL__GRID_HPP_
