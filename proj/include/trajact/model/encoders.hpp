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

#ifndef TRAJACT__MODEL__ENCODERS_HPP_
#define TRAJACT__MODEL__ENCODERS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "trajact/autodiff/graph.hpp"
#include "trajact/autodiff/lstm.hpp"
#include "trajact/data/catalog.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"

namespace trajact
{

/// Trajectory point embedding e = tanh(xy W_e) + b_e. xy [B,2], W_e [2,d], b_e [d].
/// The bias sits outside the tanh.
template <typename Real>
NodeId embed_trajectory_point(Graph<Real> & g, NodeId xy, NodeId w_e, NodeId b_e)
{
  return g.add_bias(g.tanh(g.matmul(xy, w_e)), b_e);
}

/// Single-point form with W_e laid out as [d, 2].
template <typename Real>
Tensor<Real> embed_trajectory_point(Point xy, const Tensor<Real> & w_e, const Tensor<Real> & b_e)
{
  const std::size_t d = b_e.size();
  if (w_e.rank() != 2 || w_e.dim(0) != d || w_e.dim(1) != 2) {
    fail("shape_mismatch", "embed_trajectory_point: W_e ", shape_str(w_e.shape()), ", b_e ",
         shape_str(b_e.shape()));
  }
  Tensor<Real> out({d});
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = std::tanh(w_e.at(i, 0) * static_cast<Real>(xy.x) + w_e.at(i, 1) * static_cast<Real>(xy.y)) + b_e[i];
  }
  return out;
}

struct SequenceEncoding
{
  std::vector<NodeId> states;  // per step [B,d], after dropout
  LstmState last;              // raw final LSTM state
};

using StateTransform = std::function<NodeId(NodeId)>;

/// Runs an LSTM over per-step inputs [B, d_in] from a zero state.
template <typename Real>
SequenceEncoding encode_sequence(Graph<Real> & g, const std::vector<NodeId> & inputs, NodeId w, NodeId b,
                                 const StateTransform & dropout = {})
{
  if (inputs.empty()) fail("bad_input", "encode_sequence: empty sequence");
  const std::size_t batch = g.shape(inputs.front())[0];
  const std::size_t d = g.shape(b)[0] / 4;
  const NodeId zero = g.input(Tensor<Real>({batch, d}));
  LstmState state{zero, zero};
  SequenceEncoding enc;
  for (NodeId x : inputs) {
    state = lstm_cell(g, x, state, w, b);
    enc.states.push_back(dropout ? dropout(state.h) : state.h);
  }
  enc.last = state;
  return enc;
}

inline constexpr double kRelationClampLo = 1e-3;
inline constexpr double kRelationClampHi = 1e3;

/**
 * @brief Log-ratio geometry of K other boxes relative to a person box.
 *
 * Row k = [log|dx|/w_b, log|dy|/h_b, log w_k/w_b, log h_k/h_b], each ratio clamped to
 * [1e-3, 1e3] before the log. Callers pass boxes as (center x, center y, w, h).
 */
inline std::vector<std::array<double, 4>> geometric_relation(const Box & person, std::span<const Box> others)
{
  if (person.w <= 0.0 || person.h <= 0.0) {
    fail("bad_box", "geometric_relation: person box must have positive size");
  }
  auto clamp_log = [](double r) { return std::log(std::clamp(r, kRelationClampLo, kRelationClampHi)); };
  std::vector<std::array<double, 4>> rows;
  rows.reserve(others.size());
  for (const auto & k : others) {
    if (k.w <= 0.0 || k.h <= 0.0) fail("bad_box", "geometric_relation: object box must have positive size");
    rows.push_back({clamp_log(std::abs(person.x - k.x) / person.w), clamp_log(std::abs(person.y - k.y) / person.h),
                    clamp_log(k.w / person.w), clamp_log(k.h / person.h)});
  }
  return rows;
}

inline Box to_center_box(const Box & b) { return {b.x + b.w / 2.0, b.y + b.h / 2.0, b.w, b.h}; }

/// Objects of one observed step for a whole batch, flattened.
template <typename Real>
struct ObjectStep
{
  Tensor<Real> geometry;  // [N, 4]; N >= 1 (a placeholder row when nobody has objects)
  std::vector<std::size_t> types;
  std::vector<std::vector<std::size_t>> segments;  // per person; empty -> no-object embedding
};

template <typename Real>
ObjectStep<Real> make_object_step(const std::vector<Box> & person_boxes,
                                  const std::vector<std::vector<SceneObject>> & objects)
{
  ObjectStep<Real> step;
  std::vector<Real> geo;
  step.segments.resize(person_boxes.size());
  for (std::size_t b = 0; b < person_boxes.size(); ++b) {
    std::vector<Box> boxes;
    for (const auto & o : objects[b]) {
      if (o.class_id < 0 || static_cast<std::size_t>(o.class_id) >= kNumObjectClasses) {
        fail("bad_input", "object type id ", o.class_id, " out of range");
      }
      boxes.push_back(to_center_box(o.box));
      step.types.push_back(static_cast<std::size_t>(o.class_id));
      step.segments[b].push_back(step.types.size() - 1);
    }
    for (const auto & row : geometric_relation(to_center_box(person_boxes[b]), boxes)) {
      for (double v : row) geo.push_back(static_cast<Real>(v));
    }
  }
  if (step.types.empty()) {
    step.types.push_back(0);
    geo.assign(4, Real(0));
  }
  step.geometry = Tensor<Real>({step.types.size(), 4}, std::move(geo));
  return step;
}

struct ObjectEncoderParams
{
  NodeId geo_w;     // [4, d_e]
  NodeId geo_b;     // [d_e]
  NodeId type_emb;  // [N_o, d_e]
  NodeId none;      // [1, 2 d_e], used when a person has no objects at a step
};

/// Per-step pooled object embedding [B, 2 d_e]: concat(tanh(G W + b), type embedding), pooled over K.
template <typename Real>
NodeId pool_objects(Graph<Real> & g, const ObjectStep<Real> & step, const ObjectEncoderParams & p,
                    bool sum_pool = false)
{
  const NodeId geo = g.tanh(g.add_bias(g.matmul(g.input(step.geometry), p.geo_w), p.geo_b));
  const NodeId typ = g.gather(p.type_emb, step.types);
  const NodeId rows = g.concat({g.concat({geo, typ}, 1), p.none}, 0);
  const std::size_t none_row = step.types.size();
  auto segs = step.segments;
  for (auto & s : segs) {
    if (s.empty()) s.push_back(none_row);
  }
  return sum_pool ? g.segment_sum(rows, std::move(segs)) : g.segment_mean(rows, std::move(segs));
}

/// Binary masks [T, N_s, h, w] from a static class map. Unlabeled cells (-1) are zero in every mask.
inline Tensor<double> render_semantic_masks(const SceneContext & scene, std::size_t obs_len)
{
  const std::size_t hw = scene.mask_h * scene.mask_w;
  Tensor<double> masks({obs_len, kNumSceneClasses, scene.mask_h, scene.mask_w});
  for (std::size_t t = 0; t < obs_len; ++t) {
    for (std::size_t i = 0; i < hw; ++i) {
      const int c = scene.class_map[i];
      if (c >= 0) masks[(t * kNumSceneClasses + static_cast<std::size_t>(c)) * hw + i] = 1.0;
    }
  }
  return masks;
}

/// Temporal mean of the semantic masks as [H', W', N_s], zero-padded to multiples of 4.
template <typename Real>
Tensor<Real> temporal_mean_masks(const Tensor<double> & masks /* [T, N_s, h, w] */)
{
  const std::size_t t_len = masks.dim(0), ns = masks.dim(1), h = masks.dim(2), w = masks.dim(3);
  const std::size_t hp = (h + 3) / 4 * 4;
  const std::size_t wp = (w + 3) / 4 * 4;
  Tensor<Real> out({hp, wp, ns});
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < ns; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          out[(y * wp + x) * ns + c] +=
            static_cast<Real>(masks[((t * ns + c) * h + y) * w + x] / static_cast<double>(t_len));
        }
      }
    }
  }
  return out;
}

struct SceneConvParams
{
  NodeId w1, b1, w2, b2;
};

/// Two 3x3 stride-2 tanh convolutions; returns (scale 0 [H/2,W/2,C], scale 1 [H/4,W/4,C]).
template <typename Real>
std::pair<NodeId, NodeId> scene_conv_features(Graph<Real> & g, NodeId mask_mean, const SceneConvParams & p)
{
  const NodeId s0 = g.tanh(g.add_bias(g.conv2d(mask_mean, p.w1, 2, 1), p.b1));
  const NodeId s1 = g.tanh(g.add_bias(g.conv2d(s0, p.w2, 2, 1), p.b2));
  return {s0, s1};
}

/// Feature-map cell under a frame position; boundary positions clamp to edge cells.
inline std::pair<std::size_t, std::size_t> scene_cell(Point xy, double frame_w, double frame_h,
                                                      std::size_t map_h, std::size_t map_w)
{
  auto idx = [](double v, double extent, std::size_t n) {
    const double f = std::floor(v / extent * static_cast<double>(n));
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(n - 1)));
  };
  return {idx(xy.y, frame_h, map_h), idx(xy.x, frame_w, map_w)};
}

/// Plain-tensor scene pooling: map [h, w, C] -> T rows of C features.
template <typename Real>
Tensor<Real> pool_scene_at(const Tensor<Real> & map, const std::vector<Point> & xy, double frame_w,
                           double frame_h)
{
  const std::size_t h = map.dim(0), w = map.dim(1), c = map.dim(2);
  Tensor<Real> out({xy.size(), c});
  for (std::size_t t = 0; t < xy.size(); ++t) {
    const auto [r, col] = scene_cell(xy[t], frame_w, frame_h, h, w);
    for (std::size_t k = 0; k < c; ++k) out.at(t, k) = map[(r * w + col) * c + k];
  }
  return out;
}

inline constexpr std::size_t kNumFeatureChannels = 5;
enum class Channel : std::size_t { appearance = 0, keypoints = 1, person_scene = 2, person_objects = 3, trajectory = 4 };

/// Encoded features of one person: Q [M, T, d] plus each channel's last state.
template <typename Real>
struct FeatureBundle
{
  Tensor<Real> q;
  std::vector<Tensor<Real>> last_states;  // M vectors [d]
  Tensor<Real> trajectory_last_c;         // [d]

  bool operator==(const FeatureBundle & o) const
  {
    return q == o.q && last_states == o.last_states && trajectory_last_c == o.trajectory_last_c;
  }
};

/// Packs channels (each [T, d]) in the order appearance, keypoints, person-scene, person-objects, trajectory.
template <typename Real>
FeatureBundle<Real> pack_q(const std::vector<Tensor<Real>> & channels, const Tensor<Real> & trajectory_last_c)
{
  if (channels.size() != kNumFeatureChannels) {
    fail("bad_input", "pack_q: expected ", kNumFeatureChannels, " channels, got ", channels.size());
  }
  const Shape & s = channels.front().shape();
  if (s.size() != 2) fail("shape_mismatch", "pack_q: channels must be [T, d]");
  FeatureBundle<Real> fb;
  std::vector<Real> data;
  for (const auto & ch : channels) {
    if (ch.shape() != s) fail("shape_mismatch", "pack_q: channel shapes differ");
    data.insert(data.end(), ch.data().begin(), ch.data().end());
    std::vector<Real> last(ch.data().end() - static_cast<std::ptrdiff_t>(s[1]), ch.data().end());
    fb.last_states.emplace_back(Shape{s[1]}, std::move(last));
  }
  fb.q = Tensor<Real>({channels.size(), s[0], s[1]}, std::move(data));
  fb.trajectory_last_c = trajectory_last_c;
  return fb;
}

/// Graph-side packing: per-channel state lists (each T nodes of [B,d]) -> Q [B, M*T, d].
template <typename Real>
NodeId pack_q(Graph<Real> & g, const std::vector<std::vector<NodeId>> & channel_states)
{
  std::vector<NodeId> rows;
  for (const auto & states : channel_states) {
    for (NodeId h : states) {
      const Shape s = g.shape(h);
      rows.push_back(g.reshape(h, {s[0], 1, s[1]}));
    }
  }
  return g.concat(rows, 1);
}

}  // namespace trajact

#endif  // TRAJACT__MODEL__ENCODERS_HPP_
