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

#ifndef TRAJACT__MODEL__ATTENTION_HPP_
#define TRAJACT__MODEL__ATTENTION_HPP_

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/autodiff/graph.hpp"
#include "trajact/autodiff/lstm.hpp"
#include "trajact/model/encoders.hpp"

namespace trajact
{

/// Focal attention of one person at one decode step.
template <typename Real>
struct AttentionState
{
  Tensor<Real> s;  // [M, T] correlations
  Tensor<Real> a;  // [M] feature weights
  Tensor<Real> b;  // [M, T] within-feature weights
  Tensor<Real> q;  // [d] attended vector
};

struct FocalNodes
{
  NodeId s, a, b, q;
};

/**
 * @brief Batched focal attention.
 *
 * q_all is [B, M*T, d] with row j*T + k holding feature j at step k; h is [B, d].
 * B is the softmax of S over time, A the softmax over features of each feature's max over time,
 * and q = sum_j A_j sum_k B_jk Q_jk.
 */
template <typename Real>
FocalNodes focal_attention(Graph<Real> & g, NodeId q_all, NodeId h, std::size_t m, std::size_t t)
{
  const std::size_t batch = g.shape(h)[0];
  const NodeId s = g.reshape(g.batched_matvec(q_all, h), {batch, m, t});
  const NodeId b = g.softmax(s, 2);
  const NodeId a = g.softmax(g.max(s, 2), 1);
  const NodeId w = g.reshape(g.mul(g.expand(a, 2, t), b), {batch, m * t});
  return {s, a, b, g.batched_weighted_sum(w, q_all)};
}

template <typename Real>
AttentionState<Real> read_attention(const Graph<Real> & g, const FocalNodes & n, std::size_t row)
{
  auto pick = [&](NodeId id) {
    const Tensor<Real> & v = g.value(id);
    const std::size_t per = v.size() / v.dim(0);
    Shape s(v.shape().begin() + 1, v.shape().end());
    return Tensor<Real>(s, std::vector<Real>(v.raw().begin() + static_cast<std::ptrdiff_t>(row * per),
                                             v.raw().begin() + static_cast<std::ptrdiff_t>((row + 1) * per)));
  };
  return {pick(n.s), pick(n.a), pick(n.b), pick(n.q)};
}

/// Single-person form: h [d], Q [M, T, d].
template <typename Real>
AttentionState<Real> focal_attention(const Tensor<Real> & h, const Tensor<Real> & q)
{
  if (q.rank() != 3 || h.rank() != 1 || q.dim(2) != h.size()) {
    fail("shape_mismatch", "focal_attention: h ", shape_str(h.shape()), ", Q ", shape_str(q.shape()));
  }
  const std::size_t m = q.dim(0), t = q.dim(1), d = q.dim(2);
  Graph<Real> g;
  const FocalNodes n = focal_attention(g, g.input(q.reshaped({1, m * t, d})), g.input(h.reshaped({1, d})), m, t);
  return read_attention(g, n, 0);
}

/// Uniform average of the per-feature last states; the context used without focal attention.
template <typename Real>
NodeId mean_last_states(Graph<Real> & g, const std::vector<NodeId> & last_states)
{
  const Shape s = g.shape(last_states.front());
  std::vector<NodeId> rows;
  for (NodeId h : last_states) rows.push_back(g.reshape(h, {s[0], 1, s[1]}));
  return g.mean(g.concat(rows, 1), 1);
}

struct DecoderNodes
{
  NodeId lstm_w;  // [2d, 4d]
  NodeId lstm_b;  // [4d]
  NodeId out_w;   // [d, 2]
  NodeId out_b;   // [2]
  NodeId emb_w;   // [2, d]
  NodeId emb_b;   // [d]
};

/// h_t = LSTM(h_{t-1}, [e_{t-1}, q]); xy_t = h_t W_out + b_out.
template <typename Real>
std::pair<LstmState, NodeId> decode_step(Graph<Real> & g, const DecoderNodes & p, LstmState state, NodeId e_prev,
                                         NodeId q)
{
  const LstmState next = lstm_cell(g, g.concat({e_prev, q}, 1), state, p.lstm_w, p.lstm_b);
  return {next, g.add_bias(g.matmul(next.h, p.out_w), p.out_b)};
}

enum class DecodeMode { teacher_forced, autoregressive };

struct RolloutNodes
{
  std::vector<NodeId> xy;  // per step [B, 2]
  std::vector<FocalNodes> attention;
};

/**
 * @brief Unrolls the decoder for `steps` steps.
 *
 * first_xy [B, 2] feeds step one. With teacher inputs (per step [B, 2]) the ground truth of step t
 * feeds step t+1; otherwise the decoder's own output does. Without focal attention, `fixed_context`
 * is used at every step.
 */
template <typename Real>
RolloutNodes rollout(Graph<Real> & g, const DecoderNodes & p, NodeId q_all, std::size_t m, std::size_t t,
                     LstmState init, NodeId first_xy, std::size_t steps, const std::vector<NodeId> * teacher,
                     std::optional<NodeId> fixed_context = std::nullopt)
{
  RolloutNodes out;
  LstmState state = init;
  NodeId prev_xy = first_xy;
  for (std::size_t step = 0; step < steps; ++step) {
    const NodeId e = embed_trajectory_point(g, prev_xy, p.emb_w, p.emb_b);
    NodeId ctx;
    if (fixed_context) {
      ctx = *fixed_context;
    } else {
      const FocalNodes att = focal_attention(g, q_all, state.h, m, t);
      out.attention.push_back(att);
      ctx = att.q;
    }
    auto [next, xy] = decode_step(g, p, state, e, ctx);
    state = next;
    out.xy.push_back(xy);
    prev_xy = teacher ? teacher->at(step) : xy;
  }
  return out;
}

/// Decoder weights in parameter-store layout.
template <typename Real>
struct DecoderWeights
{
  Tensor<Real> lstm_w, lstm_b, out_w, out_b, emb_w, emb_b;
};

template <typename Real>
struct RolloutResult
{
  std::vector<Point> path;
  std::vector<AttentionState<Real>> attention;
};

/**
 * @brief Single-person rollout over a packed bundle, in the decoder's coordinate frame.
 *
 * Teacher-forced mode needs `gt_future` with at least steps - 1 points.
 */
template <typename Real>
RolloutResult<Real> rollout(const FeatureBundle<Real> & bundle, Point last_xy, const DecoderWeights<Real> & w,
                            std::size_t steps, DecodeMode mode, const std::vector<Point> & gt_future = {},
                            bool focal = true)
{
  const std::size_t m = bundle.q.dim(0), t = bundle.q.dim(1), d = bundle.q.dim(2);
  if (mode == DecodeMode::teacher_forced && gt_future.size() + 1 < steps) {
    fail("bad_input", "rollout: teacher forcing needs ", steps - 1, " ground-truth points");
  }
  Graph<Real> g;
  auto point = [&](Point p) {
    return g.input(Tensor<Real>({1, 2}, {static_cast<Real>(p.x), static_cast<Real>(p.y)}));
  };
  const DecoderNodes p{g.input(w.lstm_w), g.input(w.lstm_b), g.input(w.out_w),
                       g.input(w.out_b),  g.input(w.emb_w),  g.input(w.emb_b)};
  const NodeId q_all = g.input(bundle.q.reshaped({1, m * t, d}));
  const auto & traj_h = bundle.last_states.back();
  const LstmState init{g.input(traj_h.reshaped({1, d})), g.input(bundle.trajectory_last_c.reshaped({1, d}))};
  std::vector<NodeId> teacher;
  if (mode == DecodeMode::teacher_forced) {
    for (std::size_t i = 0; i + 1 < steps; ++i) teacher.push_back(point(gt_future[i]));
    teacher.push_back(point({0.0, 0.0}));
  }
  std::optional<NodeId> ctx;
  if (!focal) {
    std::vector<NodeId> lasts;
    for (const auto & h : bundle.last_states) lasts.push_back(g.input(h.reshaped({1, d})));
    ctx = mean_last_states(g, lasts);
  }
  const RolloutNodes r = rollout(g, p, q_all, m, t, init, point(last_xy), steps,
                                 mode == DecodeMode::teacher_forced ? &teacher : nullptr, ctx);
  RolloutResult<Real> res;
  for (NodeId xy : r.xy) {
    const auto & v = g.value(xy);
    res.path.push_back({static_cast<double>(v[0]), static_cast<double>(v[1])});
  }
  for (const auto & a : r.attention) res.attention.push_back(read_attention(g, a, 0));
  return res;
}

template <typename Real>
nlohmann::json attention_to_json(const std::vector<AttentionState<Real>> & steps)
{
  auto rows = [](const Tensor<Real> & m) {
    nlohmann::json out = nlohmann::json::array();
    const std::size_t cols = m.rank() == 2 ? m.dim(1) : m.size();
    for (std::size_t r = 0; r < m.size() / cols; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < cols; ++c) row.push_back(static_cast<double>(m[r * cols + c]));
      out.push_back(row);
    }
    return m.rank() == 2 ? out : out[0];
  };
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out.push_back({{"step", i + 1}, {"S", rows(steps[i].s)}, {"A", rows(steps[i].a)}, {"B", rows(steps[i].b)}});
  }
  return out;
}

}  // namespace trajact

#endif  // TRAJACT__MODEL__ATTENTION_HPP_
