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

#ifndef TRAJACT__MODEL__MODEL_HPP_
#define TRAJACT__MODEL__MODEL_HPP_

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "trajact/autodiff/graph.hpp"
#include "trajact/autodiff/lstm.hpp"
#include "trajact/autodiff/optim.hpp"
#include "trajact/autodiff/param_store.hpp"
#include "trajact/data/catalog.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"
#include "trajact/model/attention.hpp"
#include "trajact/model/config.hpp"
#include "trajact/model/encoders.hpp"
#include "trajact/model/grid.hpp"

namespace trajact
{

inline constexpr std::size_t kKeypointValues = 2 * kNumKeypoints;

inline std::string grid_prefix(std::size_t scale) { return "grid" + std::to_string(scale) + "."; }

/// Creates every parameter of the model in a fixed order from `seed`.
template <typename Real>
ParamStore<Real> init_params(const ModelConfig & cfg, std::uint64_t seed)
{
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamStore<Real> s;
  const std::size_t d = cfg.hidden, de = cfg.embed, c = cfg.scene_channels, m = kNumFeatureChannels;
  auto dense = [&](const std::string & name, std::size_t in, std::size_t out) {
    s.add(name, glorot_uniform<Real>({in, out}, in, out, rng));
  };
  auto bias = [&](const std::string & name, std::size_t n) { s.add(name, Tensor<Real>({n}), false); };

  dense("traj.emb.W", 2, d);
  bias("traj.emb.b", d);
  register_lstm(s, "enc.traj", d, d, rng);
  if (!cfg.coords_only) {
    if (cfg.appearance_dim == 0) fail("bad_config", "appearance_dim must be positive");
    register_lstm(s, "enc.app", cfg.appearance_dim, d, rng);
    dense("kp.W", kKeypointValues, de);
    bias("kp.b", de);
    register_lstm(s, "enc.kp", de, d, rng);
    s.add("scene.conv1.W", glorot_uniform<Real>({3, 3, kNumSceneClasses, c}, 9 * kNumSceneClasses, 9 * c, rng));
    bias("scene.conv1.b", c);
    s.add("scene.conv2.W", glorot_uniform<Real>({3, 3, c, c}, 9 * c, 9 * c, rng));
    bias("scene.conv2.b", c);
    register_lstm(s, "enc.scene", c, d, rng);
    dense("obj.geo.W", 4, de);
    bias("obj.geo.b", de);
    dense("obj.type", kNumObjectClasses, de);
    dense("obj.none", 1, 2 * de);
    register_lstm(s, "enc.obj", 2 * de, d, rng);
    for (std::size_t i = 0; i < cfg.grid_scales.size(); ++i) {
      const std::string p = grid_prefix(i);
      dense(p + "scene_cls", c, 1);
      dense(p + "state_cls", m * d, 1);
      bias(p + "b_cls", 1);
      dense(p + "scene_reg", c, 2);
      dense(p + "state_reg", m * d, 2);
      bias(p + "b_reg", 2);
    }
    dense("act.W", m * d, kNumActivities);
  }
  register_lstm(s, "dec", 2 * d, d, rng);
  dense("dec.out.W", d, 2);
  bias("dec.out.b", 2);
  return s;
}

/// Model-ready tensors for a group of persons.
template <typename Real>
struct Batch
{
  std::vector<const PersonSample *> samples;
  std::vector<Point> anchor;                   // last observed xy, pixels
  std::vector<Tensor<Real>> traj;              // obs_len x [B, 2], model units
  std::vector<Tensor<Real>> future;            // pred_len x [B, 2], model units; empty if unknown
  std::vector<Tensor<Real>> appearance;        // obs_len x [B, d_app]
  std::vector<Tensor<Real>> keypoints;         // obs_len x [B, 34], box-normalized
  std::vector<ObjectStep<Real>> objects;       // obs_len
  std::vector<const SceneContext *> scenes;    // unique, first-use order
  std::vector<Tensor<Real>> scene_masks;       // per unique scene [H', W', N_s]
  std::vector<std::size_t> scene_of;           // per person
  std::vector<std::vector<std::size_t>> pool_rows;  // obs_len x B rows into stacked scale-1 maps
  std::vector<std::vector<GridTarget>> grid;   // scale x B, pixel offsets of the final point
  std::vector<ManhattanGrid> grids_of;         // scale x B flattened as scale * B + b
  Tensor<Real> act_target;                     // [B, N_a]
  Tensor<Real> act_mask;                       // [B, N_a]

  std::size_t size() const { return samples.size(); }
  bool has_future() const { return !future.empty(); }
};

inline std::size_t padded4(std::size_t n) { return (n + 3) / 4 * 4; }

template <typename Real>
Batch<Real> make_batch(const Dataset & ds, std::span<const std::size_t> indices, const ModelConfig & cfg)
{
  if (indices.empty()) fail("bad_input", "make_batch: empty batch");
  Batch<Real> b;
  const std::size_t n = indices.size(), t_obs = cfg.obs_len;
  const Real inv = static_cast<Real>(1.0 / cfg.coord_scale);
  bool all_future = true;
  for (std::size_t i : indices) {
    const PersonSample & s = ds.samples.at(i);
    if (s.obs_xy.size() != t_obs) {
      fail("bad_input", "sample ", s.scene_id, "/", s.person_id, " has ", s.obs_xy.size(), " observed points, need ",
           t_obs);
    }
    if (s.future_xy.size() != cfg.pred_len) all_future = false;
    b.samples.push_back(&s);
    b.anchor.push_back(s.obs_xy.back());
  }
  std::map<std::string, std::size_t> scene_index;
  std::vector<std::size_t> map_offset;
  std::size_t rows = 0;
  for (const PersonSample * s : b.samples) {
    auto it = scene_index.find(s->scene_id);
    if (it == scene_index.end()) {
      auto sc = ds.scenes.find(s->scene_id);
      if (sc == ds.scenes.end()) fail("unknown_scene", "no scene context for '", s->scene_id, "'");
      it = scene_index.emplace(s->scene_id, b.scenes.size()).first;
      b.scenes.push_back(&sc->second);
      map_offset.push_back(rows);
      if (!cfg.coords_only) {
        b.scene_masks.push_back(temporal_mean_masks<Real>(render_semantic_masks(sc->second, t_obs)));
        rows += padded4(sc->second.mask_h) / 4 * (padded4(sc->second.mask_w) / 4);
      }
    }
    b.scene_of.push_back(it->second);
  }

  for (std::size_t t = 0; t < t_obs; ++t) {
    Tensor<Real> xy({n, 2});
    for (std::size_t p = 0; p < n; ++p) {
      xy.at(p, 0) = static_cast<Real>(b.samples[p]->obs_xy[t].x - b.anchor[p].x) * inv;
      xy.at(p, 1) = static_cast<Real>(b.samples[p]->obs_xy[t].y - b.anchor[p].y) * inv;
    }
    b.traj.push_back(std::move(xy));
  }
  if (all_future) {
    for (std::size_t t = 0; t < cfg.pred_len; ++t) {
      Tensor<Real> xy({n, 2});
      for (std::size_t p = 0; p < n; ++p) {
        xy.at(p, 0) = static_cast<Real>(b.samples[p]->future_xy[t].x - b.anchor[p].x) * inv;
        xy.at(p, 1) = static_cast<Real>(b.samples[p]->future_xy[t].y - b.anchor[p].y) * inv;
      }
      b.future.push_back(std::move(xy));
    }
  }
  if (cfg.coords_only) return b;

  for (std::size_t t = 0; t < t_obs; ++t) {
    Tensor<Real> app({n, cfg.appearance_dim});
    Tensor<Real> kp({n, kKeypointValues});
    std::vector<Box> boxes;
    std::vector<std::vector<SceneObject>> objs;
    std::vector<std::size_t> pool;
    for (std::size_t p = 0; p < n; ++p) {
      const PersonSample & s = *b.samples[p];
      if (t < s.appearance.size()) {
        if (s.appearance[t].size() != cfg.appearance_dim) {
          fail("shape_mismatch", "appearance length ", s.appearance[t].size(), " != ", cfg.appearance_dim);
        }
        for (std::size_t j = 0; j < cfg.appearance_dim; ++j) app.at(p, j) = static_cast<Real>(s.appearance[t][j]);
      }
      const Box box = t < s.obs_boxes.size() ? s.obs_boxes[t] : Box{s.obs_xy[t].x - 25.0, s.obs_xy[t].y - 40.0, 50.0, 80.0};
      if (t < s.keypoints.size() && s.keypoints[t].size() == kKeypointValues) {
        const auto & k = s.keypoints[t];
        const bool missing = std::all_of(k.begin(), k.end(), [](double v) { return v == 0.0; });
        for (std::size_t j = 0; j < kKeypointValues && !missing; ++j) {
          kp.at(p, j) = static_cast<Real>(j % 2 == 0 ? (k[j] - box.x) / box.w : (k[j] - box.y) / box.h);
        }
      }
      boxes.push_back(box);
      objs.push_back(t < s.objects.size() ? s.objects[t] : std::vector<SceneObject>{});
      const SceneContext & sc = *b.scenes[b.scene_of[p]];
      const std::size_t mh = padded4(sc.mask_h) / 4, mw = padded4(sc.mask_w) / 4;
      const auto [r, c] = scene_cell(s.obs_xy[t], sc.frame_w, sc.frame_h, mh, mw);
      pool.push_back(map_offset[b.scene_of[p]] + r * mw + c);
    }
    b.appearance.push_back(std::move(app));
    b.keypoints.push_back(std::move(kp));
    b.objects.push_back(make_object_step<Real>(boxes, objs));
    b.pool_rows.push_back(std::move(pool));
  }

  b.grid.resize(cfg.grid_scales.size());
  for (std::size_t i = 0; i < cfg.grid_scales.size(); ++i) {
    for (std::size_t p = 0; p < n; ++p) {
      const SceneContext & sc = *b.scenes[b.scene_of[p]];
      const ManhattanGrid grid(cfg.grid_scales[i].w, cfg.grid_scales[i].h, sc.frame_w, sc.frame_h);
      b.grids_of.push_back(grid);
      if (all_future) b.grid[i].push_back(grid_encode(grid, b.samples[p]->future_xy.back()));
    }
  }
  b.act_target = Tensor<Real>({n, kNumActivities});
  b.act_mask = Tensor<Real>({n, kNumActivities});
  for (std::size_t p = 0; p < n; ++p) {
    const PersonSample & s = *b.samples[p];
    if (!s.has_activity) continue;
    for (std::size_t j = 0; j < kNumActivities; ++j) b.act_mask.at(p, j) = Real(1);
    for (int a : s.future_activity_ids) {
      if (a < 0 || static_cast<std::size_t>(a) >= kNumActivities) fail("bad_input", "activity id ", a, " out of range");
      b.act_target.at(p, static_cast<std::size_t>(a)) = Real(1);
    }
  }
  return b;
}

struct ForwardOptions
{
  bool training = false;
  bool teacher_forcing = false;
  bool compute_loss = true;
  bool full_grid = false;  // offsets at every cell, for inference
  std::mt19937_64 * rng = nullptr;
};

struct ForwardResult
{
  std::vector<NodeId> xy;  // per step [B, 2]
  std::vector<FocalNodes> attention;
  std::vector<NodeId> grid_logits;   // per scale [B, G]
  std::vector<NodeId> grid_offsets;  // per scale [B, G, 2], full_grid only
  std::optional<NodeId> activity_logits;
  std::optional<NodeId> total;
  std::optional<NodeId> l_xy, l_cls, l_reg, l_act;
};

/// Builds the forward graph (and losses when the batch has futures) for one batch.
template <typename Real>
ForwardResult forward(Graph<Real> & g, const ParamStore<Real> & store, const ModelConfig & cfg,
                      const Batch<Real> & batch, const ForwardOptions & opt)
{
  auto P = [&](const std::string & name) { return g.param(name, store.value(name)); };
  const std::size_t n = batch.size(), t_obs = cfg.obs_len, d = cfg.hidden;
  const bool drop = opt.training && cfg.dropout > 0.0;
  if (drop && opt.rng == nullptr) fail("bad_input", "forward: training with dropout needs an rng");
  StateTransform dropout;
  if (drop) {
    dropout = [&](NodeId h) { return g.mul(h, g.input(dropout_mask<Real>(g.shape(h), cfg.dropout, *opt.rng))); };
  }
  ForwardResult out;

  const NodeId emb_w = P("traj.emb.W"), emb_b = P("traj.emb.b");
  std::vector<NodeId> traj_in;
  for (std::size_t t = 0; t < t_obs; ++t) {
    traj_in.push_back(embed_trajectory_point(g, g.input(batch.traj[t]), emb_w, emb_b));
  }

  std::vector<std::vector<NodeId>> channels;
  std::vector<NodeId> maps0, maps1;
  if (!cfg.coords_only) {
    auto zeros = [&]() { return std::vector<NodeId>(t_obs, g.input(Tensor<Real>({n, d}))); };
    if (cfg.ablation.no_behavior) {
      channels.push_back(zeros());
      channels.push_back(zeros());
    } else {
      std::vector<NodeId> app, kp;
      const NodeId kw = P("kp.W"), kb = P("kp.b");
      for (std::size_t t = 0; t < t_obs; ++t) {
        app.push_back(g.input(batch.appearance[t]));
        kp.push_back(g.add_bias(g.matmul(g.input(batch.keypoints[t]), kw), kb));
      }
      channels.push_back(encode_sequence(g, app, P("enc.app.W"), P("enc.app.b"), dropout).states);
      channels.push_back(encode_sequence(g, kp, P("enc.kp.W"), P("enc.kp.b"), dropout).states);
    }
    const SceneConvParams sp{P("scene.conv1.W"), P("scene.conv1.b"), P("scene.conv2.W"), P("scene.conv2.b")};
    for (const auto & mask : batch.scene_masks) {
      const auto [s0, s1] = scene_conv_features(g, g.input(mask), sp);
      maps0.push_back(s0);
      maps1.push_back(s1);
    }
    if (cfg.ablation.no_interaction) {
      channels.push_back(zeros());
      channels.push_back(zeros());
    } else {
      std::vector<NodeId> flat;
      for (NodeId m : maps1) {
        const Shape s = g.shape(m);
        flat.push_back(g.reshape(m, {s[0] * s[1], s[2]}));
      }
      const NodeId stacked = g.concat(flat, 0);
      std::vector<NodeId> scene_in, obj_in;
      const ObjectEncoderParams op{P("obj.geo.W"), P("obj.geo.b"), P("obj.type"), P("obj.none")};
      for (std::size_t t = 0; t < t_obs; ++t) {
        scene_in.push_back(g.gather(stacked, batch.pool_rows[t]));
        obj_in.push_back(pool_objects(g, batch.objects[t], op, cfg.object_pooling == ObjectPooling::sum));
      }
      channels.push_back(encode_sequence(g, scene_in, P("enc.scene.W"), P("enc.scene.b"), dropout).states);
      channels.push_back(encode_sequence(g, obj_in, P("enc.obj.W"), P("enc.obj.b"), dropout).states);
    }
  }
  const SequenceEncoding traj = encode_sequence(g, traj_in, P("enc.traj.W"), P("enc.traj.b"), dropout);
  channels.push_back(traj.states);

  const std::size_t m = channels.size();
  std::vector<NodeId> lasts;
  for (const auto & ch : channels) lasts.push_back(ch.back());
  std::optional<NodeId> ctx;
  NodeId q_all = 0;
  if (cfg.coords_only || cfg.ablation.no_focal_attention) {
    ctx = mean_last_states(g, lasts);
  } else {
    q_all = pack_q(g, channels);
  }
  const DecoderNodes dp{P("dec.W"), P("dec.b"), P("dec.out.W"), P("dec.out.b"), emb_w, emb_b};
  const bool tf = opt.teacher_forcing && batch.has_future();
  std::vector<NodeId> teacher;
  if (tf) {
    for (const auto & f : batch.future) teacher.push_back(g.input(f));
  }
  RolloutNodes r = rollout(g, dp, q_all, m, t_obs, traj.last, g.input(batch.traj.back()), cfg.pred_len,
                           tf ? &teacher : nullptr, ctx);
  out.xy = std::move(r.xy);
  out.attention = std::move(r.attention);

  const bool losses = opt.compute_loss && batch.has_future();
  std::optional<NodeId> cls_sum, reg_sum;
  if (!cfg.coords_only) {
    const NodeId last_cat = g.concat(lasts, 1);
    const bool grid_loss_on = losses && cfg.ablation.uses_grid_loss();
    for (std::size_t i = 0; i < cfg.grid_scales.size(); ++i) {
      const GridScale & scale = cfg.grid_scales[i];
      const std::size_t cells = scale.w * scale.h;
      const std::string p = grid_prefix(i);
      const GridHeadNodes hp{P(p + "scene_cls"), P(p + "state_cls"), P(p + "b_cls"),
                             P(p + "scene_reg"), P(p + "state_reg"), P(p + "b_reg")};
      std::vector<NodeId> cls_rows, reg_rows;
      for (NodeId mp : (i == 0 ? maps0 : maps1)) {
        const auto [c, rg] = grid_scene_terms(g, mp, scale, hp);
        cls_rows.push_back(c);
        reg_rows.push_back(rg);
      }
      const NodeId logits = grid_cls_logits(g, g.gather(g.concat(cls_rows, 0), batch.scene_of), last_cat, hp);
      out.grid_logits.push_back(logits);
      const NodeId reg_all = g.concat(reg_rows, 0);
      if (grid_loss_on) {
        std::vector<std::size_t> ids, rows;
        Tensor<Real> target({n, 2});
        for (std::size_t b = 0; b < n; ++b) {
          const GridTarget & gt = batch.grid[i][b];
          ids.push_back(gt.id);
          rows.push_back(batch.scene_of[b] * cells + gt.id);
          target.at(b, 0) = static_cast<Real>(gt.offset.x / cfg.coord_scale);
          target.at(b, 1) = static_cast<Real>(gt.offset.y / cfg.coord_scale);
        }
        const NodeId reg = grid_reg_at(g, g.gather(reg_all, rows), last_cat, hp);
        const NodeId lc = grid_cls_loss(g, logits, ids);
        const NodeId lr = grid_reg_loss(g, reg, g.input(std::move(target)), cfg.smooth_l1_beta);
        cls_sum = cls_sum ? g.add(*cls_sum, lc) : lc;
        reg_sum = reg_sum ? g.add(*reg_sum, lr) : lr;
      }
      if (opt.full_grid) {
        std::vector<std::size_t> rows;
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t c = 0; c < cells; ++c) rows.push_back(batch.scene_of[b] * cells + c);
        }
        const NodeId scene_part = g.reshape(g.gather(reg_all, rows), {n, cells, 2});
        const NodeId state_part = g.add_bias(g.matmul(last_cat, hp.state_reg), hp.b_reg);
        out.grid_offsets.push_back(g.add(scene_part, g.expand(state_part, 1, cells)));
      }
    }
    out.activity_logits = activity_logits(g, last_cat, P("act.W"));
    if (losses && cfg.ablation.uses_activity_loss()) {
      out.l_act = activity_loss(g, *out.activity_logits, batch.act_target, batch.act_mask, cfg.activity_mode);
    }
  }
  if (!losses) return out;

  NodeId l_xy = 0;
  for (std::size_t t = 0; t < cfg.pred_len; ++t) {
    const NodeId diff = g.sub(out.xy[t], g.input(batch.future[t]));
    const NodeId sq = g.sum_all(g.mul(diff, diff));
    l_xy = t == 0 ? sq : g.add(l_xy, sq);
  }
  out.l_xy = l_xy;
  NodeId total = l_xy;
  if (cls_sum) {
    const double inv_scales = 1.0 / static_cast<double>(cfg.grid_scales.size());
    out.l_cls = g.scale(*cls_sum, inv_scales);
    out.l_reg = g.scale(*reg_sum, inv_scales);
    total = g.add(total, g.scale(g.add(*out.l_cls, *out.l_reg), cfg.lambda));
  }
  if (out.l_act) total = g.add(total, *out.l_act);
  out.total = total;
  return out;
}

/// Inference output for one person, in pixels.
struct PersonPrediction
{
  std::vector<Point> path;
  std::vector<double> activity;                  // N_a scores; empty for coordinate-only models
  std::vector<std::vector<double>> grid_logits;  // per scale, row-major
  std::vector<std::vector<Point>> grid_offsets;  // per scale, pixels
  std::optional<Point> destination;
  std::size_t destination_scale = 0;
  std::size_t destination_block = 0;
  std::vector<AttentionState<double>> attention;
};

struct PredictOptions
{
  std::size_t batch_size = 64;
  bool details = false;   // grid offsets and attention
  std::size_t threads = 1;  // batches are spread over this many workers
};

template <typename Real>
std::vector<PersonPrediction> predict_chunk(const ParamStore<Real> & store, const ModelConfig & cfg, const Dataset & ds,
                                            std::span<const std::size_t> chunk, const PredictOptions & po)
{
  std::vector<PersonPrediction> preds;
  const Batch<Real> batch = make_batch<Real>(ds, chunk, cfg);
  Graph<Real> g;
  ForwardOptions fo;
  fo.compute_loss = false;
  fo.full_grid = !cfg.coords_only;
  const ForwardResult fr = forward(g, store, cfg, batch, fo);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    PersonPrediction p;
    for (NodeId xy : fr.xy) {
      const auto & v = g.value(xy);
      p.path.push_back({batch.anchor[b].x + static_cast<double>(v.at(b, 0)) * cfg.coord_scale,
                        batch.anchor[b].y + static_cast<double>(v.at(b, 1)) * cfg.coord_scale});
    }
    if (fr.activity_logits) {
      const auto & z = g.value(*fr.activity_logits);
      Tensor<Real> row({kNumActivities});
      for (std::size_t j = 0; j < kNumActivities; ++j) row[j] = z.at(b, j);
      if (cfg.activity_mode == ActivityMode::softmax) {
        for (double v : cell_probabilities(row)) p.activity.push_back(v);
      } else {
        for (std::size_t j = 0; j < kNumActivities; ++j) {
          p.activity.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(row[j]))));
        }
      }
    }
    double best_prob = -1.0;
    for (std::size_t i = 0; i < fr.grid_logits.size(); ++i) {
      const auto & z = g.value(fr.grid_logits[i]);
      const std::size_t cells = z.dim(1);
      Tensor<Real> row({cells});
      for (std::size_t c = 0; c < cells; ++c) row[c] = z.at(b, c);
      std::vector<double> logits(row.raw().begin(), row.raw().end());
      const auto probs = cell_probabilities(row);
      const auto top = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
      const auto & off = g.value(fr.grid_offsets[i]);
      std::vector<Point> offsets;
      for (std::size_t c = 0; c < cells; ++c) {
        offsets.push_back({static_cast<double>(off[(b * cells + c) * 2]) * cfg.coord_scale,
                           static_cast<double>(off[(b * cells + c) * 2 + 1]) * cfg.coord_scale});
      }
      if (probs[top] > best_prob) {
        best_prob = probs[top];
        const ManhattanGrid & grid = batch.grids_of[i * batch.size() + b];
        p.destination = grid_decode(grid, top, offsets[top]);
        p.destination_scale = i;
        p.destination_block = top;
      }
      p.grid_logits.push_back(std::move(logits));
      if (po.details) p.grid_offsets.push_back(std::move(offsets));
    }
    if (po.details) {
      for (const auto & a : fr.attention) {
        const auto st = read_attention(g, a, b);
        p.attention.push_back({st.s.template cast<double>(), st.a.template cast<double>(),
                               st.b.template cast<double>(), st.q.template cast<double>()});
      }
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

/// Autoregressive, dropout-free predictions for the given samples, in input order.
template <typename Real>
std::vector<PersonPrediction> predict(const ParamStore<Real> & store, const ModelConfig & cfg, const Dataset & ds,
                                      std::span<const std::size_t> indices, const PredictOptions & po = {})
{
  const std::size_t bs = std::max<std::size_t>(1, po.batch_size);
  std::vector<std::span<const std::size_t>> chunks;
  for (std::size_t start = 0; start < indices.size(); start += bs) {
    chunks.push_back(indices.subspan(start, std::min(bs, indices.size() - start)));
  }
  std::vector<std::vector<PersonPrediction>> parts(chunks.size());
  const std::size_t workers = std::clamp<std::size_t>(po.threads, 1, std::max<std::size_t>(1, chunks.size()));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks.size(); ++c) parts[c] = predict_chunk(store, cfg, ds, chunks[c], po);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (std::size_t c = w; c < chunks.size(); c += workers) parts[c] = predict_chunk(store, cfg, ds, chunks[c], po);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto & t : pool) t.join();
    for (const auto & e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<PersonPrediction> preds;
  for (auto & p : parts) {
    for (auto & x : p) preds.push_back(std::move(x));
  }
  return preds;
}

}  // namespace trajact

#endif  // TRAJACT__MODEL__MODEL_HPP_
