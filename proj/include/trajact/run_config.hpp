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

#ifndef TRAJACT__RUN_CONFIG_HPP_
#define TRAJACT__RUN_CONFIG_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/data/dataset_io.hpp"
#include "trajact/data/ingest.hpp"
#include "trajact/error.hpp"
#include "trajact/model/config.hpp"
#include "trajact/synth.hpp"
#include "trajact/train/ablation.hpp"
#include "trajact/train/trainer.hpp"

namespace trajact
{

struct SplitConfig
{
  std::string mode = "fraction";  // "fraction" | "leave_one_scene_out"
  double test_fraction = 0.2;
  std::string held_out;
};

/// Everything a command needs; all randomness derives from `seed`.
struct RunConfig
{
  std::string dataset;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::string precision = "float";  // training/eval scalar type: "float" | "double"
  std::size_t window_stride = 1;
  std::size_t eval_batch_size = 64;
  std::size_t threads = 0;  // evaluation workers; 0 = available cores
  ModelConfig model;
  TrainConfig train;
  SplitConfig split;
  SynthConfig synth;
  std::vector<std::string> ablate_variants{"full", "no_behavior", "no_interaction", "no_focal_attention",
                                           "no_act_label", "no_act_location", "no_multitask"};
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3};
};

namespace detail
{
template <typename T>
void read_field(const nlohmann::json & j, const char * key, T & out)
{
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception & e) {
    fail("bad_config", "field '", key, "': ", e.what());
  }
}

inline void reject_unknown(const nlohmann::json & j, const std::vector<std::string> & known, const std::string & where)
{
  if (!j.is_object()) fail("bad_config", where.empty() ? "config" : where, " must be an object");
  for (const auto & [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      fail("bad_config", "unknown config key '", where.empty() ? k : where + "." + k, "'");
    }
  }
}

inline std::string mode_name(ActivityMode m) { return m == ActivityMode::softmax ? "softmax" : "multilabel"; }
inline std::string pooling_name(ObjectPooling p) { return p == ObjectPooling::mean ? "mean" : "sum"; }
}  // namespace detail

inline nlohmann::json to_json(const ModelConfig & m)
{
  nlohmann::json scales = nlohmann::json::array();
  for (const auto & s : m.grid_scales) scales.push_back({s.w, s.h});
  return {{"hidden", m.hidden},
          {"embed", m.embed},
          {"obs_len", m.obs_len},
          {"pred_len", m.pred_len},
          {"appearance_dim", m.appearance_dim},
          {"scene_channels", m.scene_channels},
          {"mask_h", m.mask_h},
          {"mask_w", m.mask_w},
          {"grid_scales", scales},
          {"dropout", m.dropout},
          {"lambda", m.lambda},
          {"smooth_l1_beta", m.smooth_l1_beta},
          {"coord_scale", m.coord_scale},
          {"activity_mode", detail::mode_name(m.activity_mode)},
          {"object_pooling", detail::pooling_name(m.object_pooling)},
          {"teacher_forcing", m.teacher_forcing},
          {"coords_only", m.coords_only}};
}

inline nlohmann::json to_json(const AblationFlags & f)
{
  return {{"no_behavior", f.no_behavior},       {"no_interaction", f.no_interaction},
          {"no_focal_attention", f.no_focal_attention}, {"no_act_label", f.no_act_label},
          {"no_act_location", f.no_act_location}, {"no_multitask", f.no_multitask}};
}

inline nlohmann::json to_json(const SynthConfig & s)
{
  return {{"seed", s.seed},
          {"num_scenes", s.num_scenes},
          {"num_agents", s.num_agents},
          {"frame_w", s.frame_w},
          {"frame_h", s.frame_h},
          {"mask_h", s.mask_h},
          {"mask_w", s.mask_w},
          {"obs_len", s.obs_len},
          {"pred_len", s.pred_len},
          {"timeline", s.timeline},
          {"noise", s.noise},
          {"appearance_dim", s.appearance_dim},
          {"feature_noise", s.feature_noise},
          {"keypoint_noise", s.keypoint_noise},
          {"box_w", s.box_w},
          {"box_h", s.box_h},
          {"objects_per_scene", s.objects_per_scene}};
}

inline nlohmann::json to_json(const RunConfig & c)
{
  return {{"dataset", c.dataset},
          {"output_dir", c.output_dir},
          {"seed", c.seed},
          {"precision", c.precision},
          {"window_stride", c.window_stride},
          {"eval_batch_size", c.eval_batch_size},
          {"threads", c.threads},
          {"model", to_json(c.model)},
          {"ablation", to_json(c.model.ablation)},
          {"train",
           {{"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"clip_norm", c.train.clip_norm},
            {"lr", c.train.optimizer.lr},
            {"rho", c.train.optimizer.rho},
            {"eps", c.train.optimizer.eps},
            {"weight_decay", c.train.optimizer.weight_decay}}},
          {"split", {{"mode", c.split.mode}, {"test_fraction", c.split.test_fraction}, {"held_out", c.split.held_out}}},
          {"synth", to_json(c.synth)},
          {"ablate", {{"variants", c.ablate_variants}, {"seeds", c.ablate_seeds}}}};
}

/// Reads a (possibly partial) config over the defaults. Unknown keys are errors.
inline RunConfig run_config_from_json(const nlohmann::json & j)
{
  using detail::read_field;
  RunConfig c;
  detail::reject_unknown(j, {"dataset", "output_dir", "seed", "precision", "window_stride", "eval_batch_size", "threads",
                             "model", "ablation", "train", "split", "synth", "ablate"},
                         "");
  read_field(j, "dataset", c.dataset);
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "seed", c.seed);
  read_field(j, "precision", c.precision);
  read_field(j, "window_stride", c.window_stride);
  read_field(j, "eval_batch_size", c.eval_batch_size);
  read_field(j, "threads", c.threads);
  if (j.contains("model")) {
    const auto & m = j["model"];
    detail::reject_unknown(m, {"hidden", "embed", "obs_len", "pred_len", "appearance_dim", "scene_channels", "mask_h",
                               "mask_w", "grid_scales", "dropout", "lambda", "smooth_l1_beta", "coord_scale",
                               "activity_mode", "object_pooling", "teacher_forcing", "coords_only"},
                           "model");
    auto & o = c.model;
    read_field(m, "hidden", o.hidden);
    read_field(m, "embed", o.embed);
    read_field(m, "obs_len", o.obs_len);
    read_field(m, "pred_len", o.pred_len);
    read_field(m, "appearance_dim", o.appearance_dim);
    read_field(m, "scene_channels", o.scene_channels);
    read_field(m, "mask_h", o.mask_h);
    read_field(m, "mask_w", o.mask_w);
    if (m.contains("grid_scales")) {
      std::vector<std::vector<std::size_t>> gs;
      read_field(m, "grid_scales", gs);
      o.grid_scales.clear();
      for (const auto & s : gs) {
        if (s.size() != 2) fail("bad_config", "grid_scales entries must be [w, h]");
        o.grid_scales.push_back({s[0], s[1]});
      }
    }
    read_field(m, "dropout", o.dropout);
    read_field(m, "lambda", o.lambda);
    read_field(m, "smooth_l1_beta", o.smooth_l1_beta);
    read_field(m, "coord_scale", o.coord_scale);
    std::string mode = detail::mode_name(o.activity_mode), pool = detail::pooling_name(o.object_pooling);
    read_field(m, "activity_mode", mode);
    read_field(m, "object_pooling", pool);
    if (mode != "softmax" && mode != "multilabel") fail("bad_config", "activity_mode must be softmax or multilabel");
    if (pool != "mean" && pool != "sum") fail("bad_config", "object_pooling must be mean or sum");
    o.activity_mode = mode == "softmax" ? ActivityMode::softmax : ActivityMode::multilabel;
    o.object_pooling = pool == "mean" ? ObjectPooling::mean : ObjectPooling::sum;
    read_field(m, "teacher_forcing", o.teacher_forcing);
    read_field(m, "coords_only", o.coords_only);
  }
  if (j.contains("ablation")) {
    const auto & a = j["ablation"];
    detail::reject_unknown(a, {"no_behavior", "no_interaction", "no_focal_attention", "no_act_label", "no_act_location",
                               "no_multitask"},
                           "ablation");
    auto & f = c.model.ablation;
    read_field(a, "no_behavior", f.no_behavior);
    read_field(a, "no_interaction", f.no_interaction);
    read_field(a, "no_focal_attention", f.no_focal_attention);
    read_field(a, "no_act_label", f.no_act_label);
    read_field(a, "no_act_location", f.no_act_location);
    read_field(a, "no_multitask", f.no_multitask);
  }
  if (j.contains("train")) {
    const auto & t = j["train"];
    detail::reject_unknown(t, {"epochs", "batch_size", "clip_norm", "lr", "rho", "eps", "weight_decay"}, "train");
    read_field(t, "epochs", c.train.epochs);
    read_field(t, "batch_size", c.train.batch_size);
    read_field(t, "clip_norm", c.train.clip_norm);
    read_field(t, "lr", c.train.optimizer.lr);
    read_field(t, "rho", c.train.optimizer.rho);
    read_field(t, "eps", c.train.optimizer.eps);
    read_field(t, "weight_decay", c.train.optimizer.weight_decay);
  }
  if (j.contains("split")) {
    const auto & s = j["split"];
    detail::reject_unknown(s, {"mode", "test_fraction", "held_out"}, "split");
    read_field(s, "mode", c.split.mode);
    read_field(s, "test_fraction", c.split.test_fraction);
    read_field(s, "held_out", c.split.held_out);
  }
  if (j.contains("synth")) {
    const auto & s = j["synth"];
    detail::reject_unknown(s, {"seed", "num_scenes", "num_agents", "frame_w", "frame_h", "mask_h", "mask_w", "obs_len",
                               "pred_len", "timeline", "noise", "appearance_dim", "feature_noise", "keypoint_noise",
                               "box_w", "box_h", "objects_per_scene"},
                           "synth");
    auto & o = c.synth;
    read_field(s, "seed", o.seed);
    read_field(s, "num_scenes", o.num_scenes);
    read_field(s, "num_agents", o.num_agents);
    read_field(s, "frame_w", o.frame_w);
    read_field(s, "frame_h", o.frame_h);
    read_field(s, "mask_h", o.mask_h);
    read_field(s, "mask_w", o.mask_w);
    read_field(s, "obs_len", o.obs_len);
    read_field(s, "pred_len", o.pred_len);
    read_field(s, "timeline", o.timeline);
    read_field(s, "noise", o.noise);
    read_field(s, "appearance_dim", o.appearance_dim);
    read_field(s, "feature_noise", o.feature_noise);
    read_field(s, "keypoint_noise", o.keypoint_noise);
    read_field(s, "box_w", o.box_w);
    read_field(s, "box_h", o.box_h);
    read_field(s, "objects_per_scene", o.objects_per_scene);
  }
  if (j.contains("ablate")) {
    const auto & a = j["ablate"];
    detail::reject_unknown(a, {"variants", "seeds"}, "ablate");
    read_field(a, "variants", c.ablate_variants);
    read_field(a, "seeds", c.ablate_seeds);
    for (const auto & v : c.ablate_variants) parse_ablation(v);
  }
  if (c.precision != "float" && c.precision != "double") fail("bad_config", "precision must be float or double");
  if (c.split.mode != "fraction" && c.split.mode != "leave_one_scene_out") {
    fail("bad_config", "split.mode must be fraction or leave_one_scene_out");
  }
  if (!(c.split.test_fraction >= 0.0 && c.split.test_fraction < 1.0)) {
    fail("bad_config", "split.test_fraction must be in [0, 1)");
  }
  if (c.train.batch_size == 0 || c.eval_batch_size == 0 || c.window_stride == 0) {
    fail("bad_config", "batch sizes and window_stride must be positive");
  }
  if (!(c.train.clip_norm > 0.0) || !(c.train.optimizer.lr > 0.0)) fail("bad_config", "clip_norm and lr must be positive");
  c.model.validate();
  return c;
}

/**
 * @brief Applies "a.b.c=value" to a JSON object. The value is parsed as JSON when possible,
 * otherwise taken as a string.
 */
inline void apply_override(nlohmann::json & j, const std::string & assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail("bad_config", "override '", assignment, "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json * node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail("bad_config", "override key '", key, "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = nlohmann::json::object();
    node = &(*node)[part];
    if (!node->is_object()) fail("bad_config", "override key '", key, "' descends into a non-object");
    start = dot + 1;
  }
}

inline WindowOptions window_options(const RunConfig & c)
{
  return {c.model.obs_len, c.model.pred_len, c.window_stride};
}

/// (train, test) sample indices.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset & ds, const RunConfig & c)
{
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  if (c.split.mode == "leave_one_scene_out") {
    if (ds.scenes.count(c.split.held_out) == 0) fail("unknown_scene", "held-out scene '", c.split.held_out, "' not in dataset");
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      (ds.samples[i].scene_id == c.split.held_out ? out.second : out.first).push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> order(ds.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(c.seed ^ 0x5bd1e995ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(c.split.test_fraction * static_cast<double>(order.size()));
  out.second.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.first.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  return out;
}

}  // namespace trajact

#endif  // TRAJACT__RUN_CONFIG_HPP_
