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

#ifndef TRAJACT__MODEL__CONFIG_HPP_
#define TRAJACT__MODEL__CONFIG_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "trajact/error.hpp"

namespace trajact
{

enum class ActivityMode { softmax, multilabel };
enum class ObjectPooling { mean, sum };

/// Switches that reproduce the ablation rows: channel removal, attention removal, loss removal.
struct AblationFlags
{
  bool no_behavior = false;         // zero appearance and keypoint channels
  bool no_interaction = false;      // zero person-scene and person-object channels
  bool no_focal_attention = false;  // decoder context = mean of encoder last states
  bool no_act_label = false;        // drop L_act
  bool no_act_location = false;     // drop grid losses
  bool no_multitask = false;        // drop both

  bool uses_activity_loss() const { return !no_act_label && !no_multitask; }
  bool uses_grid_loss() const { return !no_act_location && !no_multitask; }

  std::string label() const
  {
    std::string s;
    auto add = [&](bool on, const char * name) {
      if (!on) return;
      if (!s.empty()) s += '+';
      s += name;
    };
    add(no_behavior, "no_behavior");
    add(no_interaction, "no_interaction");
    add(no_focal_attention, "no_focal_attention");
    add(no_act_label, "no_act_label");
    add(no_act_location, "no_act_location");
    add(no_multitask, "no_multitask");
    return s.empty() ? "full" : s;
  }
};

struct GridScale
{
  std::size_t w = 32;
  std::size_t h = 18;
};

struct ModelConfig
{
  std::size_t hidden = 256;  // d
  std::size_t embed = 128;   // d_e
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t appearance_dim = 256;
  std::size_t scene_channels = 64;
  std::size_t mask_h = 36;
  std::size_t mask_w = 64;
  std::vector<GridScale> grid_scales{{32, 18}, {16, 9}};
  double dropout = 0.3;
  double lambda = 0.1;
  double smooth_l1_beta = 1.0;
  // Model-space coordinates are (xy - last observed xy) / coord_scale.
  double coord_scale = 100.0;
  ActivityMode activity_mode = ActivityMode::softmax;
  ObjectPooling object_pooling = ObjectPooling::mean;
  bool teacher_forcing = true;
  // Coordinate-only encoder-decoder: trajectory channel only, no attention, no heads.
  bool coords_only = false;
  AblationFlags ablation;

  std::size_t num_channels() const { return coords_only ? 1 : 5; }

  void validate() const
  {
    if (hidden == 0 || embed == 0 || obs_len == 0 || pred_len == 0 || scene_channels == 0 ||
        mask_h == 0 || mask_w == 0) {
      fail("bad_config", "model sizes must be positive");
    }
    if (dropout < 0.0 || dropout >= 1.0) fail("bad_config", "dropout must be in [0,1)");
    if (lambda < 0.0 || coord_scale <= 0.0 || smooth_l1_beta <= 0.0) {
      fail("bad_config", "lambda, coord_scale and smooth_l1_beta must be positive");
    }
    if (grid_scales.empty()) fail("bad_config", "at least one grid scale is required");
    for (const auto & g : grid_scales) {
      if (g.w == 0 || g.h == 0) fail("bad_config", "grid scale extents must be positive");
    }
  }
};

}  // namespace trajact

#endif  // TRAJACT__MODEL__CONFIG_HPP_
