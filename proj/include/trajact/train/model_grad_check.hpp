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

#ifndef TRAJACT__TRAIN__MODEL_GRAD_CHECK_HPP_
#define TRAJACT__TRAIN__MODEL_GRAD_CHECK_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "trajact/autodiff/grad_check.hpp"
#include "trajact/model/model.hpp"
#include "trajact/synth.hpp"

namespace trajact
{

/// Shrinks a model config to a size where every parameter entry can be checked numerically.
inline ModelConfig micro_model_config(ModelConfig cfg)
{
  cfg.hidden = 4;
  cfg.embed = 3;
  cfg.scene_channels = 2;
  cfg.appearance_dim = 4;
  cfg.mask_h = 8;
  cfg.mask_w = 12;
  cfg.grid_scales = {{4, 3}, {3, 2}};
  return cfg;
}

inline SynthConfig micro_synth_config(const ModelConfig & cfg, std::uint64_t seed)
{
  SynthConfig sc;
  sc.seed = seed;
  sc.num_scenes = 1;
  sc.num_agents = 6;
  sc.mask_h = cfg.mask_h;
  sc.mask_w = cfg.mask_w;
  sc.obs_len = cfg.obs_len;
  sc.pred_len = cfg.pred_len;
  sc.appearance_dim = cfg.appearance_dim;
  sc.objects_per_scene = 2;
  return sc;
}

/**
 * @brief Central-difference check of the full multi-task loss on a 2-person micro-batch.
 *
 * Dropout masks are redrawn from the same seed on every evaluation, so the loss stays a
 * deterministic function of the parameters.
 */
inline GradCheckReport check_model_gradients(const ModelConfig & cfg, std::uint64_t seed,
                                             const GradCheckOptions & opt = {})
{
  const Dataset ds = synthesize(micro_synth_config(cfg, seed));
  if (ds.samples.size() < 2) fail("bad_input", "micro dataset has fewer than two samples");
  std::vector<std::size_t> idx{0, 1};
  for (std::size_t i = 1; i < ds.samples.size(); ++i) {
    if (ds.samples[i].future_activity_ids != ds.samples[0].future_activity_ids) {
      idx[1] = i;
      break;
    }
  }
  ParamStore<double> store = init_params<double>(cfg, seed);
  // Nonzero biases so no gradient path is trivially zero.
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto & [name, e] : store.entries()) {
    if (!e.decay) {
      for (auto & v : e.value.raw()) v += u(rng);
    }
  }
  const Batch<double> batch = make_batch<double>(ds, idx, cfg);
  const LossBuilder build = [&](Graph<double> & g, const ParamStore<double> & s) {
    std::mt19937_64 drop_rng(seed + 2);
    ForwardOptions fo;
    fo.training = true;
    fo.teacher_forcing = cfg.teacher_forcing;
    fo.rng = &drop_rng;
    return *forward(g, s, cfg, batch, fo).total;
  };
  return grad_check(build, store, opt);
}

}  // namespace trajact

#endif  // TRAJACT__TRAIN__MODEL_GRAD_CHECK_HPP_
