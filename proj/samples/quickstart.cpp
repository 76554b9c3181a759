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

// Synthesizes a small dataset, trains a compact model, compares it with the
// linear and nearest-neighbor baselines, and prints one predicted path.

#include <cstdio>
#include <vector>

#include "trajact/synth.hpp"
#include "trajact/train/baselines.hpp"
#include "trajact/train/trainer.hpp"

int main()
{
  using namespace trajact;

  SynthConfig sc;
  sc.num_agents = 300;
  sc.appearance_dim = 16;
  const Dataset ds = synthesize(sc);

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) (i % 5 == 0 ? test_idx : train_idx).push_back(i);

  ModelConfig cfg;
  cfg.hidden = 32;
  cfg.embed = 16;
  cfg.scene_channels = 16;
  cfg.appearance_dim = sc.appearance_dim;

  TrainConfig tc;
  tc.epochs = 8;
  tc.batch_size = 32;
  tc.seed = 1;
  const auto trained = train<float>(cfg, ds, train_idx, tc, std::nullopt, 0,
                                    [](const EpochLog & e, const ParamStore<float> &) {
                                      std::printf("epoch %2zu  L_xy %8.4f  total %8.4f\n", e.epoch, e.loss.l_xy,
                                                  e.loss.total);
                                    });

  const EvalReport model = evaluate_model(trained.store, cfg, ds, test_idx);
  const auto tr = sample_ptrs(ds, train_idx), te = sample_ptrs(ds, test_idx);
  std::printf("model    ADE %7.2f  FDE %7.2f  mAP %.3f\n", model.ade, model.fde, model.activity_map.value_or(0.0));
  std::printf("linear   ADE %7.2f\n", linear_baseline(tr, te).ade);
  std::printf("nearest  ADE %7.2f\n", nearest_neighbor_baseline(tr, te).ade);

  const std::vector<std::size_t> one{test_idx.front()};
  const PersonPrediction p = predict(trained.store, cfg, ds, one).front();
  std::printf("sample %s:%lld\n", ds.samples[one[0]].scene_id.c_str(),
              static_cast<long long>(ds.samples[one[0]].person_id));
  for (std::size_t t = 0; t < p.path.size(); ++t) {
    const Point & gt = ds.samples[one[0]].future_xy[t];
    std::printf("  t+%-2zu pred (%7.1f, %7.1f)  true (%7.1f, %7.1f)\n", t + 1, p.path[t].x, p.path[t].y, gt.x, gt.y);
  }
  return 0;
}
