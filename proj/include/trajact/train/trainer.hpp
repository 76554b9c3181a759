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

#ifndef TRAJACT__TRAIN__TRAINER_HPP_
#define TRAJACT__TRAIN__TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/autodiff/optim.hpp"
#include "trajact/autodiff/param_store.hpp"
#include "trajact/error.hpp"
#include "trajact/model/model.hpp"
#include "trajact/train/losses.hpp"
#include "trajact/train/metrics.hpp"

namespace trajact
{

struct TrainConfig
{
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double clip_norm = 10.0;
  AdadeltaConfig optimizer;
};

/// Per-epoch training losses, averaged per sample.
struct EpochLog
{
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;
  double grad_norm = 0.0;  // mean pre-clip norm
  std::size_t batches = 0;
};

inline nlohmann::json to_json(const EpochLog & e)
{
  nlohmann::json j = to_json(e.loss);
  j["epoch"] = e.epoch;
  j["grad_norm"] = e.grad_norm;
  j["batches"] = e.batches;
  return j;
}

template <typename Real>
struct TrainResult
{
  ParamStore<Real> store;
  std::vector<EpochLog> log;
};

template <typename Real>
using EpochCallback = std::function<void(const EpochLog &, const ParamStore<Real> &)>;

/// Shuffle order and dropout for epoch e depend only on (seed, e), so a resumed run matches an uninterrupted one.
inline std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  return std::mt19937_64(seq);
}

/**
 * @brief Mini-batch training with dropout, global-norm clipping, weight decay and Adadelta.
 *
 * Starts from `start` (or fresh parameters from tc.seed) and runs epochs first_epoch .. tc.epochs-1.
 */
template <typename Real>
TrainResult<Real> train(const ModelConfig & cfg, const Dataset & ds, std::span<const std::size_t> indices,
                        const TrainConfig & tc, std::optional<ParamStore<Real>> start = std::nullopt,
                        std::size_t first_epoch = 0, const EpochCallback<Real> & on_epoch = {})
{
  cfg.validate();
  if (indices.empty()) fail("empty_dataset", "no training samples");
  if (tc.batch_size == 0) fail("bad_config", "batch_size must be positive");
  TrainResult<Real> res{start ? std::move(*start) : init_params<Real>(cfg, tc.seed), {}};
  std::vector<std::size_t> order(indices.begin(), indices.end());
  for (std::size_t epoch = first_epoch; epoch < tc.epochs; ++epoch) {
    std::mt19937_64 rng = epoch_rng(tc.seed, epoch);
    std::sort(order.begin(), order.end());
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch + 1;
    double xy = 0.0, cls = 0.0, reg = 0.0, act = 0.0, norm = 0.0;
    for (std::size_t start_i = 0; start_i < order.size(); start_i += tc.batch_size) {
      const std::size_t bi = log.batches++;
      const auto chunk = std::span<const std::size_t>(order).subspan(
        start_i, std::min(tc.batch_size, order.size() - start_i));
      const Batch<Real> batch = make_batch<Real>(ds, chunk, cfg);
      if (!batch.has_future()) fail("bad_input", "training samples need ", cfg.pred_len, " future points");
      Graph<Real> g;
      ForwardOptions fo;
      fo.training = true;
      fo.teacher_forcing = cfg.teacher_forcing;
      fo.rng = &rng;
      const ForwardResult fr = forward(g, res.store, cfg, batch, fo);
      const double total = static_cast<double>(g.value(*fr.total).item());
      if (!std::isfinite(total)) {
        fail("nan_loss", "epoch ", epoch + 1, " batch ", bi + 1, ": loss is ", total);
      }
      auto value = [&](const std::optional<NodeId> & n) { return n ? static_cast<double>(g.value(*n).item()) : 0.0; };
      xy += value(fr.l_xy);
      cls += value(fr.l_cls);
      reg += value(fr.l_reg);
      act += value(fr.l_act);
      auto grads = g.backward(*fr.total);
      norm += clip_global_norm(grads, tc.clip_norm);
      try {
        adadelta_step(res.store, grads, tc.optimizer);
      } catch (const Error & e) {
        fail(e.code(), "epoch ", epoch + 1, " batch ", bi + 1, ": ", e.what());
      }
    }
    const double n = static_cast<double>(order.size());
    log.loss = total_loss(xy / n, cls / n, reg / n, act / n, cfg.lambda, cfg.ablation);
    log.grad_norm = norm / static_cast<double>(log.batches);
    res.log.push_back(log);
    if (on_epoch) on_epoch(log, res.store);
  }
  return res;
}

/// Model outputs for the given samples as a best-of-k candidate.
template <typename Real>
CandidateSet model_candidates(const ParamStore<Real> & store, const ModelConfig & cfg, const Dataset & ds,
                              std::span<const std::size_t> indices, std::size_t batch_size = 64,
                              std::size_t threads = 1)
{
  PredictOptions po;
  po.batch_size = batch_size;
  po.threads = threads;
  CandidateSet c;
  for (auto & p : predict(store, cfg, ds, indices, po)) {
    c.paths.push_back(std::move(p.path));
    if (!p.activity.empty()) c.activity.push_back(std::move(p.activity));
  }
  return c;
}

inline std::vector<const PersonSample *> sample_ptrs(const Dataset & ds, std::span<const std::size_t> indices)
{
  std::vector<const PersonSample *> out;
  for (std::size_t i : indices) out.push_back(&ds.samples.at(i));
  return out;
}

template <typename Real>
EvalReport evaluate_model(const ParamStore<Real> & store, const ModelConfig & cfg, const Dataset & ds,
                          std::span<const std::size_t> indices, std::size_t batch_size = 64,
                          std::size_t threads = 1)
{
  const CandidateSet c = model_candidates(store, cfg, ds, indices, batch_size, threads);
  return evaluate(c.paths, sample_ptrs(ds, indices), c.activity);
}

}  // namespace trajact

#endif  // TRAJACT__TRAIN__TRAINER_HPP_
