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

#ifndef TRAJACT__AUTODIFF__OPTIM_HPP_
#define TRAJACT__AUTODIFF__OPTIM_HPP_

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "trajact/autodiff/param_store.hpp"
#include "trajact/autodiff/tensor.hpp"
#include "trajact/error.hpp"

namespace trajact
{

template <typename Real>
using GradMap = std::map<std::string, Tensor<Real>>;

struct AdadeltaConfig
{
  double lr = 0.1;
  double rho = 0.95;
  double eps = 1e-6;
  double weight_decay = 1e-4;
};

/**
 * @brief One Adadelta step, applied in place.
 *
 * Weight decay is folded into the gradient (g += wd * theta) for entries whose
 * `decay` flag is set. The squared-update accumulator tracks the unscaled
 * update, and the learning rate multiplies the update only when applied, so a
 * constant gradient yields a slowly growing step.
 */
template <typename Real>
void adadelta_step(ParamStore<Real> & store, const GradMap<Real> & grads, const AdadeltaConfig & cfg)
{
  for (const auto & [name, g] : grads) {
    for (Real v : g.data()) {
      if (std::isnan(v)) fail("nan_gradient", "NaN gradient for parameter '", name, "'");
    }
    if (g.shape() != store.value(name).shape()) {
      fail("shape_mismatch", "gradient for '", name, "' has shape ", shape_str(g.shape()),
           ", parameter has ", shape_str(store.value(name).shape()));
    }
  }
  const Real rho = static_cast<Real>(cfg.rho);
  const Real eps = static_cast<Real>(cfg.eps);
  const Real lr = static_cast<Real>(cfg.lr);
  for (const auto & [name, g] : grads) {
    auto & e = store.entry(name);
    const Real wd = e.decay ? static_cast<Real>(cfg.weight_decay) : Real(0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real gi = g[i] + wd * e.value[i];
      e.acc_grad[i] = rho * e.acc_grad[i] + (Real(1) - rho) * gi * gi;
      const Real update = std::sqrt(e.acc_update[i] + eps) / std::sqrt(e.acc_grad[i] + eps) * gi;
      e.acc_update[i] = rho * e.acc_update[i] + (Real(1) - rho) * update * update;
      e.value[i] -= lr * update;
    }
  }
}

template <typename Real>
double global_norm(const GradMap<Real> & grads)
{
  double sq = 0.0;
  for (const auto & [name, g] : grads) {
    for (Real v : g.data()) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sq);
}

/// Rescales all gradients so their joint L2 norm is at most max_norm. Returns the pre-clip norm.
template <typename Real>
double clip_global_norm(GradMap<Real> & grads, double max_norm)
{
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const Real s = static_cast<Real>(max_norm / norm);
    for (auto & [name, g] : grads) {
      for (auto & v : g.raw()) v *= s;
    }
  }
  return norm;
}

/// Inverted dropout mask: entries are 0 or 1/(1-rate). Evaluation mode returns ones.
template <typename Real>
Tensor<Real> dropout_mask(const Shape & shape, double rate, std::mt19937_64 & rng, bool training = true)
{
  if (rate < 0.0 || rate >= 1.0) fail("bad_config", "dropout rate must be in [0,1), got ", rate);
  Tensor<Real> mask(shape, Real(1));
  if (!training || rate == 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rate);
  const Real scale = static_cast<Real>(1.0 / (1.0 - rate));
  for (auto & v : mask.raw()) v = keep(rng) ? scale : Real(0);
  return mask;
}

}  // namespace trajact

#endif  // TRAJACT__AUTODIFF__OPTIM_HPP_
