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

#ifndef TRAJACT__AUTODIFF__GRAD_CHECK_HPP_
#define TRAJACT__AUTODIFF__GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "trajact/autodiff/graph.hpp"
#include "trajact/autodiff/param_store.hpp"

namespace trajact
{

struct GradCheckEntry
{
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckReport
{
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckOptions
{
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so near-zero gradients are judged absolutely.
  double floor = 1e-3;
  // 0 checks every element; otherwise at most this many evenly strided elements per entry.
  std::size_t max_per_entry = 0;
};

/// Builds a scalar loss from the store. Must be deterministic.
using LossBuilder = std::function<NodeId(Graph<double> &, const ParamStore<double> &)>;

inline double relative_error(double analytic, double numeric, double floor)
{
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/**
 * @brief Compares backward() against central differences (f(x+h) - f(x-h)) / 2h.
 *
 * An entry passes when its max relative error is strictly below the tolerance,
 * so tolerance 0 fails whenever truncation error is present.
 */
inline GradCheckReport grad_check(const LossBuilder & build, ParamStore<double> & store,
                                  const GradCheckOptions & opt = {})
{
  auto eval = [&]() {
    Graph<double> g;
    const NodeId loss = build(g, store);
    return g.value(loss).item();
  };

  Graph<double> g;
  const NodeId loss = build(g, store);
  const double base = g.value(loss).item();
  const double again = eval();
  if (base != again) {
    fail("nondeterministic", "loss builder is not deterministic: ", base, " vs ", again);
  }
  const auto grads = g.backward(loss);

  GradCheckReport report;
  for (auto & [name, entry] : store.entries()) {
    GradCheckEntry res;
    res.name = name;
    auto & values = entry.value.raw();
    const auto git = grads.find(name);
    std::size_t stride = 1;
    if (opt.max_per_entry > 0 && values.size() > opt.max_per_entry) {
      stride = (values.size() + opt.max_per_entry - 1) / opt.max_per_entry;
    }
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const double analytic = git == grads.end() ? 0.0 : git->second[i];
      const double orig = values[i];
      values[i] = orig + opt.step;
      const double fp = eval();
      values[i] = orig - opt.step;
      const double fm = eval();
      values[i] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.step);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, numeric, opt.floor));
      ++res.checked;
    }
    res.pass = res.max_rel_error < opt.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, res.max_rel_error);
    report.pass = report.pass && res.pass;
    report.entries.push_back(std::move(res));
  }
  return report;
}

}  // namespace trajact

#endif  // TRAJACT__AUTODIFF__GRAD_CHECK_HPP_
