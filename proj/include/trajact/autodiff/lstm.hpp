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

#ifndef TRAJACT__AUTODIFF__LSTM_HPP_
#define TRAJACT__AUTODIFF__LSTM_HPP_

#include <random>
#include <string>
#include <utility>

#include "trajact/autodiff/graph.hpp"
#include "trajact/autodiff/param_store.hpp"

namespace trajact
{

struct LstmState
{
  NodeId h;
  NodeId c;
};

/**
 * @brief Registers "<prefix>.W" [d_in + d, 4d] and "<prefix>.b" [4d].
 *
 * Gate blocks along the 4d axis are ordered input, forget, output, candidate.
 * The forget block of the bias starts at 1.
 */
template <typename Real>
void register_lstm(ParamStore<Real> & store, const std::string & prefix, std::size_t d_in,
                   std::size_t d, std::mt19937_64 & rng)
{
  store.add(prefix + ".W", glorot_uniform<Real>({d_in + d, 4 * d}, d_in + d, 4 * d, rng));
  Tensor<Real> b({4 * d});
  for (std::size_t j = d; j < 2 * d; ++j) b[j] = Real(1);
  store.add(prefix + ".b", std::move(b), false);
}

/// One LSTM step on a batch: x [B, d_in], state [B, d] each.
template <typename Real>
LstmState lstm_cell(Graph<Real> & g, NodeId x, LstmState prev, NodeId w, NodeId b)
{
  const std::size_t d = g.shape(prev.h).back();
  const NodeId z = g.add_bias(g.matmul(g.concat({x, prev.h}, 1), w), b);
  const NodeId i = g.sigmoid(g.slice(z, 1, 0, d));
  const NodeId f = g.sigmoid(g.slice(z, 1, d, 2 * d));
  const NodeId o = g.sigmoid(g.slice(z, 1, 2 * d, 3 * d));
  const NodeId cand = g.tanh(g.slice(z, 1, 3 * d, 4 * d));
  const NodeId c = g.add(g.mul(f, prev.c), g.mul(i, cand));
  const NodeId h = g.mul(o, g.tanh(c));
  return {h, c};
}

/// Single-vector convenience form: x [d_in], h and c [d].
template <typename Real>
std::pair<Tensor<Real>, Tensor<Real>> lstm_cell(const Tensor<Real> & x, const Tensor<Real> & h_prev,
                                                const Tensor<Real> & c_prev, const Tensor<Real> & w,
                                                const Tensor<Real> & b)
{
  const std::size_t d = h_prev.size();
  if (c_prev.size() != d || w.rank() != 2 || w.dim(0) != x.size() + d || w.dim(1) != 4 * d ||
      b.size() != 4 * d) {
    fail("shape_mismatch", "lstm_cell: x ", shape_str(x.shape()), ", h ", shape_str(h_prev.shape()),
         ", W ", shape_str(w.shape()), ", b ", shape_str(b.shape()));
  }
  Graph<Real> g;
  const NodeId xi = g.input(x.reshaped({1, x.size()}));
  const LstmState prev{g.input(h_prev.reshaped({1, d})), g.input(c_prev.reshaped({1, d}))};
  const LstmState next = lstm_cell(g, xi, prev, g.input(w), g.input(b));
  return {g.value(next.h).reshaped({d}), g.value(next.c).reshaped({d})};
}

}  // namespace trajact

#endif  // TRAJACT__AUTODIFF__LSTM_HPP_
