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

#ifndef TRAJACT__AUTODIFF__GRAPH_HPP_
#define TRAJACT__AUTODIFF__GRAPH_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trajact/autodiff/tensor.hpp"
#include "trajact/error.hpp"

namespace trajact
{

using NodeId = std::size_t;

enum class OpKind {
  input,
  param,
  matmul,
  add,
  sub,
  mul,
  add_bias,
  scale,
  concat,
  slice,
  reshape,
  tanh,
  sigmoid,
  softplus,
  smooth_l1,
  softmax,
  log_softmax,
  max,
  mean,
  sum,
  sum_all,
  expand,
  gather,
  segment_mean,
  conv2d,
  dot,
  batched_matvec,
  batched_weighted_sum,
};

inline std::string_view op_name(OpKind kind)
{
  switch (kind) {
    case OpKind::input: return "input";
    case OpKind::param: return "param";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::add_bias: return "add_bias";
    case OpKind::scale: return "scale";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::reshape: return "reshape";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::softplus: return "softplus";
    case OpKind::smooth_l1: return "smooth_l1";
    case OpKind::softmax: return "softmax";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::max: return "max";
    case OpKind::mean: return "mean";
    case OpKind::sum: return "sum";
    case OpKind::sum_all: return "sum_all";
    case OpKind::expand: return "expand";
    case OpKind::gather: return "gather";
    case OpKind::segment_mean: return "segment_mean";
    case OpKind::conv2d: return "conv2d";
    case OpKind::dot: return "dot";
    case OpKind::batched_matvec: return "batched_matvec";
    case OpKind::batched_weighted_sum: return "batched_weighted_sum";
  }
  return "unknown";
}

/// Per-op attributes. Only the fields relevant to the op kind are read.
struct OpAttrs
{
  std::size_t axis = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t count = 0;
  std::size_t stride = 1;
  std::size_t kernel = 1;
  std::size_t pad = 0;
  double factor = 1.0;
  Shape shape;
  std::vector<std::size_t> index;
  std::vector<std::vector<std::size_t>> segments;
};

namespace detail
{
// Splits a shape around `axis` into (outer, extent, inner) strides.
struct AxisSplit
{
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

inline AxisSplit split_axis(const Shape & shape, std::size_t axis)
{
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

inline Shape drop_axis(const Shape & shape, std::size_t axis)
{
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

template <typename Real>
Real sigmoid(Real x)
{
  if (x >= 0) {
    return Real(1) / (Real(1) + std::exp(-x));
  }
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
Real softplus(Real x)
{
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
}  // namespace detail

/**
 * @brief Append-only computation graph with reverse-mode differentiation.
 *
 * Node ids are insertion indices, so insertion order is a topological order and
 * backward simply walks the node list in reverse once.
 */
template <typename Real = double>
class Graph
{
public:
  using TensorT = Tensor<Real>;

  struct Node
  {
    OpKind kind;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    TensorT value;
    const TensorT * external = nullptr;
    std::string name;
    std::vector<std::size_t> argmax;
  };

  std::size_t size() const { return nodes_.size(); }
  const Node & node(NodeId id) const { return nodes_.at(id); }

  const TensorT & value(NodeId id) const
  {
    const Node & n = nodes_.at(id);
    return n.external ? *n.external : n.value;
  }

  const Shape & shape(NodeId id) const { return value(id).shape(); }

  NodeId input(TensorT value)
  {
    Node n{OpKind::input, {}, {}, std::move(value), nullptr, {}, {}};
    return push(std::move(n));
  }

  /// Binds a named parameter by reference. The tensor must outlive the graph.
  NodeId param(const std::string & name, const TensorT & value)
  {
    if (auto it = param_ids_.find(name); it != param_ids_.end()) {
      return it->second;
    }
    Node n{OpKind::param, {}, {}, {}, &value, name, {}};
    const NodeId id = push(std::move(n));
    param_ids_.emplace(name, id);
    return id;
  }

  NodeId forward_op(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs = {})
  {
    for (NodeId in : inputs) {
      if (in >= nodes_.size()) {
        fail("bad_node", op_name(kind), ": input node ", in, " does not exist");
      }
    }
    Node n{kind, std::move(inputs), std::move(attrs), {}, nullptr, {}, {}};
    evaluate(n);
    return push(std::move(n));
  }

  // Convenience wrappers ----------------------------------------------------

  NodeId matmul(NodeId a, NodeId b) { return forward_op(OpKind::matmul, {a, b}); }
  NodeId add(NodeId a, NodeId b) { return forward_op(OpKind::add, {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return forward_op(OpKind::sub, {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return forward_op(OpKind::mul, {a, b}); }
  NodeId add_bias(NodeId a, NodeId bias) { return forward_op(OpKind::add_bias, {a, bias}); }
  NodeId tanh(NodeId a) { return forward_op(OpKind::tanh, {a}); }
  NodeId sigmoid(NodeId a) { return forward_op(OpKind::sigmoid, {a}); }
  NodeId softplus(NodeId a) { return forward_op(OpKind::softplus, {a}); }
  NodeId sum_all(NodeId a) { return forward_op(OpKind::sum_all, {a}); }
  NodeId dot(NodeId a, NodeId b) { return forward_op(OpKind::dot, {a, b}); }

  NodeId scale(NodeId a, double factor)
  {
    OpAttrs at;
    at.factor = factor;
    return forward_op(OpKind::scale, {a}, std::move(at));
  }

  NodeId smooth_l1(NodeId a, double beta = 1.0)
  {
    OpAttrs at;
    at.factor = beta;
    return forward_op(OpKind::smooth_l1, {a}, std::move(at));
  }

  NodeId concat(std::vector<NodeId> parts, std::size_t axis)
  {
    if (parts.size() == 1) return parts.front();
    OpAttrs at;
    at.axis = axis;
    return forward_op(OpKind::concat, std::move(parts), std::move(at));
  }

  NodeId slice(NodeId a, std::size_t axis, std::size_t begin, std::size_t end)
  {
    OpAttrs at;
    at.axis = axis;
    at.begin = begin;
    at.end = end;
    return forward_op(OpKind::slice, {a}, std::move(at));
  }

  NodeId reshape(NodeId a, Shape shape)
  {
    OpAttrs at;
    at.shape = std::move(shape);
    return forward_op(OpKind::reshape, {a}, std::move(at));
  }

  NodeId softmax(NodeId a, std::size_t axis) { return axis_op(OpKind::softmax, a, axis); }
  NodeId log_softmax(NodeId a, std::size_t axis) { return axis_op(OpKind::log_softmax, a, axis); }
  NodeId max(NodeId a, std::size_t axis) { return axis_op(OpKind::max, a, axis); }
  NodeId mean(NodeId a, std::size_t axis) { return axis_op(OpKind::mean, a, axis); }
  NodeId sum(NodeId a, std::size_t axis) { return axis_op(OpKind::sum, a, axis); }

  /// Inserts a new axis at `axis` and repeats the input `count` times along it.
  NodeId expand(NodeId a, std::size_t axis, std::size_t count)
  {
    OpAttrs at;
    at.axis = axis;
    at.count = count;
    return forward_op(OpKind::expand, {a}, std::move(at));
  }

  /// Row lookup along axis 0 (embedding lookup).
  NodeId gather(NodeId table, std::vector<std::size_t> rows)
  {
    OpAttrs at;
    at.index = std::move(rows);
    return forward_op(OpKind::gather, {table}, std::move(at));
  }

  /// Output row s is the mean of input rows segments[s]; empty segments give zero rows.
  NodeId segment_mean(NodeId a, std::vector<std::vector<std::size_t>> segments)
  {
    OpAttrs at;
    at.segments = std::move(segments);
    return forward_op(OpKind::segment_mean, {a}, std::move(at));
  }

  /// Like segment_mean but sums (attrs.count == 1 selects summation).
  NodeId segment_sum(NodeId a, std::vector<std::vector<std::size_t>> segments)
  {
    OpAttrs at;
    at.segments = std::move(segments);
    at.count = 1;
    return forward_op(OpKind::segment_mean, {a}, std::move(at));
  }

  /// NHWC convolution without bias: x [H,W,Cin], w [k,k,Cin,Cout].
  NodeId conv2d(NodeId x, NodeId w, std::size_t stride, std::size_t pad)
  {
    OpAttrs at;
    at.stride = stride;
    at.pad = pad;
    at.kernel = shape(w).empty() ? 0 : shape(w)[0];
    return forward_op(OpKind::conv2d, {x, w}, std::move(at));
  }

  NodeId batched_matvec(NodeId q, NodeId h) { return forward_op(OpKind::batched_matvec, {q, h}); }
  NodeId batched_weighted_sum(NodeId w, NodeId q)
  {
    return forward_op(OpKind::batched_weighted_sum, {w, q});
  }

  // Backward ----------------------------------------------------------------

  /**
   * @brief Reverse pass from a scalar loss.
   *
   * Returns the gradient of every parameter node in the graph, keyed by name.
   * Parameters not on the loss path get zero tensors. Gradients of every node
   * remain queryable through grad() until the next backward call.
   */
  std::map<std::string, TensorT> backward(NodeId loss)
  {
    if (loss >= nodes_.size()) {
      fail("bad_node", "backward: loss node ", loss, " does not exist");
    }
    if (value(loss).size() != 1) {
      fail("shape_mismatch", "backward: loss must be scalar, got shape ",
           shape_str(value(loss).shape()));
    }
    grads_.assign(nodes_.size(), TensorT());
    has_grad_.assign(nodes_.size(), false);
    grads_[loss] = TensorT(value(loss).shape(), Real(1));
    has_grad_[loss] = true;
    for (std::size_t i = loss + 1; i-- > 0;) {
      if (!has_grad_[i]) continue;
      propagate(i);
    }
    std::map<std::string, TensorT> out;
    for (const auto & [name, id] : param_ids_) {
      out.emplace(name, has_grad_[id] ? grads_[id] : TensorT(value(id).shape()));
    }
    return out;
  }

  /// Gradient of the last backward() loss w.r.t. any node (zeros if unreached).
  TensorT grad(NodeId id) const
  {
    if (id < has_grad_.size() && has_grad_[id]) return grads_[id];
    return TensorT(value(id).shape());
  }

private:
  NodeId push(Node n)
  {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  NodeId axis_op(OpKind kind, NodeId a, std::size_t axis)
  {
    OpAttrs at;
    at.axis = axis;
    return forward_op(kind, {a}, std::move(at));
  }

  [[noreturn]] void mismatch(const Node & n, const std::string & why) const
  {
    std::ostringstream oss;
    oss << op_name(n.kind) << ": " << why << "; input shapes";
    for (NodeId in : n.inputs) oss << ' ' << shape_str(value(in).shape());
    throw Error("shape_mismatch", oss.str());
  }

  void expect_arity(const Node & n, std::size_t arity) const
  {
    if (n.inputs.size() != arity) {
      mismatch(n, "expected " + std::to_string(arity) + " inputs");
    }
  }

  void evaluate(Node & n)
  {
    switch (n.kind) {
      case OpKind::input:
      case OpKind::param:
        return;
      case OpKind::matmul: return eval_matmul(n);
      case OpKind::add:
      case OpKind::sub:
      case OpKind::mul: return eval_binary(n);
      case OpKind::add_bias: return eval_add_bias(n);
      case OpKind::scale: {
        expect_arity(n, 1);
        const TensorT & a = value(n.inputs[0]);
        n.value = TensorT(a.shape());
        const Real f = static_cast<Real>(n.attrs.factor);
        for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = f * a[i];
        return;
      }
      case OpKind::concat: return eval_concat(n);
      case OpKind::slice: return eval_slice(n);
      case OpKind::reshape: {
        expect_arity(n, 1);
        const TensorT & a = value(n.inputs[0]);
        if (shape_numel(n.attrs.shape) != a.size()) mismatch(n, "element count differs");
        n.value = a.reshaped(n.attrs.shape);
        return;
      }
      case OpKind::tanh:
      case OpKind::sigmoid:
      case OpKind::softplus:
      case OpKind::smooth_l1: return eval_unary(n);
      case OpKind::softmax:
      case OpKind::log_softmax: return eval_softmax(n);
      case OpKind::max:
      case OpKind::mean:
      case OpKind::sum: return eval_reduce(n);
      case OpKind::sum_all: {
        expect_arity(n, 1);
        const TensorT & a = value(n.inputs[0]);
        Real s = 0;
        for (Real v : a.data()) s += v;
        n.value = TensorT::scalar(s);
        return;
      }
      case OpKind::expand: return eval_expand(n);
      case OpKind::gather: return eval_gather(n);
      case OpKind::segment_mean: return eval_segment_mean(n);
      case OpKind::conv2d: return eval_conv2d(n);
      case OpKind::dot: return eval_dot(n);
      case OpKind::batched_matvec: return eval_bmv(n);
      case OpKind::batched_weighted_sum: return eval_bws(n);
    }
  }

  void eval_matmul(Node & n)
  {
    expect_arity(n, 2);
    const TensorT & a = value(n.inputs[0]);
    const TensorT & b = value(n.inputs[1]);
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) mismatch(n, "need [m,k]x[k,n]");
    const std::size_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
    n.value = TensorT({m, cols});
    Real * out = n.value.raw().data();
    const Real * pa = a.raw().data();
    const Real * pb = b.raw().data();
    for (std::size_t i = 0; i < m; ++i) {
      Real * row = out + i * cols;
      for (std::size_t p = 0; p < k; ++p) {
        const Real av = pa[i * k + p];
        if (av == Real(0)) continue;
        const Real * brow = pb + p * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += av * brow[j];
      }
    }
  }

  void eval_binary(Node & n)
  {
    expect_arity(n, 2);
    const TensorT & a = value(n.inputs[0]);
    const TensorT & b = value(n.inputs[1]);
    if (a.shape() != b.shape()) mismatch(n, "shapes must match");
    n.value = TensorT(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
      switch (n.kind) {
        case OpKind::add: n.value[i] = a[i] + b[i]; break;
        case OpKind::sub: n.value[i] = a[i] - b[i]; break;
        default: n.value[i] = a[i] * b[i]; break;
      }
    }
  }

  void eval_add_bias(Node & n)
  {
    expect_arity(n, 2);
    const TensorT & a = value(n.inputs[0]);
    const TensorT & b = value(n.inputs[1]);
    if (b.rank() != 1 || a.shape().back() != b.dim(0)) mismatch(n, "bias must match last axis");
    n.value = TensorT(a.shape());
    const std::size_t w = b.dim(0);
    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] + b[i % w];
  }

  void eval_concat(Node & n)
  {
    if (n.inputs.empty()) mismatch(n, "no inputs");
    const Shape & first = value(n.inputs[0]).shape();
    const std::size_t axis = n.attrs.axis;
    if (axis >= first.size()) mismatch(n, "axis out of range");
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (NodeId in : n.inputs) {
      const Shape & s = value(in).shape();
      if (s.size() != first.size()) mismatch(n, "ranks differ");
      for (std::size_t d = 0; d < s.size(); ++d) {
        if (d != axis && s[d] != first[d]) mismatch(n, "non-concat extents differ");
      }
      out_shape[axis] += s[axis];
    }
    n.value = TensorT(out_shape);
    const auto split = detail::split_axis(out_shape, axis);
    std::size_t offset = 0;
    for (NodeId in : n.inputs) {
      const TensorT & t = value(in);
      const std::size_t len = t.dim(axis) * split.inner;
      for (std::size_t o = 0; o < split.outer; ++o) {
        std::copy_n(t.raw().data() + o * len, len,
                    n.value.raw().data() + o * split.extent * split.inner + offset);
      }
      offset += len;
    }
  }

  void eval_slice(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    const auto & at = n.attrs;
    if (at.axis >= a.rank() || at.begin >= at.end || at.end > a.dim(at.axis)) {
      mismatch(n, "slice range out of bounds");
    }
    Shape s = a.shape();
    s[at.axis] = at.end - at.begin;
    n.value = TensorT(s);
    const auto split = detail::split_axis(a.shape(), at.axis);
    const std::size_t len = (at.end - at.begin) * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(a.raw().data() + o * split.extent * split.inner + at.begin * split.inner, len,
                  n.value.raw().data() + o * len);
    }
  }

  void eval_unary(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    n.value = TensorT(a.shape());
    const Real beta = static_cast<Real>(n.attrs.factor);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Real x = a[i];
      switch (n.kind) {
        case OpKind::tanh: n.value[i] = std::tanh(x); break;
        case OpKind::sigmoid: n.value[i] = detail::sigmoid(x); break;
        case OpKind::softplus: n.value[i] = detail::softplus(x); break;
        default:
          n.value[i] = std::abs(x) < beta ? Real(0.5) * x * x / beta : std::abs(x) - Real(0.5) * beta;
          break;
      }
    }
  }

  void eval_softmax(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    if (n.attrs.axis >= a.rank()) mismatch(n, "axis out of range");
    const auto s = detail::split_axis(a.shape(), n.attrs.axis);
    n.value = TensorT(a.shape());
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.extent * s.inner + in;
        Real mx = -std::numeric_limits<Real>::infinity();
        for (std::size_t k = 0; k < s.extent; ++k) mx = std::max(mx, a[base + k * s.inner]);
        Real z = 0;
        for (std::size_t k = 0; k < s.extent; ++k) z += std::exp(a[base + k * s.inner] - mx);
        const Real log_z = std::log(z);
        for (std::size_t k = 0; k < s.extent; ++k) {
          const Real shifted = a[base + k * s.inner] - mx;
          n.value[base + k * s.inner] =
            n.kind == OpKind::softmax ? std::exp(shifted) / z : shifted - log_z;
        }
      }
    }
  }

  void eval_reduce(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    if (n.attrs.axis >= a.rank()) mismatch(n, "axis out of range");
    const auto s = detail::split_axis(a.shape(), n.attrs.axis);
    n.value = TensorT(detail::drop_axis(a.shape(), n.attrs.axis));
    if (n.kind == OpKind::max) n.argmax.assign(s.outer * s.inner, 0);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.extent * s.inner + in;
        const std::size_t out = o * s.inner + in;
        if (n.kind == OpKind::max) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < s.extent; ++k) {
            if (a[base + k * s.inner] > a[base + best * s.inner]) best = k;
          }
          n.argmax[out] = best;
          n.value[out] = a[base + best * s.inner];
        } else {
          Real acc = 0;
          for (std::size_t k = 0; k < s.extent; ++k) acc += a[base + k * s.inner];
          n.value[out] = n.kind == OpKind::mean ? acc / static_cast<Real>(s.extent) : acc;
        }
      }
    }
  }

  void eval_expand(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    const auto & at = n.attrs;
    if (at.axis > a.rank() || at.count == 0) mismatch(n, "bad expand axis/count");
    Shape s = a.shape();
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(at.axis), at.count);
    n.value = TensorT(s);
    const auto split = detail::split_axis(s, at.axis);
    for (std::size_t o = 0; o < split.outer; ++o) {
      for (std::size_t c = 0; c < at.count; ++c) {
        std::copy_n(a.raw().data() + o * split.inner, split.inner,
                    n.value.raw().data() + (o * at.count + c) * split.inner);
      }
    }
  }

  void eval_gather(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    const auto & idx = n.attrs.index;
    if (idx.empty()) mismatch(n, "empty index list");
    const std::size_t row = a.size() / a.dim(0);
    Shape s = a.shape();
    s[0] = idx.size();
    n.value = TensorT(s);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= a.dim(0)) mismatch(n, "row index " + std::to_string(idx[r]) + " out of range");
      std::copy_n(a.raw().data() + idx[r] * row, row, n.value.raw().data() + r * row);
    }
  }

  void eval_segment_mean(Node & n)
  {
    expect_arity(n, 1);
    const TensorT & a = value(n.inputs[0]);
    const auto & segs = n.attrs.segments;
    if (a.rank() != 2 || segs.empty()) mismatch(n, "need [R,c] input and segments");
    const std::size_t c = a.dim(1);
    n.value = TensorT({segs.size(), c});
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (segs[s].empty()) continue;
      const Real inv = n.attrs.count == 1 ? Real(1) : Real(1) / static_cast<Real>(segs[s].size());
      for (std::size_t r : segs[s]) {
        if (r >= a.dim(0)) mismatch(n, "segment row out of range");
        for (std::size_t j = 0; j < c; ++j) n.value.at(s, j) += inv * a.at(r, j);
      }
    }
  }

  struct ConvGeom
  {
    std::size_t h, w, cin, k, cout, stride, pad, ho, wo;
  };

  ConvGeom conv_geom(const Node & n) const
  {
    const TensorT & x = value(n.inputs[0]);
    const TensorT & w = value(n.inputs[1]);
    if (x.rank() != 3 || w.rank() != 4 || w.dim(0) != w.dim(1) || w.dim(2) != x.dim(2)) {
      mismatch(n, "need x[H,W,Cin] and w[k,k,Cin,Cout]");
    }
    ConvGeom g{x.dim(0), x.dim(1), x.dim(2), w.dim(0), w.dim(3), n.attrs.stride, n.attrs.pad, 0, 0};
    if (g.stride == 0 || g.h + 2 * g.pad < g.k || g.w + 2 * g.pad < g.k) {
      mismatch(n, "kernel larger than padded input");
    }
    g.ho = (g.h + 2 * g.pad - g.k) / g.stride + 1;
    g.wo = (g.w + 2 * g.pad - g.k) / g.stride + 1;
    return g;
  }

  void eval_conv2d(Node & n)
  {
    expect_arity(n, 2);
    const ConvGeom g = conv_geom(n);
    const TensorT & x = value(n.inputs[0]);
    const TensorT & w = value(n.inputs[1]);
    n.value = TensorT({g.ho, g.wo, g.cout});
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        Real * out = n.value.raw().data() + (oy * g.wo + ox) * g.cout;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const Real * in = x.raw().data() + (static_cast<std::size_t>(iy) * g.w +
                                                static_cast<std::size_t>(ix)) * g.cin;
            const Real * wk = w.raw().data() + (ky * g.k + kx) * g.cin * g.cout;
            for (std::size_t ci = 0; ci < g.cin; ++ci) {
              const Real xv = in[ci];
              if (xv == Real(0)) continue;
              const Real * wrow = wk + ci * g.cout;
              for (std::size_t co = 0; co < g.cout; ++co) out[co] += xv * wrow[co];
            }
          }
        }
      }
    }
  }

  void eval_dot(Node & n)
  {
    expect_arity(n, 2);
    const TensorT & a = value(n.inputs[0]);
    const TensorT & b = value(n.inputs[1]);
    if (a.shape() != b.shape()) mismatch(n, "shapes must match");
    const std::size_t d = a.shape().back();
    n.value = TensorT(detail::drop_axis(a.shape(), a.rank() - 1));
    for (std::size_t r = 0; r < a.size() / d; ++r) {
      Real acc = 0;
      for (std::size_t j = 0; j < d; ++j) acc += a[r * d + j] * b[r * d + j];
      n.value[r] = acc;
    }
  }

  void eval_bmv(Node & n)
  {
    expect_arity(n, 2);
    const TensorT & q = value(n.inputs[0]);
    const TensorT & h = value(n.inputs[1]);
    if (q.rank() != 3 || h.rank() != 2 || q.dim(0) != h.dim(0) || q.dim(2) != h.dim(1)) {
      mismatch(n, "need Q[B,N,d] and h[B,d]");
    }
    const std::size_t bsz = q.dim(0), cnt = q.dim(1), d = q.dim(2);
    n.value = TensorT({bsz, cnt});
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t i = 0; i < cnt; ++i) {
        Real acc = 0;
        const Real * qr = q.raw().data() + (b * cnt + i) * d;
        const Real * hr = h.raw().data() + b * d;
        for (std::size_t j = 0; j < d; ++j) acc += qr[j] * hr[j];
        n.value.at(b, i) = acc;
      }
    }
  }

  void eval_bws(Node & n)
  {
    expect_arity(n, 2);
    const TensorT & w = value(n.inputs[0]);
    const TensorT & q = value(n.inputs[1]);
    if (q.rank() != 3 || w.rank() != 2 || q.dim(0) != w.dim(0) || q.dim(1) != w.dim(1)) {
      mismatch(n, "need w[B,N] and Q[B,N,d]");
    }
    const std::size_t bsz = q.dim(0), cnt = q.dim(1), d = q.dim(2);
    n.value = TensorT({bsz, d});
    for (std::size_t b = 0; b < bsz; ++b) {
      Real * out = n.value.raw().data() + b * d;
      for (std::size_t i = 0; i < cnt; ++i) {
        const Real wv = w.at(b, i);
        const Real * qr = q.raw().data() + (b * cnt + i) * d;
        for (std::size_t j = 0; j < d; ++j) out[j] += wv * qr[j];
      }
    }
  }

  // Gradient plumbing -------------------------------------------------------

  TensorT & grad_slot(NodeId id)
  {
    if (!has_grad_[id]) {
      grads_[id] = TensorT(value(id).shape());
      has_grad_[id] = true;
    }
    return grads_[id];
  }

  void propagate(NodeId id)
  {
    const Node & n = nodes_[id];
    const TensorT & g = grads_[id];
    const TensorT & y = value(id);
    switch (n.kind) {
      case OpKind::input:
      case OpKind::param:
        return;
      case OpKind::matmul: {
        const TensorT & a = value(n.inputs[0]);
        const TensorT & b = value(n.inputs[1]);
        const std::size_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
        TensorT & ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            Real acc = 0;
            for (std::size_t j = 0; j < cols; ++j) acc += g[i * cols + j] * b[p * cols + j];
            ga[i * k + p] += acc;
          }
        }
        TensorT & gb = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const Real av = a[i * k + p];
            if (av == Real(0)) continue;
            for (std::size_t j = 0; j < cols; ++j) gb[p * cols + j] += av * g[i * cols + j];
          }
        }
        return;
      }
      case OpKind::add:
      case OpKind::sub:
      case OpKind::mul: {
        const NodeId ia = n.inputs[0], ib = n.inputs[1];
        if (n.kind == OpKind::mul) {
          const TensorT & a = value(ia);
          const TensorT & b = value(ib);
          {
            TensorT & ga = grad_slot(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
          }
          TensorT & gb = grad_slot(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        } else {
          {
            TensorT & ga = grad_slot(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
          }
          TensorT & gb = grad_slot(ib);
          const Real sign = n.kind == OpKind::sub ? Real(-1) : Real(1);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
        }
        return;
      }
      case OpKind::add_bias: {
        {
          TensorT & ga = grad_slot(n.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        TensorT & gb = grad_slot(n.inputs[1]);
        const std::size_t w = gb.size();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % w] += g[i];
        return;
      }
      case OpKind::scale: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const Real f = static_cast<Real>(n.attrs.factor);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i];
        return;
      }
      case OpKind::concat: {
        const auto split = detail::split_axis(y.shape(), n.attrs.axis);
        std::size_t offset = 0;
        for (NodeId in : n.inputs) {
          TensorT & gi = grad_slot(in);
          const std::size_t len = gi.dim(n.attrs.axis) * split.inner;
          for (std::size_t o = 0; o < split.outer; ++o) {
            const Real * src = g.raw().data() + o * split.extent * split.inner + offset;
            Real * dst = gi.raw().data() + o * len;
            for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
          }
          offset += len;
        }
        return;
      }
      case OpKind::slice: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const auto & at = n.attrs;
        const auto split = detail::split_axis(ga.shape(), at.axis);
        const std::size_t len = (at.end - at.begin) * split.inner;
        for (std::size_t o = 0; o < split.outer; ++o) {
          Real * dst = ga.raw().data() + o * split.extent * split.inner + at.begin * split.inner;
          const Real * src = g.raw().data() + o * len;
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
        return;
      }
      case OpKind::reshape: {
        TensorT & ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        return;
      }
      case OpKind::tanh: {
        TensorT & ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (Real(1) - y[i] * y[i]);
        return;
      }
      case OpKind::sigmoid: {
        TensorT & ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (Real(1) - y[i]);
        return;
      }
      case OpKind::softplus: {
        const TensorT & a = value(n.inputs[0]);
        TensorT & ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * detail::sigmoid(a[i]);
        return;
      }
      case OpKind::smooth_l1: {
        const TensorT & a = value(n.inputs[0]);
        TensorT & ga = grad_slot(n.inputs[0]);
        const Real beta = static_cast<Real>(n.attrs.factor);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const Real x = a[i];
          const Real d = std::abs(x) < beta ? x / beta : (x > 0 ? Real(1) : Real(-1));
          ga[i] += g[i] * d;
        }
        return;
      }
      case OpKind::softmax:
      case OpKind::log_softmax: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const auto s = detail::split_axis(y.shape(), n.attrs.axis);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.extent * s.inner + in;
            if (n.kind == OpKind::softmax) {
              Real dotp = 0;
              for (std::size_t k = 0; k < s.extent; ++k) {
                dotp += g[base + k * s.inner] * y[base + k * s.inner];
              }
              for (std::size_t k = 0; k < s.extent; ++k) {
                const std::size_t i = base + k * s.inner;
                ga[i] += y[i] * (g[i] - dotp);
              }
            } else {
              Real gsum = 0;
              for (std::size_t k = 0; k < s.extent; ++k) gsum += g[base + k * s.inner];
              for (std::size_t k = 0; k < s.extent; ++k) {
                const std::size_t i = base + k * s.inner;
                ga[i] += g[i] - std::exp(y[i]) * gsum;
              }
            }
          }
        }
        return;
      }
      case OpKind::max:
      case OpKind::mean:
      case OpKind::sum: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const auto s = detail::split_axis(ga.shape(), n.attrs.axis);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.extent * s.inner + in;
            const std::size_t out = o * s.inner + in;
            if (n.kind == OpKind::max) {
              ga[base + n.argmax[out] * s.inner] += g[out];
            } else {
              const Real v =
                n.kind == OpKind::mean ? g[out] / static_cast<Real>(s.extent) : g[out];
              for (std::size_t k = 0; k < s.extent; ++k) ga[base + k * s.inner] += v;
            }
          }
        }
        return;
      }
      case OpKind::sum_all: {
        TensorT & ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        return;
      }
      case OpKind::expand: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const auto split = detail::split_axis(y.shape(), n.attrs.axis);
        for (std::size_t o = 0; o < split.outer; ++o) {
          for (std::size_t c = 0; c < n.attrs.count; ++c) {
            const Real * src = g.raw().data() + (o * n.attrs.count + c) * split.inner;
            Real * dst = ga.raw().data() + o * split.inner;
            for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
          }
        }
        return;
      }
      case OpKind::gather: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const std::size_t row = ga.size() / ga.dim(0);
        const auto & idx = n.attrs.index;
        for (std::size_t r = 0; r < idx.size(); ++r) {
          Real * dst = ga.raw().data() + idx[r] * row;
          const Real * src = g.raw().data() + r * row;
          for (std::size_t j = 0; j < row; ++j) dst[j] += src[j];
        }
        return;
      }
      case OpKind::segment_mean: {
        TensorT & ga = grad_slot(n.inputs[0]);
        const std::size_t c = ga.dim(1);
        const auto & segs = n.attrs.segments;
        for (std::size_t s = 0; s < segs.size(); ++s) {
          if (segs[s].empty()) continue;
          const Real inv =
            n.attrs.count == 1 ? Real(1) : Real(1) / static_cast<Real>(segs[s].size());
          for (std::size_t r : segs[s]) {
            for (std::size_t j = 0; j < c; ++j) ga.at(r, j) += inv * g.at(s, j);
          }
        }
        return;
      }
      case OpKind::conv2d: {
        const ConvGeom geo = conv_geom(n);
        const TensorT & x = value(n.inputs[0]);
        const TensorT & w = value(n.inputs[1]);
        TensorT & gx = grad_slot(n.inputs[0]);
        TensorT & gw = grad_slot(n.inputs[1]);
        for (std::size_t oy = 0; oy < geo.ho; ++oy) {
          for (std::size_t ox = 0; ox < geo.wo; ++ox) {
            const Real * go = g.raw().data() + (oy * geo.wo + ox) * geo.cout;
            for (std::size_t ky = 0; ky < geo.k; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                                        static_cast<std::ptrdiff_t>(geo.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(geo.h)) continue;
              for (std::size_t kx = 0; kx < geo.k; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                                          static_cast<std::ptrdiff_t>(geo.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(geo.w)) continue;
                const std::size_t in_off =
                  (static_cast<std::size_t>(iy) * geo.w + static_cast<std::size_t>(ix)) * geo.cin;
                const std::size_t w_off = (ky * geo.k + kx) * geo.cin * geo.cout;
                for (std::size_t ci = 0; ci < geo.cin; ++ci) {
                  const Real xv = x[in_off + ci];
                  const Real * wrow = w.raw().data() + w_off + ci * geo.cout;
                  Real * gwrow = gw.raw().data() + w_off + ci * geo.cout;
                  Real acc = 0;
                  for (std::size_t co = 0; co < geo.cout; ++co) {
                    acc += go[co] * wrow[co];
                    gwrow[co] += xv * go[co];
                  }
                  gx[in_off + ci] += acc;
                }
              }
            }
          }
        }
        return;
      }
      case OpKind::dot: {
        const TensorT & a = value(n.inputs[0]);
        const TensorT & b = value(n.inputs[1]);
        const std::size_t d = a.shape().back();
        {
          TensorT & ga = grad_slot(n.inputs[0]);
          for (std::size_t i = 0; i < a.size(); ++i) ga[i] += g[i / d] * b[i];
        }
        TensorT & gb = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < a.size(); ++i) gb[i] += g[i / d] * a[i];
        return;
      }
      case OpKind::batched_matvec: {
        const TensorT & q = value(n.inputs[0]);
        const TensorT & h = value(n.inputs[1]);
        const std::size_t bsz = q.dim(0), cnt = q.dim(1), d = q.dim(2);
        TensorT & gq = grad_slot(n.inputs[0]);
        TensorT & gh = grad_slot(n.inputs[1]);
        for (std::size_t b = 0; b < bsz; ++b) {
          for (std::size_t i = 0; i < cnt; ++i) {
            const Real gv = g.at(b, i);
            const Real * qr = q.raw().data() + (b * cnt + i) * d;
            Real * gqr = gq.raw().data() + (b * cnt + i) * d;
            const Real * hr = h.raw().data() + b * d;
            Real * ghr = gh.raw().data() + b * d;
            for (std::size_t j = 0; j < d; ++j) {
              gqr[j] += gv * hr[j];
              ghr[j] += gv * qr[j];
            }
          }
        }
        return;
      }
      case OpKind::batched_weighted_sum: {
        const TensorT & w = value(n.inputs[0]);
        const TensorT & q = value(n.inputs[1]);
        const std::size_t bsz = q.dim(0), cnt = q.dim(1), d = q.dim(2);
        TensorT & gw = grad_slot(n.inputs[0]);
        TensorT & gq = grad_slot(n.inputs[1]);
        for (std::size_t b = 0; b < bsz; ++b) {
          const Real * gr = g.raw().data() + b * d;
          for (std::size_t i = 0; i < cnt; ++i) {
            const Real * qr = q.raw().data() + (b * cnt + i) * d;
            Real * gqr = gq.raw().data() + (b * cnt + i) * d;
            const Real wv = w.at(b, i);
            Real acc = 0;
            for (std::size_t j = 0; j < d; ++j) {
              acc += gr[j] * qr[j];
              gqr[j] += wv * gr[j];
            }
            gw.at(b, i) += acc;
          }
        }
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeId> param_ids_;
  std::vector<TensorT> grads_;
  std::vector<bool> has_grad_;
};

}  // namespace trajact

#endif  // TRAJACT__AUTODIFF__GRAPH_HPP_
