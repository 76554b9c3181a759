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

#ifndef TRAJACT__AUTODIFF__TENSOR_HPP_
#define TRAJACT__AUTODIFF__TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trajact/error.hpp"

namespace trajact
{

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape & shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape & shape)
{
  std::ostringstream oss;
  oss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    oss << (i ? "," : "") << shape[i];
  }
  oss << ']';
  return oss.str();
}

/**
 * @brief Dense row-major tensor.
 *
 * Real is double for tests and gradient checks; float is accepted for speed runs.
 */
template <typename Real = double>
class Tensor
{
public:
  using value_type = Real;

  Tensor() = default;

  explicit Tensor(Shape shape, Real fill = Real(0))
  : shape_(std::move(shape)), data_(shape_numel(shape_), fill)
  {
    validate_extents();
  }

  Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data))
  {
    validate_extents();
    if (data_.size() != shape_numel(shape_)) {
      fail("shape_mismatch", "tensor data length ", data_.size(), " does not match shape ",
           shape_str(shape_));
    }
  }

  static Tensor vector(std::initializer_list<Real> values)
  {
    return Tensor({values.size()}, std::vector<Real>(values));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<Real> values)
  {
    return Tensor({rows, cols}, std::vector<Real>(values));
  }

  static Tensor scalar(Real value) { return Tensor({1}, std::vector<Real>{value}); }

  const Shape & shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  std::vector<Real> & raw() { return data_; }
  const std::vector<Real> & raw() const { return data_; }

  Real & operator[](std::size_t i) { return data_[i]; }
  const Real & operator[](std::size_t i) const { return data_[i]; }

  Real & at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const Real & at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  Real item() const
  {
    if (data_.size() != 1) {
      fail("shape_mismatch", "item() on tensor of shape ", shape_str(shape_));
    }
    return data_[0];
  }

  Tensor reshaped(Shape shape) const
  {
    if (shape_numel(shape) != data_.size()) {
      fail("shape_mismatch", "cannot reshape ", shape_str(shape_), " to ", shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const
  {
    return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
  }

  bool operator==(const Tensor & other) const
  {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  template <typename Other>
  Tensor<Other> cast() const
  {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

private:
  void validate_extents() const
  {
    for (auto e : shape_) {
      if (e == 0) {
        fail("shape_mismatch", "tensor extents must be positive, got ", shape_str(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<Real> data_;
};

}  // namespace trajact

#endif  // TRAJACT__AUTODIFF__TENSOR_HPP_
