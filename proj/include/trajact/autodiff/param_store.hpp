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

#ifndef TRAJACT__AUTODIFF__PARAM_STORE_HPP_
#define TRAJACT__AUTODIFF__PARAM_STORE_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/autodiff/tensor.hpp"
#include "trajact/error.hpp"

namespace trajact
{

template <typename Real = double>
struct ParamEntry
{
  Tensor<Real> value;
  Tensor<Real> acc_grad;    // running average of squared gradients
  Tensor<Real> acc_update;  // running average of squared updates
  bool decay = true;        // receives weight decay (false for biases)
};

/**
 * @brief Named trainable parameters plus their Adadelta accumulators.
 *
 * Backed by std::map so iteration order (and therefore every loop over the
 * parameters) is deterministic.
 */
template <typename Real = double>
class ParamStore
{
public:
  using TensorT = Tensor<Real>;

  TensorT & add(const std::string & name, TensorT value, bool decay = true)
  {
    if (entries_.count(name)) {
      fail("duplicate_param", "parameter '", name, "' already registered");
    }
    ParamEntry<Real> e;
    e.acc_grad = TensorT(value.shape());
    e.acc_update = TensorT(value.shape());
    e.value = std::move(value);
    e.decay = decay;
    return entries_.emplace(name, std::move(e)).first->second.value;
  }

  bool contains(const std::string & name) const { return entries_.count(name) > 0; }

  const TensorT & value(const std::string & name) const { return entry(name).value; }
  TensorT & value(const std::string & name) { return entry(name).value; }

  const ParamEntry<Real> & entry(const std::string & name) const
  {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail("unknown_param", "no parameter named '", name, "'");
    return it->second;
  }

  ParamEntry<Real> & entry(const std::string & name)
  {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail("unknown_param", "no parameter named '", name, "'");
    return it->second;
  }

  const std::map<std::string, ParamEntry<Real>> & entries() const { return entries_; }
  std::map<std::string, ParamEntry<Real>> & entries() { return entries_; }

  std::size_t size() const { return entries_.size(); }

  std::size_t num_scalars() const
  {
    std::size_t n = 0;
    for (const auto & [name, e] : entries_) n += e.value.size();
    return n;
  }

  /// Rounds every stored value to 32-bit precision (what a checkpoint keeps).
  void quantize_f32()
  {
    for (auto & [name, e] : entries_) {
      for (auto * t : {&e.value, &e.acc_grad, &e.acc_update}) {
        for (auto & v : t->raw()) v = static_cast<Real>(static_cast<float>(v));
      }
    }
  }

  template <typename Other>
  ParamStore<Other> cast() const
  {
    ParamStore<Other> out;
    for (const auto & [name, e] : entries_) {
      auto & dst = out.entries()[name];
      dst.value = e.value.template cast<Other>();
      dst.acc_grad = e.acc_grad.template cast<Other>();
      dst.acc_update = e.acc_update.template cast<Other>();
      dst.decay = e.decay;
    }
    return out;
  }

  bool operator==(const ParamStore & other) const
  {
    if (entries_.size() != other.entries_.size()) return false;
    for (const auto & [name, e] : entries_) {
      auto it = other.entries_.find(name);
      if (it == other.entries_.end() || !(it->second.value == e.value)) return false;
    }
    return true;
  }

private:
  std::map<std::string, ParamEntry<Real>> entries_;
};

/// Uniform init in [-s, s] with s = sqrt(6 / (fan_in + fan_out)).
template <typename Real>
Tensor<Real> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64 & rng)
{
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-s, s);
  Tensor<Real> t(std::move(shape));
  for (auto & v : t.raw()) v = static_cast<Real>(dist(rng));
  return t;
}

// Checkpoint layout:
//   u64 little-endian header length N
//   N bytes of UTF-8 JSON: {"format": "trajact-ckpt-1", "metadata": {...},
//                           "tensors": [{"name", "role", "shape", "offset", "decay"}]}
//   payload: little-endian float32 values; offsets are byte offsets into the payload.
namespace detail
{
inline void put_u32_le(std::string & buf, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32_le(const unsigned char * p)
{
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
}  // namespace detail

template <typename Real>
void save_checkpoint(const std::string & path, const ParamStore<Real> & store,
                     const nlohmann::json & metadata = nlohmann::json::object())
{
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  auto emit = [&](const std::string & name, const char * role, const Tensor<Real> & t, bool decay) {
    tensors.push_back({{"name", name},
                       {"role", role},
                       {"shape", t.shape()},
                       {"offset", payload.size()},
                       {"decay", decay}});
    for (Real v : t.data()) {
      detail::put_u32_le(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  };
  for (const auto & [name, e] : store.entries()) {
    emit(name, "value", e.value, e.decay);
    emit(name, "acc_grad", e.acc_grad, e.decay);
    emit(name, "acc_update", e.acc_update, e.decay);
  }
  nlohmann::json header = {{"format", "trajact-ckpt-1"}, {"metadata", metadata}, {"tensors", tensors}};
  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io_error", "cannot write checkpoint '", path, "'");
  std::uint64_t len = head.size();
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((len >> (8 * i)) & 0xffu));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail("io_error", "failed writing checkpoint '", path, "'");
}

template <typename Real>
ParamStore<Real> load_checkpoint(const std::string & path, nlohmann::json * metadata = nullptr)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io_error", "cannot open checkpoint '", path, "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) fail("bad_checkpoint", "checkpoint '", path, "' is truncated");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) {
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  if (8 + len > bytes.size()) fail("bad_checkpoint", "checkpoint header overruns file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, len));
  } catch (const nlohmann::json::exception & e) {
    fail("bad_checkpoint", "checkpoint header is not valid JSON: ", e.what());
  }
  if (header.value("format", "") != "trajact-ckpt-1") {
    fail("bad_checkpoint", "unknown checkpoint format");
  }
  const auto * payload = reinterpret_cast<const unsigned char *>(bytes.data() + 8 + len);
  const std::size_t payload_size = bytes.size() - 8 - len;
  ParamStore<Real> store;
  for (const auto & t : header.at("tensors")) {
    const Shape shape = t.at("shape").get<Shape>();
    const std::size_t offset = t.at("offset").get<std::size_t>();
    const std::size_t count = shape_numel(shape);
    if (offset + 4 * count > payload_size) fail("bad_checkpoint", "tensor payload overruns file");
    Tensor<Real> value(shape);
    for (std::size_t i = 0; i < count; ++i) {
      value[i] = static_cast<Real>(std::bit_cast<float>(detail::get_u32_le(payload + offset + 4 * i)));
    }
    const std::string name = t.at("name");
    const std::string role = t.at("role");
    auto & entry = store.entries()[name];
    entry.decay = t.value("decay", true);
    if (role == "value") {
      entry.value = std::move(value);
    } else if (role == "acc_grad") {
      entry.acc_grad = std::move(value);
    } else if (role == "acc_update") {
      entry.acc_update = std::move(value);
    } else {
      fail("bad_checkpoint", "unknown tensor role '", role, "'");
    }
  }
  for (auto & [name, e] : store.entries()) {
    if (e.value.empty()) fail("bad_checkpoint", "parameter '", name, "' has no value tensor");
    if (e.acc_grad.empty()) e.acc_grad = Tensor<Real>(e.value.shape());
    if (e.acc_update.empty()) e.acc_update = Tensor<Real>(e.value.shape());
  }
  if (metadata) *metadata = header.value("metadata", nlohmann::json::object());
  return store;
}

}  // namespace trajact

#endif  // TRAJACT__AUTODIFF__PARAM_STORE_HPP_
