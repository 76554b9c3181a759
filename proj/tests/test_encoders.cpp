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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "support/common.hpp"
#include "support/op_cases.hpp"
#include "trajact/model/encoders.hpp"
#include "trajact/model/model.hpp"
#include "trajact/train/model_grad_check.hpp"

namespace trajact
{
namespace
{

using T = Tensor<double>;
using testing::error_code;
using testing::uniform_tensor;

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(Embedding, ZeroWeightsGiveZero)
{
  const auto e = embed_trajectory_point<double>({3.0, -7.0}, T({4, 2}), T({4}));
  EXPECT_EQ(e, T({4}));
}

TEST(Embedding, BiasOutsideTanh)
{
  const auto e = embed_trajectory_point<double>({0.0, 9.0}, T::matrix(1, 2, {1, 0}), T::vector({0.5}));
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  const auto f = embed_trajectory_point<double>({0.3, 9.0}, T::matrix(1, 2, {2, 0}), T::vector({0.5}));
  EXPECT_DOUBLE_EQ(f[0], std::tanh(0.6) + 0.5);
}

TEST(Embedding, DefaultWidthAndShapeCheck)
{
  std::mt19937_64 rng(1);
  EXPECT_EQ(embed_trajectory_point<double>({1, 2}, uniform_tensor({256, 2}, rng), T({256})).size(), 256u);
  EXPECT_EQ(error_code([] { embed_trajectory_point<double>({1, 2}, T({4, 3}), T({4})); }), "shape_mismatch");
  EXPECT_EQ(error_code([] { embed_trajectory_point<double>({1, 2}, T({4, 2}), T({3})); }), "shape_mismatch");
}

TEST(Embedding, GraphFormMatchesPointForm)
{
  std::mt19937_64 rng(2);
  const T w = uniform_tensor({5, 2}, rng);  // [d, 2]
  const T b = uniform_tensor({5}, rng);
  T wt({2, 5});
  for (std::size_t i = 0; i < 5; ++i) {
    wt.at(0, i) = w.at(i, 0);
    wt.at(1, i) = w.at(i, 1);
  }
  Graph<double> g;
  const auto e = embed_trajectory_point(g, g.input(T::matrix(1, 2, {0.4, -1.1})), g.input(wt), g.input(b));
  const auto ref = embed_trajectory_point<double>({0.4, -1.1}, w, b);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(g.value(e)[i], ref[i], 1e-15);
}

TEST(EncodeSequence, ZeroWeightsGiveZeroStates)
{
  std::mt19937_64 rng(3);
  Graph<double> g;
  std::vector<NodeId> xs;
  for (int t = 0; t < 8; ++t) xs.push_back(g.input(uniform_tensor({2, 6}, rng)));
  const auto enc = encode_sequence(g, xs, g.input(T({10, 16})), g.input(T({16})));
  for (NodeId h : enc.states) EXPECT_EQ(g.value(h), T({2, 4}));
  EXPECT_EQ(g.value(enc.last.c), T({2, 4}));
}

TEST(EncodeSequence, DefaultShape)
{
  std::mt19937_64 rng(4);
  ParamStore<double> store;
  register_lstm(store, "enc", 128, 256, rng);
  Graph<double> g;
  std::vector<NodeId> xs;
  for (int t = 0; t < 8; ++t) xs.push_back(g.input(uniform_tensor({1, 128}, rng)));
  const auto enc = encode_sequence(g, xs, g.input(store.value("enc.W")), g.input(store.value("enc.b")));
  ASSERT_EQ(enc.states.size(), 8u);
  for (NodeId h : enc.states) EXPECT_EQ(g.shape(h), (Shape{1, 256}));
}

TEST(EncodeSequence, HandRolledScalarRecurrence)
{
  const T w = T::matrix(2, 4, {0.7, 0.2, -0.5, 0.9, -0.3, 0.6, 0.4, 0.8});
  const T b = T::vector({0.1, 1.0, 0.0, -0.2});
  const double x = 0.8;
  double h = 0.0, c = 0.0;
  std::vector<double> expected;
  for (int t = 0; t < 3; ++t) {
    const double i = sigm(0.7 * x - 0.3 * h + 0.1);
    const double f = sigm(0.2 * x + 0.6 * h + 1.0);
    const double o = sigm(-0.5 * x + 0.4 * h);
    const double gc = std::tanh(0.9 * x + 0.8 * h - 0.2);
    c = f * c + i * gc;
    h = o * std::tanh(c);
    expected.push_back(h);
  }
  Graph<double> g;
  const auto xn = g.input(T::matrix(1, 1, {x}));
  const auto enc = encode_sequence(g, {xn, xn, xn}, g.input(w), g.input(b));
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(g.value(enc.states[t])[0], expected[t], 1e-15);
  EXPECT_NEAR(g.value(enc.last.c)[0], c, 1e-15);
}

TEST(EncodeSequence, EmptyRejected)
{
  Graph<double> g;
  const auto w = g.input(T({5, 4}));
  const auto b = g.input(T({4}));
  EXPECT_EQ(error_code([&] { encode_sequence(g, {}, w, b); }), "bad_input");
}

TEST(GeometricRelation, WorkedExample)
{
  const std::vector<Box> others{{18, 14, 8, 4}};
  const auto g = geometric_relation({10, 10, 4, 2}, others);
  ASSERT_EQ(g.size(), 1u);
  for (double v : g[0]) EXPECT_NEAR(v, std::log(2.0), 1e-15);
}

TEST(GeometricRelation, CoincidentBoxClamps)
{
  const Box b{10, 10, 4, 2};
  const std::vector<Box> others{b};
  const auto g = geometric_relation(b, others);
  EXPECT_DOUBLE_EQ(g[0][0], std::log(1e-3));
  EXPECT_DOUBLE_EQ(g[0][1], std::log(1e-3));
  EXPECT_DOUBLE_EQ(g[0][2], 0.0);
  EXPECT_DOUBLE_EQ(g[0][3], 0.0);
}

TEST(GeometricRelation, EmptyAndInvalid)
{
  EXPECT_TRUE(geometric_relation({0, 0, 1, 1}, {}).empty());
  const std::vector<Box> bad{{0, 0, 0, 1}};
  EXPECT_EQ(error_code([&] { geometric_relation({0, 0, 1, 1}, bad); }), "bad_box");
  EXPECT_EQ(error_code([] { geometric_relation({0, 0, -1, 1}, {}); }), "bad_box");
}

TEST(GeometricRelation, TranslationAndScaleInvariant)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-500, 500), size(1, 200), shift(-1e3, 1e3), sc(0.01, 50);
  for (int trial = 0; trial < 300; ++trial) {
    const Box p{pos(rng), pos(rng), size(rng), size(rng)};
    std::vector<Box> others;
    for (int k = 0; k < 4; ++k) others.push_back({pos(rng), pos(rng), size(rng), size(rng)});
    const auto base = geometric_relation(p, others);
    const double dx = shift(rng), dy = shift(rng), s = sc(rng);
    auto moved = others;
    for (auto & o : moved) o.x += dx, o.y += dy;
    const auto shifted = geometric_relation({p.x + dx, p.y + dy, p.w, p.h}, moved);
    auto scaled_o = others;
    for (auto & o : scaled_o) o = {o.x * s, o.y * s, o.w * s, o.h * s};
    const auto scaled = geometric_relation({p.x * s, p.y * s, p.w * s, p.h * s}, scaled_o);
    for (std::size_t k = 0; k < base.size(); ++k) {
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(shifted[k][j], base[k][j], 1e-9);
        EXPECT_NEAR(scaled[k][j], base[k][j], 1e-9);
        EXPECT_TRUE(std::isfinite(base[k][j]));
      }
    }
  }
}

struct ObjectFixture
{
  ParamStore<double> store;
  ObjectFixture()
  {
    std::mt19937_64 rng(6);
    store.add("geo.W", uniform_tensor({4, 3}, rng));
    store.add("geo.b", uniform_tensor({3}, rng));
    store.add("type", uniform_tensor({kNumObjectClasses, 3}, rng));
    store.add("none", uniform_tensor({1, 6}, rng));
  }
  T pool(const std::vector<Box> & persons, const std::vector<std::vector<SceneObject>> & objs, bool sum = false)
  {
    Graph<double> g;
    const ObjectEncoderParams p{g.param("geo.W", store.value("geo.W")), g.param("geo.b", store.value("geo.b")),
                                g.param("type", store.value("type")), g.param("none", store.value("none"))};
    return g.value(pool_objects(g, make_object_step<double>(persons, objs), p, sum));
  }
};

TEST(ObjectPooling, SingleObjectEqualsItsEmbedding)
{
  ObjectFixture f;
  const Box person{100, 100, 50, 80};
  const SceneObject obj{3, {300, 120, 60, 40}};
  const T pooled = f.pool({person}, {{obj}});
  const std::vector<Box> others{to_center_box(obj.box)};
  const auto geo = geometric_relation(to_center_box(person), others)[0];
  for (std::size_t j = 0; j < 3; ++j) {
    double z = f.store.value("geo.b")[j];
    for (std::size_t i = 0; i < 4; ++i) z += geo[i] * f.store.value("geo.W").at(i, j);
    EXPECT_NEAR(pooled.at(0, j), std::tanh(z), 1e-14);
    EXPECT_NEAR(pooled.at(0, 3 + j), f.store.value("type").at(3, j), 1e-15);
  }
}

TEST(ObjectPooling, DuplicateObjectsPoolLikeOne)
{
  ObjectFixture f;
  const Box person{100, 100, 50, 80};
  const SceneObject obj{5, {300, 120, 60, 40}};
  const T one = f.pool({person}, {{obj}});
  const T two = f.pool({person}, {{obj, obj}});
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(one[j], two[j], 1e-15);
  const T summed = f.pool({person}, {{obj, obj}}, true);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(summed[j], 2.0 * one[j], 1e-14);
}

TEST(ObjectPooling, NoObjectsUseLearnedRow)
{
  ObjectFixture f;
  const T pooled = f.pool({{0, 0, 10, 10}, {5, 5, 10, 10}}, {{}, {{1, {50, 50, 10, 10}}}});
  EXPECT_EQ(pooled.shape(), (Shape{2, 6}));
  for (std::size_t j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(pooled.at(0, j), f.store.value("none")[j]);
}

TEST(ObjectPooling, TypeOutOfRangeRejected)
{
  const int bad = static_cast<int>(kNumObjectClasses);
  EXPECT_EQ(error_code([&] {
              make_object_step<double>({{0, 0, 10, 10}}, {{{bad, {1, 1, 2, 2}}}});
            }),
            "bad_input");
}

TEST(SceneConv, ZeroMasksGiveZeroMaps)
{
  std::mt19937_64 rng(7);
  Graph<double> g;
  const SceneConvParams p{g.input(uniform_tensor({3, 3, 10, 4}, rng)), g.input(T({4})),
                          g.input(uniform_tensor({3, 3, 4, 4}, rng)), g.input(T({4}))};
  const auto [s0, s1] = scene_conv_features(g, g.input(T({36, 64, 10})), p);
  EXPECT_EQ(g.value(s0), T({18, 32, 4}));
  EXPECT_EQ(g.value(s1), T({9, 16, 4}));
}

TEST(SceneConv, OddResolutionIsPaddedToMultipleOfFour)
{
  SceneContext sc;
  sc.mask_h = 35;
  sc.mask_w = 62;
  sc.class_map.assign(35 * 62, 2);
  const auto mean = temporal_mean_masks<double>(render_semantic_masks(sc, 8));
  EXPECT_EQ(mean.shape(), (Shape{36, 64, kNumSceneClasses}));
  EXPECT_EQ(mean[(35 * 64 + 0) * kNumSceneClasses + 2], 0.0);
  EXPECT_EQ(mean[(34 * 64 + 61) * kNumSceneClasses + 2], 1.0);
  std::mt19937_64 rng(8);
  Graph<double> g;
  const SceneConvParams p{g.input(uniform_tensor({3, 3, 10, 2}, rng)), g.input(T({2})),
                          g.input(uniform_tensor({3, 3, 2, 2}, rng)), g.input(T({2}))};
  const auto maps = scene_conv_features(g, g.input(mean), p);
  EXPECT_EQ(g.shape(maps.second), (Shape{9, 16, 2}));
}

TEST(ScenePooling, CellExamples)
{
  EXPECT_EQ(scene_cell({960, 540}, 1920, 1080, 9, 16), (std::pair<std::size_t, std::size_t>{4, 8}));
  EXPECT_EQ(scene_cell({0, 0}, 1920, 1080, 9, 16), (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(scene_cell({1920, 1080}, 1920, 1080, 9, 16), (std::pair<std::size_t, std::size_t>{8, 15}));
}

TEST(ScenePooling, SameCellWithinCell)
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cw = 1920.0 / 16.0, ch = 1080.0 / 9.0;
  for (std::size_t r = 0; r < 9; ++r) {
    for (std::size_t c = 0; c < 16; ++c) {
      for (int k = 0; k < 5; ++k) {
        const Point p{(static_cast<double>(c) + 0.01 + 0.98 * u(rng)) * cw,
                      (static_cast<double>(r) + 0.01 + 0.98 * u(rng)) * ch};
        EXPECT_EQ(scene_cell(p, 1920, 1080, 9, 16), (std::pair<std::size_t, std::size_t>{r, c}));
      }
    }
  }
}

TEST(ScenePooling, ReturnsFeatureAtCell)
{
  T map({9, 16, 3});
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<double>(i);
  const auto pooled = pool_scene_at(map, {{960, 540}, {0, 0}}, 1920, 1080);
  EXPECT_EQ(pooled.shape(), (Shape{2, 3}));
  EXPECT_EQ(pooled.at(0, 0), static_cast<double>((4 * 16 + 8) * 3));
  EXPECT_EQ(pooled.at(1, 2), 2.0);
}

std::vector<T> channels(std::size_t t, std::size_t d)
{
  std::vector<T> out;
  for (std::size_t j = 0; j < kNumFeatureChannels; ++j) {
    T ch({t, d});
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = static_cast<double>(j * 1000 + i);
    out.push_back(ch);
  }
  return out;
}

TEST(PackQ, DefaultShapeAndOrder)
{
  const auto fb = pack_q(channels(8, 256), T({256}));
  EXPECT_EQ(fb.q.shape(), (Shape{5, 8, 256}));
  ASSERT_EQ(fb.last_states.size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(fb.q[(j * 8 + 0) * 256 + 0], static_cast<double>(j * 1000));
    EXPECT_EQ(fb.last_states[j][0], static_cast<double>(j * 1000 + 7 * 256));
  }
  EXPECT_EQ(static_cast<std::size_t>(Channel::trajectory), 4u);
}

TEST(PackQ, MissingChannelRejectedAndZeroedChannelKeepsShape)
{
  auto ch = channels(8, 4);
  ch.pop_back();
  EXPECT_EQ(error_code([&] { pack_q(ch, T({4})); }), "bad_input");
  auto zeroed = channels(8, 4);
  zeroed[0] = T({8, 4});
  EXPECT_EQ(pack_q(zeroed, T({4})).q.shape(), (Shape{5, 8, 4}));
}

TEST(PackQ, OrderSensitiveEquality)
{
  auto ch = channels(3, 2);
  const auto a = pack_q(ch, T({2}));
  std::swap(ch[0], ch[1]);
  EXPECT_FALSE(a == pack_q(ch, T({2})));
  std::swap(ch[0], ch[1]);
  EXPECT_TRUE(a == pack_q(ch, T({2})));
}

TEST(PackQ, GraphFormRowLayout)
{
  Graph<double> g;
  std::vector<std::vector<NodeId>> states(2);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t t = 0; t < 3; ++t) {
      states[j].push_back(g.input(T({1, 2}, static_cast<double>(10 * j + t))));
    }
  }
  const auto q = g.value(pack_q(g, states));
  EXPECT_EQ(q.shape(), (Shape{1, 6, 2}));
  EXPECT_EQ(q[(1 * 3 + 2) * 2], 12.0);
}

TEST(Model, ZeroParametersGiveZeroQ)
{
  const ModelConfig cfg = micro_model_config(ModelConfig{});
  const Dataset ds = synthesize(micro_synth_config(cfg, 3));
  auto store = init_params<double>(cfg, 3);
  testing::zero_params(store);
  const std::vector<std::size_t> idx{0, 1, 2};
  const auto batch = make_batch<double>(ds, idx, cfg);
  Graph<double> g;
  const auto res = forward(g, store, cfg, batch, ForwardOptions{});
  ASSERT_FALSE(res.attention.empty());
  const NodeId q_all = g.node(res.attention[0].q).inputs[1];
  EXPECT_EQ(g.shape(q_all), (Shape{3, 5 * cfg.obs_len, cfg.hidden}));
  for (double v : g.value(q_all).data()) EXPECT_EQ(v, 0.0);
}

}  // namespace
}  // namespace trajact
