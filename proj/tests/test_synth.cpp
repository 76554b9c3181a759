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
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "trajact/data/dataset_io.hpp"
#include "trajact/model/encoders.hpp"
#include "trajact/synth.hpp"

namespace trajact
{
namespace
{

SynthConfig small_config(std::size_t agents = 60)
{
  SynthConfig cfg;
  cfg.num_scenes = 2;
  cfg.num_agents = agents;
  cfg.appearance_dim = 8;
  return cfg;
}

Archetype archetype_named(const std::string & name)
{
  for (const auto & a : default_archetypes()) {
    if (a.name == name) return a;
  }
  throw std::runtime_error("no archetype " + name);
}

std::map<std::string, std::string> read_dir(const std::filesystem::path & dir)
{
  std::map<std::string, std::string> files;
  for (const auto & e : std::filesystem::directory_iterator(dir)) {
    files[e.path().filename().string()] = read_text_file(e.path());
  }
  return files;
}

TEST(Synth, SameSeedGivesIdenticalBytes)
{
  const auto cfg = small_config();
  const auto base = std::filesystem::temp_directory_path() / "trajact_synth_det";
  std::filesystem::remove_all(base);
  write_synthetic(generate_dataset(cfg), cfg, base / "a");
  write_synthetic(generate_dataset(cfg), cfg, base / "b");
  const auto a = read_dir(base / "a");
  const auto b = read_dir(base / "b");
  EXPECT_EQ(a.size(), 9u);
  EXPECT_EQ(a, b);
  auto other = cfg;
  other.seed += 1;
  write_synthetic(generate_dataset(other), other, base / "c");
  EXPECT_NE(read_dir(base / "c"), a);
  std::filesystem::remove_all(base);
}

TEST(Synth, FilesReloadIntoSameSamples)
{
  const auto cfg = small_config();
  const auto dir = std::filesystem::temp_directory_path() / "trajact_synth_reload";
  std::filesystem::remove_all(dir);
  const auto synth = generate_dataset(cfg);
  const auto manifest = write_synthetic(synth, cfg, dir);
  const Dataset direct = to_dataset(synth, cfg);
  const Dataset loaded = load_dataset(manifest.string());
  ASSERT_EQ(direct.samples.size(), loaded.samples.size());
  ASSERT_EQ(direct.samples.size(), cfg.num_agents);
  for (std::size_t i = 0; i < direct.samples.size(); ++i) {
    const auto & a = direct.samples[i];
    const auto & b = loaded.samples[i];
    EXPECT_EQ(a.obs_xy, b.obs_xy);
    EXPECT_EQ(a.future_xy, b.future_xy);
    EXPECT_EQ(a.appearance, b.appearance);
    EXPECT_EQ(a.keypoints, b.keypoints);
    EXPECT_EQ(a.future_activity_ids, b.future_activity_ids);
    EXPECT_EQ(a.type, b.type);
  }
  const auto m = nlohmann::json::parse(read_text_file(manifest));
  EXPECT_EQ(m.at("num_persons"), cfg.num_agents);
  std::filesystem::remove_all(dir);
}

TEST(Synth, ZeroAgentsIsValidEmptyDataset)
{
  const auto ds = synthesize(small_config(0));
  EXPECT_TRUE(ds.samples.empty());
  EXPECT_EQ(ds.scenes.size(), 2u);
}

TEST(Synth, ZeroNoiseStraightLineIsCollinear)
{
  auto cfg = small_config(40);
  cfg.noise = 0.0;
  cfg.archetypes = {archetype_named("walk_straight")};
  const auto ds = synthesize(cfg);
  ASSERT_EQ(ds.samples.size(), 40u);
  for (const auto & s : ds.samples) {
    std::vector<Point> path = s.obs_xy;
    path.insert(path.end(), s.future_xy.begin(), s.future_xy.end());
    const Point p0 = path.front();
    const Point dir{path.back().x - p0.x, path.back().y - p0.y};
    const double len = std::hypot(dir.x, dir.y);
    ASSERT_GT(len, 0.0);
    for (const auto & p : path) {
      const double cross = (p.x - p0.x) * dir.y - (p.y - p0.y) * dir.x;
      EXPECT_LT(std::abs(cross) / len, 1e-6);
    }
  }
}

TEST(Synth, StaticArchetypeIsLabelledStatic)
{
  auto cfg = small_config(20);
  cfg.noise = 0.0;
  cfg.archetypes = {archetype_named("stand_talk")};
  for (const auto & s : synthesize(cfg).samples) {
    EXPECT_EQ(s.type, TrajectoryType::static_);
    EXPECT_EQ(s.future_xy.back(), s.obs_xy.front());
  }
  cfg.archetypes = {archetype_named("run")};
  for (const auto & s : synthesize(cfg).samples) EXPECT_EQ(s.type, TrajectoryType::moving);
}

TEST(Synth, InfeasibleConfigRejected)
{
  auto cfg = small_config();
  cfg.frame_w = 200.0;
  cfg.frame_h = 200.0;
  try {
    generate_dataset(cfg);
    FAIL() << "expected infeasible";
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), "infeasible");
  }
  auto bad = small_config();
  bad.archetypes[0].future_activities = {"Juggle"};
  EXPECT_THROW(generate_dataset(bad), Error);
}

TEST(Synth, PointsAndBoxesInsideFrame)
{
  const auto ds = synthesize(small_config(200));
  for (const auto & s : ds.samples) {
    const auto & sc = ds.scenes.at(s.scene_id);
    for (const auto & p : s.obs_xy) {
      EXPECT_GE(p.x, 0.0);
      EXPECT_LE(p.x, sc.frame_w);
      EXPECT_GE(p.y, 0.0);
      EXPECT_LE(p.y, sc.frame_h);
    }
    for (const auto & b : s.obs_boxes) {
      EXPECT_GT(b.w, 0.0);
      EXPECT_GT(b.h, 0.0);
    }
    EXPECT_TRUE(s.has_activity);
    EXPECT_FALSE(s.future_activity_ids.empty());
  }
}

TEST(Synth, ArchetypeProportionsWithinTwentyPercent)
{
  const auto cfg = small_config(2000);
  const auto out = generate_dataset(cfg);
  std::vector<double> counts(cfg.archetypes.size(), 0.0);
  for (const auto & a : out.agents) counts[a.archetype] += 1.0;
  double total_w = 0.0;
  for (const auto & a : cfg.archetypes) total_w += a.weight;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = 2000.0 * cfg.archetypes[i].weight / total_w;
    EXPECT_NEAR(counts[i], expected, 0.2 * expected) << cfg.archetypes[i].name;
  }
}

// Multinomial logistic regression on the mean appearance code, fit by gradient descent.
TEST(Synth, FeaturesPredictActivityWithLogisticProbe)
{
  const auto cfg = small_config(1200);
  const auto out = generate_dataset(cfg);
  const auto ds = to_dataset(out, cfg);
  ASSERT_EQ(ds.samples.size(), out.agents.size());
  std::map<std::int64_t, std::size_t> archetype_of;
  for (const auto & a : out.agents) archetype_of[a.person_id] = a.archetype;
  const std::size_t k = cfg.archetypes.size(), d = cfg.appearance_dim + 1;
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    std::vector<double> f(d, 0.0);
    for (const auto & a : ds.samples[i].appearance) {
      for (std::size_t j = 0; j < cfg.appearance_dim; ++j) f[j] += a[j] / 8.0;
    }
    f[d - 1] = 1.0;
    x.push_back(f);
    y.push_back(archetype_of.at(ds.samples[i].person_id));
  }
  const std::size_t n_train = 800;
  std::vector<double> w(k * d, 0.0);
  for (int it = 0; it < 300; ++it) {
    std::vector<double> grad(k * d, 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
      std::vector<double> z(k, 0.0);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) z[c] += w[c * d + j] * x[i][j];
      }
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (auto & v : z) sum += (v = std::exp(v - mx));
      for (std::size_t c = 0; c < k; ++c) {
        const double r = z[c] / sum - (c == y[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[c * d + j] += r * x[i][j];
      }
    }
    for (std::size_t q = 0; q < w.size(); ++q) w[q] -= 0.5 * grad[q] / static_cast<double>(n_train);
  }
  std::size_t correct = 0;
  for (std::size_t i = n_train; i < x.size(); ++i) {
    std::size_t best = 0;
    double best_z = -1e300;
    for (std::size_t c = 0; c < k; ++c) {
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += w[c * d + j] * x[i][j];
      if (z > best_z) best_z = z, best = c;
    }
    correct += best == y[i];
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(x.size() - n_train);
  EXPECT_GT(acc, 0.9);
}

TEST(SemanticMasks, TwoRegionLayoutPartitionsFrame)
{
  SceneContext sc;
  sc.mask_h = 4;
  sc.mask_w = 6;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) sc.class_map.push_back(c < 3 ? 0 : 1);
  }
  const auto m = render_semantic_masks(sc, 8);
  EXPECT_EQ(m.shape(), (Shape{8, kNumSceneClasses, 4, 6}));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_EQ(m[((0 * kNumSceneClasses + 0) * 4 + r) * 6 + c], c < 3 ? 1.0 : 0.0);
      EXPECT_EQ(m[((0 * kNumSceneClasses + 1) * 4 + r) * 6 + c], c < 3 ? 0.0 : 1.0);
    }
  }
}

TEST(SemanticMasks, EveryPixelHasExactlyOneClassAndStaticMeanEqualsFrame)
{
  const auto cfg = small_config(0);
  const auto ds = synthesize(cfg);
  for (const auto & [id, sc] : ds.scenes) {
    const auto m = render_semantic_masks(sc, cfg.obs_len);
    const std::size_t hw = sc.mask_h * sc.mask_w;
    for (std::size_t t = 0; t < cfg.obs_len; ++t) {
      for (std::size_t i = 0; i < hw; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < kNumSceneClasses; ++c) s += m[(t * kNumSceneClasses + c) * hw + i];
        EXPECT_EQ(s, 1.0);
      }
    }
    const auto mean = temporal_mean_masks<double>(m);
    for (std::size_t y = 0; y < sc.mask_h; ++y) {
      for (std::size_t x = 0; x < sc.mask_w; ++x) {
        for (std::size_t c = 0; c < kNumSceneClasses; ++c) {
          EXPECT_NEAR(mean[(y * mean.dim(1) + x) * kNumSceneClasses + c],
                      m[(c * sc.mask_h + y) * sc.mask_w + x], 1e-12);
        }
      }
    }
  }
}

}  // namespace
}  // namespace trajact
