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
#include <limits>
#include <random>
#include <vector>

#include "support/common.hpp"
#include "support/metric_oracle.hpp"
#include "trajact/train/ablation.hpp"
#include "trajact/train/baselines.hpp"
#include "trajact/train/losses.hpp"
#include "trajact/train/metrics.hpp"
#include "trajact/train/model_grad_check.hpp"
#include "trajact/train/trainer.hpp"

namespace trajact
{
namespace
{

using testing::brute_ade_fde;
using testing::error_code;

Path line(Point start, Point step, std::size_t n)
{
  Path p;
  for (std::size_t t = 0; t < n; ++t) p.push_back({start.x + step.x * static_cast<double>(t), start.y + step.y * static_cast<double>(t)});
  return p;
}

PersonSample sample_from(const Path & full, std::int64_t id, std::size_t obs = 8)
{
  PersonSample s;
  s.scene_id = "s";
  s.person_id = id;
  for (std::size_t t = 0; t < full.size(); ++t) s.frames.push_back(static_cast<std::int64_t>(t));
  s.obs_xy.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(obs));
  s.future_xy.assign(full.begin() + static_cast<std::ptrdiff_t>(obs), full.end());
  return s;
}

std::vector<const PersonSample *> ptrs(const std::vector<PersonSample> & v)
{
  std::vector<const PersonSample *> out;
  for (const auto & s : v) out.push_back(&s);
  return out;
}

TEST(L2Loss, IdenticalPathsGiveZero)
{
  const std::vector<Path> p{line({1, 2}, {0.5, 0.25}, 12)};
  EXPECT_EQ(l2_trajectory_loss(p, p), 0.0);
}

TEST(L2Loss, SingleStepOffset)
{
  std::vector<Path> gt{line({0, 0}, {1, 0}, 12)};
  std::vector<Path> pred = gt;
  pred[0][5].x += 3.0;
  pred[0][5].y += 4.0;
  EXPECT_DOUBLE_EQ(l2_trajectory_loss(pred, gt), 25.0);
}

TEST(L2Loss, DoublingPersonsDoublesLoss)
{
  const std::vector<Path> gt{line({0, 0}, {1, 1}, 12)}, pred{line({0.5, -1}, {1.1, 0.9}, 12)};
  const double one = l2_trajectory_loss(pred, gt);
  EXPECT_DOUBLE_EQ(l2_trajectory_loss({pred[0], pred[0]}, {gt[0], gt[0]}), 2.0 * one);
}

TEST(L2Loss, ShapeMismatchRejected)
{
  EXPECT_EQ(error_code([] { l2_trajectory_loss({line({0, 0}, {1, 0}, 12)}, {line({0, 0}, {1, 0}, 11)}); }),
            "shape_mismatch");
  EXPECT_EQ(error_code([] { l2_trajectory_loss({}, {line({0, 0}, {1, 0}, 12)}); }), "shape_mismatch");
}

TEST(SmoothL1, Examples)
{
  EXPECT_EQ(smooth_l1({0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(smooth_l1({0.5, 0.0}), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1({2.0, 0.0}), 1.5);
  EXPECT_DOUBLE_EQ(smooth_l1({-2.0, 0.5}), 1.625);
}

TEST(TotalLoss, Examples)
{
  EXPECT_EQ(total_loss(0, 0, 0, 0).total, 0.0);
  EXPECT_DOUBLE_EQ(total_loss(1, 2, 3, 4, 0.1).total, 5.5);
}

TEST(TotalLoss, NoMultitaskKeepsOnlyTrajectoryTerm)
{
  const LossBreakdown b = total_loss(1, 2, 3, 4, 0.1, parse_ablation("no_multitask"));
  EXPECT_EQ(b.total, 1.0);
  EXPECT_EQ(b.l_grid_cls, 0.0);
  EXPECT_EQ(b.l_grid_reg, 0.0);
  EXPECT_EQ(b.l_act, 0.0);
}

TEST(Metrics, IdenticalGivesZero)
{
  const std::vector<Path> p{line({3, 4}, {1, -1}, 12), line({0, 0}, {0, 0}, 12)};
  EXPECT_EQ(ade(p, p), 0.0);
  EXPECT_EQ(fde(p, p), 0.0);
}

TEST(Metrics, ConstantOffset)
{
  const std::vector<Path> gt{line({0, 0}, {1, 2}, 12)}, pred{line({3, 4}, {1, 2}, 12)};
  EXPECT_DOUBLE_EQ(ade(pred, gt), 5.0);
  EXPECT_DOUBLE_EQ(fde(pred, gt), 5.0);
}

TEST(Metrics, FinalStepOffset)
{
  const std::vector<Path> gt{line({0, 0}, {1, 2}, 12)};
  std::vector<Path> pred = gt;
  pred[0][11].x += 3.0;
  pred[0][11].y += 4.0;
  EXPECT_DOUBLE_EQ(ade(pred, gt), 5.0 / 12.0);
  EXPECT_DOUBLE_EQ(fde(pred, gt), 5.0);
}

TEST(Metrics, SingleStepFdeEqualsAde)
{
  const std::vector<Path> gt{{{0, 0}}, {{1, 1}}}, pred{{{2, 1}}, {{-1, 3}}};
  EXPECT_DOUBLE_EQ(ade(pred, gt), fde(pred, gt));
}

TEST(Metrics, EmptyRejected)
{
  EXPECT_EQ(error_code([] { ade({}, {}); }), "empty_input");
  EXPECT_EQ(error_code([] { fde({}, {}); }), "empty_input");
}

TEST(Metrics, MatchBruteForceOracle)
{
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<std::size_t> n_dist(1, 20);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = n_dist(rng);
    std::vector<Path> pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < 12; ++t) {
        pred[i].push_back({u(rng), u(rng)});
        gt[i].push_back({u(rng), u(rng)});
      }
    }
    const auto [a, f] = brute_ade_fde(pred, gt);
    EXPECT_NEAR(ade(pred, gt), a, 1e-12);
    EXPECT_NEAR(fde(pred, gt), f, 1e-12);
  }
}

TEST(Metrics, TranslationInvariantAndNonnegative)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int c = 0; c < 50; ++c) {
    std::vector<Path> pred(3), gt(3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (int t = 0; t < 12; ++t) {
        pred[i].push_back({u(rng), u(rng)});
        gt[i].push_back({u(rng), u(rng)});
      }
    }
    const Point shift{u(rng) * 100.0, u(rng) * 100.0};
    auto moved = [&](std::vector<Path> v) {
      for (auto & p : v) {
        for (auto & q : p) q = {q.x + shift.x, q.y + shift.y};
      }
      return v;
    };
    EXPECT_GE(ade(pred, gt), 0.0);
    EXPECT_NEAR(ade(moved(pred), moved(gt)), ade(pred, gt), 1e-9);
    EXPECT_NEAR(fde(moved(pred), moved(gt)), fde(pred, gt), 1e-9);
  }
}

TEST(AveragePrecision, Examples)
{
  EXPECT_DOUBLE_EQ(average_precision({0.9, 0.1}, {true, false}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({0.9, 0.1}, {false, true}), 0.5);
}

TEST(AveragePrecision, TiesKeepSampleOrder)
{
  EXPECT_DOUBLE_EQ(average_precision({0.5, 0.5, 0.5}, {true, false, false}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({0.5, 0.5, 0.5}, {false, false, true}), 1.0 / 3.0);
}

TEST(ActivityMap, ExcludesClassesWithoutPositives)
{
  const MapResult r = activity_map({{0.9, 0.1, 0.3}, {0.1, 0.8, 0.2}}, {{0}, {0}});
  EXPECT_EQ(r.classes, 1u);
  EXPECT_DOUBLE_EQ(r.map, 1.0);
  EXPECT_FALSE(r.per_class[1].has_value());
}

TEST(ActivityMap, MeanOverClasses)
{
  const MapResult r = activity_map({{0.9, 0.1}, {0.1, 0.9}}, {{0}, {0}});
  EXPECT_DOUBLE_EQ(r.map, 1.0);
  const MapResult s = activity_map({{0.9, 0.9}, {0.1, 0.1}}, {{0}, {1}});
  EXPECT_DOUBLE_EQ(s.map, (1.0 + 0.5) / 2.0);
}

TEST(ActivityMap, NoPositivesRejected)
{
  EXPECT_EQ(error_code([] { activity_map({{0.5, 0.5}}, {{}}); }), "no_positives");
}

class BestOfK : public ::testing::Test
{
protected:
  void SetUp() override
  {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
      samples.push_back(sample_from(line({n(rng) * 10, n(rng) * 10}, {n(rng), n(rng)}, 20), i));
    }
    for (int k = 0; k < 5; ++k) {
      CandidateSet c;
      for (const auto & s : samples) {
        Path p = s.future_xy;
        for (auto & q : p) q = {q.x + n(rng), q.y + n(rng)};
        c.paths.push_back(std::move(p));
      }
      sets.push_back(std::move(c));
    }
  }

  std::vector<PersonSample> samples;
  std::vector<CandidateSet> sets;
};

TEST_F(BestOfK, SingleEqualsPlainEvaluation)
{
  EXPECT_EQ(best_of_k({sets[0]}, ptrs(samples)), evaluate(sets[0].paths, ptrs(samples)));
}

TEST_F(BestOfK, NoWorseThanAnyMember)
{
  const EvalReport best = best_of_k(sets, ptrs(samples));
  for (const auto & c : sets) EXPECT_LE(best.ade, evaluate(c.paths, ptrs(samples)).ade);
}

TEST_F(BestOfK, ExactMemberGivesZero)
{
  CandidateSet exact;
  for (const auto & s : samples) exact.paths.push_back(s.future_xy);
  const EvalReport r = best_of_k({sets[0], exact}, ptrs(samples));
  EXPECT_EQ(r.ade, 0.0);
  EXPECT_EQ(r.fde, 0.0);
}

TEST_F(BestOfK, MonotoneInK)
{
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= sets.size(); ++k) {
    const EvalReport r = best_of_k({sets.begin(), sets.begin() + static_cast<std::ptrdiff_t>(k)}, ptrs(samples));
    EXPECT_LE(r.ade, prev);
    prev = r.ade;
  }
}

TEST_F(BestOfK, EmptyRejected)
{
  EXPECT_EQ(error_code([&] { best_of_k({}, ptrs(samples)); }), "bad_input");
}

TEST(Evaluate, SplitsMovingAndStatic)
{
  std::vector<PersonSample> s{sample_from(line({0, 0}, {1, 0}, 20), 0), sample_from(line({5, 5}, {0, 0}, 20), 1)};
  s[0].type = TrajectoryType::moving;
  std::vector<Path> pred{line({8, 3}, {1, 0}, 12), line({5, 5}, {0, 0}, 12)};
  const EvalReport r = evaluate(pred, ptrs(s));
  EXPECT_EQ(r.move_count, 1u);
  EXPECT_EQ(r.static_count, 1u);
  EXPECT_DOUBLE_EQ(*r.move_ade, 3.0);
  EXPECT_DOUBLE_EQ(*r.static_ade, 0.0);
  EXPECT_DOUBLE_EQ(r.ade, 1.5);
  EXPECT_FALSE(r.activity_map.has_value());
}

TEST(LinearBaseline, PureTranslationContinues)
{
  std::vector<PersonSample> train{sample_from(line({0, 0}, {1, 0}, 20), 0), sample_from(line({3, 7}, {1, 0}, 20), 1),
                                  sample_from(line({-2, 4}, {1, 0}, 20), 2)};
  std::vector<PersonSample> test{sample_from(line({10, -3}, {1, 0}, 20), 3)};
  const EvalReport r = linear_baseline(ptrs(train), ptrs(test));
  EXPECT_NEAR(r.ade, 0.0, 1e-9);
  EXPECT_NEAR(r.fde, 0.0, 1e-9);
}

TEST(LinearBaseline, DegenerateTranslationFallsBackToShift)
{
  std::vector<PersonSample> train{sample_from(line({0, 2}, {1, 0}, 20), 0)};
  std::vector<PersonSample> test{sample_from(line({10, -3}, {1, 0}, 20), 1)};
  EXPECT_FALSE(fit_linear_step(ptrs(train)).affine);
  EXPECT_NEAR(linear_baseline(ptrs(train), ptrs(test)).ade, 0.0, 1e-12);
}

TEST(LinearBaseline, StaticDataPredictsLastPoint)
{
  std::vector<PersonSample> train{sample_from(line({4, 4}, {0, 0}, 20), 0)};
  std::vector<PersonSample> test{sample_from(line({1, 2}, {0.5, 0.5}, 20), 1)};
  const auto paths = linear_predict(fit_linear_step(ptrs(train)), ptrs(test), 12);
  ASSERT_EQ(paths[0].size(), 12u);
  for (const Point & p : paths[0]) {
    EXPECT_DOUBLE_EQ(p.x, test[0].obs_xy.back().x);
    EXPECT_DOUBLE_EQ(p.y, test[0].obs_xy.back().y);
  }
}

TEST(LinearBaseline, ReportFinite)
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  std::vector<PersonSample> train, test;
  for (int i = 0; i < 20; ++i) {
    Path p;
    for (int t = 0; t < 20; ++t) p.push_back({n(rng), n(rng)});
    (i < 15 ? train : test).push_back(sample_from(p, i));
  }
  const EvalReport r = linear_baseline(ptrs(train), ptrs(test));
  EXPECT_TRUE(std::isfinite(r.ade));
  EXPECT_TRUE(std::isfinite(r.fde));
}

TEST(NearestNeighbor, IdenticalSampleGivesZero)
{
  std::vector<PersonSample> train{sample_from(line({0, 0}, {1, 0.5}, 20), 0), sample_from(line({3, 3}, {-1, 0}, 20), 1)};
  std::vector<PersonSample> test{train[1]};
  EXPECT_EQ(nearest_neighbor_baseline(ptrs(train), ptrs(test)).ade, 0.0);
}

TEST(NearestNeighbor, ReanchorsNeighborFuture)
{
  std::vector<PersonSample> train{sample_from(line({0, 0}, {1, 0}, 20), 0)};
  std::vector<PersonSample> test{sample_from(line({100, 50}, {1, 0}, 20), 1)};
  const auto paths = nearest_neighbor_predict(ptrs(train), ptrs(test));
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_DOUBLE_EQ(paths[0][t].x, test[0].future_xy[t].x);
    EXPECT_DOUBLE_EQ(paths[0][t].y, 50.0);
  }
}

TEST(NearestNeighbor, EmptyTrainRejected)
{
  std::vector<PersonSample> test{sample_from(line({0, 0}, {1, 0}, 20), 0)};
  EXPECT_EQ(error_code([&] { nearest_neighbor_baseline({}, ptrs(test)); }), "empty_dataset");
}

TEST(Ablation, ParsesLabels)
{
  EXPECT_FALSE(parse_ablation("full").no_behavior);
  const AblationFlags f = parse_ablation("no_behavior+no_multitask");
  EXPECT_TRUE(f.no_behavior);
  EXPECT_TRUE(f.no_multitask);
  EXPECT_FALSE(f.no_interaction);
  EXPECT_EQ(error_code([] { parse_ablation("no_such_flag"); }), "bad_config");
}

class MicroTraining : public ::testing::Test
{
protected:
  void SetUp() override
  {
    cfg = micro_model_config(ModelConfig{});
    ds = synthesize(micro_synth_config(cfg, 4));
    for (std::size_t i = 0; i < ds.samples.size(); ++i) idx.push_back(i);
    tc.batch_size = 4;
    tc.seed = 9;
  }

  ModelConfig cfg;
  Dataset ds;
  std::vector<std::size_t> idx;
  TrainConfig tc;
};

TEST_F(MicroTraining, ZeroEpochsReturnsInitialParameters)
{
  tc.epochs = 0;
  const auto res = train<double>(cfg, ds, idx, tc);
  EXPECT_TRUE(res.log.empty());
  EXPECT_TRUE(res.store == init_params<double>(cfg, tc.seed));
}

TEST_F(MicroTraining, SameSeedGivesIdenticalLogs)
{
  tc.epochs = 3;
  const auto a = train<double>(cfg, ds, idx, tc);
  const auto b = train<double>(cfg, ds, idx, tc);
  ASSERT_EQ(a.log.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(to_json(a.log[e]), to_json(b.log[e]));
  EXPECT_TRUE(a.store == b.store);
}

TEST_F(MicroTraining, ResumeMatchesUninterrupted)
{
  tc.epochs = 4;
  const auto full = train<double>(cfg, ds, idx, tc);
  tc.epochs = 2;
  auto first = train<double>(cfg, ds, idx, tc);
  tc.epochs = 4;
  const auto rest = train<double>(cfg, ds, idx, tc, std::move(first.store), 2);
  ASSERT_EQ(rest.log.size(), 2u);
  EXPECT_EQ(to_json(rest.log[1]), to_json(full.log[3]));
  EXPECT_TRUE(rest.store == full.store);
}

TEST_F(MicroTraining, NoMultitaskLogsOnlyTrajectoryLoss)
{
  cfg.ablation = parse_ablation("no_multitask");
  tc.epochs = 1;
  const auto res = train<double>(cfg, ds, idx, tc);
  EXPECT_EQ(res.log[0].loss.total, res.log[0].loss.l_xy);
  EXPECT_EQ(res.log[0].loss.l_act, 0.0);
}

TEST_F(MicroTraining, EmptyIndicesRejected)
{
  EXPECT_EQ(error_code([&] { train<double>(cfg, ds, std::vector<std::size_t>{}, tc); }), "empty_dataset");
}

TEST_F(MicroTraining, LossDecreases)
{
  tc.epochs = 30;
  const auto res = train<double>(cfg, ds, idx, tc);
  EXPECT_LT(res.log.back().loss.l_xy, res.log.front().loss.l_xy);
}

TEST_F(MicroTraining, NaNParameterAbortsWithLocation)
{
  auto store = init_params<double>(cfg, tc.seed);
  store.entries().begin()->second.value.raw()[0] = std::numeric_limits<double>::quiet_NaN();
  tc.epochs = 1;
  const std::string code = error_code([&] { train<double>(cfg, ds, idx, tc, std::move(store)); });
  EXPECT_TRUE(code == "nan_loss" || code == "nan_gradient") << code;
}

TEST_F(MicroTraining, EvaluationIsDeterministic)
{
  tc.epochs = 1;
  const auto res = train<double>(cfg, ds, idx, tc);
  EXPECT_EQ(evaluate_model(res.store, cfg, ds, idx), evaluate_model(res.store, cfg, ds, idx, 2, 2));
}

}  // namespace
}  // namespace trajact
