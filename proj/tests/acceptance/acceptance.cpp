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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support/metric_oracle.hpp"
#include "support/op_cases.hpp"
#include "trajact/autodiff/param_store.hpp"
#include "trajact/model/attention.hpp"
#include "trajact/model/grid.hpp"
#include "trajact/synth.hpp"
#include "trajact/train/ablation.hpp"
#include "trajact/train/baselines.hpp"
#include "trajact/train/metrics.hpp"
#include "trajact/train/model_grad_check.hpp"
#include "trajact/train/trainer.hpp"

namespace
{

using namespace trajact;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char * f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 -------------------------------------------------------------------------

Outcome gradient_fidelity()
{
  const auto t0 = Clock::now();
  const GradCheckOptions opt;
  double worst = 0.0;
  std::string failed;
  for (const auto & op : testing::op_cases()) {
    const GradCheckReport r = testing::check_op(op, 17, opt);
    worst = std::max(worst, r.max_rel_error);
    if (!r.pass) failed += " " + op.name;
  }
  const GradCheckReport model = check_model_gradients(micro_model_config(ModelConfig{}), 3, opt);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed.empty() && model.pass && model.max_rel_error < 1e-4 && secs < 60.0;
  o.detail = std::to_string(testing::op_cases().size()) + " ops max rel " + fmt("%.2e", worst) + ", full loss max rel " +
             fmt("%.2e", model.max_rel_error) + ", " + fmt("%.1f s", secs) + (failed.empty() ? "" : ", failed:" + failed);
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome focal_attention_properties()
{
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  std::size_t bad = 0;
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = dim(rng), t = dim(rng), d = dim(rng);
    const Tensor<double> q = testing::uniform_tensor({m, t, d}, rng, -4.0, 4.0);
    const auto st = focal_attention(testing::uniform_tensor({d}, rng, -4.0, 4.0), q);
    double sa = 0.0;
    for (double v : st.a.data()) sa += v;
    worst_sum = std::max(worst_sum, std::abs(sa - 1.0));
    for (std::size_t j = 0; j < m; ++j) {
      double sb = 0.0;
      for (std::size_t k = 0; k < t; ++k) sb += st.b[j * t + k];
      worst_sum = std::max(worst_sum, std::abs(sb - 1.0));
    }
    for (std::size_t c = 0; c < d; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t r = 0; r < m * t; ++r) {
        lo = std::min(lo, q[r * d + c]);
        hi = std::max(hi, q[r * d + c]);
      }
      if (st.q[c] < lo || st.q[c] > hi) ++bad;
    }
  }
  std::size_t inexact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Graph<double> g;
    std::vector<NodeId> lasts;
    std::vector<Tensor<double>> vals;
    for (int j = 0; j < 5; ++j) {
      vals.push_back(testing::uniform_tensor({3, 8}, rng, -5.0, 5.0));
      lasts.push_back(g.input(vals.back()));
    }
    const Tensor<double> avg = g.value(mean_last_states(g, lasts));
    for (std::size_t i = 0; i < avg.size(); ++i) {
      double s = 0.0;
      for (const auto & v : vals) s += v[i];
      if (avg[i] != s / 5.0) ++inexact;
    }
  }
  ModelConfig cfg = micro_model_config(ModelConfig{});
  cfg.ablation.no_focal_attention = true;
  const Dataset ds = synthesize(micro_synth_config(cfg, 3));
  const std::vector<std::size_t> idx{0, 1};
  Graph<double> g;
  const ForwardResult fr = forward(g, init_params<double>(cfg, 3), cfg, make_batch<double>(ds, idx, cfg), {});
  Outcome o;
  o.pass = worst_sum <= 1e-9 && bad == 0 && inexact == 0 && fr.attention.empty();
  o.detail = "1000 draws, max |sum-1| " + fmt("%.1e", worst_sum) + ", hull violations " + std::to_string(bad) +
             ", uniform-average mismatches " + std::to_string(inexact);
  return o;
}

// 3 -------------------------------------------------------------------------

Outcome manhattan_grid()
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 1920.0), uy(0.0, 1080.0);
  double worst = 0.0;
  for (const ManhattanGrid & grid : {ManhattanGrid(32, 18, 1920.0, 1080.0), ManhattanGrid(16, 9, 1920.0, 1080.0)}) {
    for (int i = 0; i < 1000; ++i) {
      const Point p{ux(rng), uy(rng)};
      const GridTarget t = grid_encode(grid, p);
      const Point q = grid_decode(grid, t.id, t.offset);
      worst = std::max({worst, std::abs(q.x - p.x), std::abs(q.y - p.y)});
    }
  }
  const GridTarget ex = grid_encode(ManhattanGrid(32, 18, 1920.0, 1080.0), {100.0, 70.0});
  const bool example = ex.id == 33 && ex.offset.x == 10.0 && ex.offset.y == -20.0;
  return {worst < 1e-9 && example,
          "round trip max error " + fmt("%.1e", worst) + ", worked example " + (example ? "exact" : "mismatch")};
}

// 4 -------------------------------------------------------------------------

Outcome metrics_oracle()
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_int_distribution<std::size_t> n_dist(1, 30);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = n_dist(rng);
    std::vector<Path> pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < 12; ++t) {
        pred[i].push_back({u(rng), u(rng)});
        gt[i].push_back({u(rng), u(rng)});
      }
    }
    const auto [a, f] = testing::brute_ade_fde(pred, gt);
    worst = std::max({worst, std::abs(ade(pred, gt) - a), std::abs(fde(pred, gt) - f)});
  }
  Path gt, shifted, last;
  for (int t = 0; t < 12; ++t) {
    gt.push_back({1.5 * t, -0.5 * t});
    shifted.push_back({gt.back().x + 3.0, gt.back().y + 4.0});
  }
  last = gt;
  last.back() = shifted.back();
  const bool hand = ade({shifted}, {gt}) == 5.0 && fde({shifted}, {gt}) == 5.0 && ade({last}, {gt}) == 5.0 / 12.0 &&
                    fde({last}, {gt}) == 5.0;
  return {worst < 1e-12 && hand, "100 cases max deviation " + fmt("%.1e", worst) + ", hand cases " + (hand ? "exact" : "mismatch")};
}

// 5 -------------------------------------------------------------------------

ModelConfig small_model()
{
  ModelConfig cfg;
  cfg.hidden = 32;
  cfg.embed = 16;
  cfg.scene_channels = 16;
  cfg.appearance_dim = 16;
  return cfg;
}

Outcome overfit()
{
  const auto t0 = Clock::now();
  SynthConfig sc;
  sc.num_agents = 32;
  sc.appearance_dim = 16;
  sc.seed = 5;
  const Dataset ds = synthesize(sc);
  std::vector<std::size_t> idx(ds.samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 8;
  const auto res = train<double>(small_model(), ds, idx, tc);
  const double ratio = res.log.back().loss.l_xy / res.log.front().loss.l_xy;
  const double secs = seconds_since(t0);
  return {idx.size() == 32 && ratio < 0.01 && secs < 300.0,
          std::to_string(idx.size()) + " samples, final/initial L_xy " + fmt("%.4f", ratio) + ", " + fmt("%.0f s", secs)};
}

// 6, 7, 8, 10 share the trained full models ----------------------------------

struct Experiment
{
  Dataset ds;
  std::vector<std::size_t> train_idx, test_idx;
  ModelConfig cfg;
  TrainConfig tc;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<CandidateSet> full_candidates;
  std::vector<EvalReport> full_reports;
  std::optional<ParamStore<float>> first_model;
  double full_seconds = 0.0;
};

Experiment & experiment()
{
  static Experiment e = [] {
    const auto t0 = Clock::now();
    Experiment x;
    SynthConfig sc;
    sc.num_agents = 2500;
    sc.appearance_dim = 16;
    sc.seed = 11;
    x.ds = synthesize(sc);
    for (std::size_t i = 0; i < x.ds.samples.size(); ++i) (i % 5 == 0 ? x.test_idx : x.train_idx).push_back(i);
    x.cfg = small_model();
    x.tc.epochs = 12;
    x.tc.batch_size = 32;
    const auto samples = sample_ptrs(x.ds, x.test_idx);
    for (std::uint64_t seed : x.seeds) {
      x.tc.seed = seed;
      auto trained = train<float>(x.cfg, x.ds, x.train_idx, x.tc);
      CandidateSet c = model_candidates(trained.store, x.cfg, x.ds, x.test_idx, x.tc.batch_size);
      x.full_reports.push_back(evaluate(c.paths, samples, c.activity));
      x.full_candidates.push_back(std::move(c));
      if (!x.first_model) x.first_model = std::move(trained.store);
    }
    x.full_seconds = seconds_since(t0);
    return x;
  }();
  return e;
}

Outcome ablation_directions()
{
  const auto t0 = Clock::now();
  Experiment & x = experiment();
  const auto rows = ablation_run<float>({parse_ablation("no_multitask"), parse_ablation("no_behavior")}, x.cfg, x.ds,
                                        x.train_idx, x.test_idx, x.tc, x.seeds);
  double full_ade = 0.0, full_map = 0.0;
  for (const auto & r : x.full_reports) {
    full_ade += r.ade;
    full_map += r.activity_map.value_or(NAN);
  }
  full_ade /= static_cast<double>(x.full_reports.size());
  full_map /= static_cast<double>(x.full_reports.size());
  const double nm_ade = rows[0].mean_ade;
  const double nb_map = rows[1].mean_map.value_or(NAN);
  const double secs = x.full_seconds + seconds_since(t0);
  return {x.train_idx.size() == 2000 && x.test_idx.size() == 500 && full_ade < nm_ade && full_map > nb_map && secs < 1200.0,
          "2000/500, 5 seeds: ADE full " + fmt("%.3f", full_ade) + " < no_multitask " + fmt("%.3f", nm_ade) +
            "; mAP full " + fmt("%.4f", full_map) + " > no_behavior " + fmt("%.4f", nb_map) + ", " + fmt("%.0f s", secs)};
}

Outcome baseline_directions()
{
  Experiment & x = experiment();
  const auto tr = sample_ptrs(x.ds, x.train_idx), te = sample_ptrs(x.ds, x.test_idx);
  const double model = x.full_reports.front().ade;
  const double lin = linear_baseline(tr, te).ade;
  const double nn = nearest_neighbor_baseline(tr, te).ade;
  return {model < lin && model < nn,
          "ADE model " + fmt("%.3f", model) + " < linear " + fmt("%.3f", lin) + ", < nearest neighbor " + fmt("%.3f", nn)};
}

Outcome best_of_k_property()
{
  Experiment & x = experiment();
  const auto te = sample_ptrs(x.ds, x.test_idx);
  const EvalReport single = evaluate(x.full_candidates[0].paths, te, x.full_candidates[0].activity);
  std::vector<double> ades;
  bool equal_at_one = false;
  for (std::size_t k : {1u, 2u, 5u}) {
    const EvalReport r = best_of_k({x.full_candidates.begin(), x.full_candidates.begin() + static_cast<std::ptrdiff_t>(k)}, te);
    if (k == 1) equal_at_one = r == single;
    ades.push_back(r.ade);
  }
  const bool monotone = ades[1] <= ades[0] && ades[2] <= ades[1];
  return {equal_at_one && monotone, "ADE k=1 " + fmt("%.3f", ades[0]) + ", k=2 " + fmt("%.3f", ades[1]) + ", k=5 " +
                                      fmt("%.3f", ades[2]) + (equal_at_one ? ", k=1 equals single" : ", k=1 differs")};
}

// 9 -------------------------------------------------------------------------

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string & args, const fs::path & log)
{
  const std::string cmd = std::string(TRAJACT_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

Outcome determinism()
{
  const fs::path dir = fs::temp_directory_path() / "trajact_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json cfg = {{"seed", 4},
                              {"threads", 1},
                              {"model", {{"hidden", 16}, {"embed", 8}, {"scene_channels", 8}, {"appearance_dim", 16}}},
                              {"train", {{"epochs", 2}, {"batch_size", 16}}},
                              {"synth", {{"num_scenes", 2}, {"num_agents", 120}, {"appearance_dim", 16}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  const std::string c = "-c " + (dir / "config.json").string();
  const fs::path log = dir / "log.txt";
  if (run_cli("synth " + c + " -o " + (dir / "a").string(), log) || run_cli("synth " + c + " -o " + (dir / "b").string(), log)) {
    return {false, "synth failed: " + slurp(log)};
  }
  std::size_t synth_files = 0, synth_diff = 0;
  for (const auto & e : fs::directory_iterator(dir / "a")) {
    ++synth_files;
    if (slurp(e.path()) != slurp(dir / "b" / e.path().filename())) ++synth_diff;
  }
  const std::string train = "train " + c + " --dataset " + (dir / "a" / "manifest.json").string() + " -o " + (dir / "t").string();
  const std::vector<std::string> artifacts{"checkpoint.bin", "loss_log.json", "config.json"};
  if (run_cli(train, log)) return {false, "train failed: " + slurp(log)};
  std::vector<std::string> first;
  for (const auto & a : artifacts) first.push_back(slurp(dir / "t" / a));
  if (run_cli(train, log)) return {false, "train failed: " + slurp(log)};
  std::size_t train_diff = 0;
  for (std::size_t i = 0; i < artifacts.size(); ++i) train_diff += slurp(dir / "t" / artifacts[i]) != first[i];
  fs::remove_all(dir);
  return {synth_files > 0 && synth_diff == 0 && train_diff == 0,
          std::to_string(synth_files) + " synth files, " + std::to_string(synth_diff) + " differ; " +
            std::to_string(artifacts.size()) + " train artifacts, " + std::to_string(train_diff) + " differ"};
}

// 10 ------------------------------------------------------------------------

Outcome checkpoint_round_trip()
{
  Experiment & x = experiment();
  const fs::path path = fs::temp_directory_path() / "trajact_acceptance_ckpt.bin";
  const ParamStore<float> & store = *x.first_model;
  const EvalReport before = evaluate_model(store, x.cfg, x.ds, x.test_idx);
  save_checkpoint(path.string(), store, nlohmann::json::object());
  const EvalReport after = evaluate_model(load_checkpoint<float>(path.string()), x.cfg, x.ds, x.test_idx);

  ModelConfig micro = micro_model_config(ModelConfig{});
  const Dataset ds = synthesize(micro_synth_config(micro, 6));
  std::vector<std::size_t> idx(ds.samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  ParamStore<double> wide = train<double>(micro, ds, idx, tc).store;
  save_checkpoint(path.string(), wide, nlohmann::json::object());
  wide.quantize_f32();
  const EvalReport wide_before = evaluate_model(wide, micro, ds, idx);
  const EvalReport wide_after = evaluate_model(load_checkpoint<double>(path.string()), micro, ds, idx);
  fs::remove(path);
  const bool f32 = before == after, f64 = wide_before == wide_after;
  return {f32 && f64, std::string("float model report ") + (f32 ? "identical" : "differs") +
                        ", double model quantized report " + (f64 ? "identical" : "differs") + ", ADE " +
                        fmt("%.4f", after.ade)};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"gradient fidelity", gradient_fidelity},
    {"focal attention", focal_attention_properties},
    {"manhattan grid", manhattan_grid},
    {"metrics oracle", metrics_oracle},
    {"overfit sanity", overfit},
    {"ablation directions", ablation_directions},
    {"baseline directions", baseline_directions},
    {"best-of-k property", best_of_k_property},
    {"determinism", determinism},
    {"checkpoint round trip", checkpoint_round_trip},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failures) << "/"
            << criteria.size() << std::endl;
  return failures ? 1 : 0;
}
