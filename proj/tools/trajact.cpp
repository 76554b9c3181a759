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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trajact/autodiff/param_store.hpp"
#include "trajact/data/dataset_io.hpp"
#include "trajact/data/window.hpp"
#include "trajact/error.hpp"
#include "trajact/model/attention.hpp"
#include "trajact/model/grid.hpp"
#include "trajact/model/model.hpp"
#include "trajact/run_config.hpp"
#include "trajact/synth.hpp"
#include "trajact/train/ablation.hpp"
#include "trajact/train/baselines.hpp"
#include "trajact/train/metrics.hpp"
#include "trajact/train/model_grad_check.hpp"
#include "trajact/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajact;

namespace
{

struct CommonArgs
{
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::uint64_t> seed;
  std::string dump_config;
};

void add_common(CLI::App * cmd, CommonArgs & a)
{
  cmd->add_option("-c,--config", a.config_path, "JSON run config");
  cmd->add_option("--set", a.overrides, "Override a config key: key.path=value (repeatable)");
  cmd->add_option("-o,--out", a.out, "Output directory");
  cmd->add_option("--dataset", a.dataset, "Dataset manifest path");
  cmd->add_option("--seed", a.seed, "Random seed");
  cmd->add_option("--dump-config", a.dump_config, "Write the effective config to this path");
}

RunConfig resolve_config(const CommonArgs & a, const std::vector<std::string> & extra = {})
{
  json j = json::object();
  if (!a.config_path.empty()) {
    j = json::parse(read_text_file(a.config_path), nullptr, false);
    if (j.is_discarded()) fail("bad_config", "config '", a.config_path, "' is not valid JSON");
  }
  for (const auto & o : a.overrides) apply_override(j, o);
  for (const auto & o : extra) apply_override(j, o);
  if (a.out) j["output_dir"] = *a.out;
  if (a.dataset) j["dataset"] = *a.dataset;
  if (a.seed) j["seed"] = *a.seed;
  RunConfig cfg = run_config_from_json(j);
  if (!a.dump_config.empty()) write_text_file(a.dump_config, to_json(cfg).dump(2) + "\n");
  return cfg;
}

fs::path prepare_out(const RunConfig & cfg)
{
  const fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) fail("io_error", "cannot create output directory '", out.string(), "'");
  return out;
}

void write_json(const fs::path & path, const json & j) { write_text_file(path, j.dump(2) + "\n"); }

Dataset load_for(const RunConfig & cfg)
{
  if (cfg.dataset.empty()) fail("bad_config", "no dataset manifest given (set \"dataset\" or --dataset)");
  Dataset ds = load_dataset(cfg.dataset, window_options(cfg));
  if (!cfg.model.coords_only && ds.appearance_dim != cfg.model.appearance_dim) {
    fail("shape_mismatch", "dataset appearance_dim ", ds.appearance_dim, " != model.appearance_dim ",
         cfg.model.appearance_dim);
  }
  return ds;
}

std::size_t eval_threads(const RunConfig & cfg)
{
  return cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
}

template <typename Real>
void check_compatible(const ParamStore<Real> & store, const ModelConfig & cfg, const std::string & path)
{
  const ParamStore<Real> ref = init_params<Real>(cfg, 0);
  for (const auto & [name, e] : ref.entries()) {
    if (!store.contains(name)) fail("shape_mismatch", path, ": missing parameter '", name, "'");
    if (store.value(name).shape() != e.value.shape()) {
      fail("shape_mismatch", path, ": parameter '", name, "' has shape ", shape_str(store.value(name).shape()),
           ", config expects ", shape_str(e.value.shape()));
    }
  }
  for (const auto & [name, e] : store.entries()) {
    if (!ref.contains(name)) fail("shape_mismatch", path, ": unexpected parameter '", name, "'");
  }
}

// synth ---------------------------------------------------------------------

int cmd_synth(const RunConfig & cfg)
{
  const fs::path out = prepare_out(cfg);
  const SynthOutput synth = generate_dataset(cfg.synth);
  write_synthetic(synth, cfg.synth, out);
  std::cout << json{{"manifest", (out / "manifest.json").string()}, {"agents", synth.agents.size()}}.dump() << '\n';
  return 0;
}

// train ---------------------------------------------------------------------

template <typename Real>
int cmd_train(const RunConfig & cfg, const std::string & resume)
{
  const fs::path out = prepare_out(cfg);
  const Dataset ds = load_for(cfg);
  const auto [train_idx, test_idx] = split_indices(ds, cfg);
  std::optional<ParamStore<Real>> start;
  std::size_t first_epoch = 0;
  json log = json::array();
  if (!resume.empty()) {
    json meta;
    start = load_checkpoint<Real>(resume, &meta);
    check_compatible(*start, cfg.model, resume);
    first_epoch = meta.value("epochs_done", std::size_t{0});
    log = meta.value("loss_log", json::array());
  }
  const fs::path ckpt = out / "checkpoint.bin";
  auto save = [&](const ParamStore<Real> & store, std::size_t epochs_done) {
    save_checkpoint(ckpt.string(), store,
                    json{{"epochs_done", epochs_done}, {"loss_log", log}, {"config", to_json(cfg)}});
    write_json(out / "loss_log.json", log);
  };
  if (first_epoch >= cfg.train.epochs) {
    ParamStore<Real> store = start ? std::move(*start) : init_params<Real>(cfg.model, cfg.seed);
    save(store, first_epoch);
  } else {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    if (!start) save(init_params<Real>(cfg.model, tc.seed), 0);
    train<Real>(cfg.model, ds, train_idx, tc, std::move(start), first_epoch,
                [&](const EpochLog & e, const ParamStore<Real> & store) {
                  log.push_back(to_json(e));
                  std::cerr << "epoch " << e.epoch << " L_xy " << e.loss.l_xy << " total " << e.loss.total << '\n';
                  save(store, e.epoch);
                });
  }
  write_json(out / "config.json", to_json(cfg));
  std::cout << json{{"checkpoint", ckpt.string()}, {"epochs", log.size()}, {"train_samples", train_idx.size()},
                    {"final", log.empty() ? json(nullptr) : log.back()}}
                 .dump()
            << '\n';
  return 0;
}

// eval ----------------------------------------------------------------------

template <typename Real>
int cmd_eval(const RunConfig & cfg, const std::vector<std::string> & checkpoints, bool baselines)
{
  const fs::path out = prepare_out(cfg);
  const Dataset ds = load_for(cfg);
  const auto [train_idx, test_idx] = split_indices(ds, cfg);
  if (test_idx.empty()) fail("empty_input", "test split is empty");
  const auto samples = sample_ptrs(ds, test_idx);
  std::vector<CandidateSet> cands;
  for (const auto & path : checkpoints) {
    const ParamStore<Real> store = load_checkpoint<Real>(path);
    check_compatible(store, cfg.model, path);
    cands.push_back(model_candidates(store, cfg.model, ds, test_idx, cfg.eval_batch_size, eval_threads(cfg)));
  }
  const EvalReport report = cands.size() == 1 ? evaluate(cands[0].paths, samples, cands[0].activity)
                                              : best_of_k(cands, samples);
  json j = to_json(report);
  j["k"] = cands.size();
  if (baselines) {
    const auto train_samples = sample_ptrs(ds, train_idx);
    j["baselines"] = {{"linear", to_json(linear_baseline(train_samples, samples))},
                      {"nearest_neighbor", to_json(nearest_neighbor_baseline(train_samples, samples))}};
  }
  write_json(out / "report.json", j);
  write_trajectory_csv((out / "trajectories.csv").string(), report);
  std::cout << j.dump() << '\n';
  return 0;
}

// predict -------------------------------------------------------------------

template <typename Real>
int cmd_predict(const RunConfig & cfg, const std::string & checkpoint, const std::string & window,
                std::optional<std::size_t> sample)
{
  const fs::path out = prepare_out(cfg);
  const ParamStore<Real> store = load_checkpoint<Real>(checkpoint);
  check_compatible(store, cfg.model, checkpoint);
  Dataset ds;
  std::size_t index = 0;
  if (!window.empty()) {
    const json w = json::parse(read_text_file(window), nullptr, false);
    if (w.is_discarded()) fail("bad_window", "window '", window, "' is not valid JSON");
    std::optional<Dataset> known;
    if (w.is_object() && w.contains("scene_id")) known = load_for(cfg);
    ds = parse_window(w, cfg.model.obs_len, cfg.model.appearance_dim, known ? &*known : nullptr);
  } else if (sample) {
    ds = load_for(cfg);
    if (*sample >= ds.samples.size()) fail("bad_window", "sample index ", *sample, " out of range (", ds.samples.size(), ")");
    index = *sample;
  } else {
    fail("bad_window", "give --window or --sample");
  }
  PredictOptions po;
  po.details = true;
  const std::vector<std::size_t> idx{index};
  const PersonPrediction p = predict(store, cfg.model, ds, idx, po).front();

  json path = json::array();
  for (const Point & q : p.path) path.push_back({q.x, q.y});
  json names = json::array();
  for (auto n : kActivityNames) names.push_back(std::string(n));
  json heatmaps = json::array();
  for (std::size_t i = 0; i < p.grid_logits.size(); ++i) {
    const std::string name = "heatmap_scale" + std::to_string(i) + ".csv";
    const auto & logits = p.grid_logits[i];
    write_heatmap_csv((out / name).string(), Tensor<double>({logits.size()}, logits), cfg.model.grid_scales[i]);
    heatmaps.push_back(name);
  }
  json result = {{"path", path}, {"heatmaps", heatmaps}};
  if (!p.activity.empty()) result["activity"] = {{"names", names}, {"scores", p.activity}};
  if (p.destination) {
    result["destination"] = {{"xy", {p.destination->x, p.destination->y}},
                             {"scale", p.destination_scale},
                             {"block", p.destination_block}};
  }
  if (!p.attention.empty()) {
    write_json(out / "attention.json", attention_to_json(p.attention));
    result["attention"] = "attention.json";
  }
  write_json(out / "prediction.json", result);
  std::cout << result.dump() << '\n';
  return 0;
}

// ablate --------------------------------------------------------------------

template <typename Real>
int cmd_ablate(const RunConfig & cfg)
{
  const fs::path out = prepare_out(cfg);
  const Dataset ds = load_for(cfg);
  const auto [train_idx, test_idx] = split_indices(ds, cfg);
  std::vector<AblationFlags> variants;
  for (const auto & v : cfg.ablate_variants) variants.push_back(parse_ablation(v));
  const auto rows = ablation_run<Real>(variants, cfg.model, ds, train_idx, test_idx, cfg.train, cfg.ablate_seeds,
                                       [](const AblationFlags & f, std::uint64_t seed, const EvalReport & r) {
                                         std::cerr << f.label() << " seed " << seed << " ADE " << r.ade << '\n';
                                       });
  const json j = to_json(rows);
  write_json(out / "ablation.json", j);
  for (const auto & r : rows) {
    std::cout << json{{"variant", r.flags.label()}, {"mean_ADE", r.mean_ade}, {"mean_FDE", r.mean_fde},
                      {"mean_activity_mAP", r.mean_map ? json(*r.mean_map) : json(nullptr)}}
                   .dump()
              << '\n';
  }
  return 0;
}

// grad-check ----------------------------------------------------------------

int cmd_grad_check(const RunConfig & cfg, const GradCheckOptions & opt)
{
  const GradCheckReport r = check_model_gradients(micro_model_config(cfg.model), cfg.seed, opt);
  json entries = json::array();
  for (const auto & e : r.entries) {
    entries.push_back({{"name", e.name}, {"checked", e.checked}, {"max_rel_error", e.max_rel_error}, {"pass", e.pass}});
  }
  std::cout << json{{"pass", r.pass}, {"max_rel_error", r.max_rel_error}, {"tolerance", opt.tolerance},
                    {"entries", entries}}
                 .dump(2)
            << '\n';
  if (!r.pass) fail("grad_check_failed", "max relative error ", r.max_rel_error, " >= ", opt.tolerance);
  return 0;
}

template <typename F>
int with_precision(const RunConfig & cfg, F && f)
{
  return cfg.precision == "double" ? f(double{}) : f(float{});
}

std::string one_line(std::string s)
{
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"trajact: joint future path and activity prediction"};
  app.require_subcommand(1);

  CommonArgs synth_a, train_a, eval_a, pred_a, abl_a, gc_a;
  auto * synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, synth_a);

  auto * train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, train_a);
  std::string resume;
  std::optional<std::size_t> epochs;
  AblationFlags train_flags;
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");
  train_cmd->add_option("--epochs", epochs, "Total number of epochs");
  train_cmd->add_flag("--no-behavior", train_flags.no_behavior, "Drop appearance and keypoint features");
  train_cmd->add_flag("--no-interaction", train_flags.no_interaction, "Drop scene and object features");
  train_cmd->add_flag("--no-focal-attention", train_flags.no_focal_attention, "Average last states instead of attending");
  train_cmd->add_flag("--no-act-label", train_flags.no_act_label, "Drop the activity label loss");
  train_cmd->add_flag("--no-act-location", train_flags.no_act_location, "Drop the grid losses");
  train_cmd->add_flag("--no-multitask", train_flags.no_multitask, "Train on the trajectory loss only");

  auto * eval_cmd = app.add_subcommand("eval", "Evaluate one checkpoint, or best-of-k over several");
  add_common(eval_cmd, eval_a);
  std::vector<std::string> checkpoints;
  bool baselines = false;
  eval_cmd->add_option("--checkpoint", checkpoints, "Checkpoint path (repeat for best-of-k)")->required();
  eval_cmd->add_flag("--baselines", baselines, "Also report linear and nearest-neighbor baselines");

  auto * pred_cmd = app.add_subcommand("predict", "Predict one window");
  add_common(pred_cmd, pred_a);
  std::string pred_ckpt, window;
  std::optional<std::size_t> sample;
  pred_cmd->add_option("--checkpoint", pred_ckpt, "Checkpoint path")->required();
  pred_cmd->add_option("--window", window, "Observation window JSON");
  pred_cmd->add_option("--sample", sample, "Index of a dataset sample to use as the window");

  auto * abl_cmd = app.add_subcommand("ablate", "Train and evaluate ablation variants");
  add_common(abl_cmd, abl_a);

  auto * gc_cmd = app.add_subcommand("grad-check", "Check model gradients against finite differences");
  add_common(gc_cmd, gc_a);
  GradCheckOptions gco;
  gc_cmd->add_option("--tolerance", gco.tolerance, "Maximum relative error");
  gc_cmd->add_option("--step", gco.step, "Central-difference step");
  gc_cmd->add_option("--max-per-entry", gco.max_per_entry, "Check at most this many entries per parameter (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*synth) return cmd_synth(resolve_config(synth_a));
    if (*train_cmd) {
      std::vector<std::string> extra;
      if (epochs) extra.push_back("train.epochs=" + std::to_string(*epochs));
      const auto flag = [&](bool on, const char * key) {
        if (on) extra.push_back(std::string("ablation.") + key + "=true");
      };
      flag(train_flags.no_behavior, "no_behavior");
      flag(train_flags.no_interaction, "no_interaction");
      flag(train_flags.no_focal_attention, "no_focal_attention");
      flag(train_flags.no_act_label, "no_act_label");
      flag(train_flags.no_act_location, "no_act_location");
      flag(train_flags.no_multitask, "no_multitask");
      const RunConfig cfg = resolve_config(train_a, extra);
      return with_precision(cfg, [&](auto r) { return cmd_train<decltype(r)>(cfg, resume); });
    }
    if (*eval_cmd) {
      const RunConfig cfg = resolve_config(eval_a);
      return with_precision(cfg, [&](auto r) { return cmd_eval<decltype(r)>(cfg, checkpoints, baselines); });
    }
    if (*pred_cmd) {
      const RunConfig cfg = resolve_config(pred_a);
      return with_precision(cfg, [&](auto r) { return cmd_predict<decltype(r)>(cfg, pred_ckpt, window, sample); });
    }
    if (*abl_cmd) {
      const RunConfig cfg = resolve_config(abl_a);
      return with_precision(cfg, [&](auto r) { return cmd_ablate<decltype(r)>(cfg); });
    }
    if (*gc_cmd) return cmd_grad_check(resolve_config(gc_a), gco);
  } catch (const Error & e) {
    std::cerr << "error: " << e.code() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception & e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
