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

#ifndef TRAJACT__SYNTH_HPP_
#define TRAJACT__SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/autodiff/tensor.hpp"
#include "trajact/data/catalog.hpp"
#include "trajact/data/dataset_io.hpp"
#include "trajact/data/ingest.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"

namespace trajact
{

/// A behavior pattern: how an agent moves and which activities it carries.
struct Archetype
{
  std::string name;
  std::vector<std::string> obs_activities;
  std::vector<std::string> future_activities;
  double speed_lo = 0.0;  // frame units per step
  double speed_hi = 0.0;
  double turn_deg = 0.0;      // heading change toward the second goal
  double after_turn = 1.0;    // speed multiplier on the second leg
  double weight = 1.0;
};

inline std::vector<Archetype> default_archetypes()
{
  return {
    {"walk_straight", {"Walk"}, {"Walk"}, 8.0, 14.0, 0.0, 1.0, 1.0},
    {"turn_left_carry", {"Walk", "Carry"}, {"Walk", "Carry"}, 8.0, 14.0, 70.0, 1.0, 1.0},
    {"approach_door", {"Walk"}, {"Open_Door"}, 8.0, 14.0, -70.0, 0.4, 1.0},
    {"run", {"Run"}, {"Run"}, 18.0, 24.0, 0.0, 1.0, 1.0},
    {"ride_bike", {"Ride_Bike"}, {"Ride_Bike"}, 22.0, 28.0, -30.0, 1.0, 1.0},
    {"stand_talk", {"Stand", "Talk"}, {"Stand", "Talk"}, 0.0, 0.0, 0.0, 1.0, 1.0},
    {"load_trunk", {"Stand"}, {"Open_Trunk", "Load"}, 0.0, 1.5, 0.0, 1.0, 1.0},
    {"texting_stroll", {"Walk", "Texting"}, {"Walk", "Texting"}, 4.0, 7.0, 0.0, 1.0, 1.0},
  };
}

struct SynthConfig
{
  std::uint64_t seed = 7;
  std::size_t num_scenes = 4;
  std::size_t num_agents = 400;  // distributed round-robin over scenes
  double frame_w = 1920.0;
  double frame_h = 1080.0;
  std::size_t mask_h = 36;
  std::size_t mask_w = 64;
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t timeline = 240;  // frames per scene over which agents start
  double noise = 2.0;          // per-step Gaussian std, frame units
  std::size_t appearance_dim = 32;
  double feature_noise = 0.5;
  double keypoint_noise = 0.03;
  double box_w = 50.0;
  double box_h = 80.0;
  std::size_t objects_per_scene = 6;
  std::vector<Archetype> archetypes = default_archetypes();
};

struct SynthAgent
{
  std::string scene_id;
  std::int64_t person_id = 0;
  std::size_t archetype = 0;
};

struct SynthOutput
{
  std::vector<SceneSource> scenes;
  std::vector<SynthAgent> agents;
};

inline void validate(const SynthConfig & cfg)
{
  if (cfg.num_scenes == 0) fail("bad_config", "synth: num_scenes must be positive");
  if (cfg.archetypes.empty()) fail("bad_config", "synth: no archetypes");
  if (cfg.obs_len == 0 || cfg.pred_len == 0) fail("bad_config", "synth: window lengths must be positive");
  if (cfg.noise < 0.0 || cfg.feature_noise < 0.0 || cfg.keypoint_noise < 0.0) {
    fail("bad_config", "synth: noise scales must be nonnegative");
  }
  if (cfg.mask_h == 0 || cfg.mask_w == 0 || cfg.frame_w <= 0.0 || cfg.frame_h <= 0.0) {
    fail("bad_config", "synth: frame and mask sizes must be positive");
  }
  double total_weight = 0.0;
  const double steps = static_cast<double>(cfg.obs_len + cfg.pred_len - 1);
  for (const auto & a : cfg.archetypes) {
    if (a.speed_lo < 0.0 || a.speed_hi < a.speed_lo) fail("bad_config", "synth: bad speed range for ", a.name);
    if (a.weight < 0.0 || a.after_turn < 0.0) fail("bad_config", "synth: negative weight for ", a.name);
    total_weight += a.weight;
    for (const auto & n : a.obs_activities) {
      if (!activity_id(n)) fail("bad_config", "synth: unknown activity '", n, "'");
    }
    for (const auto & n : a.future_activities) {
      if (!activity_id(n)) fail("bad_config", "synth: unknown activity '", n, "'");
    }
    // Worst-case path extent plus a 4-sigma noise envelope must fit inside the frame.
    const double extent = a.speed_hi * steps * std::max(1.0, a.after_turn) + 8.0 * cfg.noise * std::sqrt(steps);
    if (extent + cfg.box_w >= cfg.frame_w || extent + cfg.box_h >= cfg.frame_h) {
      fail("infeasible", "synth: archetype '", a.name, "' needs a path extent of ", extent,
           " which does not fit the ", cfg.frame_w, "x", cfg.frame_h, " frame");
    }
  }
  if (total_weight <= 0.0) fail("bad_config", "synth: archetype weights sum to zero");
}

namespace detail
{
inline SceneContext make_scene_layout(const SynthConfig & cfg, const std::string & id, std::mt19937_64 & rng)
{
  SceneContext s;
  s.scene_id = id;
  s.frame_w = cfg.frame_w;
  s.frame_h = cfg.frame_h;
  s.mask_h = cfg.mask_h;
  s.mask_w = cfg.mask_w;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Building strip on top, a road band with sidewalks on both sides, grass and parking below.
  const double top = 0.1 + 0.15 * u01(rng);
  const double road_lo = 0.35 + 0.15 * u01(rng);
  const double road_hi = road_lo + 0.15 + 0.1 * u01(rng);
  const double park_x = 0.3 + 0.4 * u01(rng);
  s.class_map.resize(s.mask_h * s.mask_w);
  for (std::size_t r = 0; r < s.mask_h; ++r) {
    const double y = (static_cast<double>(r) + 0.5) / static_cast<double>(s.mask_h);
    for (std::size_t c = 0; c < s.mask_w; ++c) {
      const double x = (static_cast<double>(c) + 0.5) / static_cast<double>(s.mask_w);
      int cls = 2;  // grass
      if (y < top) {
        cls = 4;  // building
      } else if (y < road_lo - 0.05) {
        cls = 1;  // sidewalk
      } else if (y < road_lo) {
        cls = x > 0.45 && x < 0.55 ? 7 : 1;  // crosswalk stub
      } else if (y < road_hi) {
        cls = x > 0.45 && x < 0.55 ? 7 : 0;
      } else if (y < road_hi + 0.05) {
        cls = 1;
      } else if (x > park_x) {
        cls = 3;  // parking
      }
      s.class_map[r * s.mask_w + c] = cls;
    }
  }
  std::uniform_int_distribution<int> obj_class(0, static_cast<int>(kNumObjectClasses) - 1);
  for (std::size_t k = 0; k < cfg.objects_per_scene; ++k) {
    int cls = obj_class(rng);
    if (cls == *object_id("Person")) cls = *object_id("Vehicle");
    const double w = cls == *object_id("Vehicle") ? 180.0 + 80.0 * u01(rng) : 40.0 + 60.0 * u01(rng);
    const double h = cls == *object_id("Vehicle") ? 100.0 + 40.0 * u01(rng) : 40.0 + 80.0 * u01(rng);
    s.objects.push_back({cls, {u01(rng) * (cfg.frame_w - w), u01(rng) * (cfg.frame_h - h), w, h}});
  }
  return s;
}

inline std::vector<Point> rollout_agent(const Archetype & a, std::size_t len, std::size_t turn_step,
                                        double speed, double heading, double noise, std::mt19937_64 & rng)
{
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double far = 1e6;
  const Point start{0.0, 0.0};
  const Point waypoint{std::cos(heading) * speed * static_cast<double>(turn_step),
                       std::sin(heading) * speed * static_cast<double>(turn_step)};
  const double h2 = heading + a.turn_deg * std::numbers::pi / 180.0;
  // Straight archetypes aim at a distant goal on the initial heading and never switch.
  const Point goal1 = a.turn_deg == 0.0 ? Point{std::cos(heading) * far, std::sin(heading) * far} : waypoint;
  const Point goal2{waypoint.x + std::cos(h2) * far, waypoint.y + std::sin(h2) * far};
  std::vector<Point> pts{start};
  Point pos = start;
  for (std::size_t t = 1; t < len; ++t) {
    const bool second_leg = a.turn_deg != 0.0 && t > turn_step;
    const Point goal = second_leg ? goal2 : goal1;
    const double v = speed * (second_leg ? a.after_turn : 1.0);
    const double dx = goal.x - pos.x;
    const double dy = goal.y - pos.y;
    const double dist = std::hypot(dx, dy);
    if (dist > 0.0 && v > 0.0) {
      const double step = std::min(v, dist);
      pos.x += dx / dist * step;
      pos.y += dy / dist * step;
    }
    if (noise > 0.0) {
      pos.x += noise * gauss(rng);
      pos.y += noise * gauss(rng);
    }
    pts.push_back(pos);
  }
  return pts;
}
}  // namespace detail

/**
 * @brief Generates a full synthetic dataset in the same form the file loaders produce.
 *
 * Every agent contributes exactly obs_len + pred_len points. Appearance and keypoint
 * features are archetype codes plus Gaussian noise, so the future activity is
 * recoverable from the observed features.
 */
inline SynthOutput generate_dataset(const SynthConfig & cfg)
{
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Archetype codes come from their own stream so they do not depend on scene count.
  std::mt19937_64 code_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::vector<double>> app_codes(cfg.archetypes.size());
  std::vector<std::vector<double>> pose_codes(cfg.archetypes.size());
  for (std::size_t a = 0; a < cfg.archetypes.size(); ++a) {
    for (std::size_t k = 0; k < cfg.appearance_dim; ++k) app_codes[a].push_back(gauss(code_rng));
    for (std::size_t j = 0; j < kNumKeypoints; ++j) {
      pose_codes[a].push_back(0.2 + 0.6 * u01(code_rng));
      pose_codes[a].push_back(0.05 + 0.9 * static_cast<double>(j) / static_cast<double>(kNumKeypoints) +
                              0.05 * u01(code_rng));
    }
  }

  SynthOutput out;
  for (std::size_t s = 0; s < cfg.num_scenes; ++s) {
    SceneSource src;
    src.context = detail::make_scene_layout(cfg, "synth" + std::to_string(s), rng);
    src.box_w = cfg.box_w;
    src.box_h = cfg.box_h;
    src.frame_stride = 1;
    src.has_features = true;
    src.has_activities = true;
    out.scenes.push_back(std::move(src));
  }

  std::vector<double> weights;
  for (const auto & a : cfg.archetypes) weights.push_back(a.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const std::size_t len = cfg.obs_len + cfg.pred_len;
  std::uniform_int_distribution<std::size_t> turn_jitter(0, 4);
  std::uniform_int_distribution<std::int64_t> start_frame(0, static_cast<std::int64_t>(cfg.timeline));

  for (std::size_t i = 0; i < cfg.num_agents; ++i) {
    auto & src = out.scenes[i % cfg.num_scenes];
    const std::int64_t pid = static_cast<std::int64_t>(i);
    const std::size_t ai = pick(rng);
    const Archetype & a = cfg.archetypes[ai];
    const double speed = a.speed_lo + (a.speed_hi - a.speed_lo) * u01(rng);
    const double heading = 2.0 * std::numbers::pi * u01(rng);
    const std::size_t turn_step = cfg.obs_len - 1 + turn_jitter(rng);
    auto pts = detail::rollout_agent(a, len, turn_step, speed, heading, cfg.noise, rng);

    // Place the path so the foot points and their boxes stay inside the frame.
    double min_x = pts[0].x, max_x = pts[0].x, min_y = pts[0].y, max_y = pts[0].y;
    for (const auto & p : pts) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const double lo_x = cfg.box_w / 2.0 - min_x;
    const double hi_x = cfg.frame_w - cfg.box_w / 2.0 - max_x;
    const double lo_y = cfg.box_h - min_y;
    const double hi_y = cfg.frame_h - 1.0 - max_y;
    const double ox = lo_x + (hi_x - lo_x) * u01(rng);
    const double oy = lo_y + (hi_y - lo_y) * u01(rng);
    for (auto & p : pts) {
      p.x = std::clamp(p.x + ox, 0.0, cfg.frame_w);
      p.y = std::clamp(p.y + oy, 0.0, cfg.frame_h);
    }

    const std::int64_t f0 = start_frame(rng);
    std::vector<int> obs_ids, fut_ids;
    for (const auto & n : a.obs_activities) obs_ids.push_back(*activity_id(n));
    for (const auto & n : a.future_activities) fut_ids.push_back(*activity_id(n));
    std::sort(obs_ids.begin(), obs_ids.end());
    std::sort(fut_ids.begin(), fut_ids.end());
    for (std::size_t t = 0; t < len; ++t) {
      const std::int64_t frame = f0 + static_cast<std::int64_t>(t);
      src.rows.push_back({frame, pid, pts[t].x, pts[t].y});
      src.activities[pid][frame] = t < cfg.obs_len ? obs_ids : fut_ids;
      if (t >= cfg.obs_len) continue;
      std::vector<double> app(cfg.appearance_dim);
      for (std::size_t k = 0; k < cfg.appearance_dim; ++k) {
        app[k] = app_codes[ai][k] + cfg.feature_noise * gauss(rng);
      }
      const Box box = expand_point_to_box(pts[t], cfg.frame_w, cfg.frame_h, cfg.box_w, cfg.box_h);
      std::vector<double> kp(kKeypointDim);
      for (std::size_t j = 0; j < kNumKeypoints; ++j) {
        kp[2 * j] = box.x + box.w * (pose_codes[ai][2 * j] + cfg.keypoint_noise * gauss(rng));
        kp[2 * j + 1] = box.y + box.h * (pose_codes[ai][2 * j + 1] + cfg.keypoint_noise * gauss(rng));
      }
      src.features.emplace(FeatureKey{pid, frame, kAppearanceChannel}, std::move(app));
      src.features.emplace(FeatureKey{pid, frame, kKeypointChannel}, std::move(kp));
    }
    out.agents.push_back({src.context.scene_id, pid, ai});
  }
  for (auto & src : out.scenes) {
    std::sort(src.rows.begin(), src.rows.end(), [](const TrackRow & x, const TrackRow & y) {
      return std::tie(x.person, x.frame) < std::tie(y.person, y.frame);
    });
  }
  return out;
}

inline Dataset to_dataset(const SynthOutput & synth, const SynthConfig & cfg, std::size_t window_stride = 1)
{
  Dataset ds;
  ds.appearance_dim = cfg.appearance_dim;
  ds.units = "pixels";
  const WindowOptions win{cfg.obs_len, cfg.pred_len, window_stride};
  for (const auto & src : synth.scenes) {
    auto samples = assemble_scene(src, cfg.appearance_dim, win);
    ds.samples.insert(ds.samples.end(), samples.begin(), samples.end());
    ds.scenes.emplace(src.context.scene_id, src.context);
  }
  return ds;
}

inline Dataset synthesize(const SynthConfig & cfg) { return to_dataset(generate_dataset(cfg), cfg); }

/// Writes trajectories, features, activities, scene layouts, and manifest.json under `dir`.
inline std::filesystem::path write_synthetic(const SynthOutput & synth, const SynthConfig & cfg,
                                             const std::filesystem::path & dir)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail("io_error", "cannot create output directory '", dir.string(), "'");
  nlohmann::json scenes = nlohmann::json::array();
  for (const auto & src : synth.scenes) {
    const std::string id = src.context.scene_id;
    write_text_file(dir / (id + ".traj.txt"), format_trajectory_text(src.rows));
    write_text_file(dir / (id + ".features.jsonl"), format_feature_records(src.features));
    write_text_file(dir / (id + ".activities.jsonl"), format_activity_labels(src.activities));
    write_text_file(dir / (id + ".scene.json"), scene_to_json(src.context).dump() + "\n");
    std::vector<std::int64_t> ids;
    for (const auto & r : src.rows) {
      if (ids.empty() || ids.back() != r.person) ids.push_back(r.person);
    }
    scenes.push_back({{"id", id},
                      {"frame_w", src.context.frame_w},
                      {"frame_h", src.context.frame_h},
                      {"units", "pixels"},
                      {"trajectories", id + ".traj.txt"},
                      {"column_order", "frame,person,x,y"},
                      {"frame_stride", 1},
                      {"features", id + ".features.jsonl"},
                      {"activities", id + ".activities.jsonl"},
                      {"scene", id + ".scene.json"},
                      {"box_w", src.box_w},
                      {"box_h", src.box_h},
                      {"person_ids", ids}});
  }
  const nlohmann::json manifest = {{"format", "trajact-manifest-1"},
                                   {"appearance_dim", cfg.appearance_dim},
                                   {"units", "pixels"},
                                   {"num_persons", synth.agents.size()},
                                   {"scenes", scenes}};
  const fs::path path = dir / "manifest.json";
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

}  // namespace trajact

#endif  // TRAJACT__SYNTH_HPP_
