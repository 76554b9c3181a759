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

#ifndef TRAJACT__DATA__DATASET_IO_HPP_
#define TRAJACT__DATA__DATASET_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/data/catalog.hpp"
#include "trajact/data/ingest.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"

namespace trajact
{

struct WindowOptions
{
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t stride = 1;
};

inline std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io_error", "cannot open '", path.string(), "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path & path, const std::string & text)
{
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io_error", "cannot write '", path.string(), "'");
  out << text;
  if (!out) fail("io_error", "failed writing '", path.string(), "'");
}

inline nlohmann::json scene_to_json(const SceneContext & s)
{
  nlohmann::json objects = nlohmann::json::array();
  for (const auto & o : s.objects) {
    objects.push_back({{"class", std::string(kObjectNames[static_cast<std::size_t>(o.class_id)])},
                       {"box", {o.box.x, o.box.y, o.box.w, o.box.h}}});
  }
  return {{"scene_id", s.scene_id}, {"frame_w", s.frame_w}, {"frame_h", s.frame_h},
          {"mask_h", s.mask_h},     {"mask_w", s.mask_w},   {"class_map", s.class_map},
          {"objects", objects}};
}

inline SceneContext scene_from_json(const nlohmann::json & j)
{
  SceneContext s;
  try {
    s.scene_id = j.value("scene_id", "");
    s.frame_w = j.at("frame_w").get<double>();
    s.frame_h = j.at("frame_h").get<double>();
    s.mask_h = j.at("mask_h").get<std::size_t>();
    s.mask_w = j.at("mask_w").get<std::size_t>();
    s.class_map = j.at("class_map").get<std::vector<int>>();
    for (const auto & o : j.value("objects", nlohmann::json::array())) {
      const auto id = object_id(o.at("class").get<std::string>());
      if (!id) fail("parse_error", "unknown object class '", o.at("class").get<std::string>(), "'");
      const auto b = o.at("box").get<std::vector<double>>();
      if (b.size() != 4 || b[2] <= 0.0 || b[3] <= 0.0) fail("parse_error", "bad object box");
      s.objects.push_back({*id, {b[0], b[1], b[2], b[3]}});
    }
  } catch (const nlohmann::json::exception & e) {
    fail("parse_error", "scene file: ", e.what());
  }
  if (s.class_map.size() != s.mask_h * s.mask_w) {
    fail("parse_error", "scene class_map has ", s.class_map.size(), " entries, expected ",
         s.mask_h * s.mask_w);
  }
  for (int c : s.class_map) {
    if (c < -1 || c >= static_cast<int>(kNumSceneClasses)) fail("parse_error", "scene class ", c, " out of range");
  }
  return s;
}

/// Everything needed to assemble one scene's samples, already parsed.
struct SceneSource
{
  SceneContext context;
  std::vector<TrackRow> rows;
  std::int64_t frame_stride = 1;
  FeatureMap features;
  bool has_features = false;
  ActivityLabels activities;
  bool has_activities = false;
  double box_w = 50.0;
  double box_h = 80.0;
};

/**
 * @brief Builds model-ready samples for one scene.
 *
 * Boxes come from the fixed-size point expansion. Other objects at each observed
 * frame are the scene's static objects plus every other annotated person.
 */
inline std::vector<PersonSample> assemble_scene(const SceneSource & src, std::size_t appearance_dim,
                                                const WindowOptions & win)
{
  const auto & ctx = src.context;
  auto tracks = build_tracks(src.rows, src.frame_stride, ctx.scene_id);
  auto samples = extract_windows(tracks, win.obs_len, win.pred_len, win.stride);

  std::map<std::int64_t, std::vector<std::pair<std::int64_t, Point>>> by_frame;
  for (const auto & r : src.rows) by_frame[r.frame].push_back({r.person, {r.x, r.y}});

  std::set<std::pair<std::int64_t, std::string>> warned;
  const int person_class = *object_id("Person");
  for (auto & s : samples) {
    for (std::size_t t = 0; t < win.obs_len; ++t) {
      const std::int64_t frame = s.frames[t];
      s.obs_boxes.push_back(expand_point_to_box(s.obs_xy[t], ctx.frame_w, ctx.frame_h, src.box_w, src.box_h));
      s.appearance.push_back(src.has_features || appearance_dim == 0
                               ? feature_or_zero(src.features, s.person_id, frame, kAppearanceChannel,
                                                 appearance_dim, &warned)
                               : std::vector<double>(appearance_dim, 0.0));
      s.keypoints.push_back(src.has_features ? feature_or_zero(src.features, s.person_id, frame,
                                                               kKeypointChannel, kKeypointDim, &warned)
                                             : std::vector<double>(kKeypointDim, 0.0));
      std::vector<SceneObject> objs = ctx.objects;
      if (auto it = by_frame.find(frame); it != by_frame.end()) {
        for (const auto & [pid, pt] : it->second) {
          if (pid == s.person_id) continue;
          objs.push_back({person_class, expand_point_to_box(pt, ctx.frame_w, ctx.frame_h, src.box_w, src.box_h)});
        }
      }
      s.objects.push_back(std::move(objs));
    }
    if (src.has_activities) {
      if (auto it = src.activities.find(s.person_id); it != src.activities.end()) {
        s.has_activity = true;
        const auto & frames = it->second;
        if (auto f = frames.find(s.frames[win.obs_len - 1]); f != frames.end()) s.obs_activity_ids = f->second;
        if (auto f = frames.find(s.frames.back()); f != frames.end()) s.future_activity_ids = f->second;
      }
    }
    s.type = label_trajectory_type(s.obs_activity_ids);
  }
  return samples;
}

/**
 * @brief Loads every scene listed in a manifest.
 *
 * Manifest: {"appearance_dim", "units", "scenes": [{"id", "frame_w", "frame_h",
 * "trajectories", "column_order"?, "frame_stride"?, "features"?, "activities"?,
 * "scene"?, "box_w"?, "box_h"?}]}. Paths are relative to the manifest.
 */
inline Dataset load_dataset(const std::string & manifest_path, const WindowOptions & win = {})
{
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception & e) {
    fail("parse_error", manifest_path, ": ", e.what());
  }
  Dataset ds;
  try {
    ds.appearance_dim = m.value("appearance_dim", std::size_t{0});
    ds.units = m.value("units", std::string("pixels"));
    for (const auto & sc : m.at("scenes")) {
      SceneSource src;
      const std::string id = sc.at("id");
      if (sc.contains("scene")) {
        src.context = scene_from_json(nlohmann::json::parse(read_text_file(base / sc.at("scene").get<std::string>())));
      } else {
        src.context.mask_h = sc.value("mask_h", std::size_t{36});
        src.context.mask_w = sc.value("mask_w", std::size_t{64});
        src.context.class_map.assign(src.context.mask_h * src.context.mask_w, -1);
      }
      src.context.scene_id = id;
      src.context.frame_w = sc.at("frame_w").get<double>();
      src.context.frame_h = sc.at("frame_h").get<double>();
      src.frame_stride = sc.value("frame_stride", std::int64_t{1});
      src.box_w = sc.value("box_w", 50.0);
      src.box_h = sc.value("box_h", 80.0);
      const auto order = ColumnOrder::parse(sc.value("column_order", std::string("frame,person,x,y")));
      src.rows = parse_trajectory_file((base / sc.at("trajectories").get<std::string>()).string(), order);
      if (sc.contains("features")) {
        src.features = load_feature_records((base / sc.at("features").get<std::string>()).string(), ds.appearance_dim);
        src.has_features = true;
      }
      if (sc.contains("activities")) {
        const fs::path p = base / sc.at("activities").get<std::string>();
        src.activities = parse_activity_labels(read_text_file(p), p.string());
        src.has_activities = true;
      }
      auto samples = assemble_scene(src, ds.appearance_dim, win);
      ds.samples.insert(ds.samples.end(), std::make_move_iterator(samples.begin()),
                        std::make_move_iterator(samples.end()));
      ds.scenes.emplace(id, std::move(src.context));
    }
  } catch (const nlohmann::json::exception & e) {
    fail("parse_error", manifest_path, ": ", e.what());
  }
  return ds;
}

}  // namespace trajact

#endif  // TRAJACT__DATA__DATASET_IO_HPP_
