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

#ifndef TRAJACT__DATA__WINDOW_HPP_
#define TRAJACT__DATA__WINDOW_HPP_

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/data/catalog.hpp"
#include "trajact/data/dataset_io.hpp"
#include "trajact/data/ingest.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"

namespace trajact
{

/**
 * @brief Builds a one-sample dataset from an observation window.
 *
 * Window JSON: {"scene": {...} | "scene_id": "...", "obs_xy": [[x, y], ...], "person_id"?,
 * "boxes"?: [[x, y, w, h]], "appearance"?: [[...]], "keypoints"?: [[...]],
 * "objects"?: [[{"class", "box"}]]}. Missing features become zeros; missing boxes are expanded
 * from the points. A "scene_id" is looked up in `known`.
 */
inline Dataset parse_window(const nlohmann::json & j, std::size_t obs_len, std::size_t appearance_dim,
                            const Dataset * known = nullptr)
{
  if (!j.is_object()) fail("bad_window", "window must be a JSON object");
  Dataset ds;
  ds.appearance_dim = appearance_dim;
  SceneContext scene;
  try {
    if (j.contains("scene")) {
      scene = scene_from_json(j["scene"]);
      if (scene.scene_id.empty()) scene.scene_id = "window";
    } else if (j.contains("scene_id")) {
      const std::string id = j["scene_id"].get<std::string>();
      if (known == nullptr || known->scenes.count(id) == 0) fail("unknown_scene", "window scene '", id, "' is not in the dataset");
      scene = known->scenes.at(id);
    } else {
      fail("bad_window", "window needs \"scene\" or \"scene_id\"");
    }
    if (scene.class_map.size() != scene.mask_h * scene.mask_w) {
      fail("bad_window", "scene class_map has ", scene.class_map.size(), " cells, expected ", scene.mask_h * scene.mask_w);
    }
    PersonSample s;
    s.scene_id = scene.scene_id;
    s.person_id = j.value("person_id", std::int64_t{0});
    const auto xy = j.at("obs_xy");
    if (!xy.is_array() || xy.size() != obs_len) {
      fail("bad_window", "obs_xy must hold ", obs_len, " points, got ", xy.is_array() ? xy.size() : 0);
    }
    for (std::size_t t = 0; t < obs_len; ++t) {
      const auto p = xy[t].get<std::vector<double>>();
      if (p.size() != 2 || !std::isfinite(p[0]) || !std::isfinite(p[1])) fail("bad_window", "obs_xy[", t, "] is not a finite [x, y]");
      s.obs_xy.push_back({p[0], p[1]});
      s.frames.push_back(static_cast<std::int64_t>(t));
    }
    auto per_step = [&](const char * key, std::size_t width, std::vector<std::vector<double>> & out) {
      if (!j.contains(key)) {
        out.assign(obs_len, std::vector<double>(width, 0.0));
        return;
      }
      out = j[key].get<std::vector<std::vector<double>>>();
      if (out.size() != obs_len) fail("bad_window", key, " must have ", obs_len, " rows");
      for (const auto & row : out) {
        if (row.size() != width) fail("bad_window", key, " rows must have length ", width);
      }
    };
    per_step("appearance", appearance_dim, s.appearance);
    per_step("keypoints", 2 * kNumKeypoints, s.keypoints);
    if (j.contains("boxes")) {
      std::vector<std::vector<double>> boxes;
      per_step("boxes", 4, boxes);
      for (const auto & b : boxes) {
        if (!(b[2] > 0.0) || !(b[3] > 0.0)) fail("bad_window", "boxes need positive width and height");
        s.obs_boxes.push_back({b[0], b[1], b[2], b[3]});
      }
    } else {
      for (const auto & p : s.obs_xy) s.obs_boxes.push_back(expand_point_to_box(p, scene.frame_w, scene.frame_h, 50.0, 80.0));
    }
    for (std::size_t t = 0; t < obs_len; ++t) {
      std::vector<SceneObject> objs = scene.objects;
      if (j.contains("objects")) {
        const auto & steps = j["objects"];
        if (!steps.is_array() || steps.size() != obs_len) fail("bad_window", "objects must have ", obs_len, " steps");
        for (const auto & o : steps[t]) {
          const auto id = object_id(o.at("class").get<std::string>());
          if (!id) fail("bad_window", "unknown object class '", o.at("class").get<std::string>(), "'");
          const auto b = o.at("box").get<std::vector<double>>();
          if (b.size() != 4) fail("bad_window", "object box must be [x, y, w, h]");
          objs.push_back({*id, {b[0], b[1], b[2], b[3]}});
        }
      }
      s.objects.push_back(std::move(objs));
    }
    ds.samples.push_back(std::move(s));
  } catch (const nlohmann::json::exception & e) {
    fail("bad_window", e.what());
  }
  ds.scenes[scene.scene_id] = scene;
  return ds;
}

}  // namespace trajact

#endif  // TRAJACT__DATA__WINDOW_HPP_
