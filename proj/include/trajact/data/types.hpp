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

#ifndef TRAJACT__DATA__TYPES_HPP_
#define TRAJACT__DATA__TYPES_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajact/data/catalog.hpp"

namespace trajact
{

struct Point
{
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point &) const = default;
};

/// Axis-aligned box; (x, y) is the top-left corner.
struct Box
{
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const Box &) const = default;
};

struct SceneObject
{
  int class_id = 0;
  Box box;

  bool operator==(const SceneObject &) const = default;
};

enum class TrajectoryType { moving, static_ };

inline const char * to_string(TrajectoryType t) { return t == TrajectoryType::moving ? "moving" : "static"; }

/// One annotation row of a trajectory file.
struct TrackRow
{
  std::int64_t frame = 0;
  std::int64_t person = 0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const TrackRow &) const = default;
};

/// A gap-free run of annotations for one person.
struct Track
{
  std::string scene_id;
  std::int64_t person_id = 0;
  std::vector<std::int64_t> frames;
  std::vector<Point> points;
};

/**
 * @brief One observed/future window for one person, with everything the model consumes.
 *
 * Per-timestep vectors (boxes, appearance, keypoints, objects) cover the observed steps only.
 */
struct PersonSample
{
  std::string scene_id;
  std::int64_t person_id = 0;
  std::vector<std::int64_t> frames;  // obs_len + pred_len frame ids
  std::vector<Point> obs_xy;
  std::vector<Point> future_xy;
  std::vector<Box> obs_boxes;
  std::vector<std::vector<double>> appearance;  // [obs_len][d_app]
  std::vector<std::vector<double>> keypoints;   // [obs_len][34], absolute coordinates
  std::vector<std::vector<SceneObject>> objects;  // [obs_len][K_t], other objects and persons
  std::vector<int> obs_activity_ids;     // labels at the last observed step
  std::vector<int> future_activity_ids;  // labels at the final predicted step
  bool has_activity = false;
  TrajectoryType type = TrajectoryType::static_;
};

/// Static scene description: semantic class map plus fixed objects.
struct SceneContext
{
  std::string scene_id;
  double frame_w = 1920.0;
  double frame_h = 1080.0;
  std::size_t mask_h = 36;
  std::size_t mask_w = 64;
  std::vector<int> class_map;  // mask_h * mask_w, row-major, values in [0, N_s)
  std::vector<SceneObject> objects;
};

struct Dataset
{
  std::vector<PersonSample> samples;
  std::map<std::string, SceneContext> scenes;
  std::size_t appearance_dim = 0;
  std::string units = "pixels";
};

}  // namespace trajact

#endif  // TRAJACT__DATA__TYPES_HPP_
