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

#ifndef TRAJACT__DATA__INGEST_HPP_
#define TRAJACT__DATA__INGEST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajact/data/catalog.hpp"
#include "trajact/data/types.hpp"
#include "trajact/error.hpp"

namespace trajact
{

/// Column positions of frame, person, x, y within a trajectory file line.
struct ColumnOrder
{
  std::array<int, 4> pos{0, 1, 2, 3};  // frame, person, x, y

  static ColumnOrder parse(const std::string & text)
  {
    ColumnOrder order;
    order.pos.fill(-1);
    std::stringstream ss(text);
    std::string tok;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      const std::array<std::string, 4> keys{"frame", "person", "x", "y"};
      const auto it = std::find(keys.begin(), keys.end(), tok);
      if (it == keys.end() || order.pos[static_cast<std::size_t>(it - keys.begin())] != -1) {
        fail("bad_config", "invalid column order '", text, "'");
      }
      order.pos[static_cast<std::size_t>(it - keys.begin())] = col++;
    }
    if (col != 4) fail("bad_config", "column order must name frame, person, x, y: '", text, "'");
    return order;
  }

  std::string str() const
  {
    std::array<std::string, 4> names;
    const std::array<std::string, 4> keys{"frame", "person", "x", "y"};
    for (std::size_t k = 0; k < 4; ++k) names[static_cast<std::size_t>(pos[k])] = keys[k];
    return names[0] + "," + names[1] + "," + names[2] + "," + names[3];
  }
};

namespace detail
{
inline bool parse_number(const std::string & tok, double & out)
{
  std::istringstream is(tok);
  is >> out;
  return !is.fail() && is.eof();
}
}  // namespace detail

/// Whitespace-separated rows, sorted by (person, frame). Duplicate (frame, person) keys are errors.
inline std::vector<TrackRow> parse_trajectory_text(const std::string & text,
                                                   const ColumnOrder & order = {},
                                                   const std::string & source = "<text>")
{
  std::vector<TrackRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ls >> tok) fields.push_back(tok);
    if (fields.empty()) continue;
    if (fields.size() != 4) {
      fail("parse_error", source, ":", line_no, ": expected 4 fields, got ", fields.size());
    }
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (!detail::parse_number(fields[static_cast<std::size_t>(order.pos[k])], v[k])) {
        fail("parse_error", source, ":", line_no, ": non-numeric field '",
             fields[static_cast<std::size_t>(order.pos[k])], "'");
      }
    }
    if (!std::isfinite(v[2]) || !std::isfinite(v[3])) {
      fail("parse_error", source, ":", line_no, ": non-finite coordinate");
    }
    rows.push_back({static_cast<std::int64_t>(std::llround(v[0])),
                    static_cast<std::int64_t>(std::llround(v[1])), v[2], v[3]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TrackRow & a, const TrackRow & b) {
    return std::tie(a.person, a.frame) < std::tie(b.person, b.frame);
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].person == rows[i - 1].person && rows[i].frame == rows[i - 1].frame) {
      fail("duplicate_key", source, ": duplicate row for frame ", rows[i].frame, ", person ",
           rows[i].person);
    }
  }
  return rows;
}

inline std::vector<TrackRow> parse_trajectory_file(const std::string & path, const ColumnOrder & order = {})
{
  std::ifstream in(path);
  if (!in) fail("io_error", "cannot open trajectory file '", path, "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trajectory_text(ss.str(), order, path);
}

/// Rows are written frame-major (the usual ETH/UCY layout) with round-trip precision.
inline std::string format_trajectory_text(std::vector<TrackRow> rows, const ColumnOrder & order = {})
{
  std::sort(rows.begin(), rows.end(), [](const TrackRow & a, const TrackRow & b) {
    return std::tie(a.frame, a.person) < std::tie(b.frame, b.person);
  });
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto & r : rows) {
    std::array<std::string, 4> cols;
    std::ostringstream f, p, x, y;
    f << r.frame;
    p << r.person;
    x << std::setprecision(17) << r.x;
    y << std::setprecision(17) << r.y;
    cols[static_cast<std::size_t>(order.pos[0])] = f.str();
    cols[static_cast<std::size_t>(order.pos[1])] = p.str();
    cols[static_cast<std::size_t>(order.pos[2])] = x.str();
    cols[static_cast<std::size_t>(order.pos[3])] = y.str();
    out << cols[0] << '\t' << cols[1] << '\t' << cols[2] << '\t' << cols[3] << '\n';
  }
  return out.str();
}

/// Groups sorted rows into per-person tracks, splitting wherever consecutive frames differ by != stride.
inline std::vector<Track> build_tracks(const std::vector<TrackRow> & rows, std::int64_t frame_stride,
                                       const std::string & scene_id = {})
{
  if (frame_stride <= 0) fail("bad_config", "frame stride must be positive");
  std::vector<Track> tracks;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool extend = !tracks.empty() && tracks.back().person_id == rows[i].person &&
                        rows[i].frame - tracks.back().frames.back() == frame_stride && i > 0 &&
                        rows[i - 1].person == rows[i].person;
    if (!extend) {
      tracks.push_back({scene_id, rows[i].person, {}, {}});
    }
    tracks.back().frames.push_back(rows[i].frame);
    tracks.back().points.push_back({rows[i].x, rows[i].y});
  }
  return tracks;
}

/// Sliding windows of obs_len + pred_len consecutive points. Short tracks contribute nothing.
inline std::vector<PersonSample> extract_windows(const std::vector<Track> & tracks, std::size_t obs_len = 8,
                                                 std::size_t pred_len = 12, std::size_t stride = 1)
{
  if (stride == 0) fail("bad_config", "window stride must be positive");
  const std::size_t span = obs_len + pred_len;
  std::vector<PersonSample> out;
  for (const auto & tr : tracks) {
    if (tr.points.size() < span) continue;
    for (std::size_t s = 0; s + span <= tr.points.size(); s += stride) {
      PersonSample p;
      p.scene_id = tr.scene_id;
      p.person_id = tr.person_id;
      p.frames.assign(tr.frames.begin() + static_cast<std::ptrdiff_t>(s),
                      tr.frames.begin() + static_cast<std::ptrdiff_t>(s + span));
      p.obs_xy.assign(tr.points.begin() + static_cast<std::ptrdiff_t>(s),
                      tr.points.begin() + static_cast<std::ptrdiff_t>(s + obs_len));
      p.future_xy.assign(tr.points.begin() + static_cast<std::ptrdiff_t>(s + obs_len),
                         tr.points.begin() + static_cast<std::ptrdiff_t>(s + span));
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline const std::vector<std::string> & canonical_scene_ids()
{
  static const std::vector<std::string> ids{"ETH", "HOTEL", "UNIV", "ZARA1", "ZARA2"};
  return ids;
}

/// Returns (train, test). `known_scenes` extends the canonical ETH/UCY names.
inline std::pair<std::vector<PersonSample>, std::vector<PersonSample>> leave_one_scene_out(
  const std::vector<PersonSample> & samples, const std::string & held_out,
  const std::vector<std::string> & known_scenes = {})
{
  const auto & canon = canonical_scene_ids();
  const bool known = std::find(canon.begin(), canon.end(), held_out) != canon.end() ||
                     std::find(known_scenes.begin(), known_scenes.end(), held_out) != known_scenes.end() ||
                     std::any_of(samples.begin(), samples.end(),
                                 [&](const PersonSample & s) { return s.scene_id == held_out; });
  if (!known) fail("unknown_scene", "unknown scene '", held_out, "'");
  std::pair<std::vector<PersonSample>, std::vector<PersonSample>> out;
  for (const auto & s : samples) {
    (s.scene_id == held_out ? out.second : out.first).push_back(s);
  }
  return out;
}

/**
 * @brief Fixed-size person box with the point at the middle of its bottom edge, clipped to the frame.
 *
 * A box that clipping would collapse (point on the top or left border) is pushed back inside
 * so the result always has positive area.
 */
inline Box expand_point_to_box(Point p, double frame_w, double frame_h, double box_w = 50.0,
                               double box_h = 80.0)
{
  auto clip_span = [](double lo, double hi, double limit, double extent) {
    double a = std::clamp(lo, 0.0, limit);
    double b = std::clamp(hi, 0.0, limit);
    if (b - a <= 0.0) {
      const double len = std::min(extent, limit);
      a = std::clamp(lo, 0.0, limit - len);
      b = a + len;
    }
    return std::pair<double, double>{a, b};
  };
  const auto [x0, x1] = clip_span(p.x - box_w / 2.0, p.x + box_w / 2.0, frame_w, box_w);
  const auto [y0, y1] = clip_span(p.y - box_h, p.y, frame_h, box_h);
  return {x0, y0, x1 - x0, y1 - y0};
}

inline TrajectoryType label_trajectory_type(const std::vector<int> & activity_ids_at_last_obs)
{
  for (int id : activity_ids_at_last_obs) {
    if (id < 0 || static_cast<std::size_t>(id) >= kNumActivities) continue;
    const auto name = kActivityNames[static_cast<std::size_t>(id)];
    if (std::find(kMovingActivities.begin(), kMovingActivities.end(), name) != kMovingActivities.end()) {
      return TrajectoryType::moving;
    }
  }
  return TrajectoryType::static_;
}

// Feature records -------------------------------------------------------------

inline constexpr const char * kAppearanceChannel = "appearance";
inline constexpr const char * kKeypointChannel = "keypoints";
inline constexpr std::size_t kKeypointDim = 2 * kNumKeypoints;

using FeatureKey = std::tuple<std::int64_t, std::int64_t, std::string>;  // person, frame, channel
using FeatureMap = std::map<FeatureKey, std::vector<double>>;

/// One JSON object per line: {"person_id", "t", "channel", "vector"}.
inline FeatureMap parse_feature_records(const std::string & text, std::size_t appearance_dim,
                                        const std::string & source = "<text>")
{
  FeatureMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception & e) {
      fail("parse_error", source, ":", line_no, ": invalid JSON (", e.what(), ")");
    }
    FeatureKey key;
    std::vector<double> vec;
    try {
      key = {j.at("person_id").get<std::int64_t>(), j.at("t").get<std::int64_t>(),
             j.at("channel").get<std::string>()};
      vec = j.at("vector").get<std::vector<double>>();
    } catch (const nlohmann::json::exception & e) {
      fail("parse_error", source, ":", line_no, ": missing or mistyped field (", e.what(), ")");
    }
    const std::string & channel = std::get<2>(key);
    std::size_t expected = 0;
    if (channel == kAppearanceChannel) {
      expected = appearance_dim;
    } else if (channel == kKeypointChannel) {
      expected = kKeypointDim;
    } else {
      fail("parse_error", source, ":", line_no, ": unknown channel '", channel, "'");
    }
    if (vec.size() != expected) {
      fail("length_mismatch", source, ":", line_no, ": channel '", channel, "' expects length ",
           expected, ", got ", vec.size());
    }
    if (!out.emplace(key, std::move(vec)).second) {
      fail("duplicate_key", source, ":", line_no, ": duplicate record for person ", std::get<0>(key),
           ", t ", std::get<1>(key), ", channel '", channel, "'");
    }
  }
  return out;
}

inline FeatureMap load_feature_records(const std::string & path, std::size_t appearance_dim)
{
  std::ifstream in(path);
  if (!in) fail("io_error", "cannot open feature file '", path, "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_feature_records(ss.str(), appearance_dim, path);
}

inline std::string format_feature_records(const FeatureMap & features)
{
  std::string out;
  for (const auto & [key, vec] : features) {
    nlohmann::json j = {{"person_id", std::get<0>(key)},
                        {"t", std::get<1>(key)},
                        {"channel", std::get<2>(key)},
                        {"vector", vec}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

/**
 * @brief Looks up one channel for one person/frame, falling back to zeros.
 *
 * Each missing (person, channel) pair warns once per `warned` set.
 */
inline std::vector<double> feature_or_zero(const FeatureMap & features, std::int64_t person,
                                           std::int64_t frame, const std::string & channel,
                                           std::size_t dim,
                                           std::set<std::pair<std::int64_t, std::string>> * warned)
{
  const auto it = features.find({person, frame, channel});
  if (it != features.end()) return it->second;
  if (warned && warned->emplace(person, channel).second) {
    warn("missing '", channel, "' features for person ", person, "; using zero vectors");
  }
  return std::vector<double>(dim, 0.0);
}

// Activity annotations ----------------------------------------------------------

/// person -> frame -> activity ids. One JSON object per line: {"person_id", "frame", "activities": [names]}.
using ActivityLabels = std::map<std::int64_t, std::map<std::int64_t, std::vector<int>>>;

inline ActivityLabels parse_activity_labels(const std::string & text, const std::string & source = "<text>")
{
  ActivityLabels out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      std::vector<int> ids;
      for (const auto & name : j.at("activities")) {
        const auto id = activity_id(name.get<std::string>());
        if (!id) fail("parse_error", source, ":", line_no, ": unknown activity '", name.get<std::string>(), "'");
        ids.push_back(*id);
      }
      std::sort(ids.begin(), ids.end());
      out[j.at("person_id").get<std::int64_t>()][j.at("frame").get<std::int64_t>()] = std::move(ids);
    } catch (const nlohmann::json::exception & e) {
      fail("parse_error", source, ":", line_no, ": ", e.what());
    }
  }
  return out;
}

inline std::string format_activity_labels(const ActivityLabels & labels)
{
  std::string out;
  for (const auto & [person, frames] : labels) {
    for (const auto & [frame, ids] : frames) {
      nlohmann::json names = nlohmann::json::array();
      for (int id : ids) names.push_back(std::string(kActivityNames[static_cast<std::size_t>(id)]));
      out += nlohmann::json{{"person_id", person}, {"frame", frame}, {"activities", names}}.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace trajact

#endif  // TRAJACT__DATA__INGEST_HPP_
