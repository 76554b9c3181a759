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

#ifndef TRAJACT__DATA__CATALOG_HPP_
#define TRAJACT__DATA__CATALOG_HPP_

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace trajact
{

inline constexpr std::size_t kNumActivities = 29;
inline constexpr std::size_t kNumObjectClasses = 10;
inline constexpr std::size_t kNumSceneClasses = 10;
inline constexpr std::size_t kNumKeypoints = 17;

// ActEV/VIRAT activity and object vocabularies, in the order used for model outputs.
inline constexpr std::array<std::string_view, kNumActivities> kActivityNames = {
  "Carry",      "Close_Door", "Close_Trunk", "Crouch",     "Enter",          "Exit",
  "Gesture",    "Interaction", "Load",       "Object_Transfer", "Open_Door", "Open_Trunk",
  "PickUp",     "PickUp_Person", "Pull",     "Push",       "Ride_Bike",      "Run",
  "SetDown",    "Sit",        "Stand",       "Talk",       "Talk_phone",     "Texting",
  "Touch",      "Transport",  "Unload",      "Use_tool",   "Walk"};

inline constexpr std::array<std::string_view, kNumObjectClasses> kObjectNames = {
  "Bike",   "Construction_Barrier", "Construction_Vehicle", "Door", "Dumpster",
  "Parking_Meter", "Person", "Prop", "Push_Pulled_Object", "Vehicle"};

inline constexpr std::array<std::string_view, kNumSceneClasses> kSceneClassNames = {
  "road", "sidewalk", "grass", "parking", "building", "vegetation", "vehicle_area", "crosswalk",
  "water", "other"};

// Activities whose presence at the last observed step marks a trajectory as moving.
inline constexpr std::array<std::string_view, 3> kMovingActivities = {"Walk", "Run", "Ride_Bike"};

template <std::size_t N>
std::optional<int> lookup_name(const std::array<std::string_view, N> & names, std::string_view name)
{
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

inline std::optional<int> activity_id(std::string_view name) { return lookup_name(kActivityNames, name); }
inline std::optional<int> object_id(std::string_view name) { return lookup_name(kObjectNames, name); }

}  // namespace trajact

#endif  // TRAJACT__DATA__CATALOG_HPP_
