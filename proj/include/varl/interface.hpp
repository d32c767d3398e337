/*
 * Copyright 2026 The varl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "varl/perception.hpp"
#include "varl/scene.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// The visual arithmetic interface: a fovea over the scene grid, an integer
// store, the last op and digit classifications, and a salience map.

namespace varl {

enum class Action : int {
  Right = 0,
  Left,
  Down,
  Up,
  Plus,
  Times,
  Max,
  Min,
  Inc,
  ClassifyOp,
  ClassifyDigit,
  UpdateSalience,
};

inline constexpr int kActionCount = 12;

inline constexpr std::array<Action, kActionCount> kAllActions = {
    Action::Right, Action::Left,  Action::Down,       Action::Up,
    Action::Plus,  Action::Times, Action::Max,        Action::Min,
    Action::Inc,   Action::ClassifyOp, Action::ClassifyDigit, Action::UpdateSalience};

std::string_view action_name(Action action);
std::optional<Action> parse_action(std::string_view name);

/// Throws std::out_of_range outside [0, 12).
Action action_from_index(int index);
inline int action_index(Action a) { return static_cast<int>(a); }

/// Store values saturate here so repeated products cannot overflow.
inline constexpr std::int64_t kStoreLimit = 1'000'000'000'000LL;

struct InterfaceState {
  int grid = 2;
  int fovea_x = 0;
  int fovea_y = 0;
  std::int64_t store = 0;
  int op = -1;     // -1 until the first classify_op
  int digit = -1;  // -1 until the first classify_digit
  std::vector<double> salience_map;  // grid * grid, row-major

  bool operator==(const InterfaceState&) const = default;
};

InterfaceState reset_interface(int grid);

/// Applies one action. Movement clamps at the grid edge; arithmetic with
/// digit == -1 leaves the store alone; classify_* run the frozen classifiers
/// on the glimpse under the fovea; update_salience runs the salience detector.
InterfaceState update_interface(const InterfaceState& state, const GrayImage& scene,
                                Action action, const Perception& perception);

/// 2 + 1 + 5 + 11 + n^2.
int observation_size(int grid);

/// fovea_x/(n-1), fovea_y/(n-1) (0 when n = 1), min(store/100, 10) (store
/// is never negative under the action set), one-hot op over {-1, 0..3},
/// one-hot digit over {-1, 0..9}, salience map.
std::vector<double> encode_observation(const InterfaceState& state);
void encode_observation(const InterfaceState& state, double* out);

/// "t,action,fovea_x,fovea_y,store,op,digit"
std::string trace_line(int t, Action action, const InterfaceState& after);
inline constexpr std::string_view kTraceHeader = "t,action,fovea_x,fovea_y,store,op,digit";

}  // namespace varl
