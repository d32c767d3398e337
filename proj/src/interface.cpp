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

#include "varl/interface.hpp"

#include <algorithm>
#include <stdexcept>

namespace varl {

namespace {

constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "right", "left", "down", "up", "plus", "times", "max", "min",
    "inc", "classify_op", "classify_digit", "update_salience"};

std::int64_t saturate(std::int64_t v) { return std::clamp(v, -kStoreLimit, kStoreLimit); }

}  // namespace

std::string_view action_name(Action action) {
  return kActionNames[static_cast<std::size_t>(action_index(action))];
}

std::optional<Action> parse_action(std::string_view name) {
  for (int i = 0; i < kActionCount; ++i) {
    if (kActionNames[static_cast<std::size_t>(i)] == name) return static_cast<Action>(i);
  }
  return std::nullopt;
}

Action action_from_index(int index) {
  if (index < 0 || index >= kActionCount) {
    throw std::out_of_range("invalid action index " + std::to_string(index));
  }
  return static_cast<Action>(index);
}

InterfaceState reset_interface(int grid) {
  if (grid < 1) throw std::invalid_argument("grid size must be >= 1");
  InterfaceState s;
  s.grid = grid;
  s.salience_map.assign(static_cast<std::size_t>(grid * grid), 0.0);
  return s;
}

InterfaceState update_interface(const InterfaceState& state, const GrayImage& scene,
                                Action action, const Perception& perception) {
  InterfaceState s = state;
  const int last = s.grid - 1;
  switch (action) {
    case Action::Right: s.fovea_x = std::min(s.fovea_x + 1, last); break;
    case Action::Left: s.fovea_x = std::max(s.fovea_x - 1, 0); break;
    case Action::Down: s.fovea_y = std::min(s.fovea_y + 1, last); break;
    case Action::Up: s.fovea_y = std::max(s.fovea_y - 1, 0); break;
    case Action::Plus:
      if (s.digit >= 0) s.store = saturate(s.store + s.digit);
      break;
    case Action::Times:
      if (s.digit >= 0) {
        // |store| <= kStoreLimit and digit <= 9, so the product fits.
        s.store = saturate(s.store * s.digit);
      }
      break;
    case Action::Max:
      if (s.digit >= 0) s.store = std::max<std::int64_t>(s.store, s.digit);
      break;
    case Action::Min:
      if (s.digit >= 0) s.store = std::min<std::int64_t>(s.store, s.digit);
      break;
    case Action::Inc: s.store = saturate(s.store + 1); break;
    case Action::ClassifyOp:
      s.op = perception.classify_op(get_glimpse(scene, s.fovea_x, s.fovea_y)).label;
      break;
    case Action::ClassifyDigit:
      s.digit = perception.classify_digit(get_glimpse(scene, s.fovea_x, s.fovea_y)).label;
      break;
    case Action::UpdateSalience: {
      auto map = perception.salience(scene, s.grid, s.fovea_x, s.fovea_y);
      if (map.size() != s.salience_map.size()) {
        throw std::logic_error("salience detector returned " + std::to_string(map.size()) +
                               " cells for a " + std::to_string(s.grid) + "x" +
                               std::to_string(s.grid) + " grid");
      }
      s.salience_map = std::move(map);
      break;
    }
  }
  return s;
}

int observation_size(int grid) { return 2 + 1 + 5 + 11 + grid * grid; }

void encode_observation(const InterfaceState& state, double* out) {
  const double denom = state.grid > 1 ? state.grid - 1 : 1;
  *out++ = state.grid > 1 ? state.fovea_x / denom : 0.0;
  *out++ = state.grid > 1 ? state.fovea_y / denom : 0.0;
  *out++ = std::clamp(static_cast<double>(state.store) / 100.0, 0.0, 10.0);
  for (int k = -1; k <= 3; ++k) *out++ = state.op == k ? 1.0 : 0.0;
  for (int k = -1; k <= 9; ++k) *out++ = state.digit == k ? 1.0 : 0.0;
  for (double v : state.salience_map) *out++ = v;
}

std::vector<double> encode_observation(const InterfaceState& state) {
  std::vector<double> out(static_cast<std::size_t>(observation_size(state.grid)));
  encode_observation(state, out.data());
  return out;
}

std::string trace_line(int t, Action action, const InterfaceState& after) {
  return std::to_string(t) + "," + std::string(action_name(action)) + "," +
         std::to_string(after.fovea_x) + "," + std::to_string(after.fovea_y) + "," +
         std::to_string(after.store) + "," + std::to_string(after.op) + "," +
         std::to_string(after.digit);
}

}  // namespace varl
