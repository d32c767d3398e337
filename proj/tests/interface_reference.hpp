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

// Independent model of the interface case table, shared by the interface
// tests and the acceptance run.

#pragma once

#include "varl/interface.hpp"

#include <algorithm>

namespace varl::testing {

/// Perception whose answers identify the cell it was shown, so the tests can
/// tell which glimpse the interface read.
class CellEcho final : public Perception {
 public:
  explicit CellEcho(const GrayImage& scene) : scene_(scene) {}

  Classification classify_digit(std::span<const std::uint8_t> glimpse) const override {
    return {7 + cell_of(glimpse) % 3, 0.9};
  }
  Classification classify_op(std::span<const std::uint8_t> glimpse) const override {
    return {cell_of(glimpse) % 4, 0.9};
  }
  std::vector<double> salience(const GrayImage&, int grid, int fovea_x,
                               int fovea_y) const override {
    std::vector<double> m(static_cast<std::size_t>(grid * grid));
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.1 * static_cast<double>(i + 1);
    m[0] += fovea_x + 10 * fovea_y;
    return m;
  }

 private:
  int cell_of(std::span<const std::uint8_t> glimpse) const {
    const int n = scene_.width / kGlyphSide;
    for (int c = 0; c < n * n; ++c) {
      if (std::equal(glimpse.begin(), glimpse.end(),
                     get_glimpse(scene_, c % n, c / n).begin())) {
        return c;
      }
    }
    return -1;
  }
  const GrayImage& scene_;
};

/// Scene whose cells carry distinct fill values so glimpses differ.
inline GrayImage marked_scene(int n) {
  GrayImage img{n * 28, n * 28, std::vector<std::uint8_t>(static_cast<std::size_t>(n * n * 784))};
  for (int y = 0; y < n * 28; ++y) {
    for (int x = 0; x < n * 28; ++x) {
      img.pixels[static_cast<std::size_t>(y * n * 28 + x)] =
          static_cast<std::uint8_t>(1 + (y / 28) * n + x / 28);
    }
  }
  return img;
}

inline InterfaceState random_state(Rng& rng, int n) {
  InterfaceState s = reset_interface(n);
  s.fovea_x = rng.below(n);
  s.fovea_y = rng.below(n);
  s.store = static_cast<std::int64_t>(rng.below(200));
  s.op = rng.below(5) - 1;
  s.digit = rng.below(11) - 1;
  for (auto& v : s.salience_map) v = rng.uniform();
  return s;
}

/// The case table, written out independently of the implementation.
inline InterfaceState expected_transition(const InterfaceState& s, Action a, const Perception& p,
                        const GrayImage& img) {
  InterfaceState e = s;
  const int n = s.grid;
  switch (a) {
    case Action::Right: e.fovea_x = s.fovea_x + 1 > n - 1 ? n - 1 : s.fovea_x + 1; break;
    case Action::Left: e.fovea_x = s.fovea_x - 1 < 0 ? 0 : s.fovea_x - 1; break;
    case Action::Down: e.fovea_y = s.fovea_y + 1 > n - 1 ? n - 1 : s.fovea_y + 1; break;
    case Action::Up: e.fovea_y = s.fovea_y - 1 < 0 ? 0 : s.fovea_y - 1; break;
    case Action::Plus: if (s.digit != -1) e.store = s.store + s.digit; break;
    case Action::Times: if (s.digit != -1) e.store = s.store * s.digit; break;
    case Action::Max: if (s.digit != -1) e.store = s.store > s.digit ? s.store : s.digit; break;
    case Action::Min: if (s.digit != -1) e.store = s.store < s.digit ? s.store : s.digit; break;
    case Action::Inc: e.store = s.store + 1; break;
    case Action::ClassifyOp:
      e.op = p.classify_op(get_glimpse(img, s.fovea_x, s.fovea_y)).label;
      break;
    case Action::ClassifyDigit:
      e.digit = p.classify_digit(get_glimpse(img, s.fovea_x, s.fovea_y)).label;
      break;
    case Action::UpdateSalience: e.salience_map = p.salience(img, n, s.fovea_x, s.fovea_y); break;
  }
  return e;
}


/// Every action from `trials` random states per grid size n = 1..3 against
/// the case table, plus field ownership. Returns the number of mismatches.
inline std::size_t case_table_mismatches(int trials) {
  std::size_t bad = 0;
  for (int n : {1, 2, 3}) {
    const GrayImage img = marked_scene(n);
    const CellEcho p(img);
    Rng rng(static_cast<std::uint64_t>(n));
    for (int trial = 0; trial < trials; ++trial) {
      const InterfaceState s = random_state(rng, n);
      for (Action a : kAllActions) {
        const InterfaceState got = update_interface(s, img, a, p);
        const bool moves = a == Action::Right || a == Action::Left || a == Action::Down ||
                           a == Action::Up;
        const bool arith = a == Action::Plus || a == Action::Times || a == Action::Max ||
                           a == Action::Min || a == Action::Inc;
        bool ok = got == expected_transition(s, a, p, img) && got.grid == s.grid;
        if (!moves) ok = ok && got.fovea_x == s.fovea_x && got.fovea_y == s.fovea_y;
        if (!arith) ok = ok && got.store == s.store;
        if (a != Action::ClassifyOp) ok = ok && got.op == s.op;
        if (a != Action::ClassifyDigit) ok = ok && got.digit == s.digit;
        if (a != Action::UpdateSalience) ok = ok && got.salience_map == s.salience_map;
        bad += ok ? 0 : 1;
      }
    }
  }
  return bad;
}

}  // namespace varl::testing
