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

#include "varl/emnist.hpp"
#include "varl/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace varl {

enum class TaskKind { Sum, Prod, Max, Min, Combined };

std::string_view task_name(TaskKind task);

class UnknownTaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Accepts "sum", "prod", "max", "min", "combined" (any case).
TaskKind parse_task(std::string_view name);

/// The reduction a Single Operation task applies; Combined maps op letters
/// A, M, X, N onto Sum, Prod, Max, Min.
TaskKind reduction_for_letter(int op_letter);

class TaskArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sum/product/max/min of 1-3 digits under the task's effective operation.
/// `op_letter` must be present exactly when task == Combined.
int task_answer(TaskKind task, std::span<const int> digits,
                std::optional<int> op_letter = std::nullopt);

/// Class index for the 101-way baselines: answers >= 100 share class 100.
int class_of(int answer);

struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int y, int x) const {
    return pixels[static_cast<std::size_t>(y * width + x)];
  }
};

inline constexpr int kBlankCell = -1;
inline constexpr int kLetterCellBase = 10;  // cell code 10 + k holds op letter k

/// A composed scene. Cells are indexed row-major: cell (x, y) is y * n + x.
struct LabeledExample {
  GrayImage image;  // (28 n) x (28 n)
  TaskKind task = TaskKind::Sum;
  int grid = 2;
  std::vector<int> digits;  // in row-major cell order
  std::optional<int> op_letter;
  int answer = 0;
  int class_index = 0;
  std::vector<std::uint8_t> occupancy;  // n*n, 1 where a glyph sits
  std::vector<int> cell_content;        // n*n: kBlankCell, 0-9, or 10 + letter
  std::vector<std::uint64_t> glyph_ids;
};

struct SceneOptions {
  int grid = 2;
  int min_digits = 2;
  int max_digits = 3;
};

class SceneError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Places a random number of digit glyphs (and one op letter for Combined) in
/// distinct random cells of a black canvas. Glyphs are drawn uniformly with
/// replacement.
LabeledExample compose_scene(Rng& rng, const GlyphSet& digits, const GlyphSet* letters,
                             TaskKind task, const SceneOptions& options = {});

/// Copies a 28x28 glyph into grid cell (cell_x, cell_y).
void paste_glyph(GrayImage& image, int cell_x, int cell_y, std::span<const std::uint8_t> glyph);

class GlimpseError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The exact 28x28 pixel block of grid cell (fovea_x, fovea_y).
std::vector<std::uint8_t> get_glimpse(const GrayImage& image, int fovea_x, int fovea_y);

/// Per-cell occupancy as reals: 1 occupied, 0 blank.
std::vector<double> salience_ground_truth(const LabeledExample& example);

// ---------------------------------------------------------------------------
// Datasets

enum class Split { Train, Test };

class GlyphPoolExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  TaskKind task = TaskKind::Sum;
  int grid = 2;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  int min_digits = 2;
  int max_digits = 3;
};

/// Deterministic in (spec, pools). Each glyph of the split's pool is used at
/// most once per dataset; train and test datasets draw from disjoint pools.
std::vector<LabeledExample> make_dataset(const DatasetSpec& spec, const GlyphPools& pools);

/// Scene bytes plus a JSON sidecar (`path` + ".json") recording
/// {task, n, seed, count, source}.
void save_dataset(const std::filesystem::path& path, const DatasetSpec& spec,
                  const std::string& source,
                  const std::vector<LabeledExample>& examples);

struct LoadedDataset {
  DatasetSpec spec;
  std::string source;
  std::vector<LabeledExample> examples;
};

LoadedDataset load_dataset(const std::filesystem::path& path);

/// Rebuilds digits/answer/class/occupancy from cell contents.
void fill_labels(LabeledExample& example);

}  // namespace varl
