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

#include "varl/scene.hpp"

#include "varl/params.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace varl {

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Sum: return "sum";
    case TaskKind::Prod: return "prod";
    case TaskKind::Max: return "max";
    case TaskKind::Min: return "min";
    case TaskKind::Combined: return "combined";
  }
  return "?";
}

TaskKind parse_task(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (TaskKind t : {TaskKind::Sum, TaskKind::Prod, TaskKind::Max, TaskKind::Min,
                     TaskKind::Combined}) {
    if (task_name(t) == lower) return t;
  }
  throw UnknownTaskError("unknown task '" + std::string(name) +
                         "' (expected sum, prod, max, min or combined)");
}

TaskKind reduction_for_letter(int op_letter) {
  switch (op_letter) {
    case 0: return TaskKind::Sum;
    case 1: return TaskKind::Prod;
    case 2: return TaskKind::Max;
    case 3: return TaskKind::Min;
  }
  throw TaskArgumentError("op letter index out of range: " + std::to_string(op_letter));
}

int task_answer(TaskKind task, std::span<const int> digits, std::optional<int> op_letter) {
  if (digits.empty() || digits.size() > 3) {
    throw TaskArgumentError("task_answer takes 1-3 digits, got " +
                            std::to_string(digits.size()));
  }
  for (int d : digits) {
    if (d < 0 || d > 9) throw TaskArgumentError("digit out of range: " + std::to_string(d));
  }
  if ((task == TaskKind::Combined) != op_letter.has_value()) {
    throw TaskArgumentError(task == TaskKind::Combined
                                ? "combined task requires an op letter"
                                : "op letter given for a single-operation task");
  }
  const TaskKind op = task == TaskKind::Combined ? reduction_for_letter(*op_letter) : task;
  int acc = digits[0];
  for (std::size_t i = 1; i < digits.size(); ++i) {
    switch (op) {
      case TaskKind::Sum: acc += digits[i]; break;
      case TaskKind::Prod: acc *= digits[i]; break;
      case TaskKind::Max: acc = std::max(acc, digits[i]); break;
      case TaskKind::Min: acc = std::min(acc, digits[i]); break;
      case TaskKind::Combined: break;
    }
  }
  return acc;
}

int class_of(int answer) {
  if (answer < 0) throw TaskArgumentError("negative answer: " + std::to_string(answer));
  return std::min(answer, 100);
}

void fill_labels(LabeledExample& example) {
  const int cells = example.grid * example.grid;
  if (static_cast<int>(example.cell_content.size()) != cells) {
    throw SceneError("cell_content size does not match grid");
  }
  example.digits.clear();
  example.op_letter.reset();
  example.occupancy.assign(static_cast<std::size_t>(cells), 0);
  for (int c = 0; c < cells; ++c) {
    const int code = example.cell_content[static_cast<std::size_t>(c)];
    if (code == kBlankCell) continue;
    example.occupancy[static_cast<std::size_t>(c)] = 1;
    if (code < kLetterCellBase) {
      example.digits.push_back(code);
    } else {
      if (example.op_letter) throw SceneError("scene holds more than one op letter");
      example.op_letter = code - kLetterCellBase;
    }
  }
  example.answer = task_answer(example.task, example.digits, example.op_letter);
  example.class_index = class_of(example.answer);
}

void paste_glyph(GrayImage& image, int cell_x, int cell_y,
                 std::span<const std::uint8_t> glyph) {
  if (glyph.size() != static_cast<std::size_t>(kGlyphPixels)) {
    throw SceneError("glyph must be 28x28");
  }
  if (cell_x < 0 || cell_y < 0 || (cell_x + 1) * kGlyphSide > image.width ||
      (cell_y + 1) * kGlyphSide > image.height) {
    throw SceneError("cell outside the image");
  }
  for (int r = 0; r < kGlyphSide; ++r) {
    std::copy_n(glyph.data() + r * kGlyphSide, kGlyphSide,
                image.pixels.data() + (cell_y * kGlyphSide + r) * image.width +
                    cell_x * kGlyphSide);
  }
}

std::vector<std::uint8_t> get_glimpse(const GrayImage& image, int fovea_x, int fovea_y) {
  if (fovea_x < 0 || fovea_y < 0 || (fovea_x + 1) * kGlyphSide > image.width ||
      (fovea_y + 1) * kGlyphSide > image.height) {
    throw GlimpseError("fovea (" + std::to_string(fovea_x) + ", " + std::to_string(fovea_y) +
                       ") outside the image");
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(kGlyphPixels));
  for (int r = 0; r < kGlyphSide; ++r) {
    std::copy_n(image.pixels.data() + (fovea_y * kGlyphSide + r) * image.width +
                    fovea_x * kGlyphSide,
                kGlyphSide, out.data() + r * kGlyphSide);
  }
  return out;
}

namespace {

using DrawFn = std::function<std::size_t()>;

LabeledExample compose(Rng& rng, const GlyphSet& digits, const GlyphSet* letters,
                       TaskKind task, const SceneOptions& options, const DrawFn& draw_digit,
                       const DrawFn& draw_letter) {
  const int n = options.grid;
  if (n < 1) throw SceneError("grid size must be >= 1");
  if (options.min_digits < 1 || options.max_digits > 3 ||
      options.min_digits > options.max_digits) {
    throw SceneError("digit count range must lie within [1, 3]");
  }
  const bool combined = task == TaskKind::Combined;
  if (combined && (letters == nullptr || letters->size() == 0)) {
    throw SceneError("combined task needs op letter glyphs");
  }
  if (digits.size() == 0) throw SceneError("no digit glyphs");

  const int digit_count =
      options.min_digits + rng.below(options.max_digits - options.min_digits + 1);
  const int glyph_count = digit_count + (combined ? 1 : 0);
  if (glyph_count > n * n) {
    throw SceneError(std::to_string(glyph_count) + " glyphs do not fit a " +
                     std::to_string(n) + "x" + std::to_string(n) + " grid");
  }

  std::vector<int> cells(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n * n; ++i) cells[static_cast<std::size_t>(i)] = i;
  rng.shuffle(cells);

  LabeledExample ex;
  ex.task = task;
  ex.grid = n;
  ex.image.height = ex.image.width = n * kGlyphSide;
  ex.image.pixels.assign(static_cast<std::size_t>(ex.image.height * ex.image.width), 0);
  ex.cell_content.assign(static_cast<std::size_t>(n * n), kBlankCell);
  ex.glyph_ids.reserve(static_cast<std::size_t>(glyph_count));

  for (int g = 0; g < glyph_count; ++g) {
    const int cell = cells[static_cast<std::size_t>(g)];
    const bool is_letter = combined && g == digit_count;
    const GlyphSet& set = is_letter ? *letters : digits;
    const std::size_t idx = is_letter ? draw_letter() : draw_digit();
    paste_glyph(ex.image, cell % n, cell / n, set.glyph(idx));
    ex.cell_content[static_cast<std::size_t>(cell)] =
        is_letter ? kLetterCellBase + set.labels[idx] : set.labels[idx];
    ex.glyph_ids.push_back(set.id(idx));
  }
  fill_labels(ex);
  return ex;
}

}  // namespace

LabeledExample compose_scene(Rng& rng, const GlyphSet& digits, const GlyphSet* letters,
                             TaskKind task, const SceneOptions& options) {
  const DrawFn digit = [&] { return static_cast<std::size_t>(rng.below(digits.size())); };
  const DrawFn letter = [&] { return static_cast<std::size_t>(rng.below(letters->size())); };
  return compose(rng, digits, letters, task, options, digit, letter);
}

std::vector<double> salience_ground_truth(const LabeledExample& example) {
  std::vector<double> mask(example.occupancy.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = example.occupancy[i] ? 1.0 : 0.0;
  return mask;
}

namespace {

/// Walks a seeded permutation of a pool so no glyph repeats within a dataset.
class PoolCursor {
 public:
  PoolCursor(const GlyphSet& set, Rng& rng, std::string what)
      : order_(set.size()), what_(std::move(what)) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng.shuffle(order_);
  }

  std::size_t next() {
    if (pos_ >= order_.size()) {
      throw GlyphPoolExhaustedError(what_ + " pool exhausted after " +
                                    std::to_string(order_.size()) + " glyphs");
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace

std::vector<LabeledExample> make_dataset(const DatasetSpec& spec, const GlyphPools& pools) {
  const bool train = spec.split == Split::Train;
  const GlyphSet& digits = train ? pools.train_digits : pools.test_digits;
  const GlyphSet& letters = train ? pools.train_letters : pools.test_letters;
  const SceneOptions options{spec.grid, spec.min_digits, spec.max_digits};

  Rng layout(derive_seed(spec.seed, 1));
  Rng pool_rng(derive_seed(spec.seed, 2));
  PoolCursor digit_cursor(digits, pool_rng, train ? "train digit" : "test digit");
  PoolCursor letter_cursor(letters, pool_rng, train ? "train letter" : "test letter");
  const DrawFn draw_digit = [&] { return digit_cursor.next(); };
  const DrawFn draw_letter = [&] { return letter_cursor.next(); };

  std::vector<LabeledExample> out;
  out.reserve(spec.sample_count);
  for (std::size_t i = 0; i < spec.sample_count; ++i) {
    out.push_back(compose(layout, digits, &letters, spec.task, options, draw_digit,
                          draw_letter));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const DatasetSpec& spec,
                  const std::string& source, const std::vector<LabeledExample>& examples) {
  const auto count = static_cast<std::uint32_t>(examples.size());
  const auto n = static_cast<std::uint32_t>(spec.grid);
  const std::uint32_t side = n * kGlyphSide;

  ByteArray images{"images", {count, side, side}, {}};
  ByteArray cells{"cells", {count, n, n}, {}};
  ByteArray ids{"glyph_ids", {count, 4 * 8}, {}};
  images.bytes.reserve(static_cast<std::size_t>(count) * side * side);
  for (const auto& ex : examples) {
    if (ex.grid != spec.grid) throw SceneError("example grid differs from dataset spec");
    images.bytes.insert(images.bytes.end(), ex.image.pixels.begin(), ex.image.pixels.end());
    for (int code : ex.cell_content) {
      cells.bytes.push_back(code == kBlankCell ? 255 : static_cast<std::uint8_t>(code));
    }
    // Up to four glyph ids per scene, little-endian u64, zero-padded.
    std::array<std::uint8_t, 32> packed{};
    for (std::size_t g = 0; g < ex.glyph_ids.size() && g < 4; ++g) {
      for (int b = 0; b < 8; ++b) {
        packed[g * 8 + static_cast<std::size_t>(b)] =
            static_cast<std::uint8_t>(ex.glyph_ids[g] >> (8 * b));
      }
    }
    ids.bytes.insert(ids.bytes.end(), packed.begin(), packed.end());
  }

  std::ostringstream body;
  write_byte_arrays(body, {images, cells, ids});
  write_file_atomically(path, body.str());

  const nlohmann::ordered_json meta = {
      {"task", std::string(task_name(spec.task))},
      {"n", spec.grid},
      {"seed", spec.seed},
      {"count", examples.size()},
      {"source", source},
      {"split", spec.split == Split::Train ? "train" : "test"},
      {"min_digits", spec.min_digits},
      {"max_digits", spec.max_digits},
  };
  write_file_atomically(sidecar_path(path), meta.dump(2) + "\n");
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream meta_in(sidecar_path(path));
  if (!meta_in) throw FormatError("missing dataset sidecar " + sidecar_path(path).string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad dataset sidecar: " + std::string(e.what()));
  }

  LoadedDataset out;
  try {
    out.spec.task = parse_task(meta.at("task").get<std::string>());
    out.spec.grid = meta.at("n").get<int>();
    out.spec.seed = meta.at("seed").get<std::uint64_t>();
    out.spec.sample_count = meta.at("count").get<std::size_t>();
    out.spec.split = meta.value("split", "train") == "test" ? Split::Test : Split::Train;
    out.spec.min_digits = meta.value("min_digits", 2);
    out.spec.max_digits = meta.value("max_digits", 3);
    out.source = meta.at("source").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad dataset sidecar: " + std::string(e.what()));
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  const auto arrays = read_byte_arrays(in);
  auto find = [&](std::string_view name) -> const ByteArray& {
    for (const auto& a : arrays) {
      if (a.name == name) return a;
    }
    throw FormatError("dataset is missing array '" + std::string(name) + "'");
  };
  const ByteArray& images = find("images");
  const ByteArray& cells = find("cells");
  const ByteArray& ids = find("glyph_ids");
  const int n = out.spec.grid;
  const std::size_t count = out.spec.sample_count;
  const std::size_t side = static_cast<std::size_t>(n) * kGlyphSide;
  if (images.bytes.size() != count * side * side ||
      cells.bytes.size() != count * static_cast<std::size_t>(n * n) ||
      ids.bytes.size() != count * 32) {
    throw FormatError("dataset arrays do not match sidecar count/grid");
  }

  out.examples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& ex = out.examples[i];
    ex.task = out.spec.task;
    ex.grid = n;
    ex.image.height = ex.image.width = static_cast<int>(side);
    const auto* img = images.bytes.data() + i * side * side;
    ex.image.pixels.assign(img, img + side * side);
    ex.cell_content.resize(static_cast<std::size_t>(n * n));
    std::size_t glyphs = 0;
    for (int c = 0; c < n * n; ++c) {
      const std::uint8_t code = cells.bytes[i * static_cast<std::size_t>(n * n) +
                                            static_cast<std::size_t>(c)];
      ex.cell_content[static_cast<std::size_t>(c)] = code == 255 ? kBlankCell : code;
      if (code != 255) ++glyphs;
    }
    for (std::size_t g = 0; g < glyphs && g < 4; ++g) {
      std::uint64_t id = 0;
      for (int b = 0; b < 8; ++b) {
        id |= static_cast<std::uint64_t>(ids.bytes[i * 32 + g * 8 + static_cast<std::size_t>(b)])
              << (8 * b);
      }
      ex.glyph_ids.push_back(id);
    }
    fill_labels(ex);
  }
  return out;
}

}  // namespace varl
