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

#include "varl/rng.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varl {

inline constexpr int kGlyphSide = 28;
inline constexpr int kGlyphPixels = kGlyphSide * kGlyphSide;

/// Op letters in class-index order. The letter selects the reduction in the
/// Combined task: A sum, M product, X max, N min.
inline constexpr std::array<char, 4> kOpLetters = {'A', 'M', 'X', 'N'};

/// Index of `letter` in kOpLetters, or nullopt.
std::optional<int> op_letter_index(char letter);

enum class GlyphKind { Digits, Letters };

/// 28x28 grayscale glyphs with labels. Digit labels are 0-9; letter labels
/// are op-letter indices 0-3 (see kOpLetters).
struct GlyphSet {
  GlyphKind kind = GlyphKind::Digits;
  std::vector<std::uint8_t> pixels;  // count * 784, row-major per glyph
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;  // globally unique across pools
  std::string source;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> glyph(std::size_t i) const {
    return {pixels.data() + i * kGlyphPixels, kGlyphPixels};
  }
  std::uint64_t id(std::size_t i) const { return ids[i]; }

  /// Assigns ids base, base + 1, ...
  void number_from(std::uint64_t base);

  /// Subset by index, keeping ids.
  GlyphSet subset(std::span<const std::size_t> indices) const;
};

// ---------------------------------------------------------------------------
// IDX files

class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IdxMagicError : public IdxError {
 public:
  using IdxError::IdxError;
};
class IdxTruncatedError : public IdxError {
 public:
  using IdxError::IdxError;
};
class IdxCountMismatchError : public IdxError {
 public:
  using IdxError::IdxError;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

/// Reads an IDX image file; gzip-compressed files are decompressed
/// transparently.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

struct IdxLoadOptions {
  GlyphKind kind = GlyphKind::Digits;
  /// EMNIST stores glyphs transposed relative to MNIST.
  bool transpose = false;
  /// For letters: label value of 'A'; label A+k is the k-th letter. The
  /// EMNIST "letters" split uses 1.
  int letter_label_base = 1;
};

/// Loads a labelled glyph pair. Digits keep labels 0-9; letters keep only
/// A, M, X, N (remapped to op indices), discarding everything else.
GlyphSet load_idx(const std::filesystem::path& images_path,
                  const std::filesystem::path& labels_path,
                  const IdxLoadOptions& options = {});

void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path,
                      std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Synthetic glyphs

/// Renders one glyph: stroke skeleton of `symbol` ('0'-'9', 'A', 'M', 'X',
/// 'N') under a random affine transform, stroke width and point jitter, with
/// speckle noise. Used when EMNIST files are not available.
std::array<std::uint8_t, kGlyphPixels> render_glyph(char symbol, Rng& rng);

GlyphSet synthetic_glyphs(GlyphKind kind, std::size_t count, std::uint64_t seed,
                          std::uint64_t id_base = 0);

// ---------------------------------------------------------------------------
// Train/test glyph pools

struct GlyphPools {
  GlyphSet train_digits;
  GlyphSet train_letters;
  GlyphSet test_digits;
  GlyphSet test_letters;
  bool synthetic = true;
  std::string source;  // file names or "synthetic"
};

struct SyntheticPoolSizes {
  std::size_t train_digits = 12000;
  std::size_t train_letters = 4000;
  std::size_t test_digits = 6000;
  std::size_t test_letters = 3000;
};

/// Pools from EMNIST files in `data_dir` when present (emnist-digits-* and
/// emnist-letters-* IDX pairs, optionally .gz), otherwise synthetic pools
/// generated from `seed`.
GlyphPools load_glyph_pools(const std::optional<std::filesystem::path>& data_dir,
                            std::uint64_t seed = 2017,
                            const SyntheticPoolSizes& sizes = {});

GlyphPools synthetic_pools(std::uint64_t seed, const SyntheticPoolSizes& sizes = {});

}  // namespace varl
