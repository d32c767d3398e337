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

#include "varl/classifier.hpp"
#include "varl/emnist.hpp"
#include "varl/scene.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace varl {

// ---------------------------------------------------------------------------
// Pretraining

struct PretrainConfig {
  FitConfig fit;                     // batch 64, lr 1e-3, patience 3, <= 20 epochs
  double validation_fraction = 0.1;  // of the training pool, held out for early stopping
};

struct ClassifierReport {
  FitReport fit;
  double test_accuracy = 0.0;  // on the disjoint test pool
};

/// Glyphs as an ImageSet (labels kept).
ImageSet glyph_images(const GlyphSet& glyphs);

/// Trains a LeNet on `train` (a validation split is carved out of it) and
/// reports accuracy on `test`. class_count 10 for digits, 4 for op letters.
ClassifierReport pretrain_classifier(const GlyphSet& train, const GlyphSet& test,
                                     int class_count, const PretrainConfig& config,
                                     const EpochCallback& on_epoch = {});

/// A scene with a per-cell occupancy mask and a fovea position; salience
/// training data. Occupancy ranges over empty, partial and full grids.
struct SalienceScene {
  GrayImage image;
  int grid = 2;
  std::vector<std::uint8_t> occupancy;
  int fovea_x = 0;
  int fovea_y = 0;
};

/// Scatters a uniform number (0..n^2) of glyphs, each a digit or a letter
/// with equal odds, into random cells.
std::vector<SalienceScene> salience_scenes(const GlyphSet& digits, const GlyphSet& letters,
                                           std::size_t count, int grid, std::uint64_t seed);

/// 4x4 mean-pooled scene scaled to [0, 1], then fovea_x/(n-1), fovea_y/(n-1).
Vector salience_features(const GrayImage& scene, int grid, int fovea_x, int fovea_y);

inline constexpr int kSalienceHidden = 100;

struct SalienceConfig {
  int batch_size = 64;
  double learning_rate = 1e-3;
  int patience = 3;
  int max_epochs = 20;
  std::size_t train_scenes = 6000;
  std::size_t validation_scenes = 1000;
  std::size_t test_scenes = 2000;
  int grid = 2;
  std::uint64_t seed = 0;
};

struct SalienceReport {
  ParamSet params;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> validation_cell_accuracy;
  double best_validation_cell_accuracy = 0.0;
  double test_cell_accuracy = 0.0;
  double empty_scene_max_probability = 0.0;
};

ParamSet init_salience(int grid, Rng& rng);

SalienceReport pretrain_salience(const GlyphPools& pools, const SalienceConfig& config,
                                 const EpochCallback& on_epoch = {});

/// Per-cell probabilities, row-major.
std::vector<double> detect_salience(const ParamSet& net, const GrayImage& scene, int grid,
                                    int fovea_x, int fovea_y);

/// Fraction of cells where (p > 0.5) matches occupancy.
double salience_cell_accuracy(const ParamSet& net, std::span<const SalienceScene> scenes);

// ---------------------------------------------------------------------------
// Frozen inference used by the interface

struct Classification {
  int label = 0;
  double confidence = 0.0;  // probability of `label`
};

/// What the interface sees of perception: two glimpse classifiers and the
/// salience detector. Implementations are read-only after construction.
class Perception {
 public:
  virtual ~Perception() = default;
  virtual Classification classify_digit(std::span<const std::uint8_t> glimpse) const = 0;
  virtual Classification classify_op(std::span<const std::uint8_t> glimpse) const = 0;
  virtual std::vector<double> salience(const GrayImage& scene, int grid, int fovea_x,
                                       int fovea_y) const = 0;
};

/// The three pretrained networks.
class FrozenNets final : public Perception {
 public:
  FrozenNets(ParamSet digit, ParamSet op, ParamSet salience);

  /// Loads digit.varl, op.varl and salience.varl from `dir`.
  static FrozenNets load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  Classification classify_digit(std::span<const std::uint8_t> glimpse) const override;
  Classification classify_op(std::span<const std::uint8_t> glimpse) const override;
  std::vector<double> salience(const GrayImage& scene, int grid, int fovea_x,
                               int fovea_y) const override;

  const ParamSet& digit_net() const { return digit_; }
  const ParamSet& op_net() const { return op_; }
  const ParamSet& salience_net() const { return salience_; }

 private:
  ParamSet digit_, op_, salience_;
};

/// Exact perception for registered scenes: glimpses are matched byte-for-byte
/// against the cells of the scenes they came from. Digit cells classify with
/// certainty as digits, letter cells as op letters; anything else (blank or
/// the wrong kind of glyph) returns class 0 with low confidence.
class LookupPerception final : public Perception {
 public:
  void add(const LabeledExample& example);
  void add(std::span<const LabeledExample> examples) {
    for (const auto& e : examples) add(e);
  }

  Classification classify_digit(std::span<const std::uint8_t> glimpse) const override;
  Classification classify_op(std::span<const std::uint8_t> glimpse) const override;
  std::vector<double> salience(const GrayImage& scene, int grid, int fovea_x,
                               int fovea_y) const override;

 private:
  std::unordered_map<std::string, int> cell_codes_;  // glimpse bytes -> cell code
  std::unordered_map<std::string, std::vector<std::uint8_t>> occupancy_;  // scene bytes
};

/// Memoizes another Perception by input bytes. Results are identical to the
/// wrapped implementation; not thread-safe.
class CachedPerception final : public Perception {
 public:
  explicit CachedPerception(std::shared_ptr<const Perception> inner)
      : inner_(std::move(inner)) {}

  Classification classify_digit(std::span<const std::uint8_t> glimpse) const override;
  Classification classify_op(std::span<const std::uint8_t> glimpse) const override;
  std::vector<double> salience(const GrayImage& scene, int grid, int fovea_x,
                               int fovea_y) const override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::shared_ptr<const Perception> inner_;
  mutable std::unordered_map<std::string, Classification> digit_, op_;
  mutable std::unordered_map<std::string, std::vector<double>> salience_;
  mutable std::size_t hits_ = 0, misses_ = 0;
};

}  // namespace varl
