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

#include "varl/perception.hpp"

#include "varl/optim.hpp"

#include <algorithm>
#include <cmath>

namespace varl {

ImageSet glyph_images(const GlyphSet& glyphs) {
  ImageSet set;
  set.side = kGlyphSide;
  set.pixels = glyphs.pixels;
  set.labels = glyphs.labels;
  return set;
}

ClassifierReport pretrain_classifier(const GlyphSet& train, const GlyphSet& test,
                                     int class_count, const PretrainConfig& config,
                                     const EpochCallback& on_epoch) {
  if (train.size() < 2) throw std::invalid_argument("pretrain_classifier: too few glyphs");
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(config.fit.seed, 101));
  split_rng.shuffle(order);
  const auto held = std::clamp<std::size_t>(
      static_cast<std::size_t>(config.validation_fraction * static_cast<double>(order.size())),
      1, order.size() - 1);
  const ImageSet all = glyph_images(train);
  const ImageSet validation = all.subset(std::span(order).first(held));
  const ImageSet fit_set = all.subset(std::span(order).subspan(held));

  ClassifierReport report;
  report.fit = fit_lenet(fit_set, validation, class_count, config.fit, on_epoch);
  report.test_accuracy = lenet_accuracy(report.fit.params, glyph_images(test));
  return report;
}

// ---------------------------------------------------------------------------
// Salience

std::vector<SalienceScene> salience_scenes(const GlyphSet& digits, const GlyphSet& letters,
                                           std::size_t count, int grid, std::uint64_t seed) {
  if (digits.size() == 0 || letters.size() == 0) {
    throw std::invalid_argument("salience_scenes needs digit and letter glyphs");
  }
  Rng rng(seed);
  const int cells = grid * grid;
  std::vector<SalienceScene> out(count);
  for (auto& scene : out) {
    scene.grid = grid;
    scene.image.height = scene.image.width = grid * kGlyphSide;
    scene.image.pixels.assign(static_cast<std::size_t>(scene.image.height * scene.image.width),
                              0);
    scene.occupancy.assign(static_cast<std::size_t>(cells), 0);
    std::vector<int> order(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    const int k = rng.below(cells + 1);
    for (int g = 0; g < k; ++g) {
      const int cell = order[static_cast<std::size_t>(g)];
      const GlyphSet& set = rng.below(2) == 0 ? digits : letters;
      paste_glyph(scene.image, cell % grid, cell / grid,
                  set.glyph(static_cast<std::size_t>(rng.below(set.size()))));
      scene.occupancy[static_cast<std::size_t>(cell)] = 1;
    }
    scene.fovea_x = rng.below(grid);
    scene.fovea_y = rng.below(grid);
  }
  return out;
}

Vector salience_features(const GrayImage& scene, int grid, int fovea_x, int fovea_y) {
  if (scene.width != grid * kGlyphSide || scene.height != grid * kGlyphSide) {
    throw ShapeError("salience: scene is " + std::to_string(scene.height) + "x" +
                     std::to_string(scene.width) + ", expected side " +
                     std::to_string(grid * kGlyphSide));
  }
  const int side = scene.width / 4;
  Vector f(side * side + 2);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      int acc = 0;
      for (int dy = 0; dy < 4; ++dy) {
        for (int dx = 0; dx < 4; ++dx) acc += scene.at(4 * y + dy, 4 * x + dx);
      }
      f[y * side + x] = acc / (16.0 * 255.0);
    }
  }
  const double denom = grid > 1 ? grid - 1 : 1;
  f[side * side] = grid > 1 ? fovea_x / denom : 0.0;
  f[side * side + 1] = grid > 1 ? fovea_y / denom : 0.0;
  return f;
}

ParamSet init_salience(int grid, Rng& rng) {
  const int side = grid * kGlyphSide / 4;
  return init_mlp({side * side + 2, kSalienceHidden, kSalienceHidden, kSalienceHidden,
                   grid * grid},
                  rng);
}

std::vector<double> detect_salience(const ParamSet& net, const GrayImage& scene, int grid,
                                    int fovea_x, int fovea_y) {
  Vector f = salience_features(scene, grid, fovea_x, fovea_y);
  const int dim = static_cast<int>(f.size());
  if (net["l0/w"].dim(0) != dim) {
    throw ShapeError("salience net expects " + std::to_string(net["l0/w"].dim(0)) +
                     " features, scene gives " + std::to_string(dim));
  }
  const Tensor p = sigmoid(mlp_forward(net, Tensor({dim}, std::move(f))));
  return {p.data().begin(), p.data().end()};
}

double salience_cell_accuracy(const ParamSet& net, std::span<const SalienceScene> scenes) {
  std::size_t hits = 0, total = 0;
  for (const auto& s : scenes) {
    const auto p = detect_salience(net, s.image, s.grid, s.fovea_x, s.fovea_y);
    for (std::size_t c = 0; c < p.size(); ++c) {
      hits += (p[c] > 0.5) == (s.occupancy[c] != 0);
      ++total;
    }
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

namespace {

struct SalienceBatch {
  Tensor features;
  Tensor targets;
};

SalienceBatch salience_batch(std::span<const SalienceScene> scenes,
                             std::span<const std::size_t> indices) {
  const int rows = static_cast<int>(indices.size());
  const int cells = scenes[indices[0]].grid * scenes[indices[0]].grid;
  RowMatrix f;
  RowMatrix t(rows, cells);
  for (int r = 0; r < rows; ++r) {
    const auto& s = scenes[indices[static_cast<std::size_t>(r)]];
    const Vector v = salience_features(s.image, s.grid, s.fovea_x, s.fovea_y);
    if (r == 0) f.resize(rows, v.size());
    f.row(r) = v.transpose();
    for (int c = 0; c < cells; ++c) t(r, c) = s.occupancy[static_cast<std::size_t>(c)];
  }
  const int dim = static_cast<int>(f.cols());
  return {Tensor({rows, dim}, Eigen::Map<const Vector>(f.data(), f.size())),
          Tensor({rows, cells}, Eigen::Map<const Vector>(t.data(), t.size()))};
}

double salience_loss_value(const ParamSet& net, std::span<const SalienceScene> scenes) {
  std::vector<std::size_t> all(scenes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto b = salience_batch(scenes, all);
  return mean(sigmoid_cross_entropy(mlp_forward(net, b.features), b.targets)).item();
}

}  // namespace

SalienceReport pretrain_salience(const GlyphPools& pools, const SalienceConfig& config,
                                 const EpochCallback& on_epoch) {
  if (config.train_scenes == 0 || config.validation_scenes == 0) {
    throw std::invalid_argument("pretrain_salience: empty scene set");
  }
  const auto train = salience_scenes(pools.train_digits, pools.train_letters,
                                     config.train_scenes, config.grid,
                                     derive_seed(config.seed, 1));
  const auto validation = salience_scenes(pools.train_digits, pools.train_letters,
                                          config.validation_scenes, config.grid,
                                          derive_seed(config.seed, 2));
  const auto test = salience_scenes(pools.test_digits, pools.test_letters,
                                    config.test_scenes, config.grid,
                                    derive_seed(config.seed, 3));

  Rng rng(derive_seed(config.seed, 4));
  ParamSet params = init_salience(config.grid, rng);
  AdamState adam = make_adam(params, config.learning_rate);

  SalienceReport report;
  report.initial_loss = salience_loss_value(params, train);
  report.params = params;
  report.best_validation_cell_accuracy = -1.0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count =
          std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      const auto b = salience_batch(train, std::span(order).subspan(start, count));
      Tape tape;
      const ParamSet tracked = params.track(tape);
      const Tensor loss = mean(sigmoid_cross_entropy(mlp_forward(tracked, b.features),
                                                     b.targets));
      if (!std::isfinite(loss.item())) {
        throw TrainingDivergedError("non-finite salience loss at epoch " +
                                    std::to_string(epoch));
      }
      tape.backward(loss);
      adam_step(params, tracked.gradients(tape), adam);
      loss_sum += loss.item();
      ++batches;
    }
    const double loss = loss_sum / static_cast<double>(batches);
    const double acc = salience_cell_accuracy(params, validation);
    report.epoch_loss.push_back(loss);
    report.validation_cell_accuracy.push_back(acc);
    if (on_epoch) on_epoch(epoch, loss, acc);
    if (acc > report.best_validation_cell_accuracy) {
      report.best_validation_cell_accuracy = acc;
      report.params = params;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }

  report.test_cell_accuracy = salience_cell_accuracy(report.params, test);
  GrayImage empty;
  empty.height = empty.width = config.grid * kGlyphSide;
  empty.pixels.assign(static_cast<std::size_t>(empty.height * empty.width), 0);
  for (int fy = 0; fy < config.grid; ++fy) {
    for (int fx = 0; fx < config.grid; ++fx) {
      const auto p = detect_salience(report.params, empty, config.grid, fx, fy);
      report.empty_scene_max_probability =
          std::max(report.empty_scene_max_probability, *std::max_element(p.begin(), p.end()));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// FrozenNets

FrozenNets::FrozenNets(ParamSet digit, ParamSet op, ParamSet salience)
    : digit_(std::move(digit)), op_(std::move(op)), salience_(std::move(salience)) {}

FrozenNets FrozenNets::load(const std::filesystem::path& dir) {
  for (const char* name : {"digit.varl", "op.varl", "salience.varl"}) {
    if (!std::filesystem::exists(dir / name)) {
      throw FormatError("missing perception checkpoint " + (dir / name).string());
    }
  }
  return FrozenNets(load_params(dir / "digit.varl"), load_params(dir / "op.varl"),
                    load_params(dir / "salience.varl"));
}

void FrozenNets::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_params(dir / "digit.varl", digit_);
  save_params(dir / "op.varl", op_);
  save_params(dir / "salience.varl", salience_);
}

namespace {

Classification from_prediction(const Prediction& p) {
  return {p.label, p.probabilities[static_cast<std::size_t>(p.label)]};
}

std::string key_of(std::span<const std::uint8_t> bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace

Classification FrozenNets::classify_digit(std::span<const std::uint8_t> glimpse) const {
  return from_prediction(lenet_predict(digit_, glimpse));
}

Classification FrozenNets::classify_op(std::span<const std::uint8_t> glimpse) const {
  return from_prediction(lenet_predict(op_, glimpse));
}

std::vector<double> FrozenNets::salience(const GrayImage& scene, int grid, int fovea_x,
                                         int fovea_y) const {
  return detect_salience(salience_, scene, grid, fovea_x, fovea_y);
}

// ---------------------------------------------------------------------------
// LookupPerception

void LookupPerception::add(const LabeledExample& example) {
  const int n = example.grid;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int code = example.cell_content[static_cast<std::size_t>(y * n + x)];
      if (code == kBlankCell) continue;
      cell_codes_[key_of(get_glimpse(example.image, x, y))] = code;
    }
  }
  occupancy_[key_of(example.image.pixels)] = example.occupancy;
}

Classification LookupPerception::classify_digit(std::span<const std::uint8_t> glimpse) const {
  const auto it = cell_codes_.find(key_of(glimpse));
  if (it == cell_codes_.end() || it->second >= kLetterCellBase) return {0, 0.1};
  return {it->second, 1.0};
}

Classification LookupPerception::classify_op(std::span<const std::uint8_t> glimpse) const {
  const auto it = cell_codes_.find(key_of(glimpse));
  if (it == cell_codes_.end() || it->second < kLetterCellBase) return {0, 0.25};
  return {it->second - kLetterCellBase, 1.0};
}

std::vector<double> LookupPerception::salience(const GrayImage& scene, int grid, int,
                                               int) const {
  std::vector<double> out(static_cast<std::size_t>(grid * grid), 0.0);
  const auto it = occupancy_.find(key_of(scene.pixels));
  if (it == occupancy_.end()) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = it->second[i] ? 1.0 : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// CachedPerception

namespace {

template <class Map, class Fn>
auto memo(Map& map, std::string key, std::size_t& hits, std::size_t& misses, Fn&& compute)
    -> typename Map::mapped_type {
  if (auto it = map.find(key); it != map.end()) {
    ++hits;
    return it->second;
  }
  ++misses;
  auto value = compute();
  map.emplace(std::move(key), value);
  return value;
}

}  // namespace

Classification CachedPerception::classify_digit(std::span<const std::uint8_t> glimpse) const {
  return memo(digit_, key_of(glimpse), hits_, misses_,
              [&] { return inner_->classify_digit(glimpse); });
}

Classification CachedPerception::classify_op(std::span<const std::uint8_t> glimpse) const {
  return memo(op_, key_of(glimpse), hits_, misses_,
              [&] { return inner_->classify_op(glimpse); });
}

std::vector<double> CachedPerception::salience(const GrayImage& scene, int grid, int fovea_x,
                                               int fovea_y) const {
  std::string key = key_of(scene.pixels);
  key.push_back(static_cast<char>(grid));
  key.push_back(static_cast<char>(fovea_x));
  key.push_back(static_cast<char>(fovea_y));
  return memo(salience_, std::move(key), hits_, misses_,
              [&] { return inner_->salience(scene, grid, fovea_x, fovea_y); });
}

}  // namespace varl
