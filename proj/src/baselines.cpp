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

#include "varl/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace varl {

ImageSet scene_images(std::span<const LabeledExample> examples) {
  ImageSet set;
  if (examples.empty()) return set;
  set.side = examples.front().image.width;
  for (const auto& e : examples) {
    if (e.image.width != set.side || e.image.height != set.side) {
      throw ResolutionError("scene of " + std::to_string(e.image.height) + "x" +
                            std::to_string(e.image.width) + " in a set of " +
                            std::to_string(set.side) + "x" + std::to_string(set.side));
    }
    set.push_back(e.image.pixels, e.class_index);
  }
  return set;
}

BaselineReport train_baseline(std::span<const LabeledExample> train,
                              std::span<const LabeledExample> test, const BaselineConfig& config,
                              const EpochCallback& on_epoch) {
  if (train.empty()) throw std::invalid_argument("train_baseline: empty dataset");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0) {
    throw std::invalid_argument("train_baseline: validation_fraction must be in [0, 1)");
  }
  BaselineReport report;
  if (config.fc_units != 32 && config.fc_units != 128 && config.fc_units != 512) {
    report.warnings.push_back("fc_units " + std::to_string(config.fc_units) +
                              " is outside the usual {32, 128, 512}");
  }
  const ImageSet all = scene_images(train);

  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(config.seed, 101));
  split_rng.shuffle(order);
  auto held = static_cast<std::size_t>(
      std::llround(config.validation_fraction * static_cast<double>(all.size())));
  if (config.validation_fraction > 0.0) held = std::max<std::size_t>(held, 1);
  if (held >= all.size()) held = 0;  // too few samples to hold any out
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  const std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  const ImageSet fit_set = all.subset(fit_idx);
  const ImageSet val_set = held > 0 ? all.subset(val_idx) : fit_set;

  FitConfig fit;
  fit.fc_units = config.fc_units;
  fit.batch_size = config.batch_size;
  fit.learning_rate = config.learning_rate;
  fit.patience = config.patience;
  fit.max_epochs = config.max_epochs;
  fit.seed = config.seed;
  FitReport r = fit_lenet(fit_set, val_set, kAnswerClasses, fit, on_epoch);

  report.params = std::move(r.params);
  report.initial_loss = r.initial_loss;
  report.epochs_run = static_cast<int>(r.epoch_loss.size());
  report.best_epoch = r.best_epoch;
  report.train_accuracy = lenet_accuracy(report.params, all);
  report.test_accuracy = test.empty() ? 0.0 : evaluate_baseline(report.params, test);
  return report;
}

double evaluate_baseline(const ParamSet& params, std::span<const LabeledExample> dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_baseline: empty dataset");
  const ImageSet set = scene_images(dataset);
  if (lenet_input_size(params) != set.side) {
    throw ResolutionError("baseline expects " + std::to_string(lenet_input_size(params)) +
                          "-pixel scenes, got " + std::to_string(set.side));
  }
  return lenet_accuracy(params, set);
}

}  // namespace varl
