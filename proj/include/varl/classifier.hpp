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

#include "varl/nn.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Supervised LeNet training shared by the perception classifiers and the
// scene-level baselines.

namespace varl {

/// Square grayscale images with integer labels.
struct ImageSet {
  int side = 28;
  std::vector<std::uint8_t> pixels;  // size() * side * side
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> bytes(std::size_t i) const {
    const auto n = static_cast<std::size_t>(side * side);
    return {pixels.data() + i * n, n};
  }
  void push_back(std::span<const std::uint8_t> image, int label);
  ImageSet subset(std::span<const std::size_t> indices) const;
};

/// Bytes scaled to [0, 1] as a [side x side] tensor.
Tensor image_tensor(std::span<const std::uint8_t> bytes, int side);

class TrainingDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  int fc_units = 128;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int patience = 3;     // epochs without validation improvement
  int max_epochs = 20;
  std::uint64_t seed = 0;
};

struct FitReport {
  ParamSet params;  // best-validation snapshot
  double initial_loss = 0.0;  // mean cross-entropy on the training set at init
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  std::vector<double> validation_accuracy;
  double best_validation_accuracy = 0.0;
  int best_epoch = 0;  // 1-based
};

using EpochCallback = std::function<void(int epoch, double loss, double val_accuracy)>;

/// Minibatch ADAM on softmax cross-entropy with early stopping on validation
/// accuracy (ties broken by validation loss). Deterministic in config.seed.
FitReport fit_lenet(const ImageSet& train, const ImageSet& validation, int class_count,
                    const FitConfig& config, const EpochCallback& on_epoch = {});

struct Prediction {
  int label = 0;  // argmax, ties to the lowest index
  std::vector<double> probabilities;
};

Prediction lenet_predict(const ParamSet& net, std::span<const std::uint8_t> bytes);

double lenet_accuracy(const ParamSet& net, const ImageSet& images);

/// Mean cross-entropy over a set (no tape).
double lenet_mean_loss(const ParamSet& net, const ImageSet& images);

int lenet_class_count(const ParamSet& net);

}  // namespace varl
