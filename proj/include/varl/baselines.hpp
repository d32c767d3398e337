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
#include "varl/scene.hpp"

#include <span>
#include <string>
#include <vector>

// Feedforward comparison: a LeNet reading the whole scene and predicting the
// answer class directly, with no interface in between.

namespace varl {

inline constexpr int kAnswerClasses = 101;

struct BaselineConfig {
  int fc_units = 128;  // 32, 128 or 512
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int patience = 5;
  int batch_size = 32;
  /// Share of the training samples held out for early stopping. 0 stops on
  /// training accuracy instead.
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

class ResolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scene images labelled with class_index. All scenes must share one size.
ImageSet scene_images(std::span<const LabeledExample> examples);

struct BaselineReport {
  ParamSet params;
  double initial_loss = 0.0;
  double train_accuracy = 0.0;  // on every training sample, held-out ones included
  double test_accuracy = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<std::string> warnings;
};

/// `test` may be empty, in which case test_accuracy is 0.
BaselineReport train_baseline(std::span<const LabeledExample> train,
                              std::span<const LabeledExample> test, const BaselineConfig& config,
                              const EpochCallback& on_epoch = {});

/// Argmax class against class_index.
double evaluate_baseline(const ParamSet& params, std::span<const LabeledExample> dataset);

}  // namespace varl
