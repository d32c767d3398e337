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

#include "varl/params.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace varl {

struct AdamState {
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;
};

/// Zero moments shaped like `params`.
AdamState make_adam(const ParamSet& params, double learning_rate);

/// One bias-corrected ADAM descent step. `grads` is aligned with
/// params.entries().
void adam_step(ParamSet& params, std::span<const Vector> grads, AdamState& state);

void sgd_step(ParamSet& params, std::span<const Vector> grads, double learning_rate);

/// Rescales grads so their joint L2 norm is at most max_norm; returns the
/// norm before clipping.
double clip_global_norm(std::span<Vector> grads, double max_norm);

}  // namespace varl
