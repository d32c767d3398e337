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

#include "varl/optim.hpp"

#include <cmath>

namespace varl {
namespace {

void require_aligned(const ParamSet& params, std::span<const Vector> grads) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("optimizer: " + std::to_string(grads.size()) +
                                " gradients for " + std::to_string(params.size()) +
                                " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != params.entries()[i].value.size()) {
      throw std::invalid_argument("optimizer: gradient length mismatch for " +
                                  params.entries()[i].name);
    }
  }
}

}  // namespace

AdamState make_adam(const ParamSet& params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const auto& e : params.entries()) {
    state.first_moment.push_back(Vector::Zero(e.value.size()));
    state.second_moment.push_back(Vector::Zero(e.value.size()));
  }
  return state;
}

void adam_step(ParamSet& params, std::span<const Vector> grads, AdamState& state) {
  require_aligned(params, grads);
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: state does not match parameters");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correct1 = 1.0 - std::pow(state.beta1, t);
  const double correct2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Vector& m = state.first_moment[i];
    Vector& v = state.second_moment[i];
    if (m.size() != grads[i].size() || v.size() != grads[i].size()) {
      throw std::invalid_argument("adam_step: moment length mismatch");
    }
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i].cwiseAbs2();
    auto& data = params.entries()[i].value.data();
    data.array() -= state.learning_rate * (m.array() / correct1) /
                    ((v.array() / correct2).sqrt() + state.epsilon);
  }
}

void sgd_step(ParamSet& params, std::span<const Vector> grads, double learning_rate) {
  require_aligned(params, grads);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    params.entries()[i].value.data() -= learning_rate * grads[i];
  }
}

double clip_global_norm(std::span<Vector> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    for (auto& g : grads) g *= max_norm / norm;
  }
  return norm;
}

}  // namespace varl
