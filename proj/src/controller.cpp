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

#include "varl/controller.hpp"

#include <algorithm>
#include <cmath>

namespace varl {

ParamSet init_controller(int obs_dim, std::uint64_t seed, int projection, int hidden) {
  if (obs_dim < 1) throw std::invalid_argument("init_controller: obs_dim must be >= 1");
  Rng rng(seed);
  ParamSet p;
  const ParamSet proj = init_linear(obs_dim, projection, rng).prefixed("ctrl/proj/");
  const ParamSet lstm = init_lstm(projection, hidden, rng).prefixed("ctrl/lstm/");
  for (const auto* part : {&proj, &lstm}) {
    for (const auto& e : part->entries()) p.add(e.name, e.value);
  }
  p.add("ctrl/policy/w", Tensor::zeros({hidden, kActionCount}));
  p.add("ctrl/policy/b", Tensor::zeros({kActionCount}));
  p.add("ctrl/value/w", Tensor::zeros({hidden, 1}));
  p.add("ctrl/value/b", Tensor::zeros({1}));
  return p;
}

int controller_obs_dim(const ParamSet& params) { return params["ctrl/proj/w"].dim(0); }
int controller_hidden_size(const ParamSet& params) { return params["ctrl/policy/w"].dim(0); }

LstmState controller_initial_state(const ParamSet& params, int batch) {
  return lstm_zero_state(batch, controller_hidden_size(params));
}

ControllerOutput controller_forward(const ParamSet& params, const Tensor& observations,
                                    const LstmState& state) {
  if (observations.rank() != 2 || observations.dim(1) != controller_obs_dim(params)) {
    throw ShapeError("controller expects [B x " + std::to_string(controller_obs_dim(params)) +
                     "] observations, got " + to_string(observations.shape()));
  }
  const Tensor x = tanh(linear(observations, params["ctrl/proj/w"], params["ctrl/proj/b"]));
  LstmState next = lstm_cell(x, state, params["ctrl/lstm/w"], params["ctrl/lstm/b"]);
  Tensor logits = linear(next.h, params["ctrl/policy/w"], params["ctrl/policy/b"]);
  Tensor value = linear(next.h, params["ctrl/value/w"], params["ctrl/value/b"]);
  value = reshape(value, {observations.dim(0)});
  return {std::move(logits), std::move(value), std::move(next)};
}

StepResult controller_step(const ParamSet& params, const LstmState& hidden,
                           std::span<const double> observation) {
  const int dim = controller_obs_dim(params);
  if (static_cast<int>(observation.size()) != dim) {
    throw ShapeError("controller_step: observation of length " +
                     std::to_string(observation.size()) + ", expected " + std::to_string(dim));
  }
  Vector v(dim);
  std::copy(observation.begin(), observation.end(), v.data());
  auto out = controller_forward(params, Tensor({1, dim}, std::move(v)), hidden);
  const Tensor p = softmax(out.logits);
  StepResult r;
  r.probabilities.assign(p.data().begin(), p.data().end());
  r.value = out.value[0];
  if (!std::isfinite(r.value)) throw PolicyError("controller produced a non-finite value");
  r.hidden = std::move(out.state);
  return r;
}

SampledAction sample_action(std::span<const double> probabilities, Rng& rng) {
  if (probabilities.size() != static_cast<std::size_t>(kActionCount)) {
    throw std::invalid_argument("sample_action: need 12 probabilities");
  }
  const double u = rng.uniform();
  double cumulative = 0.0;
  int chosen = -1;
  for (int a = 0; a < kActionCount; ++a) {
    const double p = probabilities[static_cast<std::size_t>(a)];
    if (p <= 0.0) continue;
    chosen = a;
    cumulative += p;
    if (u < cumulative) break;
  }
  // chosen is the last positive-probability action if rounding left u above
  // the final cumulative sum.
  if (chosen < 0) throw PolicyError("sample_action: distribution has no mass");
  return {static_cast<Action>(chosen),
          std::log(probabilities[static_cast<std::size_t>(chosen)])};
}

Action greedy_action(std::span<const double> probabilities) {
  return static_cast<Action>(std::max_element(probabilities.begin(), probabilities.end()) -
                             probabilities.begin());
}

void ControllerPolicy::reset(std::size_t batch) {
  state_ = controller_initial_state(params_, static_cast<int>(batch));
}

void ControllerPolicy::act(int, std::span<const double> observations,
                           std::span<const InterfaceState> states,
                           std::span<const LabeledExample* const>, std::span<Rng> rngs,
                           std::span<PolicyDecision> out) {
  const int batch = static_cast<int>(states.size());
  const int dim = controller_obs_dim(params_);
  Vector v = Eigen::Map<const Vector>(observations.data(),
                                      static_cast<Eigen::Index>(observations.size()));
  auto step = controller_forward(params_, Tensor({batch, dim}, std::move(v)), state_);
  state_ = std::move(step.state);
  const Tensor p = softmax(step.logits);
  for (int k = 0; k < batch; ++k) {
    const std::span<const double> row(p.data().data() + k * kActionCount, kActionCount);
    PolicyDecision& d = out[static_cast<std::size_t>(k)];
    if (greedy_) {
      d.action = greedy_action(row);
      d.log_prob = std::log(row[static_cast<std::size_t>(action_index(d.action))]);
    } else {
      const auto s = sample_action(row, rngs[static_cast<std::size_t>(k)]);
      d.action = s.action;
      d.log_prob = s.log_prob;
    }
    d.value = step.value[k];
  }
}

}  // namespace varl
