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

#include "varl/env.hpp"
#include "varl/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

// Recurrent policy/value network:
//   x = tanh(obs W_p + b_p); (h, c) = lstm(x, (h, c));
//   logits = h W_pi + b_pi (12); value = h w_v + b_v.
// Both heads read the same hidden state. Parameters live under "ctrl/".

namespace varl {

inline constexpr int kProjectionUnits = 64;
inline constexpr int kControllerHidden = 128;

/// Heads start at zero, so the initial policy is uniform and the initial
/// value estimate is 0.
ParamSet init_controller(int obs_dim, std::uint64_t seed, int projection = kProjectionUnits,
                         int hidden = kControllerHidden);

int controller_obs_dim(const ParamSet& params);
int controller_hidden_size(const ParamSet& params);

struct ControllerOutput {
  Tensor logits;  // [B x 12]
  Tensor value;   // [B]
  LstmState state;
};

/// One batched step; differentiable when `params` are tracked.
ControllerOutput controller_forward(const ParamSet& params, const Tensor& observations,
                                    const LstmState& state);

LstmState controller_initial_state(const ParamSet& params, int batch);

struct StepResult {
  std::vector<double> probabilities;  // 12
  double value = 0.0;
  LstmState hidden;
};

/// Single-episode step on an observation encoding.
StepResult controller_step(const ParamSet& params, const LstmState& hidden,
                           std::span<const double> observation);

struct SampledAction {
  Action action = Action::Right;
  double log_prob = 0.0;
};

/// Inverse-CDF sampling over the actions in index order.
SampledAction sample_action(std::span<const double> probabilities, Rng& rng);

/// Argmax; ties go to the lowest action index.
Action greedy_action(std::span<const double> probabilities);

/// Runs the controller over lockstep episodes, sampling or acting greedily.
class ControllerPolicy final : public BatchPolicy {
 public:
  ControllerPolicy(const ParamSet& params, bool greedy) : params_(params), greedy_(greedy) {}

  void reset(std::size_t batch) override;
  void act(int t, std::span<const double> observations,
           std::span<const InterfaceState> states,
           std::span<const LabeledExample* const> examples, std::span<Rng> rngs,
           std::span<PolicyDecision> out) override;

 private:
  const ParamSet& params_;
  bool greedy_;
  LstmState state_;
};

}  // namespace varl
