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

// Probes shared by the trainer tests and the acceptance run.

#pragma once

#include "varl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace varl::testing {

inline double max_abs_diff(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return worst;
}

inline double max_abs(const std::vector<Vector>& a) {
  double worst = 0.0;
  for (const auto& v : a) worst = std::max(worst, v.cwiseAbs().maxCoeff());
  return worst;
}

/// Reward depends on the whole history so credit assignment matters.
inline TinyMdp history_mdp(int actions, int horizon, std::uint64_t seed) {
  auto table = std::make_shared<std::vector<double>>();
  Rng rng(seed);
  for (int i = 0; i < 4096; ++i) table->push_back(rng.uniform(-1.0, 1.0));
  TinyMdp mdp;
  mdp.actions = actions;
  mdp.horizon = horizon;
  mdp.reward = [table](std::span<const int> history, int action) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int a : history) h = (h ^ static_cast<std::uint64_t>(a + 1)) * 1099511628211ULL;
    h = (h ^ static_cast<std::uint64_t>(action + 101)) * 1099511628211ULL;
    return (*table)[h % table->size()];
  };
  return mdp;
}

struct GradientStopProbe {
  double policy_grad_change = 0.0;      // after perturbing the value head
  double policy_grad_on_value_head = 0.0;
  double policy_term_fd_slope = 0.0;    // d(policy term)/d(value bias), central difference
  double value_grad_change = 0.0;
  double leaky_grad_on_value_head = 0.0;  // same term with A left on the tape
};

namespace detail {

inline bool is_value_head(const std::string& name) { return name.rfind("ctrl/value/", 0) == 0; }

/// Gradients of the loss built from `batch` with the given weights; the
/// policy term alone when value_weight = 0 (eta is always 0 here).
inline std::vector<Vector> probe_grads(const ParamSet& params, const std::vector<Trajectory>& batch,
                                       double value_weight, double* loss_value = nullptr) {
  Tape tape;
  const ParamSet tracked = params.track(tape);
  const auto s = surrogate_loss(replay_batch(tracked, batch), batch, value_weight, 0.0);
  if (loss_value) *loss_value = s.loss.item();
  tape.backward(s.loss);
  return tracked.gradients(tape);
}

}  // namespace detail

/// Policy-term gradients must not see the value head: advantages are data.
inline GradientStopProbe gradient_stop_probe(const ParamSet& params,
                                             const std::vector<Trajectory>& batch,
                                             double delta = 0.05) {
  GradientStopProbe probe;
  const auto policy_before = detail::probe_grads(params, batch, 0.0);

  // Value-loss gradient alone: zero the advantages so the policy term drops.
  auto value_only = batch;
  for (auto& tr : value_only) {
    for (auto& s : tr.steps) s.advantage = 0.0;
  }
  const auto value_before = detail::probe_grads(params, value_only, 1.0);

  ParamSet moved = params;
  for (auto& e : moved.entries()) {
    if (!detail::is_value_head(e.name)) continue;
    for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value[i] += delta * (1.0 + 0.1 * static_cast<double>(i % 7));
  }
  const auto policy_after = detail::probe_grads(moved, batch, 0.0);
  const auto value_after = detail::probe_grads(moved, value_only, 1.0);
  probe.policy_grad_change = max_abs_diff(policy_before, policy_after);
  probe.value_grad_change = max_abs_diff(value_before, value_after);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (detail::is_value_head(params.entries()[i].name)) {
      probe.policy_grad_on_value_head =
          std::max(probe.policy_grad_on_value_head, policy_before[i].cwiseAbs().maxCoeff());
    }
  }

  // Central difference of the policy term in the value bias.
  double up = 0.0, down = 0.0;
  ParamSet shifted = params;
  shifted["ctrl/value/b"][0] += 1e-4;
  detail::probe_grads(shifted, batch, 0.0, &up);
  shifted["ctrl/value/b"][0] -= 2e-4;
  detail::probe_grads(shifted, batch, 0.0, &down);
  probe.policy_term_fd_slope = (up - down) / 2e-4;

  // Contrast: advantages recomputed on the tape do reach the value head.
  {
    Tape tape;
    const ParamSet tracked = params.track(tape);
    const auto terms = replay_batch(tracked, batch);
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t t = 0; t < terms.log_prob.size(); ++t) {
      Vector r(static_cast<Eigen::Index>(batch.size()));
      for (std::size_t k = 0; k < batch.size(); ++k) r[static_cast<Eigen::Index>(k)] = batch[k].steps[t].return_;
      total = total + sum(terms.log_prob[t] * (Tensor({static_cast<int>(batch.size())}, r) - terms.value[t]));
    }
    tape.backward(total);
    const auto grads = tracked.gradients(tape);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (detail::is_value_head(params.entries()[i].name)) {
        probe.leaky_grad_on_value_head =
            std::max(probe.leaky_grad_on_value_head, grads[i].cwiseAbs().maxCoeff());
      }
    }
  }
  return probe;
}

/// Parameters with non-zero heads so every path carries signal.
inline ParamSet perturbed_controller(int obs_dim, std::uint64_t seed, double scale = 0.1) {
  ParamSet p = init_controller(obs_dim, seed);
  Rng rng(derive_seed(seed, 77));
  for (auto& e : p.entries()) {
    if (e.name.rfind("ctrl/policy/", 0) == 0 || e.name.rfind("ctrl/value/", 0) == 0) {
      for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value[i] = scale * rng.normal();
    }
  }
  return p;
}

}  // namespace varl::testing
