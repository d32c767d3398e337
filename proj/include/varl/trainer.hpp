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

#include "varl/controller.hpp"
#include "varl/perception.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

// Batched actor-critic training. Each update samples N episodes with the
// current policy, replays them on a tape and descends
//
//   loss = -1/(NT) sum_k sum_t [ log pi(a_t|h_t) A_t
//                                - lambda (R_t - V(h_t))^2
//                                + eta H(pi(.|h_t)) ]
//
// with the advantages A_t = R_t - V(h_t) entering as plain numbers, so no
// gradient reaches the value head through the policy term.

namespace varl {

struct TrainConfig {
  int batch_size = 16;          // N
  double gamma = 1.0;
  double value_weight = 0.5;    // lambda
  double entropy_weight = 0.01; // eta
  double learning_rate = 1e-3;
  int total_updates = 5000;
  int eval_every = 250;
  std::uint64_t seed = 0;
  int horizon = 30;
  std::string optimizer = "adam";  // or "sgd"
  double clip_norm = 0.0;          // global-norm clip; 0 disables
};

void validate(const TrainConfig& config);

struct BatchStats {
  int update = 0;
  double mean_return = 0.0;  // R_0 averaged over the batch
  double policy_term = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double train_accuracy = 0.0;
};

struct CurvePoint {
  int update = 0;
  // Averages over the updates since the previous point.
  double mean_return = 0.0;
  double entropy = 0.0;
  double value_loss = 0.0;
  double eval_accuracy = 0.0;
};

/// Samples N episodes, examples drawn uniformly with replacement from `train`
/// by `picker`; episode k uses the stream derive_seed(episode_seed, k).
/// Observations are recorded for replay. `picked` receives the indices.
std::vector<Trajectory> collect_batch(const ParamSet& params,
                                      std::span<const LabeledExample> train,
                                      const Perception& perception, const EnvConfig& env,
                                      int batch_size, Rng& picker, std::uint64_t episode_seed,
                                      std::vector<std::size_t>* picked = nullptr);

/// Per-step differentiable quantities, one [N] tensor per time step.
struct StepTerms {
  std::vector<Tensor> log_prob;
  std::vector<Tensor> value;
  std::vector<Tensor> entropy;
};

/// Re-runs the controller over the recorded observations and actions.
StepTerms replay_batch(const ParamSet& params, const std::vector<Trajectory>& batch);

struct SurrogateLoss {
  Tensor loss;
  double policy_term = 0.0;  // mean log pi * A
  double value_loss = 0.0;   // mean (R - V)^2
  double entropy = 0.0;      // mean H
};

/// Uses return_ and advantage from the records as constants.
SurrogateLoss surrogate_loss(const StepTerms& terms, const std::vector<Trajectory>& batch,
                             double value_weight, double entropy_weight);

struct TrainHooks {
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::filesystem::path log_csv;         // empty: no log
  std::function<void(const BatchStats&)> on_update;
  std::function<void(const CurvePoint&)> on_eval;
};

struct TrainResult {
  ParamSet params;
  std::vector<CurvePoint> curve;  // total_updates / eval_every points
};

/// Greedy evaluation on `eval_set` every eval_every updates. Throws
/// TrainingDivergedError on a non-finite loss, or when the mean policy
/// entropy drops below 0.01 within the first 10% of updates.
TrainResult train_controller(const TrainConfig& config, std::span<const LabeledExample> train,
                             std::span<const LabeledExample> eval_set,
                             const Perception& perception, const TrainHooks& hooks = {});

inline constexpr const char* kTrainLogHeader = "update,mean_return,entropy,value_loss,eval_accuracy";

// ---------------------------------------------------------------------------
// Exact policy gradients on enumerable decision processes.

/// Finite-horizon process whose state is the action history; undiscounted.
struct TinyMdp {
  int actions = 2;
  int horizon = 1;
  /// Reward for `action` taken after `history`.
  std::function<double(std::span<const int> history, int action)> reward;
};

inline constexpr std::size_t kMaxEnumeratedTrajectories = 10000;

class EnumerationTooLargeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// actions^horizon; throws EnumerationTooLargeError above the limit.
std::size_t trajectory_count(const TinyMdp& mdp);

/// Softmax policy with one logit vector per history: "logits/" for the
/// empty history, "logits/0.1" after actions 0 then 1. Normal(0, scale).
ParamSet tabular_policy(const TinyMdp& mdp, std::uint64_t seed, double scale = 1.0);

/// J = sum_tau P(tau) sum_t r_t.
double exact_objective(const TinyMdp& mdp, const ParamSet& policy);

/// Gradient of J, by differentiating the enumeration itself.
std::vector<Vector> exact_gradient(const TinyMdp& mdp, const ParamSet& policy);

using HistoryBaseline = std::function<double(std::span<const int> history)>;

/// sum_tau P(tau) g(tau), where g is the single-trajectory score-function
/// estimate obtained from surrogate_loss (eta = 0) with the given baseline
/// as the value estimate.
std::vector<Vector> expected_estimator_gradient(const TinyMdp& mdp, const ParamSet& policy,
                                                const HistoryBaseline& baseline = {});

}  // namespace varl
