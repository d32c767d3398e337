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

#include "varl/interface.hpp"
#include "varl/rng.hpp"
#include "varl/scene.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

// The external environment (a static scene that scores the transmitted
// store) coupled with the interface, and episode rollout over it.

namespace varl {

struct EnvConfig {
  int horizon = 30;    // T
  double gamma = 1.0;  // discount in (0, 1]
};

void validate(const EnvConfig& env);

/// Non-final steps: 0 when correct, -1/T otherwise. Final step: 0 or -1.
double step_reward(int t, int horizon, bool correct);

/// R_t = r_t + gamma R_{t+1}, R_T = 0.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

struct PolicyDecision {
  Action action = Action::Up;
  double log_prob = 0.0;
  double value = 0.0;
};

/// Chooses actions for a batch of episodes advancing in lockstep. Row k of
/// every call belongs to episode k; reset() starts a fresh batch.
class BatchPolicy {
 public:
  virtual ~BatchPolicy() = default;
  virtual void reset(std::size_t batch) = 0;

  /// `observations` is [batch x obs_dim] row-major. `examples` gives
  /// scripted policies access to the scene; learned policies ignore it.
  virtual void act(int t, std::span<const double> observations,
                   std::span<const InterfaceState> states,
                   std::span<const LabeledExample* const> examples, std::span<Rng> rngs,
                   std::span<PolicyDecision> out) = 0;
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::vector<double> observation;  // empty unless recorded
  Action action = Action::Up;
  double log_prob = 0.0;
  double value_estimate = 0.0;
  double reward = 0.0;
  double return_ = 0.0;
  double advantage = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  std::int64_t final_store = 0;
  bool correct = false;
};

using TraceFn = std::function<void(std::size_t episode, int t, Action action,
                                   const InterfaceState& after)>;

struct RolloutOptions {
  bool record_observations = false;
  TraceFn trace;
};

/// Runs one episode per example in lockstep: observe, act, update the
/// interface, transmit the store to the environment, collect the reward.
std::vector<Trajectory> run_episodes(BatchPolicy& policy,
                                     std::span<const LabeledExample* const> examples,
                                     const Perception& perception, const EnvConfig& env,
                                     std::span<Rng> rngs, const RolloutOptions& options = {});

Trajectory run_episode(BatchPolicy& policy, const LabeledExample& example,
                       const Perception& perception, const EnvConfig& env, Rng& rng,
                       const RolloutOptions& options = {});

struct EvalRow {
  std::size_t example_id = 0;
  int answer = 0;
  std::int64_t guess = 0;
  bool correct = false;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<EvalRow> rows;
};

/// Final-step store as the guess. The policy decides how it acts (learned
/// policies evaluate greedily); rngs are derived from `seed` per example.
EvalReport evaluate(BatchPolicy& policy, std::span<const LabeledExample> dataset,
                    const Perception& perception, const EnvConfig& env,
                    std::uint64_t seed = 0, std::size_t batch = 256,
                    const RolloutOptions& options = {});

/// CSV "example_id,answer,guess,correct" and JSON {task, n_examples,
/// accuracy, seed}.
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);
void write_eval_summary(const std::filesystem::path& path, TaskKind task,
                        const EvalReport& report, std::uint64_t seed);

}  // namespace varl
