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

#include "varl/env.hpp"

#include "varl/params.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace varl {

void validate(const EnvConfig& env) {
  if (env.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(env.gamma > 0.0 && env.gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
}

double step_reward(int t, int horizon, bool correct) {
  if (t < 0 || t >= horizon) {
    throw std::out_of_range("step " + std::to_string(t) + " outside horizon " +
                            std::to_string(horizon));
  }
  if (correct) return 0.0;
  return t == horizon - 1 ? -1.0 : -1.0 / horizon;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("discounted_returns: no rewards");
  std::vector<double> out(rewards.size());
  double next = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    next = rewards[i] + gamma * next;
    out[i] = next;
  }
  return out;
}

std::vector<Trajectory> run_episodes(BatchPolicy& policy,
                                     std::span<const LabeledExample* const> examples,
                                     const Perception& perception, const EnvConfig& env,
                                     std::span<Rng> rngs, const RolloutOptions& options) {
  validate(env);
  const std::size_t batch = examples.size();
  if (rngs.size() != batch) throw std::invalid_argument("run_episodes: one rng per episode");
  if (batch == 0) return {};
  const int grid = examples[0]->grid;
  for (const auto* e : examples) {
    if (e->grid != grid) throw std::invalid_argument("run_episodes: mixed grid sizes");
  }
  const int obs_dim = observation_size(grid);

  std::vector<InterfaceState> states(batch, reset_interface(grid));
  std::vector<Trajectory> out(batch);
  for (auto& tr : out) tr.steps.resize(static_cast<std::size_t>(env.horizon));
  std::vector<double> obs(batch * static_cast<std::size_t>(obs_dim));
  std::vector<PolicyDecision> decisions(batch);

  policy.reset(batch);
  for (int t = 0; t < env.horizon; ++t) {
    for (std::size_t k = 0; k < batch; ++k) {
      encode_observation(states[k], obs.data() + k * static_cast<std::size_t>(obs_dim));
    }
    policy.act(t, obs, states, examples, rngs, decisions);
    for (std::size_t k = 0; k < batch; ++k) {
      const auto& d = decisions[k];
      if (!std::isfinite(d.log_prob) || !std::isfinite(d.value)) {
        throw PolicyError("policy produced a non-finite decision at step " +
                          std::to_string(t) + " of episode " + std::to_string(k));
      }
      StepRecord& rec = out[k].steps[static_cast<std::size_t>(t)];
      if (options.record_observations) {
        const double* row = obs.data() + k * static_cast<std::size_t>(obs_dim);
        rec.observation.assign(row, row + obs_dim);
      }
      states[k] = update_interface(states[k], examples[k]->image, d.action, perception);
      // The interface transmits its store; the environment scores it.
      const bool correct = states[k].store == examples[k]->answer;
      rec.action = d.action;
      rec.log_prob = d.log_prob;
      rec.value_estimate = d.value;
      rec.reward = step_reward(t, env.horizon, correct);
      if (options.trace) options.trace(k, t, d.action, states[k]);
    }
  }

  std::vector<double> rewards(static_cast<std::size_t>(env.horizon));
  for (std::size_t k = 0; k < batch; ++k) {
    auto& tr = out[k];
    for (std::size_t t = 0; t < tr.steps.size(); ++t) rewards[t] = tr.steps[t].reward;
    const auto returns = discounted_returns(rewards, env.gamma);
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      tr.steps[t].return_ = returns[t];
      tr.steps[t].advantage = returns[t] - tr.steps[t].value_estimate;
    }
    tr.final_store = states[k].store;
    tr.correct = tr.final_store == examples[k]->answer;
  }
  return out;
}

Trajectory run_episode(BatchPolicy& policy, const LabeledExample& example,
                       const Perception& perception, const EnvConfig& env, Rng& rng,
                       const RolloutOptions& options) {
  const LabeledExample* ptr = &example;
  return run_episodes(policy, std::span(&ptr, 1), perception, env, std::span(&rng, 1),
                      options)
      .front();
}

EvalReport evaluate(BatchPolicy& policy, std::span<const LabeledExample> dataset,
                    const Perception& perception, const EnvConfig& env, std::uint64_t seed,
                    std::size_t batch, const RolloutOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (batch == 0) batch = 1;
  EvalReport report;
  report.rows.reserve(dataset.size());
  std::size_t hits = 0;
  for (std::size_t start = 0; start < dataset.size(); start += batch) {
    const std::size_t count = std::min(batch, dataset.size() - start);
    std::vector<const LabeledExample*> examples(count);
    std::vector<Rng> rngs;
    rngs.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      examples[k] = &dataset[start + k];
      rngs.emplace_back(derive_seed(seed, start + k));
    }
    RolloutOptions opts = options;
    if (options.trace) {
      opts.trace = [&, start](std::size_t k, int t, Action a, const InterfaceState& s) {
        options.trace(start + k, t, a, s);
      };
    }
    const auto trajectories = run_episodes(policy, examples, perception, env, rngs, opts);
    for (std::size_t k = 0; k < count; ++k) {
      const auto& tr = trajectories[k];
      report.rows.push_back({start + k, examples[k]->answer, tr.final_store, tr.correct});
      hits += tr.correct;
    }
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(dataset.size());
  return report;
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ostringstream out;
  out << "example_id,answer,guess,correct\n";
  for (const auto& r : report.rows) {
    out << r.example_id << ',' << r.answer << ',' << r.guess << ',' << (r.correct ? 1 : 0)
        << '\n';
  }
  write_file_atomically(path, out.str());
}

void write_eval_summary(const std::filesystem::path& path, TaskKind task,
                        const EvalReport& report, std::uint64_t seed) {
  const nlohmann::ordered_json j = {
      {"task", std::string(task_name(task))},
      {"n_examples", report.rows.size()},
      {"accuracy", report.accuracy},
      {"seed", seed},
  };
  write_file_atomically(path, j.dump(2) + "\n");
}

}  // namespace varl
