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

#include "varl/trainer.hpp"

#include "varl/optim.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace varl {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Tensor constant_row(const std::vector<double>& values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return Tensor({static_cast<int>(values.size())}, std::move(v));
}

}  // namespace

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("TrainConfig: " + what); };
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (!(c.value_weight > 0.0)) fail("value_weight must be > 0");
  if (!(c.entropy_weight >= 0.0)) fail("entropy_weight must be >= 0");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (c.total_updates < 1) fail("total_updates must be >= 1");
  if (c.eval_every < 1) fail("eval_every must be >= 1");
  if (c.optimizer != "adam" && c.optimizer != "sgd") fail("optimizer must be adam or sgd");
  if (c.clip_norm < 0.0) fail("clip_norm must be >= 0");
  validate(EnvConfig{c.horizon, c.gamma});
}

std::vector<Trajectory> collect_batch(const ParamSet& params,
                                      std::span<const LabeledExample> train,
                                      const Perception& perception, const EnvConfig& env,
                                      int batch_size, Rng& picker, std::uint64_t episode_seed,
                                      std::vector<std::size_t>* picked) {
  if (train.empty()) throw std::invalid_argument("collect_batch: empty training set");
  std::vector<const LabeledExample*> examples;
  std::vector<Rng> rngs;
  if (picked) picked->clear();
  for (int k = 0; k < batch_size; ++k) {
    const auto i = static_cast<std::size_t>(picker.below(static_cast<std::uint64_t>(train.size())));
    examples.push_back(&train[i]);
    rngs.emplace_back(derive_seed(episode_seed, static_cast<std::uint64_t>(k)));
    if (picked) picked->push_back(i);
  }
  ControllerPolicy policy(params, false);
  return run_episodes(policy, examples, perception, env, rngs, {true, {}});
}

StepTerms replay_batch(const ParamSet& params, const std::vector<Trajectory>& batch) {
  if (batch.empty()) throw std::invalid_argument("replay_batch: empty batch");
  const int n = static_cast<int>(batch.size());
  const std::size_t horizon = batch.front().steps.size();
  const int dim = controller_obs_dim(params);
  StepTerms terms;
  LstmState state = controller_initial_state(params, n);
  for (std::size_t t = 0; t < horizon; ++t) {
    Vector obs(n * dim);
    std::vector<int> actions(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const auto& tr = batch[static_cast<std::size_t>(k)];
      if (tr.steps.size() != horizon) throw std::invalid_argument("replay_batch: ragged batch");
      const auto& s = tr.steps[t];
      if (static_cast<int>(s.observation.size()) != dim) {
        throw ShapeError("replay_batch: observations were not recorded");
      }
      std::copy(s.observation.begin(), s.observation.end(), obs.data() + k * dim);
      actions[static_cast<std::size_t>(k)] = action_index(s.action);
    }
    auto out = controller_forward(params, Tensor({n, dim}, std::move(obs)), state);
    state = std::move(out.state);
    terms.log_prob.push_back(pick(log_softmax(out.logits), actions));
    terms.entropy.push_back(entropy_from_logits(out.logits));
    terms.value.push_back(std::move(out.value));
  }
  return terms;
}

SurrogateLoss surrogate_loss(const StepTerms& terms, const std::vector<Trajectory>& batch,
                             double value_weight, double entropy_weight) {
  const std::size_t horizon = terms.log_prob.size();
  if (batch.empty() || horizon == 0) throw std::invalid_argument("surrogate_loss: empty batch");
  Tensor policy = Tensor::scalar(0.0), value = Tensor::scalar(0.0), entropy = Tensor::scalar(0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<double> adv, ret;
    for (const auto& tr : batch) {
      adv.push_back(tr.steps.at(t).advantage);
      ret.push_back(tr.steps.at(t).return_);
    }
    policy = policy + sum(terms.log_prob[t] * constant_row(adv));
    value = value + sum(square(constant_row(ret) - terms.value[t]));
    entropy = entropy + sum(terms.entropy[t]);
  }
  const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(horizon));
  SurrogateLoss out;
  out.loss = (policy - value * value_weight + entropy * entropy_weight) * -scale;
  out.policy_term = policy.item() * scale;
  out.value_loss = value.item() * scale;
  out.entropy = entropy.item() * scale;
  if (!std::isfinite(out.loss.item())) throw TrainingDivergedError("surrogate loss is not finite");
  return out;
}

TrainResult train_controller(const TrainConfig& config, std::span<const LabeledExample> train,
                             std::span<const LabeledExample> eval_set,
                             const Perception& perception, const TrainHooks& hooks) {
  validate(config);
  if (train.empty()) throw std::invalid_argument("train_controller: empty training set");
  if (eval_set.empty()) throw std::invalid_argument("train_controller: empty evaluation set");
  const EnvConfig env{config.horizon, config.gamma};
  TrainResult result;
  result.params = init_controller(observation_size(train.front().grid), derive_seed(config.seed, 0));
  AdamState adam = make_adam(result.params, config.learning_rate);
  Rng picker(derive_seed(config.seed, 1));
  const std::uint64_t episode_root = derive_seed(config.seed, 2);
  const std::uint64_t eval_seed = derive_seed(config.seed, 3);
  const int guard_until = (config.total_updates + 9) / 10;
  if (!hooks.checkpoint_dir.empty()) std::filesystem::create_directories(hooks.checkpoint_dir);

  std::string log = std::string(kTrainLogHeader) + "\n";
  CurvePoint window;
  int window_size = 0;
  for (int u = 1; u <= config.total_updates; ++u) {
    const auto batch = collect_batch(result.params, train, perception, env, config.batch_size,
                                     picker, derive_seed(episode_root, static_cast<std::uint64_t>(u)));
    Tape tape;
    const ParamSet tracked = result.params.track(tape);
    const SurrogateLoss s = surrogate_loss(replay_batch(tracked, batch), batch,
                                           config.value_weight, config.entropy_weight);
    if (s.entropy < 0.01 && u <= guard_until) {
      throw TrainingDivergedError("policy entropy collapsed to " + fmt(s.entropy) +
                                  " at update " + std::to_string(u));
    }
    tape.backward(s.loss);
    auto grads = tracked.gradients(tape);
    if (config.clip_norm > 0.0) clip_global_norm(grads, config.clip_norm);
    if (config.optimizer == "adam") {
      adam_step(result.params, grads, adam);
    } else {
      sgd_step(result.params, grads, config.learning_rate);
    }

    BatchStats stats;
    stats.update = u;
    stats.policy_term = s.policy_term;
    stats.value_loss = s.value_loss;
    stats.entropy = s.entropy;
    for (const auto& tr : batch) {
      stats.mean_return += tr.steps.front().return_;
      stats.train_accuracy += tr.correct ? 1.0 : 0.0;
    }
    stats.mean_return /= static_cast<double>(batch.size());
    stats.train_accuracy /= static_cast<double>(batch.size());
    if (hooks.on_update) hooks.on_update(stats);
    window.mean_return += stats.mean_return;
    window.entropy += stats.entropy;
    window.value_loss += stats.value_loss;
    ++window_size;

    if (u % config.eval_every == 0) {
      ControllerPolicy greedy(result.params, true);
      CurvePoint point;
      point.update = u;
      point.mean_return = window.mean_return / window_size;
      point.entropy = window.entropy / window_size;
      point.value_loss = window.value_loss / window_size;
      point.eval_accuracy = evaluate(greedy, eval_set, perception, env, eval_seed).accuracy;
      result.curve.push_back(point);
      window = CurvePoint{};
      window_size = 0;
      if (hooks.on_eval) hooks.on_eval(point);
      if (!hooks.log_csv.empty()) {
        log += std::to_string(u) + "," + fmt(point.mean_return) + "," + fmt(point.entropy) + "," +
               fmt(point.value_loss) + "," + fmt(point.eval_accuracy) + "\n";
        write_file_atomically(hooks.log_csv, log);
      }
      if (!hooks.checkpoint_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, "ctrl_%07d.varl", u);
        save_params(hooks.checkpoint_dir / name, result.params);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string history_name(std::span<const int> history) {
  std::string name = "logits/";
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) name += '.';
    name += std::to_string(history[i]);
  }
  return name;
}

void check_mdp(const TinyMdp& mdp) {
  if (mdp.actions < 1 || mdp.horizon < 1 || !mdp.reward) {
    throw std::invalid_argument("TinyMdp: needs actions >= 1, horizon >= 1 and a reward");
  }
}

/// Calls f(actions) for every action sequence, first action most significant.
template <class F>
void for_each_trajectory(const TinyMdp& mdp, F&& f) {
  const std::size_t count = trajectory_count(mdp);
  std::vector<int> actions(static_cast<std::size_t>(mdp.horizon));
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t code = i;
    for (int t = mdp.horizon - 1; t >= 0; --t) {
      actions[static_cast<std::size_t>(t)] = static_cast<int>(code % static_cast<std::size_t>(mdp.actions));
      code /= static_cast<std::size_t>(mdp.actions);
    }
    f(std::span<const int>(actions));
  }
}

}  // namespace

std::size_t trajectory_count(const TinyMdp& mdp) {
  check_mdp(mdp);
  std::size_t count = 1;
  for (int t = 0; t < mdp.horizon; ++t) {
    count *= static_cast<std::size_t>(mdp.actions);
    if (count > kMaxEnumeratedTrajectories) {
      throw EnumerationTooLargeError("more than " + std::to_string(kMaxEnumeratedTrajectories) +
                                     " trajectories to enumerate");
    }
  }
  return count;
}

ParamSet tabular_policy(const TinyMdp& mdp, std::uint64_t seed, double scale) {
  trajectory_count(mdp);
  Rng rng(seed);
  ParamSet p;
  std::vector<int> history;
  // Depth-first over histories shorter than the horizon.
  std::function<void()> visit = [&] {
    Vector v(mdp.actions);
    for (auto& x : v) x = scale * rng.normal();
    p.add(history_name(history), Tensor({mdp.actions}, std::move(v)));
    if (static_cast<int>(history.size()) + 1 == mdp.horizon) return;
    for (int a = 0; a < mdp.actions; ++a) {
      history.push_back(a);
      visit();
      history.pop_back();
    }
  };
  visit();
  return p;
}

namespace {

/// J as a tape expression, built depth-first with shared prefix probabilities.
Tensor objective_expression(const TinyMdp& mdp, const ParamSet& policy) {
  Tensor total = Tensor::scalar(0.0);
  std::vector<int> history;
  std::function<void(const Tensor&, double)> visit = [&](const Tensor& prob, double reward) {
    const Tensor pi = softmax(policy[history_name(history)]);
    for (int a = 0; a < mdp.actions; ++a) {
      const double r = reward + mdp.reward(history, a);
      const Tensor p = prob * pick(pi, {a});
      history.push_back(a);
      if (static_cast<int>(history.size()) == mdp.horizon) {
        total = total + p * r;
      } else {
        visit(p, r);
      }
      history.pop_back();
    }
  };
  visit(Tensor::scalar(1.0), 0.0);
  return total;
}

}  // namespace

double exact_objective(const TinyMdp& mdp, const ParamSet& policy) {
  trajectory_count(mdp);
  return objective_expression(mdp, policy).item();
}

std::vector<Vector> exact_gradient(const TinyMdp& mdp, const ParamSet& policy) {
  trajectory_count(mdp);
  Tape tape;
  const ParamSet tracked = policy.track(tape);
  tape.backward(objective_expression(mdp, tracked));
  return tracked.gradients(tape);
}

std::vector<Vector> expected_estimator_gradient(const TinyMdp& mdp, const ParamSet& policy,
                                                const HistoryBaseline& baseline) {
  trajectory_count(mdp);
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Vector> expected;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    index.emplace(policy.entries()[i].name, i);
    expected.push_back(Vector::Zero(policy.entries()[i].value.size()));
  }
  const auto horizon = static_cast<std::size_t>(mdp.horizon);

  for_each_trajectory(mdp, [&](std::span<const int> actions) {
    Tape tape;
    StepTerms terms;
    std::vector<Tensor> leaves;
    std::vector<std::size_t> slots;
    Trajectory tr;
    std::vector<double> rewards;
    double probability = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const auto history = actions.first(t);
      const std::size_t slot = index.at(history_name(history));
      leaves.push_back(tape.variable(policy.entries()[slot].value));
      slots.push_back(slot);
      const Tensor logits = reshape(leaves.back(), {1, mdp.actions});
      const int a = actions[t];
      terms.log_prob.push_back(pick(log_softmax(logits), {a}));
      terms.entropy.push_back(entropy_from_logits(logits));
      const double b = baseline ? baseline(history) : 0.0;
      terms.value.push_back(Tensor({1}, {b}));
      probability *= softmax(policy.entries()[slot].value)[a];
      rewards.push_back(mdp.reward(history, a));
      StepRecord rec;
      rec.value_estimate = b;
      tr.steps.push_back(rec);
    }
    const auto returns = discounted_returns(rewards, 1.0);
    for (std::size_t t = 0; t < horizon; ++t) {
      tr.steps[t].reward = rewards[t];
      tr.steps[t].return_ = returns[t];
      tr.steps[t].advantage = returns[t] - tr.steps[t].value_estimate;
    }
    const std::vector<Trajectory> batch{tr};
    tape.backward(surrogate_loss(terms, batch, 0.5, 0.0).loss);
    // The loss averages over T steps and is negated for descent.
    const double weight = -static_cast<double>(horizon) * probability;
    for (std::size_t t = 0; t < horizon; ++t) expected[slots[t]] += weight * tape.grad(leaves[t]);
  });
  return expected;
}

}  // namespace varl
