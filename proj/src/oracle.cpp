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

#include "varl/oracle.hpp"

namespace varl {

Action reduction_action(TaskKind op) {
  switch (op) {
    case TaskKind::Sum: return Action::Plus;
    case TaskKind::Prod: return Action::Times;
    case TaskKind::Max: return Action::Max;
    case TaskKind::Min: return Action::Min;
    case TaskKind::Combined: break;
  }
  throw std::invalid_argument("combined is not a single reduction");
}

void OraclePolicy::reset(std::size_t batch) { plans_.assign(batch, Plan{}); }

void OraclePolicy::act(int, std::span<const double>, std::span<const InterfaceState> states,
                       std::span<const LabeledExample* const> examples, std::span<Rng>,
                       std::span<PolicyDecision> out) {
  for (std::size_t k = 0; k < states.size(); ++k) {
    out[k] = PolicyDecision{next(plans_[k], states[k], *examples[k]), 0.0, 0.0};
  }
}

void OraclePolicy::make_plan(Plan& plan, const InterfaceState& state,
                             const LabeledExample& example) {
  const int n = state.grid;
  std::vector<int> salient;
  for (int c = 0; c < n * n; ++c) {
    if (state.salience_map[static_cast<std::size_t>(c)] > 0.5) salient.push_back(c);
  }
  int letter = -1;
  if (task_ == TaskKind::Combined && !salient.empty()) {
    double best = -1.0;
    for (int c : salient) {
      const double conf =
          perception_.classify_op(get_glimpse(example.image, c % n, c / n)).confidence;
      if (conf > best) {
        best = conf;
        letter = c;
      }
    }
    plan.items.push_back({Step::Visit, letter % n, letter / n});
    plan.items.push_back({Step::ClassifyOp});
  }
  for (int c : salient) {
    if (c == letter) continue;
    plan.items.push_back({Step::Visit, c % n, c / n});
    plan.items.push_back({Step::ClassifyDigit});
    plan.items.push_back({Step::Combine});
  }
  plan.planned = true;
}

Action OraclePolicy::next(Plan& plan, const InterfaceState& state,
                          const LabeledExample& example) {
  if (!plan.salience_requested) {
    plan.salience_requested = true;
    return Action::UpdateSalience;
  }
  if (!plan.planned) make_plan(plan, state, example);
  while (!plan.items.empty()) {
    const Item item = plan.items.front();
    switch (item.step) {
      case Step::Visit:
        if (state.fovea_x < item.x) return Action::Right;
        if (state.fovea_x > item.x) return Action::Left;
        if (state.fovea_y < item.y) return Action::Down;
        if (state.fovea_y > item.y) return Action::Up;
        plan.items.pop_front();
        continue;
      case Step::ClassifyOp:
        plan.items.pop_front();
        return Action::ClassifyOp;
      case Step::ClassifyDigit:
        plan.items.pop_front();
        return Action::ClassifyDigit;
      case Step::Combine:
        plan.items.pop_front();
        if (!plan.loaded) {
          plan.loaded = true;
          return Action::Plus;
        }
        if (task_ != TaskKind::Combined) return reduction_action(task_);
        return state.op >= 0 ? reduction_action(reduction_for_letter(state.op)) : Action::Plus;
    }
  }
  return Action::Up;
}

}  // namespace varl
