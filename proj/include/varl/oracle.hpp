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

#include <deque>

namespace varl {

/// Hand-written controller showing the interface suffices for the tasks.
///
///   update_salience
///   Combined only: among salient cells, the one the op classifier is most
///     confident about is the letter; walk there and classify_op
///   each remaining salient cell in row-major order: walk there,
///     classify_digit, then plus (first digit) or the task operation
///   idle (up) for the remaining steps
///
/// On Combined the operation comes from the interface's op field.
class OraclePolicy final : public BatchPolicy {
 public:
  OraclePolicy(TaskKind task, const Perception& perception)
      : task_(task), perception_(perception) {}

  void reset(std::size_t batch) override;
  void act(int t, std::span<const double> observations,
           std::span<const InterfaceState> states,
           std::span<const LabeledExample* const> examples, std::span<Rng> rngs,
           std::span<PolicyDecision> out) override;

 private:
  enum class Step { Visit, ClassifyOp, ClassifyDigit, Combine };
  struct Item {
    Step step;
    int x = 0, y = 0;
  };
  struct Plan {
    bool salience_requested = false;
    bool planned = false;
    bool loaded = false;  // first digit already added
    std::deque<Item> items;
  };

  Action next(Plan& plan, const InterfaceState& state, const LabeledExample& example);
  void make_plan(Plan& plan, const InterfaceState& state, const LabeledExample& example);

  TaskKind task_;
  const Perception& perception_;
  std::vector<Plan> plans_;
};

/// The single reduction action for an operation.
Action reduction_action(TaskKind op);

}  // namespace varl
