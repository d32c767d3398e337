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

#include "doctest.h"
#include "scene_builders.hpp"

#include "varl/oracle.hpp"

using namespace varl;
using varl::testing::all_scenes;
using varl::testing::scene_from_cells;

namespace {

std::int64_t oracle_store(TaskKind task, const LabeledExample& ex) {
  LookupPerception stub;
  stub.add(ex);
  OraclePolicy oracle(task, stub);
  Rng rng(0);
  return run_episode(oracle, ex, stub, EnvConfig{}, rng).final_store;
}

double oracle_accuracy(TaskKind task, const std::vector<LabeledExample>& scenes) {
  LookupPerception stub;
  stub.add(scenes);
  OraclePolicy oracle(task, stub);
  return evaluate(oracle, scenes, stub, EnvConfig{}, 0, 512).accuracy;
}

}  // namespace

TEST_CASE("oracle: worked scripts") {
  CHECK(oracle_store(TaskKind::Sum, scene_from_cells(TaskKind::Sum, 2,
                                                     {3, kBlankCell, 4, kBlankCell})) == 7);
  CHECK(oracle_store(TaskKind::Prod, scene_from_cells(TaskKind::Prod, 2,
                                                      {kBlankCell, 2, 5, kBlankCell})) == 10);
  CHECK(oracle_store(TaskKind::Min, scene_from_cells(TaskKind::Min, 2,
                                                     {0, 9, kBlankCell, kBlankCell})) == 0);
  CHECK(oracle_store(TaskKind::Combined,
                     scene_from_cells(TaskKind::Combined, 2,
                                      {5, kLetterCellBase + 3, kBlankCell, 2})) == 2);
}

TEST_CASE("oracle: action script for a Sum scene") {
  const auto ex = scene_from_cells(TaskKind::Sum, 2, {kBlankCell, 3, kBlankCell, 4});
  LookupPerception stub;
  stub.add(ex);
  OraclePolicy oracle(TaskKind::Sum, stub);
  Rng rng(0);
  const auto tr = run_episode(oracle, ex, stub, EnvConfig{}, rng);
  const std::vector<Action> head = {Action::UpdateSalience, Action::Right,
                                    Action::ClassifyDigit,  Action::Plus,
                                    Action::Down,           Action::ClassifyDigit,
                                    Action::Plus,           Action::Up};
  for (std::size_t t = 0; t < head.size(); ++t) CHECK(tr.steps[t].action == head[t]);
  CHECK(tr.final_store == 7);
}

TEST_CASE("oracle: 100% on every placement of every digit tuple, all single-op tasks") {
  for (TaskKind task : {TaskKind::Sum, TaskKind::Prod, TaskKind::Max, TaskKind::Min}) {
    const auto scenes = all_scenes(task);
    CHECK(scenes.size() == 4 * 1000 + 6 * 100);
    CHECK(oracle_accuracy(task, scenes) == 1.0);
  }
}

TEST_CASE("oracle: 100% on Combined for every letter and placement") {
  for (int letter = 0; letter < 4; ++letter) {
    const auto scenes = all_scenes(TaskKind::Combined, letter);
    CHECK(oracle_accuracy(TaskKind::Combined, scenes) == 1.0);
  }
}

TEST_CASE("oracle: reduced one-digit task on a 1x1 and 2x2 grid") {
  for (int d = 0; d < 10; ++d) {
    CHECK(oracle_store(TaskKind::Sum, scene_from_cells(TaskKind::Sum, 1, {d})) == d);
    for (int c = 0; c < 4; ++c) {
      std::vector<int> cells(4, kBlankCell);
      cells[static_cast<std::size_t>(c)] = d;
      CHECK(oracle_store(TaskKind::Sum, scene_from_cells(TaskKind::Sum, 2, cells)) == d);
    }
  }
}
