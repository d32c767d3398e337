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
#include "gradcheck.hpp"
#include "scene_builders.hpp"
#include "temp_dir.hpp"

#include "varl/controller.hpp"

#include <array>
#include <cmath>
#include <sstream>

using namespace varl;
using varl::testing::gradcheck;
using varl::testing::scene_from_cells;

namespace {

ParamSet randomized(ParamSet p, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& e : p.entries()) {
    for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value[i] = scale * rng.normal();
  }
  return p;
}

Tensor random_obs(int batch, int dim, Rng& rng) {
  Vector v(batch * dim);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor({batch, dim}, std::move(v));
}

}  // namespace

TEST_CASE("controller: parameter layout and zero heads give a uniform policy") {
  const ParamSet p = init_controller(23, 1);
  CHECK(controller_obs_dim(p) == 23);
  CHECK(controller_hidden_size(p) == 128);
  CHECK(p["ctrl/proj/w"].shape() == Shape{23, 64});
  CHECK(p["ctrl/lstm/w"].shape() == Shape{64 + 128, 4 * 128});
  CHECK(p["ctrl/policy/w"].shape() == Shape{128, 12});
  CHECK(p["ctrl/value/w"].shape() == Shape{128, 1});
  for (const auto& e : p.entries()) CHECK(e.name.rfind("ctrl/", 0) == 0);

  Rng rng(2);
  const auto obs = random_obs(1, 23, rng);
  const auto r = controller_step(p, controller_initial_state(p, 1),
                                 std::span(obs.data().data(), 23));
  double entropy = 0.0;
  for (double q : r.probabilities) {
    CHECK(q == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
    entropy -= q * std::log(q);
  }
  CHECK(entropy == doctest::Approx(std::log(12.0)).epsilon(1e-12));
  CHECK(r.value == 0.0);
  CHECK_THROWS_AS(controller_step(p, controller_initial_state(p, 1),
                                  std::span(obs.data().data(), 22)),
                  ShapeError);
}

TEST_CASE("controller: gradcheck through three recurrent steps") {
  // Small sizes keep the central-difference sweep quick.
  const ParamSet p = randomized(init_controller(5, 3, 4, 4), 4, 0.5);
  Rng rng(5);
  std::vector<Tensor> obs;
  for (int t = 0; t < 3; ++t) obs.push_back(random_obs(2, 5, rng));
  const std::vector<int> actions{3, 11, 0, 7, 5, 5};
  auto loss = [&](const ParamSet& q) {
    LstmState s = controller_initial_state(q, 2);
    Tensor total = Tensor::scalar(0.0);
    for (int t = 0; t < 3; ++t) {
      auto out = controller_forward(q, obs[static_cast<std::size_t>(t)], s);
      s = out.state;
      const std::vector<int> a{actions[static_cast<std::size_t>(2 * t)],
                               actions[static_cast<std::size_t>(2 * t + 1)]};
      total = total + sum(pick(log_softmax(out.logits), a)) + sum(square(out.value)) +
              0.1 * sum(entropy_from_logits(out.logits));
    }
    return total;
  };
  const auto r = gradcheck(loss, p);
  INFO("worst " << r.worst);
  CHECK(r.max_relative_error < 1e-4);
  CHECK(r.checked == p.scalar_count());
}

TEST_CASE("sample_action: empirical frequencies match the distribution") {
  const std::array<double, 12> uniform = [] {
    std::array<double, 12> u;
    u.fill(1.0 / 12.0);
    return u;
  }();
  const std::array<double, 12> skewed{0.3, 0.0, 0.05, 0.05, 0.1, 0.1, 0.1, 0.05, 0.05, 0.1, 0.05, 0.05};
  for (const auto& probs : {uniform, skewed}) {
    Rng rng(9);
    std::array<int, 12> counts{};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const auto s = sample_action(probs, rng);
      ++counts[static_cast<std::size_t>(action_index(s.action))];
      REQUIRE(s.log_prob == std::log(probs[static_cast<std::size_t>(action_index(s.action))]));
    }
    for (int a = 0; a < 12; ++a) {
      const auto i = static_cast<std::size_t>(a);
      CHECK(std::abs(counts[i] / static_cast<double>(draws) - probs[i]) < 0.01);
    }
    CHECK(counts[1] == (probs[1] == 0.0 ? 0 : counts[1]));
  }
  std::array<double, 12> bad{};
  Rng rng(0);
  CHECK_THROWS_AS(sample_action(bad, rng), PolicyError);
}

TEST_CASE("greedy_action: ties go to the lowest index") {
  std::array<double, 12> p{};
  p[4] = p[7] = 0.5;
  CHECK(greedy_action(p) == Action::Plus);
  p.fill(1.0 / 12.0);
  CHECK(greedy_action(p) == Action::Right);
}

TEST_CASE("controller: save/load round trip is bitwise") {
  const ParamSet p = randomized(init_controller(23, 6), 7, 0.3);
  varl::testing::TempDir dir;
  save_params(dir / "ctrl.varl", p);
  const ParamSet q = load_params(dir / "ctrl.varl");
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q.entries()[i].name == p.entries()[i].name);
    CHECK(q.entries()[i].value.shape() == p.entries()[i].value.shape());
    CHECK(q.entries()[i].value.data() == p.entries()[i].value.data());
  }
  CHECK(params_hash(p) == params_hash(q));
}

TEST_CASE("controller: the hidden state carries information across steps") {
  const ParamSet p = randomized(init_controller(6, 8, 8, 8), 9, 0.8);
  Rng rng(10);
  const auto a = random_obs(1, 6, rng);
  const auto b = random_obs(1, 6, rng);
  const auto probe = random_obs(1, 6, rng);
  auto after = [&](const Tensor& first) {
    auto s = controller_initial_state(p, 1);
    s = controller_forward(p, first, s).state;
    return controller_step(p, s, std::span(probe.data().data(), 6)).probabilities;
  };
  CHECK(after(a) != after(b));
  // Batched forward agrees with per-row stepping.
  Vector both(12);
  both << a.data(), b.data();
  const auto batched = controller_forward(p, Tensor({2, 6}, both), controller_initial_state(p, 2));
  const auto single = controller_forward(p, b, controller_initial_state(p, 1));
  for (int j = 0; j < 12; ++j) CHECK(batched.logits[12 + j] == doctest::Approx(single.logits[j]).epsilon(1e-14));
}

TEST_CASE("ControllerPolicy: sampled rollouts are deterministic, greedy is repeatable") {
  std::vector<LabeledExample> data{
      scene_from_cells(TaskKind::Sum, 2, {3, kBlankCell, 4, kBlankCell}),
      scene_from_cells(TaskKind::Sum, 2, {kBlankCell, 1, 1, 8})};
  LookupPerception stub;
  stub.add(data);
  const ParamSet p = randomized(init_controller(observation_size(2), 11), 12, 0.2);
  ControllerPolicy sampler(p, false), greedy(p, true);
  const auto e1 = evaluate(sampler, data, stub, EnvConfig{}, 5);
  const auto e2 = evaluate(sampler, data, stub, EnvConfig{}, 5);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(e1.rows[i].guess == e2.rows[i].guess);
  const auto g1 = evaluate(greedy, data, stub, EnvConfig{}, 1);
  const auto g2 = evaluate(greedy, data, stub, EnvConfig{}, 2);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(g1.rows[i].guess == g2.rows[i].guess);
}
