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

// Acceptance run: one PASS/FAIL line per headline criterion. Exits non-zero
// when any criterion fails.

#include "gradcheck_suite.hpp"
#include "interface_reference.hpp"
#include "scene_builders.hpp"
#include "trainer_probes.hpp"

#include "varl/harness.hpp"
#include "varl/oracle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace varl;
using nlohmann::json;

namespace {

// Pinned thresholds.
constexpr double kGradcheckMaxRelError = 1e-4;
constexpr int kGradcheckMinSeeds = 20;
constexpr double kGradcheckBudgetSeconds = 120.0;
constexpr double kPgTolerance = 1e-10;
constexpr double kPgBudgetSeconds = 60.0;
constexpr double kGradientStopBudgetSeconds = 60.0;
constexpr double kRewardTolerance = 1e-12;
constexpr double kDigitTarget = 0.97;
constexpr double kOpTarget = 0.95;
constexpr double kSalienceTarget = 0.95;
constexpr double kPretrainBudgetSeconds = 30.0 * 60.0;
constexpr double kOracleTarget = 0.90;
constexpr double kSanityTarget = 0.95;
constexpr int kSanityUpdates = 5000;
constexpr double kMarginTarget = 0.20;
constexpr std::size_t kSum128 = 128;
constexpr int kSum128Seeds = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  std::optional<fs::path> data_dir;
  bool reuse_perception = false;
  std::string cli;
  GlyphPools pools;
  json record = json::object();
};

// ---------------------------------------------------------------------------

Outcome gradcheck_suite(Context&) {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_where;
  std::size_t checked = 0, skipped = 0, cases = 0;
  bool kinks_ok = true;
  for (const auto& c : varl::testing::gradcheck_cases()) {
    ++cases;
    for (int seed = 0; seed < kGradcheckMinSeeds; ++seed) {
      const auto r = c.run(seed);
      checked += r.checked;
      skipped += r.skipped_at_kinks;
      kinks_ok = kinks_ok && r.skipped_at_kinks * 10 < r.checked;
      if (r.max_relative_error >= worst) {
        worst = r.max_relative_error;
        worst_where = std::string(c.name) + " seed " + std::to_string(seed) + " " + r.worst;
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst < kGradcheckMaxRelError && kinks_ok && secs < kGradcheckBudgetSeconds,
          fmt("%zu graphs x %d seeds, %zu coordinates (%zu at kinks), max rel err %.2e "
              "(< %.0e; worst %s), %.1fs (< %.0fs)",
              cases, kGradcheckMinSeeds, checked, skipped, worst, kGradcheckMaxRelError,
              worst_where.c_str(), secs, kGradcheckBudgetSeconds)};
}

Outcome pg_exactness(Context&) {
  const auto start = Clock::now();
  struct Shape { int actions, horizon; };
  double plain_err = 0.0, baseline_err = 0.0, smallest_signal = 1e300;
  int mdps = 0;
  std::size_t largest = 0;
  for (const Shape s : {Shape{2, 2}, Shape{3, 3}, Shape{2, 8}, Shape{4, 5}, Shape{10, 4},
                        Shape{2, 13}}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto mdp = varl::testing::history_mdp(s.actions, s.horizon, seed);
      largest = std::max(largest, trajectory_count(mdp));
      const auto p = tabular_policy(mdp, seed + 100, 1.5);
      const auto exact = exact_gradient(mdp, p);
      const auto plain = expected_estimator_gradient(mdp, p);
      plain_err = std::max(plain_err, varl::testing::max_abs_diff(exact, plain));
      const auto constant =
          expected_estimator_gradient(mdp, p, [](std::span<const int>) { return 7.0; });
      Rng brng(seed);
      const double a = brng.uniform(-3, 3), b = brng.uniform(-3, 3);
      const auto by_history = expected_estimator_gradient(mdp, p, [a, b](std::span<const int> h) {
        double v = a;
        for (int x : h) v = v * b + x;
        return std::sin(v) * 5.0;
      });
      baseline_err = std::max({baseline_err, varl::testing::max_abs_diff(plain, constant),
                               varl::testing::max_abs_diff(plain, by_history)});
      smallest_signal = std::min(smallest_signal, varl::testing::max_abs(exact));
      ++mdps;
    }
  }
  const double secs = seconds_since(start);
  return {plain_err < kPgTolerance && baseline_err < kPgTolerance && smallest_signal > 1e-3 &&
              secs < kPgBudgetSeconds,
          fmt("%d MDPs (up to %zu trajectories): |estimator - exact| %.1e, baseline shift %.1e "
              "(< %.0e), %.1fs (< %.0fs)",
              mdps, largest, plain_err, baseline_err, kPgTolerance, secs, kPgBudgetSeconds)};
}

Outcome gradient_stop(Context& ctx) {
  const auto start = Clock::now();
  std::vector<LabeledExample> data;
  for (int d = 0; d < 10; ++d) {
    data.push_back(varl::testing::scene_from_cells(TaskKind::Sum, 2, {d, kBlankCell, kBlankCell, kBlankCell}));
  }
  LookupPerception stub;
  stub.add(data);
  double policy_change = 0.0, on_head = 0.0, slope = 0.0, value_change = 1e300, leak = 1e300;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto p = varl::testing::perturbed_controller(observation_size(2), seed, 0.3);
    Rng picker(seed + 10);
    const auto batch = collect_batch(p, data, stub, EnvConfig{}, 8, picker, seed + 20);
    const auto probe = varl::testing::gradient_stop_probe(p, batch);
    policy_change = std::max(policy_change, probe.policy_grad_change);
    on_head = std::max(on_head, probe.policy_grad_on_value_head);
    slope = std::max(slope, std::abs(probe.policy_term_fd_slope));
    value_change = std::min(value_change, probe.value_grad_change);
    leak = std::min(leak, probe.leaky_grad_on_value_head);
  }
  (void)ctx;
  const double secs = seconds_since(start);
  return {policy_change == 0.0 && on_head == 0.0 && slope == 0.0 && value_change > 1e-6 &&
              leak > 1e-6 && secs < kGradientStopBudgetSeconds,
          fmt("value-head shift moves policy grads by %.1e, policy grad on value head %.1e, "
              "finite-difference slope %.1e (all must be 0); controls: value grads move %.1e, "
              "un-stopped advantage leaks %.1e; %.1fs",
              policy_change, on_head, slope, value_change, leak, secs)};
}

Outcome interface_semantics(Context&) {
  const std::size_t table = varl::testing::case_table_mismatches(400);
  // Oracle action scripts over every placement of every digit pair/triple.
  std::size_t scenes = 0, wrong = 0;
  for (TaskKind task : {TaskKind::Sum, TaskKind::Prod, TaskKind::Max, TaskKind::Min}) {
    const auto all = varl::testing::all_scenes(task);
    LookupPerception stub;
    stub.add(all);
    OraclePolicy oracle(task, stub);
    const auto r = evaluate(oracle, all, stub, EnvConfig{}, 0, 512);
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto& ex = all[i];
      wrong += r.rows[i].guess == task_answer(task, ex.digits) ? 0 : 1;
    }
    scenes += all.size();
  }
  for (int letter = 0; letter < 4; ++letter) {
    const auto all = varl::testing::all_scenes(TaskKind::Combined, letter);
    LookupPerception stub;
    stub.add(all);
    OraclePolicy oracle(TaskKind::Combined, stub);
    const auto r = evaluate(oracle, all, stub, EnvConfig{}, 0, 512);
    for (std::size_t i = 0; i < all.size(); ++i) wrong += r.rows[i].correct ? 0 : 1;
    scenes += all.size();
  }
  return {table == 0 && wrong == 0,
          fmt("%zu case-table mismatches over 12 actions x 1200 states (n = 1..3, incl. "
              "clamping and field ownership); oracle scripts wrong on %zu of %zu exhaustive "
              "scenes",
              table, wrong, scenes)};
}

class IdlePolicy final : public BatchPolicy {
 public:
  void reset(std::size_t) override {}
  void act(int, std::span<const double>, std::span<const InterfaceState> states,
           std::span<const LabeledExample* const>, std::span<Rng>,
           std::span<PolicyDecision> out) override {
    for (std::size_t k = 0; k < states.size(); ++k) out[k] = {Action::Up, 0.0, 0.0};
  }
};

Outcome reward_accounting(Context&) {
  // Store stays 0: wrong for answer 9, right for answer 0.
  const auto wrong =
      varl::testing::scene_from_cells(TaskKind::Sum, 2, {4, 5, kBlankCell, kBlankCell});
  const auto right =
      varl::testing::scene_from_cells(TaskKind::Min, 2, {0, 5, kBlankCell, kBlankCell});
  LookupPerception stub;
  stub.add(wrong);
  stub.add(right);
  IdlePolicy idle;
  Rng rng(0);
  const auto bad = run_episode(idle, wrong, stub, EnvConfig{}, rng);
  const auto good = run_episode(idle, right, stub, EnvConfig{}, rng);
  const double bad_err = std::abs(bad.steps.front().return_ - (-59.0 / 30.0));
  return {bad.steps.size() == 30 && bad_err < kRewardTolerance && good.steps.front().return_ == 0.0,
          fmt("all-incorrect return %.15f (expected -59/30, |diff| %.1e); all-correct %.1f",
              bad.steps.front().return_, bad_err, good.steps.front().return_)};
}

// ---------------------------------------------------------------------------

fs::path perception_dir(const Context& ctx) { return ctx.work / "perception"; }

Outcome perception_targets(Context& ctx) {
  const fs::path dir = perception_dir(ctx);
  const bool reuse = ctx.reuse_perception && fs::exists(dir / "digit.varl") &&
                     fs::exists(dir / "op.varl") && fs::exists(dir / "salience.varl");
  double digit = 0, op = 0, sal = 0, t_digit = 0, t_op = 0, t_sal = 0;
  const PretrainConfig cfg;
  const SalienceConfig scfg;
  if (reuse) {
    const auto nets = FrozenNets::load(dir);
    digit = lenet_accuracy(nets.digit_net(), glyph_images(ctx.pools.test_digits));
    op = lenet_accuracy(nets.op_net(), glyph_images(ctx.pools.test_letters));
    sal = salience_cell_accuracy(
        nets.salience_net(),
        salience_scenes(ctx.pools.test_digits, ctx.pools.test_letters, scfg.test_scenes,
                        scfg.grid, derive_seed(scfg.seed, 3)));
  } else {
    fs::create_directories(dir);
    auto start = Clock::now();
    const auto d = pretrain_classifier(ctx.pools.train_digits, ctx.pools.test_digits, 10, cfg);
    t_digit = seconds_since(start);
    start = Clock::now();
    const auto o = pretrain_classifier(ctx.pools.train_letters, ctx.pools.test_letters, 4, cfg);
    t_op = seconds_since(start);
    start = Clock::now();
    const auto s = pretrain_salience(ctx.pools, scfg);
    t_sal = seconds_since(start);
    FrozenNets(d.fit.params, o.fit.params, s.params).save(dir);
    digit = d.test_accuracy;
    op = o.test_accuracy;
    sal = s.test_cell_accuracy;
  }
  ctx.record["perception"] = {{"digit", digit}, {"op", op}, {"salience", sal},
                              {"seconds", {t_digit, t_op, t_sal}}, {"reused", reuse}};
  const bool fast = reuse || (t_digit < kPretrainBudgetSeconds && t_op < kPretrainBudgetSeconds &&
                              t_sal < kPretrainBudgetSeconds);
  return {digit >= kDigitTarget && op >= kOpTarget && sal >= kSalienceTarget && fast,
          fmt("held-out digit %.4f (>= %.2f), op %.4f (>= %.2f), salience per-cell %.4f "
              "(>= %.2f); %s",
              digit, kDigitTarget, op, kOpTarget, sal, kSalienceTarget,
              reuse ? "reused nets, training time not measured"
                    : fmt("training %.0fs / %.0fs / %.0fs (< %.0fs each)", t_digit, t_op, t_sal,
                          kPretrainBudgetSeconds)
                          .c_str())};
}

std::shared_ptr<const Perception> pretrained(const Context& ctx) {
  return std::make_shared<CachedPerception>(
      std::make_shared<FrozenNets>(FrozenNets::load(perception_dir(ctx))));
}

Outcome oracle_end_to_end(Context& ctx) {
  if (!fs::exists(perception_dir(ctx) / "digit.varl")) {
    return {false, "no pretrained perception (run the perception criterion first)"};
  }
  ExperimentSpec spec;
  const auto test = sweep_test_set(spec, ctx.pools);
  const auto perception = pretrained(ctx);
  OraclePolicy oracle(TaskKind::Sum, *perception);
  const double acc = evaluate(oracle, test, *perception, EnvConfig{}, 0).accuracy;
  ctx.record["oracle_sum"] = acc;
  return {acc >= kOracleTarget,
          fmt("scripted oracle + pretrained nets on %zu Sum scenes (2-3 digits): %.4f (>= %.2f)",
              test.size(), acc, kOracleTarget)};
}

Outcome rl_sanity(Context& ctx) {
  DatasetSpec tr = task_dataset(TaskKind::Sum, 2, 1000, 11, Split::Train);
  tr.min_digits = tr.max_digits = 1;
  DatasetSpec te = task_dataset(TaskKind::Sum, 2, 500, 12, Split::Test);
  te.min_digits = te.max_digits = 1;
  const auto train = make_dataset(tr, ctx.pools);
  const auto test = make_dataset(te, ctx.pools);
  LookupPerception stub;
  stub.add(train);
  stub.add(test);
  TrainConfig cfg;
  cfg.total_updates = kSanityUpdates;
  cfg.eval_every = 250;
  const auto start = Clock::now();
  const auto result = train_controller(cfg, train, test, stub);
  ControllerPolicy greedy(result.params, true);
  const double acc = evaluate(greedy, test, stub, EnvConfig{}, 0).accuracy;
  int first = -1;
  for (const auto& p : result.curve) {
    if (first < 0 && p.eval_accuracy >= kSanityTarget) first = p.update;
  }
  ctx.record["rl_sanity"] = {{"accuracy", acc}, {"first_update_at_target", first}};
  return {acc >= kSanityTarget,
          fmt("one digit on a 2x2 grid, exact perception: %.4f after %d updates (>= %.2f; "
              "first reached at update %d), %.0fs",
              acc, kSanityUpdates, kSanityTarget, first, seconds_since(start))};
}

Outcome sum128(Context& ctx) {
  if (!fs::exists(perception_dir(ctx) / "digit.varl")) {
    return {false, "no pretrained perception (run the perception criterion first)"};
  }
  const auto perception = pretrained(ctx);
  ExperimentSpec spec;
  spec.output_dir = ctx.work / "sum128";
  spec.sample_sizes = {kSum128};
  spec.repeats = kSum128Seeds;
  spec.models = {"rl", "lenet32", "lenet128", "lenet512"};
  spec.record_wall_time = true;
  const auto rows = run_sweep(spec, ctx.pools, perception.get(), [](const ResultRow& r, bool) {
    std::printf("  sum128 %s seed %llu: %.4f (%.0fs)\n", r.model.c_str(),
                static_cast<unsigned long long>(r.seed), r.test_accuracy, r.wall_seconds);
    std::fflush(stdout);
  });
  std::map<std::uint64_t, double> rl, best_lenet;
  for (const auto& r : rows) {
    if (r.model == "rl") {
      rl[r.seed] = r.test_accuracy;
    } else {
      best_lenet[r.seed] = std::max(best_lenet[r.seed], r.test_accuracy);
    }
  }
  bool pass = rl.size() == kSum128Seeds;
  std::string detail;
  for (const auto& [seed, acc] : rl) {
    const double margin = acc - best_lenet[seed];
    pass = pass && margin >= kMarginTarget;
    detail += fmt("seed %llu: rl %.4f vs best LeNet %.4f (margin %+.1f pp); ",
                  static_cast<unsigned long long>(seed), acc, best_lenet[seed], 100.0 * margin);
    ctx.record["sum128"][std::to_string(seed)] = {{"rl", acc}, {"best_lenet", best_lenet[seed]}};
  }
  return {pass, detail + fmt("need >= %.0f pp on all %d seeds", 100.0 * kMarginTarget, kSum128Seeds)};
}

// ---------------------------------------------------------------------------

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Relative path -> contents for every regular file under `root`.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_bytes(e.path());
  }
  return files;
}

int run_cli(const Context& ctx, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + ctx.cli + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

Outcome determinism(Context& ctx) {
  if (!fs::exists(perception_dir(ctx) / "digit.varl")) {
    return {false, "no pretrained perception (run the perception criterion first)"};
  }
  const std::string nets = perception_dir(ctx).string();
  std::vector<std::map<std::string, std::string>> runs;
  std::vector<std::string> failed;
  for (const char* name : {"run_a", "run_b"}) {
    const fs::path out = ctx.work / "determinism" / name;
    fs::remove_all(out);
    fs::create_directories(out);
    const fs::path log = ctx.work / "determinism" / (std::string(name) + ".log");
    fs::remove(log);
    const std::string o = out.string();
    {
      std::ofstream cfg(out / "sweep.json");
      cfg << R"({"test_size": 60, "curve_examples": 20, "train": {"eval_every": 5}})" << "\n";
    }
    const std::vector<std::string> commands = {
        "gen-data --task sum --count 40 --seed 3 --out " + o + "/data/sum.bin",
        "pretrain --net op --max-epochs 1 --seed 4 --out " + o + "/nets",
        "train-rl --task sum --samples 16 --eval-count 20 --updates 20 --eval-every 10 --stub "
        "--seed 5 --out " + o + "/rl",
        "train-rl --task sum --train " + o + "/data/sum.bin --eval-count 20 --updates 10 "
        "--eval-every 5 --perception " + nets + " --seed 6 --out " + o + "/rl_nets",
        "train-baseline --task sum --samples 32 --test-count 50 --max-epochs 2 --fc-units 32 "
        "--seed 7 --out " + o + "/baseline",
        "eval --model rl --params " + o + "/rl/controller.varl --count 50 --stub --seed 8 "
        "--out " + o + "/eval --trace " + o + "/eval/trace.csv",
        "eval --model lenet --params " + o + "/baseline/baseline.varl --count 50 --out " + o +
            "/eval_lenet",
        "oracle-eval --task sum --count 50 --perception " + nets + " --out " + o +
            "/oracle --trace " + o + "/oracle/trace.csv",
        "sweep --config " + o + "/sweep.json --task sum --models rl,lenet32,oracle --sizes 8,16 "
        "--repeats 2 --updates 10 --no-wall-time --perception " + nets + " --seed 9 --out " + o +
            "/sweep",
    };
    for (const auto& c : commands) {
      if (run_cli(ctx, c, log) != 0) failed.push_back(c.substr(0, c.find(' ')));
    }
    fs::remove(out / "sweep.json");
    runs.push_back(snapshot(out));
  }
  std::size_t differing = 0, csvs = 0, checkpoints = 0;
  std::string first_diff;
  std::set<std::string> names;
  for (const auto& run : runs) {
    for (const auto& [k, v] : run) names.insert(k);
  }
  for (const auto& k : names) {
    const auto a = runs[0].find(k), b = runs[1].find(k);
    const bool same = a != runs[0].end() && b != runs[1].end() && a->second == b->second;
    if (!same && first_diff.empty()) first_diff = k;
    differing += same ? 0 : 1;
    csvs += k.ends_with(".csv") ? 1 : 0;
    checkpoints += k.ends_with(".varl") ? 1 : 0;
  }
  std::string failures;
  for (const auto& f : failed) failures += f + " ";
  return {failed.empty() && differing == 0 && csvs > 0 && checkpoints > 0,
          fmt("%zu files (%zu CSV, %zu checkpoints) from 9 CLI commands run twice: %zu differ%s%s",
              names.size(), csvs, checkpoints, differing,
              first_diff.empty() ? "" : (" (first: " + first_diff + ")").c_str(),
              failed.empty() ? "" : ("; failed: " + failures).c_str())};
}

struct Criterion {
  const char* id;
  const char* title;
  Outcome (*run)(Context&);
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  std::string work = "acceptance_work";
  std::string data_dir;
  Context ctx;
  ctx.cli = VARL_CLI_PATH;
  app.add_option("--only", only, "Comma list of criterion ids");
  app.add_option("--work", work, "Scratch directory")->capture_default_str();
  app.add_option("--data-dir", data_dir, "EMNIST directory (default $VARL_DATA_DIR)");
  app.add_flag("--reuse-perception", ctx.reuse_perception,
               "Load nets from a previous run instead of pretraining");
  app.add_option("--cli", ctx.cli, "Path to the varl binary")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const Criterion criteria[] = {
      {"gradcheck", "gradcheck suite", gradcheck_suite},
      {"pg-exact", "policy-gradient exactness", pg_exactness},
      {"gradient-stop", "gradient stop through the advantage", gradient_stop},
      {"interface", "interface semantics and reduction brute force", interface_semantics},
      {"reward", "reward accounting", reward_accounting},
      {"perception", "perception pretraining targets", perception_targets},
      {"oracle", "oracle end-to-end with pretrained perception", oracle_end_to_end},
      {"rl-sanity", "RL sanity on the one-digit task", rl_sanity},
      {"sum128", "Sum with 128 samples: RL vs best LeNet", sum128},
      {"determinism", "byte-identical reruns", determinism},
  };
  std::set<std::string> selected;
  {
    std::stringstream ss(only);
    for (std::string id; std::getline(ss, id, ',');) {
      if (!id.empty()) selected.insert(id);
    }
  }
  for (const auto& id : selected) {
    bool known = false;
    for (const auto& c : criteria) known = known || id == c.id;
    if (!known) {
      std::cerr << "unknown criterion '" << id << "'\n";
      return 2;
    }
  }

  if (data_dir.empty()) {
    if (const char* env = std::getenv("VARL_DATA_DIR")) data_dir = env;
  }
  if (!data_dir.empty()) ctx.data_dir = data_dir;
  ctx.work = fs::absolute(work);
  fs::create_directories(ctx.work);
  ctx.pools = load_glyph_pools(ctx.data_dir);
  std::printf("glyph source: %s\n", ctx.pools.source.c_str());
  std::fflush(stdout);
  ctx.record["glyph_source"] = ctx.pools.source;

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    ++ran;
    Outcome o;
    const auto start = Clock::now();
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    ctx.record["criteria"][c.id] = {{"pass", o.pass}, {"detail", o.detail},
                                    {"seconds", seconds_since(start)}};
    std::printf("%s  %-13s %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
    write_file_atomically(ctx.work / "acceptance.json", ctx.record.dump(2) + "\n");
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
