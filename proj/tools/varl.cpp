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

// varl: data generation, perception pretraining, controller and baseline
// training, evaluation and sample-efficiency sweeps.

#include "varl/harness.hpp"
#include "varl/oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace varl;
using nlohmann::json;

namespace {

constexpr std::uint64_t kPoolSeed = 2017;

/// Bad invocation that parsing alone cannot catch (missing paths etc.).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string data_dir;
  std::string trace;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--data-dir", c.data_dir, "EMNIST directory (default $VARL_DATA_DIR)");
}

std::optional<json> config_json(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  if (!fs::exists(c.config)) throw UsageError("config file not found: " + c.config);
  return read_json_file(c.config);
}

GlyphPools pools_for(const Common& c) {
  std::string dir = c.data_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("VARL_DATA_DIR")) dir = env;
  }
  if (!dir.empty() && !fs::is_directory(dir)) throw UsageError("data directory not found: " + dir);
  GlyphPools pools = load_glyph_pools(dir.empty() ? std::nullopt : std::optional<fs::path>(dir),
                                      kPoolSeed);
  if (pools.synthetic) std::cerr << "note: EMNIST files not found; using synthetic glyphs\n";
  return pools;
}

struct TaskArgs {
  std::string task = "sum";
  int grid = 2;
};

void add_task(CLI::App* cmd, TaskArgs& t) {
  cmd->add_option("--task", t.task, "sum, prod, max, min or combined")->capture_default_str();
  cmd->add_option("--n", t.grid, "Grid size")->capture_default_str();
}

std::vector<LabeledExample> test_examples(const TaskArgs& t, std::size_t count,
                                          std::uint64_t seed, const GlyphPools& pools) {
  return make_dataset(task_dataset(parse_task(t.task), t.grid, count, seed, Split::Test), pools);
}

std::vector<LabeledExample> dataset_or_generate(const std::string& path, const TaskArgs& t,
                                                std::size_t count, std::uint64_t seed,
                                                Split split, const GlyphPools& pools) {
  if (!path.empty()) {
    if (!fs::exists(path)) throw UsageError("dataset not found: " + path);
    return load_dataset(path).examples;
  }
  return make_dataset(task_dataset(parse_task(t.task), t.grid, count, seed, split), pools);
}

/// Pretrained nets from `dir` (cached), or an exact stub over `scenes`.
std::shared_ptr<const Perception> perception_for(const std::string& dir, bool stub,
                                                 std::initializer_list<const std::vector<LabeledExample>*> scenes) {
  if (stub) {
    auto lookup = std::make_shared<LookupPerception>();
    for (const auto* s : scenes) lookup->add(*s);
    return lookup;
  }
  if (dir.empty()) throw UsageError("--perception DIR or --stub is required");
  if (!fs::is_directory(dir)) throw UsageError("perception directory not found: " + dir);
  return std::make_shared<CachedPerception>(std::make_shared<FrozenNets>(FrozenNets::load(dir)));
}

void write_json(const fs::path& path, const json& j) { write_file_atomically(path, j.dump(2) + "\n"); }

TraceFn trace_to(std::ofstream& out) {
  out << kTraceHeader << "\n";
  return [&out](std::size_t episode, int t, Action a, const InterfaceState& after) {
    if (episode == 0) out << trace_line(t, a, after) << "\n";
  };
}

// ---------------------------------------------------------------------------

struct GenData {
  Common common;
  TaskArgs task;
  std::size_t count = 1000;
  std::string split = "train";
  int min_digits = 2, max_digits = 3;
  std::string out;
};

int gen_data(const GenData& a) {
  const auto pools = pools_for(a.common);
  DatasetSpec spec = task_dataset(parse_task(a.task.task), a.task.grid, a.count, a.common.seed,
                                  a.split == "test" ? Split::Test : Split::Train);
  spec.min_digits = a.min_digits;
  spec.max_digits = a.max_digits;
  const auto examples = make_dataset(spec, pools);
  save_dataset(a.out, spec, pools.source, examples);
  std::cout << "wrote " << examples.size() << " examples to " << a.out << "\n";
  return 0;
}

struct Pretrain {
  Common common;
  std::string net = "all";
  std::string out = "perception";
  int max_epochs = 20;
};

int pretrain(const Pretrain& a) {
  const auto pools = pools_for(a.common);
  fs::create_directories(a.out);
  auto log_epoch = [](const char* name) {
    return [name](int epoch, double loss, double acc) {
      std::printf("%s epoch %d loss %.4f validation %.4f\n", name, epoch, loss, acc);
      std::fflush(stdout);
    };
  };
  PretrainConfig cfg;
  cfg.fit.seed = a.common.seed;
  cfg.fit.max_epochs = a.max_epochs;
  const bool all = a.net == "all";
  if (all || a.net == "digit") {
    const auto r = pretrain_classifier(pools.train_digits, pools.test_digits, 10, cfg, log_epoch("digit"));
    save_params(fs::path(a.out) / "digit.varl", r.fit.params);
    write_json(fs::path(a.out) / "digit_report.json",
               {{"test_accuracy", r.test_accuracy}, {"epochs", r.fit.epoch_loss.size()},
                {"source", pools.source}, {"seed", a.common.seed}});
    std::printf("digit test accuracy %.4f\n", r.test_accuracy);
  }
  if (all || a.net == "op") {
    const auto r = pretrain_classifier(pools.train_letters, pools.test_letters, 4, cfg, log_epoch("op"));
    save_params(fs::path(a.out) / "op.varl", r.fit.params);
    write_json(fs::path(a.out) / "op_report.json",
               {{"test_accuracy", r.test_accuracy}, {"epochs", r.fit.epoch_loss.size()},
                {"source", pools.source}, {"seed", a.common.seed}});
    std::printf("op test accuracy %.4f\n", r.test_accuracy);
  }
  if (all || a.net == "salience") {
    SalienceConfig sc;
    sc.seed = a.common.seed;
    sc.max_epochs = a.max_epochs;
    const auto r = pretrain_salience(pools, sc, log_epoch("salience"));
    save_params(fs::path(a.out) / "salience.varl", r.params);
    write_json(fs::path(a.out) / "salience_report.json",
               {{"test_cell_accuracy", r.test_cell_accuracy},
                {"empty_scene_max_probability", r.empty_scene_max_probability},
                {"epochs", r.epoch_loss.size()}, {"source", pools.source}, {"seed", a.common.seed}});
    std::printf("salience test per-cell accuracy %.4f\n", r.test_cell_accuracy);
  }
  return 0;
}

struct TrainRl {
  Common common;
  TaskArgs task;
  std::size_t samples = 128;
  std::string train_path;
  std::size_t eval_count = 200;
  std::string perception;
  bool stub = false;
  std::string out = "rl";
  std::optional<int> updates, eval_every, batch_size;
  std::optional<double> lr, entropy_weight, value_weight, gamma, clip_norm;
  std::optional<std::string> optimizer;
};

int train_rl(const TrainRl& a) {
  TrainConfig cfg;
  if (auto j = config_json(a.common)) apply_config(j->contains("train") ? (*j)["train"] : *j, cfg);
  cfg.seed = a.common.seed;
  if (a.updates) cfg.total_updates = *a.updates;
  if (a.eval_every) cfg.eval_every = *a.eval_every;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.entropy_weight) cfg.entropy_weight = *a.entropy_weight;
  if (a.value_weight) cfg.value_weight = *a.value_weight;
  if (a.gamma) cfg.gamma = *a.gamma;
  if (a.clip_norm) cfg.clip_norm = *a.clip_norm;
  if (a.optimizer) cfg.optimizer = *a.optimizer;
  validate(cfg);

  const auto pools = pools_for(a.common);
  const auto train = dataset_or_generate(a.train_path, a.task, a.samples,
                                         derive_seed(a.common.seed, a.samples), Split::Train, pools);
  const auto curve = test_examples(a.task, a.eval_count, derive_seed(a.common.seed, 7), pools);
  const auto perception = perception_for(a.perception, a.stub, {&train, &curve});
  const fs::path out(a.out);
  TrainHooks hooks;
  hooks.checkpoint_dir = out / "checkpoints";
  hooks.log_csv = out / "train_log.csv";
  hooks.on_eval = [](const CurvePoint& p) {
    std::printf("update %d mean_return %.4f entropy %.4f value_loss %.4f eval_accuracy %.4f\n",
                p.update, p.mean_return, p.entropy, p.value_loss, p.eval_accuracy);
    std::fflush(stdout);
  };
  const auto result = train_controller(cfg, train, curve, *perception, hooks);
  save_params(out / "controller.varl", result.params);
  std::cout << "saved " << (out / "controller.varl").string() << "\n";
  return 0;
}

struct TrainBaselineArgs {
  Common common;
  TaskArgs task;
  std::size_t samples = 128;
  std::string train_path;
  std::size_t test_count = 2000;
  std::uint64_t test_seed = 9001;
  int fc_units = 128;
  std::optional<int> max_epochs;
  std::string out = "baseline";
};

int train_baseline_cmd(const TrainBaselineArgs& a) {
  BaselineConfig cfg;
  if (auto j = config_json(a.common)) apply_config(j->contains("baseline") ? (*j)["baseline"] : *j, cfg);
  cfg.fc_units = a.fc_units;
  cfg.seed = a.common.seed;
  if (a.max_epochs) cfg.max_epochs = *a.max_epochs;
  const auto pools = pools_for(a.common);
  const auto train = dataset_or_generate(a.train_path, a.task, a.samples,
                                         derive_seed(a.common.seed, a.samples), Split::Train, pools);
  const auto test = test_examples(a.task, a.test_count, a.test_seed, pools);
  const auto r = train_baseline(train, test, cfg, [](int epoch, double loss, double acc) {
    std::printf("epoch %d loss %.4f validation %.4f\n", epoch, loss, acc);
    std::fflush(stdout);
  });
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path out(a.out);
  fs::create_directories(out);
  save_params(out / "baseline.varl", r.params);
  write_json(out / "report.json", {{"task", a.task.task}, {"fc_units", cfg.fc_units},
                                   {"train_size", train.size()}, {"train_accuracy", r.train_accuracy},
                                   {"test_accuracy", r.test_accuracy}, {"epochs", r.epochs_run},
                                   {"seed", a.common.seed}});
  std::printf("test accuracy %.4f\n", r.test_accuracy);
  return 0;
}

struct EvalArgs {
  Common common;
  TaskArgs task;
  std::string model = "rl";
  std::string params;
  std::string test_path;
  std::size_t count = 2000;
  std::uint64_t test_seed = 9001;
  std::string perception;
  bool stub = false;
  std::string out;
};

int eval_cmd(const EvalArgs& a) {
  if (!fs::exists(a.params)) throw UsageError("parameter file not found: " + a.params);
  const auto pools = pools_for(a.common);
  const auto test = dataset_or_generate(a.test_path, a.task, a.count, a.test_seed, Split::Test, pools);
  EvalReport report;
  const ParamSet params = load_params(a.params);
  if (a.model == "lenet") {
    report.accuracy = evaluate_baseline(params, test);
  } else if (a.model == "rl") {
    const auto perception = perception_for(a.perception, a.stub, {&test});
    ControllerPolicy greedy(params, true);
    std::ofstream trace;
    RolloutOptions opts;
    if (!a.common.trace.empty()) {
      trace.open(a.common.trace);
      opts.trace = trace_to(trace);
    }
    report = evaluate(greedy, test, *perception, EnvConfig{}, a.common.seed, 256, opts);
  } else {
    throw UsageError("--model must be rl or lenet");
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    if (!report.rows.empty()) write_eval_csv(fs::path(a.out) / "eval.csv", report);
    write_eval_summary(fs::path(a.out) / "eval.json", parse_task(a.task.task), report, a.common.seed);
  }
  std::printf("accuracy %.4f\n", report.accuracy);
  return 0;
}

struct OracleArgs {
  Common common;
  TaskArgs task;
  std::size_t count = 2000;
  std::uint64_t test_seed = 9001;
  std::string perception;
  bool stub = false;
  std::string out;
};

int oracle_eval(const OracleArgs& a) {
  const auto pools = pools_for(a.common);
  const auto test = test_examples(a.task, a.count, a.test_seed, pools);
  const auto perception = perception_for(a.perception, a.stub, {&test});
  OraclePolicy oracle(parse_task(a.task.task), *perception);
  std::ofstream trace;
  RolloutOptions opts;
  if (!a.common.trace.empty()) {
    trace.open(a.common.trace);
    opts.trace = trace_to(trace);
  }
  const auto report = evaluate(oracle, test, *perception, EnvConfig{}, a.common.seed, 256, opts);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_eval_csv(fs::path(a.out) / "eval.csv", report);
    write_eval_summary(fs::path(a.out) / "eval.json", parse_task(a.task.task), report, a.common.seed);
  }
  std::printf("accuracy %.4f\n", report.accuracy);
  return 0;
}

struct SweepArgs {
  Common common;
  std::optional<std::string> task;
  std::optional<int> grid;
  std::optional<std::string> models;
  std::optional<std::vector<std::size_t>> sizes;
  std::optional<int> repeats, updates;
  std::optional<std::string> out;
  std::string perception;
  bool no_wall_time = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int sweep(const SweepArgs& a) {
  ExperimentSpec spec;
  if (auto j = config_json(a.common)) apply_config(*j, spec);
  spec.seed = a.common.seed;
  if (a.task) spec.task = parse_task(*a.task);
  if (a.grid) spec.grid = *a.grid;
  if (a.models) spec.models = split_list(*a.models);
  if (a.sizes) spec.sample_sizes = *a.sizes;
  if (a.repeats) spec.repeats = *a.repeats;
  if (a.updates) spec.train.total_updates = *a.updates;
  if (a.out) spec.output_dir = *a.out;
  if (a.no_wall_time) spec.record_wall_time = false;
  validate(spec);

  std::shared_ptr<const Perception> perception;
  const bool needs_nets = std::find(spec.models.begin(), spec.models.end(), "rl") != spec.models.end() ||
                          std::find(spec.models.begin(), spec.models.end(), "oracle") != spec.models.end();
  if (needs_nets) {
    if (a.perception.empty()) throw UsageError("--perception DIR is required for rl and oracle");
    if (!fs::is_directory(a.perception)) throw UsageError("perception directory not found: " + a.perception);
    perception = std::make_shared<CachedPerception>(std::make_shared<FrozenNets>(FrozenNets::load(a.perception)));
  }
  const auto pools = pools_for(a.common);
  run_sweep(spec, pools, perception.get(), [](const ResultRow& r, bool resumed) {
    std::cout << format_row(r) << (resumed ? "  (resumed)" : "") << "\n" << std::flush;
  });
  std::cout << "results in " << (spec.output_dir / "results.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual arithmetic with a learned interface controller"};
  app.require_subcommand(1);

  GenData gd;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a task dataset and cache it");
  add_common(c_gen, gd.common);
  add_task(c_gen, gd.task);
  c_gen->add_option("--count", gd.count, "Number of examples")->capture_default_str();
  c_gen->add_option("--split", gd.split, "train or test")
      ->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  c_gen->add_option("--min-digits", gd.min_digits)->capture_default_str();
  c_gen->add_option("--max-digits", gd.max_digits)->capture_default_str();
  c_gen->add_option("--out", gd.out, "Output file")->required();

  Pretrain pt;
  auto* c_pre = app.add_subcommand("pretrain", "Pretrain the perception networks");
  add_common(c_pre, pt.common);
  c_pre->add_option("--net", pt.net, "digit, op, salience or all")
      ->check(CLI::IsMember({"digit", "op", "salience", "all"}))->capture_default_str();
  c_pre->add_option("--out", pt.out, "Output directory")->capture_default_str();
  c_pre->add_option("--max-epochs", pt.max_epochs)->capture_default_str();

  TrainRl rl;
  auto* c_rl = app.add_subcommand("train-rl", "Train the controller with actor-critic");
  add_common(c_rl, rl.common);
  add_task(c_rl, rl.task);
  c_rl->add_option("--samples", rl.samples, "External training samples")->capture_default_str();
  c_rl->add_option("--train", rl.train_path, "Cached training dataset (overrides --samples)");
  c_rl->add_option("--eval-count", rl.eval_count, "Held-out examples for the learning curve")
      ->capture_default_str();
  c_rl->add_option("--perception", rl.perception, "Directory with pretrained nets");
  c_rl->add_flag("--stub", rl.stub, "Use exact perception instead of pretrained nets");
  c_rl->add_option("--out", rl.out, "Output directory")->capture_default_str();
  c_rl->add_option("--updates", rl.updates);
  c_rl->add_option("--eval-every", rl.eval_every);
  c_rl->add_option("--batch-size", rl.batch_size);
  c_rl->add_option("--lr", rl.lr);
  c_rl->add_option("--entropy-weight", rl.entropy_weight);
  c_rl->add_option("--value-weight", rl.value_weight);
  c_rl->add_option("--gamma", rl.gamma);
  c_rl->add_option("--clip-norm", rl.clip_norm);
  c_rl->add_option("--optimizer", rl.optimizer)->check(CLI::IsMember({"adam", "sgd"}));

  TrainBaselineArgs tb;
  auto* c_tb = app.add_subcommand("train-baseline", "Train a LeNet baseline on whole scenes");
  add_common(c_tb, tb.common);
  add_task(c_tb, tb.task);
  c_tb->add_option("--samples", tb.samples)->capture_default_str();
  c_tb->add_option("--train", tb.train_path, "Cached training dataset (overrides --samples)");
  c_tb->add_option("--test-count", tb.test_count)->capture_default_str();
  c_tb->add_option("--test-seed", tb.test_seed)->capture_default_str();
  c_tb->add_option("--fc-units", tb.fc_units)->capture_default_str();
  c_tb->add_option("--max-epochs", tb.max_epochs);
  c_tb->add_option("--out", tb.out)->capture_default_str();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a trained controller or baseline");
  add_common(c_ev, ev.common);
  add_task(c_ev, ev.task);
  c_ev->add_option("--model", ev.model, "rl or lenet")
      ->check(CLI::IsMember({"rl", "lenet"}))->capture_default_str();
  c_ev->add_option("--params", ev.params, "Parameter file")->required();
  c_ev->add_option("--test", ev.test_path, "Cached test dataset");
  c_ev->add_option("--count", ev.count)->capture_default_str();
  c_ev->add_option("--test-seed", ev.test_seed)->capture_default_str();
  c_ev->add_option("--perception", ev.perception);
  c_ev->add_flag("--stub", ev.stub);
  c_ev->add_option("--out", ev.out, "Directory for eval.csv and eval.json");
  c_ev->add_option("--trace", ev.common.trace, "Write the first episode's trace CSV here");

  OracleArgs oe;
  auto* c_or = app.add_subcommand("oracle-eval", "Evaluate the scripted oracle policy");
  add_common(c_or, oe.common);
  add_task(c_or, oe.task);
  c_or->add_option("--count", oe.count)->capture_default_str();
  c_or->add_option("--test-seed", oe.test_seed)->capture_default_str();
  c_or->add_option("--perception", oe.perception);
  c_or->add_flag("--stub", oe.stub);
  c_or->add_option("--out", oe.out);
  c_or->add_option("--trace", oe.common.trace, "Write the first episode's trace CSV here");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Sample-efficiency sweep");
  add_common(c_sw, sw.common);
  c_sw->add_option("--task", sw.task);
  c_sw->add_option("--n", sw.grid);
  c_sw->add_option("--models", sw.models, "Comma list of rl, lenet32, lenet128, lenet512, oracle");
  c_sw->add_option("--sizes", sw.sizes, "Sample sizes")->delimiter(',');
  c_sw->add_option("--repeats", sw.repeats);
  c_sw->add_option("--updates", sw.updates, "RL update budget per cell");
  c_sw->add_option("--out", sw.out, "Output directory");
  c_sw->add_option("--perception", sw.perception, "Directory with pretrained nets");
  c_sw->add_flag("--no-wall-time", sw.no_wall_time, "Write 0 for wall_seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return 2;
  }

  try {
    if (*c_gen) return gen_data(gd);
    if (*c_pre) return pretrain(pt);
    if (*c_rl) return train_rl(rl);
    if (*c_tb) return train_baseline_cmd(tb);
    if (*c_ev) return eval_cmd(ev);
    if (*c_or) return oracle_eval(oe);
    if (*c_sw) return sweep(sw);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownTaskError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
