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

#include "varl/harness.hpp"

#include "varl/oracle.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace varl {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_known_model(const std::string& model) {
  return model == "rl" || model == "oracle" || model == "lenet32" || model == "lenet128" ||
         model == "lenet512";
}

void validate(const ExperimentSpec& spec) {
  auto fail = [](const std::string& what) { throw ConfigError("experiment: " + what); };
  if (spec.grid < 1) fail("grid must be >= 1");
  if (spec.repeats < 1) fail("repeats must be >= 1");
  if (spec.sample_sizes.empty()) fail("sample_sizes is empty");
  for (std::size_t i = 0; i < spec.sample_sizes.size(); ++i) {
    if (spec.sample_sizes[i] == 0) fail("sample sizes must be positive");
    if (i > 0 && spec.sample_sizes[i] <= spec.sample_sizes[i - 1]) {
      fail("sample_sizes must be strictly increasing");
    }
  }
  if (spec.models.empty()) fail("no models");
  std::set<std::string> seen;
  for (const auto& m : spec.models) {
    if (!is_known_model(m)) fail("unknown model '" + m + "'");
    if (!seen.insert(m).second) fail("model '" + m + "' listed twice");
  }
  if (spec.test_size == 0) fail("test_size must be positive");
  validate(spec.train);
}

std::string format_row(const ResultRow& row) {
  char acc[32], wall[32];
  std::snprintf(acc, sizeof acc, "%.6f", row.test_accuracy);
  std::snprintf(wall, sizeof wall, "%.3f", row.wall_seconds);
  return std::string(task_name(row.task)) + "," + row.model + "," +
         std::to_string(row.sample_size) + "," + std::to_string(row.seed) + "," + acc + "," + wall;
}

namespace {

ResultRow parse_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() != 6) throw FormatError("results row needs 6 fields: '" + line + "'");
  ResultRow r;
  r.task = parse_task(f[0]);
  r.model = f[1];
  r.sample_size = std::stoull(f[2]);
  r.seed = std::stoull(f[3]);
  r.test_accuracy = std::stod(f[4]);
  r.wall_seconds = std::stod(f[5]);
  return r;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int fc_units_of(const std::string& model) { return std::stoi(model.substr(5)); }

}  // namespace

std::vector<ResultRow> read_results(const fs::path& csv) {
  std::stringstream in(read_text(csv));
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw FormatError(csv.string() + ": missing results header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

DatasetSpec task_dataset(TaskKind task, int grid, std::size_t count, std::uint64_t seed,
                         Split split) {
  DatasetSpec d;
  d.task = task;
  d.grid = grid;
  d.sample_count = count;
  d.seed = seed;
  d.split = split;
  d.min_digits = 2;
  d.max_digits = 3;
  return d;
}

std::vector<LabeledExample> sweep_test_set(const ExperimentSpec& spec, const GlyphPools& pools) {
  return make_dataset(task_dataset(spec.task, spec.grid, spec.test_size, spec.test_seed, Split::Test),
                      pools);
}

std::vector<LabeledExample> sweep_train_set(const ExperimentSpec& spec, std::size_t size,
                                            std::uint64_t row_seed, const GlyphPools& pools) {
  return make_dataset(task_dataset(spec.task, spec.grid, size,
                                   derive_seed(row_seed, static_cast<std::uint64_t>(size)),
                                   Split::Train),
                      pools);
}

ResultRow run_cell(const ExperimentSpec& spec, const std::string& model, std::size_t size,
                   std::uint64_t row_seed, const GlyphPools& pools,
                   std::span<const LabeledExample> test, const Perception* perception) {
  if (!is_known_model(model)) throw ConfigError("unknown model '" + model + "'");
  if ((model == "rl" || model == "oracle") && perception == nullptr) {
    throw MissingCheckpointError("model '" + model + "' needs pretrained perception");
  }
  const auto start = std::chrono::steady_clock::now();
  ResultRow row;
  row.task = spec.task;
  row.model = model;
  row.sample_size = size;
  row.seed = row_seed;
  const std::string stem = std::string(task_name(spec.task)) + "_" + model + "_" +
                           std::to_string(size) + "_" + std::to_string(row_seed);
  const fs::path models_dir = spec.output_dir / "models";
  const EnvConfig env{spec.train.horizon, spec.train.gamma};

  if (model == "oracle") {
    OraclePolicy oracle(spec.task, *perception);
    row.test_accuracy = evaluate(oracle, test, *perception, env, row_seed).accuracy;
  } else {
    const auto train = sweep_train_set(spec, size, row_seed, pools);
    fs::create_directories(models_dir);
    if (model == "rl") {
      TrainConfig cfg = spec.train;
      cfg.seed = row_seed;
      const auto curve_set = test.first(std::min(spec.curve_examples, test.size()));
      TrainHooks hooks;
      hooks.log_csv = models_dir / (stem + "_log.csv");
      const auto result = train_controller(cfg, train, curve_set, *perception, hooks);
      save_params(models_dir / (stem + ".varl"), result.params);
      ControllerPolicy greedy(result.params, true);
      row.test_accuracy = evaluate(greedy, test, *perception, env, row_seed).accuracy;
    } else {
      BaselineConfig cfg = spec.baseline;
      cfg.fc_units = fc_units_of(model);
      cfg.seed = row_seed;
      const auto report = train_baseline(train, test, cfg);
      save_params(models_dir / (stem + ".varl"), report.params);
      row.test_accuracy = report.test_accuracy;
    }
  }
  if (spec.record_wall_time) {
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec, const GlyphPools& pools,
                                 const Perception* perception, const SweepProgress& progress) {
  validate(spec);
  for (const auto& m : spec.models) {
    if ((m == "rl" || m == "oracle") && perception == nullptr) {
      throw MissingCheckpointError("model '" + m + "' needs pretrained perception");
    }
  }
  const fs::path cells = spec.output_dir / "cells";
  fs::create_directories(cells);
  const auto test = sweep_test_set(spec, pools);

  std::vector<ResultRow> rows;
  auto write_results = [&] {
    std::string text = std::string(kResultsHeader) + "\n";
    for (const auto& r : rows) text += format_row(r) + "\n";
    write_file_atomically(spec.output_dir / "results.csv", text);
  };
  for (const auto& model : spec.models) {
    for (std::size_t size : spec.sample_sizes) {
      for (int r = 0; r < spec.repeats; ++r) {
        const std::uint64_t row_seed = spec.seed + static_cast<std::uint64_t>(r);
        const fs::path cell = cells / (std::string(task_name(spec.task)) + "_" + model + "_" +
                                       std::to_string(size) + "_" + std::to_string(row_seed) +
                                       ".csv");
        if (fs::exists(cell)) {
          const auto done = read_results(cell);
          if (done.size() != 1) throw FormatError(cell.string() + ": expected one row");
          rows.push_back(done.front());
          if (progress) progress(rows.back(), true);
          continue;
        }
        rows.push_back(run_cell(spec, model, size, row_seed, pools, test, perception));
        write_file_atomically(cell, std::string(kResultsHeader) + "\n" + format_row(rows.back()) + "\n");
        write_results();
        if (progress) progress(rows.back(), false);
      }
    }
  }
  write_results();
  return rows;
}

// ---------------------------------------------------------------------------

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
  }
}

}  // namespace

void apply_config(const json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"batch_size", "gamma", "value_weight", "entropy_weight", "learning_rate",
                  "total_updates", "eval_every", "seed", "horizon", "optimizer", "clip_norm"},
                 "train");
  take(j, "batch_size", c.batch_size);
  take(j, "gamma", c.gamma);
  take(j, "value_weight", c.value_weight);
  take(j, "entropy_weight", c.entropy_weight);
  take(j, "learning_rate", c.learning_rate);
  take(j, "total_updates", c.total_updates);
  take(j, "eval_every", c.eval_every);
  take(j, "seed", c.seed);
  take(j, "horizon", c.horizon);
  take(j, "optimizer", c.optimizer);
  take(j, "clip_norm", c.clip_norm);
}

void apply_config(const json& j, BaselineConfig& c) {
  reject_unknown(j,
                 {"fc_units", "learning_rate", "max_epochs", "patience", "batch_size",
                  "validation_fraction", "seed"},
                 "baseline");
  take(j, "fc_units", c.fc_units);
  take(j, "learning_rate", c.learning_rate);
  take(j, "max_epochs", c.max_epochs);
  take(j, "patience", c.patience);
  take(j, "batch_size", c.batch_size);
  take(j, "validation_fraction", c.validation_fraction);
  take(j, "seed", c.seed);
}

void apply_config(const json& j, ExperimentSpec& s) {
  reject_unknown(j,
                 {"task", "n", "sample_sizes", "repeats", "models", "output_dir", "seed",
                  "test_size", "test_seed", "curve_examples", "record_wall_time", "train",
                  "baseline"},
                 "experiment");
  if (j.contains("task")) {
    std::string task;
    take(j, "task", task);
    s.task = parse_task(task);
  }
  take(j, "n", s.grid);
  take(j, "sample_sizes", s.sample_sizes);
  take(j, "repeats", s.repeats);
  take(j, "models", s.models);
  if (j.contains("output_dir")) {
    std::string dir;
    take(j, "output_dir", dir);
    s.output_dir = dir;
  }
  take(j, "seed", s.seed);
  take(j, "test_size", s.test_size);
  take(j, "test_seed", s.test_seed);
  take(j, "curve_examples", s.curve_examples);
  take(j, "record_wall_time", s.record_wall_time);
  if (j.contains("train")) apply_config(j["train"], s.train);
  if (j.contains("baseline")) apply_config(j["baseline"], s.baseline);
}

}  // namespace varl
