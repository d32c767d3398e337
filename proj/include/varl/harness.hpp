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

#include "varl/baselines.hpp"
#include "varl/emnist.hpp"
#include "varl/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

// Sample-efficiency sweeps: for every (model, sample size, seed) cell, train
// on a fresh training set of that size and score a fixed test set.

namespace varl {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MissingCheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// rl, lenet32, lenet128, lenet512, oracle.
bool is_known_model(const std::string& model);

struct ExperimentSpec {
  TaskKind task = TaskKind::Sum;
  int grid = 2;
  std::vector<std::size_t> sample_sizes{16, 32, 64, 128, 256, 512, 1024, 2048};
  int repeats = 3;
  std::vector<std::string> models{"rl", "lenet32", "lenet128", "lenet512"};
  std::filesystem::path output_dir = "sweep";
  std::uint64_t seed = 0;          // row seeds are seed, seed + 1, ...
  std::size_t test_size = 2000;
  std::uint64_t test_seed = 9001;
  std::size_t curve_examples = 200;  // test prefix used for rl learning curves
  bool record_wall_time = true;      // false writes 0 for byte-stable CSVs
  // Sweep settings for rl cells. Multi-digit scenes with pretrained nets need
  // the salience map to skip blanks; larger batches find that policy where
  // N=16 memorizes the training scenes, and the trainer's entropy weight
  // holds the policy near uniform.
  TrainConfig train = [] {
    TrainConfig c;
    c.batch_size = 64;
    c.total_updates = 30000;
    c.eval_every = 1000;
    c.learning_rate = 3e-3;
    c.entropy_weight = 3e-3;
    return c;
  }();
  BaselineConfig baseline;
};

void validate(const ExperimentSpec& spec);

struct ResultRow {
  TaskKind task = TaskKind::Sum;
  std::string model;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
};

inline constexpr const char* kResultsHeader =
    "task,model,sample_size,seed,test_accuracy,wall_seconds";

std::string format_row(const ResultRow& row);
std::vector<ResultRow> read_results(const std::filesystem::path& csv);

/// Digit counts per task: 2-3 digits (plus a letter for Combined).
DatasetSpec task_dataset(TaskKind task, int grid, std::size_t count, std::uint64_t seed,
                         Split split);

std::vector<LabeledExample> sweep_test_set(const ExperimentSpec& spec, const GlyphPools& pools);
std::vector<LabeledExample> sweep_train_set(const ExperimentSpec& spec, std::size_t size,
                                            std::uint64_t row_seed, const GlyphPools& pools);

/// Trains and scores one cell. `perception` is required for rl and oracle.
ResultRow run_cell(const ExperimentSpec& spec, const std::string& model, std::size_t size,
                   std::uint64_t row_seed, const GlyphPools& pools,
                   std::span<const LabeledExample> test, const Perception* perception);

using SweepProgress = std::function<void(const ResultRow& row, bool resumed)>;

/// Writes output_dir/cells/<task>_<model>_<size>_<seed>.csv per cell (atomic)
/// and output_dir/results.csv with all finished rows in spec order. Cells
/// whose file exists are read back instead of rerun.
std::vector<ResultRow> run_sweep(const ExperimentSpec& spec, const GlyphPools& pools,
                                 const Perception* perception,
                                 const SweepProgress& progress = {});

// ---------------------------------------------------------------------------
// JSON configuration. Unknown keys are errors.

nlohmann::json read_json_file(const std::filesystem::path& path);
void apply_config(const nlohmann::json& j, TrainConfig& config);
void apply_config(const nlohmann::json& j, BaselineConfig& config);
/// Top-level keys of ExperimentSpec plus nested "train" and "baseline".
void apply_config(const nlohmann::json& j, ExperimentSpec& spec);

}  // namespace varl
