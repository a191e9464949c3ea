/*
 * Copyright 2026 The gns-desk Authors
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gns/json_config.hpp"

namespace gns::cmd {

namespace fs = std::filesystem;

/// Sparse user configuration (file contents plus flag overrides). Resolution
/// fills defaults and, for commands that read a dataset, the fields the
/// dataset fixes.
struct ConfigSource {
  nlohmann::json overrides = nlohmann::json::object();

  static ConfigSource from_file(const fs::path& path);
  /// Sets a dotted key ("train.noise.sigma_v") to a JSON value.
  void set(const std::string& dotted_key, nlohmann::json value);
  bool has(const std::string& dotted_key) const;
  RunConfig resolve() const;
};

/// Scenario, dim, globals and (unless given) the connectivity radius come
/// from the dataset manifest.
RunConfig resolve_for_dataset(const ConfigSource& source, const Dataset& dataset);

/// Writes config.json with the fully resolved configuration.
void echo_config(const fs::path& dir, const RunConfig& config);

using Progress = std::function<void(const std::string&)>;

void gen(const ConfigSource& source, const fs::path& out);

struct TrainArgs {
  fs::path dataset;
  fs::path out;
  std::optional<fs::path> resume;
  Progress progress;
};
void train(const ConfigSource& source, const TrainArgs& args);

std::vector<Trajectory> load_split(const Dataset& dataset, const std::string& split,
                                   std::size_t limit = 0);

struct RolloutArgs {
  fs::path checkpoint;
  fs::path dataset;
  std::string split = "test";
  std::size_t traj_index = 0;
  std::size_t steps = 0;  // 0: to the end of the source trajectory
  fs::path out;           // .gtraj; metadata goes to <out>.json
  std::optional<fs::path> timings_csv;
};
void rollout(const RolloutArgs& args);

struct EvalArgs {
  std::optional<fs::path> checkpoint;  // unset: ground-truth oracle
  fs::path dataset;
  std::string split = "test";
  std::string metrics = "mse,ot,mmd";
  fs::path out;
};
void eval(const ConfigSource& source, const EvalArgs& args);

enum class AblationAxis { kMessagePassing, kRadius, kNoise, kShared, kEncoder };
AblationAxis parse_ablation_axis(const std::string& s);
const char* ablation_axis_name(AblationAxis a);

/// Applies one axis value to a configuration; values are parsed per axis.
void apply_axis(RunConfig& config, AblationAxis axis, const std::string& value);

struct AblationRow {
  std::string value;
  std::vector<double> one_step_mse;  // one per seed
  std::vector<double> rollout_mse;
  double median_one_step = 0.0;
  double median_rollout = 0.0;
};

double median(std::vector<double> v);

/// Trains one model per (value, seed) with everything else fixed and
/// evaluates on `test`. Seed s uses train.seed + s.
std::vector<AblationRow> run_ablation(const RunConfig& base, AblationAxis axis,
                                      const std::vector<std::string>& values, std::size_t seeds,
                                      std::span<const Trajectory> train,
                                      std::span<const Trajectory> valid,
                                      std::span<const Trajectory> test,
                                      const Progress& progress = {});
std::string ablation_csv(AblationAxis axis, const std::vector<AblationRow>& rows);

struct AblateArgs {
  fs::path dataset;
  std::string axis;
  std::vector<std::string> values;
  std::size_t seeds = 3;
  fs::path out;
  Progress progress;
};
void ablate(const ConfigSource& source, const AblateArgs& args);

struct PlotArgs {
  fs::path in;
  fs::path out;
};
void plot(const PlotArgs& args);

}  // namespace gns::cmd
