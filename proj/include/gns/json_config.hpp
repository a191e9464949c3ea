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

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>
#include "gns/datagen.hpp"
#include "gns/metrics.hpp"
#include "gns/model.hpp"
#include "gns/train.hpp"

namespace gns {

// JSON round-trips for every configuration struct. Readers fill unspecified
// fields with defaults and reject unknown keys, naming the offending path.

nlohmann::json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

nlohmann::json gns_config_to_json(const GnsConfig& c);
GnsConfig gns_config_from_json(const nlohmann::json& j);
/// Fields missing from `j` keep their values from `base`.
GnsConfig gns_config_from_json(const nlohmann::json& j, const GnsConfig& base);

nlohmann::json noise_config_to_json(const NoiseConfig& c);
NoiseConfig noise_config_from_json(const nlohmann::json& j);
NoiseConfig noise_config_from_json(const nlohmann::json& j, const NoiseConfig& base);

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base);

nlohmann::json metric_options_to_json(const MetricOptions& c);
MetricOptions metric_options_from_json(const nlohmann::json& j);

nlohmann::json splits_to_json(const SplitSizes& s);
SplitSizes splits_from_json(const nlohmann::json& j);

/// Desk-scale architecture: the published layout with a narrower latent and
/// fewer message-passing steps so a run fits on one CPU core.
GnsConfig desk_model_defaults();
/// Desk-scale schedule and a noise scale matched to the toy velocities.
TrainConfig desk_train_defaults();

/// Everything a command needs. Sections missing from a file keep the desk
/// defaults.
struct RunConfig {
  /// Dataset generation seed; trajectory i uses seed + i.
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  SplitSizes splits;
  GnsConfig model = desk_model_defaults();
  TrainConfig train = desk_train_defaults();
  MetricOptions metrics;
};

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses JSON text; syntax errors become gns::Error(kind) naming `what`.
nlohmann::json parse_json_text(const std::string& text, const std::string& what);

}  // namespace gns
