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
#include <string>
#include <vector>

#include "gns/trajectory.hpp"

namespace gns {

enum class ScenarioKind { kGravityBounce, kSprings };

const char* scenario_kind_name(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& s);

/// Ground-truth toy physics. Units: box side ~1, seconds; stored frames are
/// every integration step.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kGravityBounce;
  std::size_t dim = 2;
  Box box{{0.0, 0.0}, {1.0, 1.0}};
  std::size_t min_particles = 90;
  std::size_t max_particles = 110;
  std::size_t num_steps = 200;  // K
  double dt = 0.01;

  double gravity = 1.0;          // along -last axis
  double gravity_jitter = 0.2;   // per-trajectory relative spread; the global feature
  double drag = 0.2;             // linear velocity damping, 1/s
  double restitution = 0.5;      // wall bounce velocity factor
  double repulsion_stiffness = 60.0;
  double repulsion_radius = 0.06;
  double initial_speed = 0.3;

  // springs only
  double spring_spacing = 0.05;
  double spring_link_factor = 1.5;  // bonds between lattice points within factor*spacing
  double spring_stiffness = 300.0;
  double spring_damping = 2.0;

  /// Static boundary-material particles laid along the floor.
  std::size_t boundary_particles = 0;

  /// Connectivity radius recommended for learning on this scenario.
  double suggested_radius = 0.1;

  void validate() const;
  static ScenarioConfig defaults(ScenarioKind kind);
};

/// Deterministic per (config, seed). Throws gns::Error(kNumeric) naming the
/// physics constants if the integration produces non-finite values.
Trajectory simulate_scenario(const ScenarioConfig& config, std::uint64_t seed);

struct SimulationRecord {
  Trajectory trajectory;
  /// Kinetic + gravitational + repulsion (+ spring) energy per unit mass,
  /// one entry per stored frame, from the integrator's own velocities.
  std::vector<double> energy;
  /// Index of the first frame with any wall contact, or K if none.
  std::size_t first_wall_contact = 0;
  /// Total momentum (sum of velocities) per frame, flattened K x D.
  std::vector<double> momentum;
};

SimulationRecord simulate_scenario_detailed(const ScenarioConfig& config, std::uint64_t seed);

/// Explicit initial condition, bypassing random placement. Used to probe the
/// integrator on hand-built configurations.
SimulationRecord simulate_from(const ScenarioConfig& config, const Tensor& initial_positions,
                               const Tensor& initial_velocities,
                               std::vector<std::uint8_t> material, double gravity);

struct SplitSizes {
  std::size_t train = 50;
  std::size_t valid = 5;
  std::size_t test = 5;
};

/// Writes <dir>/{train,valid,test}/NNNNN.gtraj and <dir>/manifest.json.
/// Trajectory i (counted across splits in train, valid, test order) uses
/// seed base_seed + i, so splits never share a seed.
void make_dataset(const ScenarioConfig& config, const SplitSizes& splits, std::uint64_t seed,
                  const std::filesystem::path& dir);

struct DatasetEntry {
  std::filesystem::path file;  // absolute
  std::uint64_t seed = 0;
};

struct Dataset {
  std::filesystem::path dir;
  ScenarioConfig scenario;
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> train, valid, test;

  const std::vector<DatasetEntry>& split(const std::string& name) const;
};

Dataset load_dataset_manifest(const std::filesystem::path& dir);

}  // namespace gns
