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

#include <string>

#include "gns/features.hpp"
#include "gns/random.hpp"
#include "gns/tensor.hpp"

namespace gns {

enum class NoiseType { kRandomWalk, kOnlyLast, kCorrelated, kUncorrelated };

const char* noise_type_name(NoiseType t);
NoiseType parse_noise_type(const std::string& s);

struct NoiseConfig {
  NoiseType type = NoiseType::kRandomWalk;
  /// Std of the velocity noise at the most recent input step.
  double sigma_v = 3e-4;
  /// 0 corrects the target for velocity noise, 1 for position noise.
  double position_correction = 0.0;
  /// Rebuild connectivity from the noisy positions.
  bool reconnect_graph = false;

  void validate() const;
};

struct CorruptedState {
  ParticleState state;
  Tensor velocity_noise;  // noise on the most recent input velocity, N x D
  Tensor position_noise;  // noise on the most recent position, N x D
};

/// Perturbs the C input velocities of non-boundary particles and rebuilds
/// positions so that p[k] - p[k-1] equals the noisy velocity exactly. The
/// oldest position is left untouched; the most recent one carries the sum
/// of all velocity noise. Per-step stds are scaled so the last-step
/// velocity noise has std sigma_v for every noise type.
CorruptedState corrupt(const ParticleState& clean, const NoiseConfig& config, Rng& rng);

/// Training target for a corrupted input: true_accel - n_v - gamma * n_p.
/// gamma = 0 makes Euler integration from the noisy state hit the clean next
/// velocity; gamma = 1 makes it hit the clean next position.
Tensor adjust_target(const Tensor& true_accel, const Tensor& velocity_noise,
                     const Tensor& position_noise, double gamma);

}  // namespace gns
