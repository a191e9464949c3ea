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
#include <optional>
#include <string>
#include <vector>

#include "gns/model.hpp"
#include "gns/trajectory.hpp"

namespace gns {

struct EulerResult {
  Tensor position;
  Tensor velocity;
};

/// Semi-implicit Euler with unit step: v' = v + a, p' = p + v'.
EulerResult euler_update(const Tensor& position, const Tensor& velocity, const Tensor& accel);

/// Source of accelerations for rollouts and one-step evaluation.
class AccelPredictor {
 public:
  virtual ~AccelPredictor() = default;
  /// `frame` is the index (in `reference`) of the state's current frame.
  virtual Tensor predict(const ParticleState& state, const Trajectory& reference,
                         std::size_t frame) const = 0;
  /// A predictor that replays known positions returns them here; the Euler
  /// result is then replaced so replay is exact rather than exact up to
  /// rounding.
  virtual const Tensor* replay(const Trajectory&, std::size_t) const { return nullptr; }
};

class ModelPredictor final : public AccelPredictor {
 public:
  ModelPredictor(const GnsModel& model, const NormStats& stats) : model_(model), stats_(stats) {}
  Tensor predict(const ParticleState& state, const Trajectory& reference,
                 std::size_t frame) const override;

 private:
  const GnsModel& model_;
  const NormStats& stats_;
};

/// Returns the acceleration that moves the current state onto the reference
/// trajectory's next frame. A perfect predictor; used as an evaluation
/// oracle.
class GroundTruthPredictor final : public AccelPredictor {
 public:
  Tensor predict(const ParticleState& state, const Trajectory& reference,
                 std::size_t frame) const override;
  const Tensor* replay(const Trajectory& reference, std::size_t frame) const override {
    return &reference.positions[frame + 1];
  }
};

/// Predicts zero acceleration everywhere (constant-velocity persistence).
class ZeroAccelPredictor final : public AccelPredictor {
 public:
  Tensor predict(const ParticleState& state, const Trajectory& reference,
                 std::size_t frame) const override;
};

struct Rollout {
  /// Initial window (C+1 frames copied from the source) followed by the
  /// predicted frames.
  Trajectory trajectory;
  std::size_t initial_frames = 0;
  /// Frame index in the source trajectory where the window ends.
  std::size_t start_frame = 0;
  std::vector<double> step_seconds;
  /// First predicted step (1-based) with a blown-up coordinate, if any. The
  /// trajectory then holds the frames up to and including that step.
  std::optional<std::size_t> failed_step;
  std::string failure;

  std::size_t predicted_steps() const { return trajectory.num_steps() - initial_frames; }
};

struct RolloutOptions {
  std::size_t history = 5;  // C
  /// Window ends at this source frame; must be >= history.
  std::size_t start_frame = 5;
  std::size_t steps = 1;
  /// Abort when any |coordinate| exceeds this factor times the box diagonal.
  double blowup_factor = 10.0;
};

/// Autoregressive rollout. Boundary-material particles are pinned to their
/// positions in the last window frame. Globals for predicted frames come
/// from the source trajectory (last available row beyond its end).
Rollout rollout(const AccelPredictor& predictor, const Trajectory& source,
                const RolloutOptions& options);

Rollout rollout(const GnsModel& model, const NormStats& stats, const Trajectory& source,
                const RolloutOptions& options);

}  // namespace gns
