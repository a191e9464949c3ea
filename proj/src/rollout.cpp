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

#include "gns/rollout.hpp"

#include <chrono>
#include <cmath>

#include "gns/error.hpp"

namespace gns {

EulerResult euler_update(const Tensor& position, const Tensor& velocity, const Tensor& accel) {
  if (!position.same_shape(velocity) || !position.same_shape(accel)) {
    throw usage_error("euler_update: shape mismatch " + position.shape_string() + ", " +
                      velocity.shape_string() + ", " + accel.shape_string());
  }
  EulerResult r{Tensor(position.rows(), position.cols()), Tensor(position.rows(), position.cols())};
  for (std::size_t i = 0; i < position.size(); ++i) {
    r.velocity[i] = velocity[i] + accel[i];
    r.position[i] = position[i] + r.velocity[i];
  }
  return r;
}

Tensor ModelPredictor::predict(const ParticleState& state, const Trajectory& reference,
                               std::size_t) const {
  return predict_accel(model_, stats_, state, reference.box);
}

Tensor GroundTruthPredictor::predict(const ParticleState& state, const Trajectory& reference,
                                     std::size_t frame) const {
  if (frame + 1 >= reference.num_steps()) {
    throw usage_error("ground-truth predictor has no frame after " + std::to_string(frame));
  }
  const auto& h = state.position_history;
  return finite_diff_accel(h[h.size() - 2], h.back(), reference.positions[frame + 1]);
}

Tensor ZeroAccelPredictor::predict(const ParticleState& state, const Trajectory&,
                                   std::size_t) const {
  return Tensor(state.num_particles(), state.dim(), 0.0);
}

Rollout rollout(const AccelPredictor& predictor, const Trajectory& source,
                const RolloutOptions& options) {
  const std::size_t c = options.history;
  if (options.steps < 1) throw usage_error("rollout needs at least one step");
  if (options.start_frame < c || options.start_frame >= source.num_steps()) {
    throw usage_error("rollout start frame " + std::to_string(options.start_frame) +
                      " needs C=" + std::to_string(c) + " earlier frames within " +
                      std::to_string(source.num_steps()));
  }
  Rollout out;
  out.start_frame = options.start_frame;
  out.initial_frames = c + 1;
  Trajectory& t = out.trajectory;
  t.scenario = source.scenario;
  t.dt = source.dt;
  t.box = source.box;
  t.material = source.material;
  t.num_globals = source.num_globals;
  for (std::size_t f = options.start_frame - c; f <= options.start_frame; ++f) {
    t.positions.push_back(source.positions[f]);
    t.globals.push_back(source.globals[f]);
  }

  ParticleState state = source.state_at(options.start_frame, c);
  const Tensor pinned = state.current();
  const double limit = options.blowup_factor * source.box.diagonal();
  const std::size_t n = state.num_particles(), dim = state.dim();

  for (std::size_t k = 1; k <= options.steps; ++k) {
    const std::size_t frame = options.start_frame + k - 1;
    const auto t0 = std::chrono::steady_clock::now();
    Tensor accel = predictor.predict(state, source, frame);
    const auto& h = state.position_history;
    Tensor velocity(n, dim);
    for (std::size_t j = 0; j < velocity.size(); ++j) velocity[j] = h.back()[j] - h[h.size() - 2][j];
    EulerResult next = euler_update(h.back(), velocity, accel);
    if (const Tensor* exact = predictor.replay(source, frame)) next.position = *exact;
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_boundary(state.material[i])) continue;
      for (std::size_t d = 0; d < dim; ++d) next.position(i, d) = pinned(i, d);
    }
    out.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    std::size_t bad = n;
    for (std::size_t i = 0; i < n && bad == n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = next.position(i, d);
        if (!std::isfinite(v) || std::abs(v) > limit) {
          bad = i;
          break;
        }
      }
    }
    const std::size_t next_frame = std::min(frame + 1, source.num_steps() - 1);
    t.positions.push_back(next.position);
    t.globals.push_back(source.globals[next_frame]);
    if (bad != n) {
      out.failed_step = k;
      out.failure = "rollout blew up at step " + std::to_string(k) + ": particle " +
                    std::to_string(bad) + " left |p| <= " + std::to_string(limit);
      break;
    }
    state.position_history.erase(state.position_history.begin());
    state.position_history.push_back(std::move(next.position));
    state.globals = source.globals[next_frame];
  }
  return out;
}

Rollout rollout(const GnsModel& model, const NormStats& stats, const Trajectory& source,
                const RolloutOptions& options) {
  return rollout(ModelPredictor(model, stats), source, options);
}

}  // namespace gns
