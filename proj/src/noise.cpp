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

#include "gns/noise.hpp"

#include <cmath>
#include <random>

#include "gns/error.hpp"

namespace gns {

const char* noise_type_name(NoiseType t) {
  switch (t) {
    case NoiseType::kRandomWalk: return "random_walk";
    case NoiseType::kOnlyLast: return "only_last";
    case NoiseType::kCorrelated: return "correlated";
    case NoiseType::kUncorrelated: return "uncorrelated";
  }
  return "unknown";
}

NoiseType parse_noise_type(const std::string& s) {
  if (s == "random_walk") return NoiseType::kRandomWalk;
  if (s == "only_last") return NoiseType::kOnlyLast;
  if (s == "correlated") return NoiseType::kCorrelated;
  if (s == "uncorrelated") return NoiseType::kUncorrelated;
  throw usage_error("unknown noise type '" + s +
                    "' (expected random_walk|only_last|correlated|uncorrelated)");
}

void NoiseConfig::validate() const {
  if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) throw usage_error("sigma_v must be >= 0");
  if (!(position_correction >= 0.0 && position_correction <= 1.0)) {
    throw usage_error("position_correction must lie in [0, 1]");
  }
}

CorruptedState corrupt(const ParticleState& clean, const NoiseConfig& config, Rng& rng) {
  config.validate();
  const std::size_t frames = clean.position_history.size();
  if (frames < 2) throw usage_error("corrupt: need at least two position frames");
  const std::size_t c = frames - 1;
  const std::size_t n = clean.num_particles(), dim = clean.dim();

  CorruptedState out{clean, Tensor(n, dim), Tensor(n, dim)};
  if (config.sigma_v == 0.0) return out;

  const double step_std = config.type == NoiseType::kRandomWalk
                              ? config.sigma_v / std::sqrt(static_cast<double>(c))
                              : config.sigma_v;
  std::normal_distribution<double> normal(0.0, 1.0);

  // Velocity noise per input step k = 1..C, drawn for every particle and
  // dimension in a fixed order so draws are reproducible.
  std::vector<Tensor> vel_noise(c, Tensor(n, dim));
  for (std::size_t i = 0; i < n; ++i) {
    if (is_boundary(clean.material[i])) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      switch (config.type) {
        case NoiseType::kRandomWalk: {
          double acc = 0.0;
          for (std::size_t k = 0; k < c; ++k) {
            acc += step_std * normal(rng);
            vel_noise[k](i, d) = acc;
          }
          break;
        }
        case NoiseType::kUncorrelated:
          for (std::size_t k = 0; k < c; ++k) vel_noise[k](i, d) = step_std * normal(rng);
          break;
        case NoiseType::kCorrelated: {
          const double v = step_std * normal(rng);
          for (std::size_t k = 0; k < c; ++k) vel_noise[k](i, d) = v;
          break;
        }
        case NoiseType::kOnlyLast:
          vel_noise[c - 1](i, d) = step_std * normal(rng);
          break;
      }
    }
  }

  // p~[0] = p[0]; p~[k] = p~[k-1] + v[k] + n[k], so velocities of the noisy
  // history are exactly the noisy velocities.
  auto& hist = out.state.position_history;
  const auto& src = clean.position_history;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_boundary(clean.material[i])) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      for (std::size_t k = 1; k < frames; ++k) {
        hist[k](i, d) = hist[k - 1](i, d) + ((src[k](i, d) - src[k - 1](i, d)) + vel_noise[k - 1](i, d));
      }
      out.velocity_noise(i, d) =
          (hist[c](i, d) - hist[c - 1](i, d)) - (src[c](i, d) - src[c - 1](i, d));
      out.position_noise(i, d) = hist[c](i, d) - src[c](i, d);
    }
  }
  return out;
}

Tensor adjust_target(const Tensor& true_accel, const Tensor& velocity_noise,
                     const Tensor& position_noise, double gamma) {
  if (!true_accel.same_shape(velocity_noise) || !true_accel.same_shape(position_noise)) {
    throw usage_error("adjust_target: shape mismatch");
  }
  Tensor out(true_accel.rows(), true_accel.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = true_accel[i] - velocity_noise[i] - gamma * position_noise[i];
  }
  return out;
}

}  // namespace gns
