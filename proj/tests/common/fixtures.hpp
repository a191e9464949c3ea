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

// Small scenes and configurations shared by tests.

#pragma once

#include <random>
#include <vector>

#include "common/oracles.hpp"
#include "gns/features.hpp"
#include "gns/model.hpp"
#include "gns/trajectory.hpp"

namespace gns::testing {

inline GnsConfig tiny_config() {
  GnsConfig c;
  c.latent_size = 8;
  c.mlp_hidden_size = 8;
  c.message_passing_steps = 2;
  c.history = 3;
  c.connectivity_radius = 0.2;
  c.num_globals = 1;
  return c;
}

struct Scene {
  ParticleState state;
  Box box;
};

/// Particles uniformly in [lo, hi]^D with small random velocities.
inline Scene random_scene(std::size_t n, const GnsConfig& c, std::uint64_t seed, double lo = 0.05,
                          double hi = 0.95) {
  std::mt19937_64 rng(seed);
  Scene s;
  s.box = Box{std::vector<double>(c.dim, 0.0), std::vector<double>(c.dim, 1.0)};
  Tensor p = random_tensor(n, c.dim, rng, lo, hi);
  const Tensor v = random_tensor(n, c.dim, rng, -0.003, 0.003);
  std::vector<Tensor> frames(c.history + 1);
  frames.back() = p;
  for (std::size_t k = c.history; k-- > 0;) {
    frames[k] = frames[k + 1];
    for (std::size_t i = 0; i < p.size(); ++i) frames[k][i] -= v[i] * (1.0 + 0.1 * static_cast<double>(k));
  }
  s.state.position_history = std::move(frames);
  s.state.material.assign(n, 0);
  for (std::size_t i = 0; i < n; i += 4) s.state.material[i] = static_cast<std::uint8_t>(i % 4);
  s.state.globals.assign(c.num_globals, 0.7);
  return s;
}

inline ParticleState permute_state(const ParticleState& s, const std::vector<std::size_t>& perm) {
  ParticleState out = s;
  for (std::size_t k = 0; k < s.position_history.size(); ++k)
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t d = 0; d < s.dim(); ++d)
        out.position_history[k](i, d) = s.position_history[k](perm[i], d);
  for (std::size_t i = 0; i < perm.size(); ++i) out.material[i] = s.material[perm[i]];
  return out;
}

inline ParticleState translate_state(const ParticleState& s, const std::vector<double>& shift) {
  ParticleState out = s;
  for (Tensor& f : out.position_history)
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (std::size_t d = 0; d < f.cols(); ++d) f(i, d) += shift[d];
  return out;
}

/// Particles on a horizontal line, `spacing` apart, drifting slowly.
inline ParticleState chain_state(std::size_t n, double spacing, const GnsConfig& c) {
  ParticleState s;
  for (std::size_t k = 0; k <= c.history; ++k) {
    Tensor f(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      f(i, 0) = 0.2 + spacing * static_cast<double>(i) + 0.001 * static_cast<double>(k);
      f(i, 1) = 0.5 - 0.0005 * static_cast<double>(k * (i % 3));
    }
    s.position_history.push_back(f);
  }
  s.material.assign(n, 0);
  s.globals.assign(c.num_globals, 0.5);
  return s;
}

/// Builds a trajectory from explicit frames with one global per frame.
inline Trajectory make_trajectory(std::vector<Tensor> frames, std::vector<std::uint8_t> material) {
  Trajectory t;
  t.scenario = "test";
  t.dt = 0.01;
  const std::size_t dim = frames.front().cols();
  t.box = Box{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  t.material = std::move(material);
  t.num_globals = 1;
  t.globals.assign(frames.size(), std::vector<double>{1.0});
  t.positions = std::move(frames);
  return t;
}

}  // namespace gns::testing
