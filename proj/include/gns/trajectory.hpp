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

#include "gns/features.hpp"
#include "gns/tensor.hpp"

namespace gns {

/// K frames of N x D particle positions plus per-particle materials and
/// per-step globals. Also the on-disk interchange unit (see
/// write_trajectory).
struct Trajectory {
  std::string scenario;
  double dt = 1.0;
  Box box;
  std::vector<std::uint8_t> material;
  std::size_t num_globals = 0;
  std::vector<Tensor> positions;             // K frames, each N x D
  std::vector<std::vector<double>> globals;  // K rows of num_globals

  std::size_t num_steps() const { return positions.size(); }
  std::size_t num_particles() const { return material.size(); }
  std::size_t dim() const { return box.dim(); }

  /// Window of C+1 frames ending at frame `t` (inclusive), with the globals
  /// of frame `t`.
  ParticleState state_at(std::size_t t, std::size_t history) const;

  void validate() const;
};

inline constexpr std::uint32_t kTrajectoryVersion = 1;

/// Binary layout (little-endian):
///   char[8]  magic "GNSTRAJ\0"
///   u32      version
///   u32      header size in bytes (through the checksum)
///   u32 D, u32 N, u32 K, u32 G
///   f64      dt
///   f64[D]   box lower, f64[D] box upper
///   u32      scenario name length, then the name bytes
///   u8[N]    material ids
///   f32[K*G] globals, frame-major
///   u32      CRC-32 of all preceding header bytes
///   f32[K*N*D] positions, frame-major then particle then axis
/// Positions are rounded to 32-bit on write.
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& path);

/// Rounds every stored real to 32-bit precision in place, so an in-memory
/// trajectory matches what a write/read round trip would produce.
void quantize_to_storage(Trajectory& traj);

}  // namespace gns
