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

#include "gns/trajectory.hpp"

#include <zlib.h>

#include <cmath>

#include "binary_io.hpp"
#include "gns/error.hpp"

namespace gns {

namespace {

constexpr char kMagic[8] = {'G', 'N', 'S', 'T', 'R', 'A', 'J', '\0'};

std::uint32_t crc_of(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

ParticleState Trajectory::state_at(std::size_t t, std::size_t history) const {
  if (t < history || t >= num_steps()) {
    throw usage_error("state_at: frame " + std::to_string(t) + " needs " +
                      std::to_string(history) + " earlier frames within " +
                      std::to_string(num_steps()));
  }
  ParticleState s;
  s.position_history.assign(positions.begin() + static_cast<std::ptrdiff_t>(t - history),
                            positions.begin() + static_cast<std::ptrdiff_t>(t + 1));
  s.material = material;
  s.globals = globals[t];
  return s;
}

void Trajectory::validate() const {
  box.validate();
  if (num_steps() < 2) {
    throw data_error("trajectory needs K >= 2 frames, has " + std::to_string(num_steps()));
  }
  if (globals.size() != num_steps()) throw data_error("trajectory globals/frames count mismatch");
  for (const auto& g : globals) {
    if (g.size() != num_globals) throw data_error("trajectory globals row has wrong width");
  }
  for (const Tensor& f : positions) {
    if (f.rows() != num_particles() || f.cols() != dim()) {
      throw data_error("trajectory frame shape " + f.shape_string() + " does not match N=" +
                       std::to_string(num_particles()) + ", D=" + std::to_string(dim()));
    }
  }
  for (std::size_t i = 0; i < material.size(); ++i) {
    if (material[i] >= kNumMaterials) {
      throw data_error("unknown material id " + std::to_string(material[i]) + " for particle " +
                       std::to_string(i));
    }
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  traj.validate();
  const auto dim = static_cast<std::uint32_t>(traj.dim());
  detail::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 8));
  w.put<std::uint32_t>(kTrajectoryVersion);
  const std::size_t size_offset = w.size();
  w.put<std::uint32_t>(0);
  w.put<std::uint32_t>(dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.num_particles()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.num_steps()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.num_globals));
  w.put<double>(traj.dt);
  for (double v : traj.box.lower) w.put<double>(v);
  for (double v : traj.box.upper) w.put<double>(v);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.scenario.size()));
  w.put_bytes(traj.scenario);
  for (std::uint8_t m : traj.material) w.put<std::uint8_t>(m);
  for (const auto& row : traj.globals)
    for (double g : row) w.put<float>(static_cast<float>(g));
  const auto header_size = static_cast<std::uint32_t>(w.size() + 4);
  std::memcpy(w.bytes().data() + size_offset, &header_size, 4);
  w.put<std::uint32_t>(crc_of(w.bytes().data(), w.size()));
  for (const Tensor& f : traj.positions)
    for (double v : f.values()) w.put<float>(static_cast<float>(v));
  detail::write_file(path.string(), w.bytes());
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  const std::string name = "trajectory '" + path.string() + "'";
  const std::vector<char> bytes = detail::read_file(path.string());
  detail::ByteReader r(bytes.data(), bytes.size(), name);
  if (r.get_string(8) != std::string(kMagic, 8)) {
    throw data_error(name + ": bad magic at byte offset 0");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kTrajectoryVersion) {
    throw data_error(name + ": unsupported version " + std::to_string(version) +
                     " at byte offset 8");
  }
  const auto header_size = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  const auto n = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>();
  const auto g = r.get<std::uint32_t>();
  if (dim != 2 && dim != 3) {
    throw data_error(name + ": D=" + std::to_string(dim) + " at byte offset 16 (expected 2 or 3)");
  }
  if (k < 2) {
    throw data_error(name + ": K=" + std::to_string(k) + " at byte offset 24 (K >= 2 required)");
  }
  Trajectory t;
  t.dt = r.get<double>();
  t.box.lower.resize(dim);
  t.box.upper.resize(dim);
  for (auto& v : t.box.lower) v = r.get<double>();
  for (auto& v : t.box.upper) v = r.get<double>();
  const auto name_len = r.get<std::uint32_t>();
  t.scenario = r.get_string(name_len);
  t.material.resize(n);
  for (auto& m : t.material) m = r.get<std::uint8_t>();
  t.num_globals = g;
  t.globals.assign(k, std::vector<double>(g));
  for (auto& row : t.globals)
    for (double& v : row) v = static_cast<double>(r.get<float>());
  if (r.offset() + 4 != header_size) {
    throw data_error(name + ": header size field says " + std::to_string(header_size) +
                     " bytes, parsed " + std::to_string(r.offset() + 4));
  }
  const std::uint32_t expected_crc = crc_of(bytes.data(), r.offset());
  const std::size_t crc_offset = r.offset();
  const auto stored_crc = r.get<std::uint32_t>();
  if (stored_crc != expected_crc) {
    throw data_error(name + ": header checksum mismatch at byte offset " +
                     std::to_string(crc_offset));
  }
  const std::size_t payload = static_cast<std::size_t>(k) * n * dim * 4;
  if (r.remaining() != payload) {
    throw data_error(name + ": payload at byte offset " + std::to_string(r.offset()) +
                     " has " + std::to_string(r.remaining()) + " bytes, expected K*N*D*4 = " +
                     std::to_string(payload));
  }
  t.positions.reserve(k);
  for (std::uint32_t f = 0; f < k; ++f) {
    Tensor frame(n, dim);
    for (double& v : frame.values()) v = static_cast<double>(r.get<float>());
    t.positions.push_back(std::move(frame));
  }
  t.validate();
  return t;
}

void quantize_to_storage(Trajectory& traj) {
  for (Tensor& f : traj.positions)
    for (double& v : f.values()) v = static_cast<double>(static_cast<float>(v));
  for (auto& row : traj.globals)
    for (double& v : row) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace gns
