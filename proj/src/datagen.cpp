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

#include "gns/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "gns/error.hpp"
#include "gns/json_config.hpp"
#include "gns/random.hpp"

namespace gns {

const char* scenario_kind_name(ScenarioKind k) {
  return k == ScenarioKind::kGravityBounce ? "gravity-bounce" : "springs";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "gravity-bounce") return ScenarioKind::kGravityBounce;
  if (s == "springs") return ScenarioKind::kSprings;
  throw usage_error("unknown scenario '" + s + "' (expected gravity-bounce|springs)");
}

ScenarioConfig ScenarioConfig::defaults(ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  if (kind == ScenarioKind::kSprings) {
    c.min_particles = 81;
    c.max_particles = 100;
    c.repulsion_radius = 0.04;
    c.suggested_radius = 0.08;
  }
  return c;
}

void ScenarioConfig::validate() const {
  box.validate();
  if (box.dim() != dim) throw usage_error("scenario box dimension does not match dim");
  if (min_particles < 1 || max_particles < min_particles) {
    throw usage_error("scenario particle range must satisfy 1 <= min <= max");
  }
  if (num_steps < 2) throw usage_error("scenario num_steps must be >= 2");
  if (!(dt > 0.0)) throw usage_error("scenario dt must be positive");
  if (gravity < 0.0 || gravity_jitter < 0.0 || gravity_jitter >= 1.0) {
    throw usage_error("scenario gravity must be >= 0 with jitter in [0, 1)");
  }
  if (drag < 0.0 || restitution < 0.0 || restitution > 1.0) {
    throw usage_error("scenario drag must be >= 0 and restitution in [0, 1]");
  }
  if (repulsion_stiffness < 0.0 || !(repulsion_radius > 0.0)) {
    throw usage_error("scenario repulsion needs stiffness >= 0 and radius > 0");
  }
  if (!(suggested_radius > 0.0)) throw usage_error("scenario suggested_radius must be positive");
  if (kind == ScenarioKind::kSprings &&
      (!(spring_spacing > 0.0) || spring_link_factor < 1.0 || spring_stiffness < 0.0 ||
       spring_damping < 0.0)) {
    throw usage_error("springs scenario needs spacing > 0, link factor >= 1, stiffness/damping >= 0");
  }
}

namespace {

struct Bond {
  std::uint32_t i, j;
  double rest;
};

double distance(const Tensor& p, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < p.cols(); ++d) s += (p(i, d) - p(j, d)) * (p(i, d) - p(j, d));
  return std::sqrt(s);
}

class Integrator {
 public:
  Integrator(const ScenarioConfig& c, Tensor pos, Tensor vel, std::vector<std::uint8_t> material,
             double gravity)
      : c_(c), pos_(std::move(pos)), vel_(std::move(vel)), material_(std::move(material)),
        gravity_(gravity), dim_(c.dim) {
    if (c_.kind == ScenarioKind::kSprings) {
      const double link = c_.spring_link_factor * c_.spring_spacing * (1.0 + 1e-9);
      for (std::size_t i = 0; i < n(); ++i) {
        if (is_boundary(material_[i])) continue;
        for (std::size_t j = i + 1; j < n(); ++j) {
          if (is_boundary(material_[j])) continue;
          const double d = distance(pos_, i, j);
          if (d <= link) bonds_.push_back({static_cast<std::uint32_t>(i),
                                           static_cast<std::uint32_t>(j), d});
        }
      }
      bonded_.assign(n() * n(), 0);
      for (const Bond& b : bonds_) bonded_[b.i * n() + b.j] = bonded_[b.j * n() + b.i] = 1;
    }
  }

  std::size_t n() const { return material_.size(); }
  const Tensor& positions() const { return pos_; }
  const Tensor& velocities() const { return vel_; }
  bool touched_wall() const { return touched_wall_; }

  double energy() const {
    double e = 0.0;
    const std::size_t up = dim_ - 1;
    for (std::size_t i = 0; i < n(); ++i) {
      if (is_boundary(material_[i])) continue;
      for (std::size_t d = 0; d < dim_; ++d) e += 0.5 * vel_(i, d) * vel_(i, d);
      e += gravity_ * (pos_(i, up) - c_.box.lower[up]);
    }
    const double r = c_.repulsion_radius, k = c_.repulsion_stiffness;
    for (std::size_t i = 0; i < n(); ++i) {
      for (std::size_t j = i + 1; j < n(); ++j) {
        if (!repels(i, j)) continue;
        const double d = distance(pos_, i, j);
        if (d < r) e += 0.5 * k * r * (1.0 - d / r) * (1.0 - d / r);
      }
    }
    for (const Bond& b : bonds_) {
      const double d = distance(pos_, b.i, b.j);
      e += 0.5 * c_.spring_stiffness * (d - b.rest) * (d - b.rest);
    }
    return e;
  }

  void step() {
    Tensor acc(n(), dim_);
    const std::size_t up = dim_ - 1;
    for (std::size_t i = 0; i < n(); ++i) {
      if (is_boundary(material_[i])) continue;
      acc(i, up) -= gravity_;
      for (std::size_t d = 0; d < dim_; ++d) acc(i, d) -= c_.drag * vel_(i, d);
    }
    const double r = c_.repulsion_radius, k = c_.repulsion_stiffness;
    for (std::size_t i = 0; i < n(); ++i) {
      for (std::size_t j = i + 1; j < n(); ++j) {
        if (!repels(i, j)) continue;
        const double d = distance(pos_, i, j);
        if (d >= r || d == 0.0) continue;
        const double f = k * (1.0 - d / r);
        for (std::size_t a = 0; a < dim_; ++a) {
          const double dir = (pos_(i, a) - pos_(j, a)) / d;
          acc(i, a) += f * dir;
          acc(j, a) -= f * dir;
        }
      }
    }
    for (const Bond& b : bonds_) {
      const double d = distance(pos_, b.i, b.j);
      if (d == 0.0) continue;
      double rel_speed = 0.0;
      for (std::size_t a = 0; a < dim_; ++a) {
        rel_speed += (vel_(b.j, a) - vel_(b.i, a)) * (pos_(b.j, a) - pos_(b.i, a)) / d;
      }
      const double f = c_.spring_stiffness * (d - b.rest) + c_.spring_damping * rel_speed;
      for (std::size_t a = 0; a < dim_; ++a) {
        const double dir = (pos_(b.j, a) - pos_(b.i, a)) / d;
        acc(b.i, a) += f * dir;
        acc(b.j, a) -= f * dir;
      }
    }
    for (std::size_t i = 0; i < n(); ++i) {
      if (is_boundary(material_[i])) continue;
      for (std::size_t a = 0; a < dim_; ++a) {
        vel_(i, a) += c_.dt * acc(i, a);
        pos_(i, a) += c_.dt * vel_(i, a);
        const double lo = c_.box.lower[a], hi = c_.box.upper[a];
        if (pos_(i, a) < lo) {
          pos_(i, a) = lo + c_.restitution * (lo - pos_(i, a));
          vel_(i, a) = -c_.restitution * vel_(i, a);
          touched_wall_ = true;
        } else if (pos_(i, a) > hi) {
          pos_(i, a) = hi - c_.restitution * (pos_(i, a) - hi);
          vel_(i, a) = -c_.restitution * vel_(i, a);
          touched_wall_ = true;
        }
      }
    }
  }

 private:
  // Bonded pairs interact through the spring only.
  bool repels(std::size_t i, std::size_t j) const {
    if (is_boundary(material_[i]) && is_boundary(material_[j])) return false;
    return bonded_.empty() || !bonded_[i * n() + j];
  }

  const ScenarioConfig& c_;
  Tensor pos_, vel_;
  std::vector<std::uint8_t> material_;
  double gravity_;
  std::size_t dim_;
  std::vector<Bond> bonds_;
  std::vector<std::uint8_t> bonded_;
  bool touched_wall_ = false;
};

std::string constants_string(const ScenarioConfig& c) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "gravity=%g drag=%g restitution=%g repulsion_stiffness=%g repulsion_radius=%g "
                "spring_stiffness=%g spring_damping=%g dt=%g",
                c.gravity, c.drag, c.restitution, c.repulsion_stiffness, c.repulsion_radius,
                c.spring_stiffness, c.spring_damping, c.dt);
  return buf;
}

void add_boundary_particles(const ScenarioConfig& c, std::vector<std::vector<double>>& pts,
                            std::vector<std::uint8_t>& mats) {
  const std::size_t m = c.boundary_particles;
  if (m == 0) return;
  const std::size_t up = c.dim - 1;
  if (c.dim == 2) {
    for (std::size_t k = 0; k < m; ++k) {
      const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
      pts.push_back({c.box.lower[0] + t * (c.box.upper[0] - c.box.lower[0]), c.box.lower[up]});
      mats.push_back(static_cast<std::uint8_t>(Material::kBoundary));
    }
  } else {
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
    for (std::size_t k = 0; k < m; ++k) {
      const double tx = (static_cast<double>(k % side) + 0.5) / static_cast<double>(side);
      const double ty = (static_cast<double>(k / side) + 0.5) / static_cast<double>(side);
      pts.push_back({c.box.lower[0] + tx * (c.box.upper[0] - c.box.lower[0]),
                     c.box.lower[1] + ty * (c.box.upper[1] - c.box.lower[1]), c.box.lower[up]});
      mats.push_back(static_cast<std::uint8_t>(Material::kBoundary));
    }
  }
}

}  // namespace

SimulationRecord simulate_from(const ScenarioConfig& config, const Tensor& initial_positions,
                               const Tensor& initial_velocities,
                               std::vector<std::uint8_t> material, double gravity) {
  config.validate();
  if (!initial_positions.same_shape(initial_velocities) ||
      initial_positions.rows() != material.size() || initial_positions.cols() != config.dim) {
    throw usage_error("simulate_from: inconsistent initial condition shapes");
  }
  Integrator sim(config, initial_positions, initial_velocities, material, gravity);

  SimulationRecord rec;
  Trajectory& t = rec.trajectory;
  t.scenario = scenario_kind_name(config.kind);
  t.dt = config.dt;
  t.box = config.box;
  t.material = std::move(material);
  t.num_globals = 1;
  rec.first_wall_contact = config.num_steps;
  auto record = [&](std::size_t frame) {
    if (!sim.positions().all_finite() || !sim.velocities().all_finite()) {
      throw numeric_error("scenario integration produced non-finite values at frame " +
                          std::to_string(frame) + " (" + constants_string(config) + ")");
    }
    t.positions.push_back(sim.positions());
    t.globals.push_back({gravity});
    rec.energy.push_back(sim.energy());
    for (std::size_t d = 0; d < config.dim; ++d) {
      double m = 0.0;
      for (std::size_t i = 0; i < sim.n(); ++i) {
        if (!is_boundary(t.material[i])) m += sim.velocities()(i, d);
      }
      rec.momentum.push_back(m);
    }
    if (sim.touched_wall() && rec.first_wall_contact == config.num_steps) {
      rec.first_wall_contact = frame;
    }
  };
  record(0);
  for (std::size_t k = 1; k < config.num_steps; ++k) {
    sim.step();
    record(k);
  }
  return rec;
}

SimulationRecord simulate_scenario_detailed(const ScenarioConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(mix_seed(seed));
  std::uniform_int_distribution<std::size_t> count(c.min_particles, c.max_particles);
  const std::size_t n = count(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double gravity = c.gravity * (1.0 + c.gravity_jitter * (2.0 * unit(rng) - 1.0));
  const std::size_t up = c.dim - 1;

  std::vector<std::vector<double>> pts;
  std::vector<std::uint8_t> mats;
  std::vector<std::vector<double>> vels;
  auto extent = [&](std::size_t d) { return c.box.upper[d] - c.box.lower[d]; };

  if (c.kind == ScenarioKind::kGravityBounce) {
    // Random sequential placement in the upper part of the box.
    const double min_sep = 0.8 * c.repulsion_radius;
    for (std::size_t i = 0; i < n; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
        std::vector<double> p(c.dim);
        for (std::size_t d = 0; d < c.dim; ++d) {
          const double lo = d == up ? 0.25 : 0.05;
          p[d] = c.box.lower[d] + extent(d) * (lo + (0.95 - lo) * unit(rng));
        }
        placed = std::all_of(pts.begin(), pts.end(), [&](const std::vector<double>& q) {
          double s = 0.0;
          for (std::size_t d = 0; d < c.dim; ++d) s += (p[d] - q[d]) * (p[d] - q[d]);
          return s >= min_sep * min_sep;
        });
        if (placed) pts.push_back(std::move(p));
      }
      if (!placed) {
        throw usage_error("cannot place " + std::to_string(n) +
                          " particles without overlap; reduce the count or repulsion_radius");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(c.dim);
      for (double& x : v) x = c.initial_speed * (2.0 * unit(rng) - 1.0);
      vels.push_back(std::move(v));
      mats.push_back(static_cast<std::uint8_t>(Material::kWater));
    }
  } else {
    // Jittered lattice blob moving as one body.
    const auto side = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(c.dim))));
    const double span = c.spring_spacing * static_cast<double>(side - 1);
    std::vector<double> origin(c.dim), v0(c.dim);
    for (std::size_t d = 0; d < c.dim; ++d) {
      const double lo = d == up ? 0.45 : 0.05;
      const double free = std::max(0.0, (0.95 - lo) * extent(d) - span);
      origin[d] = c.box.lower[d] + lo * extent(d) + free * unit(rng);
      v0[d] = c.initial_speed * (2.0 * unit(rng) - 1.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(c.dim);
      std::size_t rest = i;
      for (std::size_t d = 0; d < c.dim; ++d) {
        const double jitter = 0.1 * c.spring_spacing * (2.0 * unit(rng) - 1.0);
        p[d] = origin[d] + c.spring_spacing * static_cast<double>(rest % side) + jitter;
        rest /= side;
      }
      pts.push_back(std::move(p));
      vels.push_back(v0);
      mats.push_back(static_cast<std::uint8_t>(Material::kGoop));
    }
  }
  add_boundary_particles(c, pts, mats);
  vels.resize(pts.size(), std::vector<double>(c.dim, 0.0));

  Tensor p0(pts.size(), c.dim), v0(pts.size(), c.dim);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t d = 0; d < c.dim; ++d) {
      p0(i, d) = pts[i][d];
      v0(i, d) = vels[i][d];
    }
  }
  return simulate_from(c, p0, v0, std::move(mats), gravity);
}

Trajectory simulate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  return simulate_scenario_detailed(config, seed).trajectory;
}

void make_dataset(const ScenarioConfig& config, const SplitSizes& splits, std::uint64_t seed,
                  const std::filesystem::path& dir) {
  config.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw data_error("cannot create dataset directory '" + dir.string() + "': " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "gns-dataset";
  manifest["version"] = 1;
  manifest["scenario"] = scenario_to_json(config);
  manifest["seed"] = seed;
  manifest["stats"] = nullptr;
  std::uint64_t index = 0;
  const std::pair<const char*, std::size_t> parts[] = {
      {"train", splits.train}, {"valid", splits.valid}, {"test", splits.test}};
  nlohmann::json split_json = nlohmann::json::object();
  for (const auto& [name, count] : parts) {
    fs::create_directories(dir / name, ec);
    if (ec) throw data_error("cannot create '" + (dir / name).string() + "': " + ec.message());
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i, ++index) {
      const std::uint64_t traj_seed = seed + index;
      char file[32];
      std::snprintf(file, sizeof(file), "%05zu.gtraj", i);
      const std::string rel = std::string(name) + "/" + file;
      const Trajectory t = simulate_scenario(config, traj_seed);
      write_trajectory(dir / rel, t);
      entries.push_back({{"file", rel},
                         {"seed", traj_seed},
                         {"num_particles", t.num_particles()},
                         {"num_steps", t.num_steps()}});
    }
    split_json[name] = std::move(entries);
  }
  manifest["splits"] = std::move(split_json);
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw data_error("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << "\n";
}

const std::vector<DatasetEntry>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw usage_error("unknown split '" + name + "' (expected train|valid|test)");
}

Dataset load_dataset_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw data_error("dataset manifest '" + path.string() + "' not found");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "gns-dataset") {
    throw data_error("'" + path.string() + "' is not a gns dataset manifest");
  }
  Dataset d;
  d.dir = std::filesystem::absolute(dir);
  d.scenario = scenario_from_json(j.at("scenario"));
  d.seed = j.value("seed", std::uint64_t{0});
  for (const char* name : {"train", "valid", "test"}) {
    auto& out = name == std::string("train") ? d.train : name == std::string("valid") ? d.valid : d.test;
    if (!j.contains("splits") || !j["splits"].contains(name)) continue;
    for (const auto& e : j["splits"][name]) {
      out.push_back({d.dir / e.at("file").get<std::string>(), e.value("seed", std::uint64_t{0})});
    }
  }
  return d;
}

}  // namespace gns
