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

#include "gns/gns.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "gns/commands.hpp"
#include "gns/error.hpp"
#include "gns/model.hpp"
#include "gns/train.hpp"
#include "gns/trajectory.hpp"

struct gns_config {
  gns::cmd::ConfigSource source;
};

struct gns_trajectory {
  gns::Trajectory traj;
};

struct gns_model {
  gns::TrainingState state;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
gns_status guarded(F&& f) {
  try {
    f();
    return GNS_OK;
  } catch (const gns::Error& e) {
    g_last_error = e.what();
    return static_cast<gns_status>(static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GNS_ERROR_NUMERIC;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return GNS_ERROR_DATA;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return GNS_ERROR_DATA;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw gns::usage_error(std::string(name) + " must not be NULL");
}

gns::cmd::Progress bridge(gns_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

std::vector<std::string> split_list(const char* list) {
  std::vector<std::string> out;
  std::istringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const gns::cmd::ConfigSource& source_of(const gns_config* c) {
  static const gns::cmd::ConfigSource empty;
  return c ? c->source : empty;
}

}  // namespace

extern "C" {

const char* gns_version(void) { return "0.1.0"; }

const char* gns_last_error(void) { return g_last_error.c_str(); }

void gns_string_free(char* s) { std::free(s); }

gns_status gns_config_new(gns_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new gns_config();
  });
}

gns_status gns_config_load(const char* path, gns_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<gns_config>();
    c->source = gns::cmd::ConfigSource::from_file(path);
    *out = c.release();
  });
}

gns_status gns_config_set_json(gns_config* config, const char* key, const char* json_value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(json_value, "json_value");
    config->source.set(key, gns::parse_json_text(json_value, std::string("value for '") + key + "'"));
  });
}

gns_status gns_config_set_string(gns_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->source.set(key, nlohmann::json(std::string(value)));
  });
}

gns_status gns_config_resolved(const gns_config* config, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    *out_json = dup_string(gns::run_config_to_json(source_of(config).resolve()).dump(2));
  });
}

void gns_config_free(gns_config* config) { delete config; }

gns_status gns_gen(const gns_config* config, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    gns::cmd::gen(source_of(config), out_dir);
  });
}

gns_status gns_train(const gns_config* config, const char* dataset, const char* out_dir,
                     const char* resume, gns_progress_fn progress, void* user) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out_dir, "out_dir");
    gns::cmd::TrainArgs a;
    a.dataset = dataset;
    a.out = out_dir;
    if (resume) a.resume = std::filesystem::path(resume);
    a.progress = bridge(progress, user);
    gns::cmd::train(source_of(config), a);
  });
}

gns_status gns_rollout(const char* checkpoint, const char* dataset, const char* split,
                       size_t traj_index, size_t steps, const char* out, const char* timings_csv) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(dataset, "dataset");
    require(out, "out");
    gns::cmd::RolloutArgs a;
    a.checkpoint = checkpoint;
    a.dataset = dataset;
    if (split) a.split = split;
    a.traj_index = traj_index;
    a.steps = steps;
    a.out = out;
    if (timings_csv) a.timings_csv = std::filesystem::path(timings_csv);
    gns::cmd::rollout(a);
  });
}

gns_status gns_eval(const gns_config* config, const char* checkpoint, const char* dataset,
                    const char* split, const char* metrics, const char* out_dir) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out_dir, "out_dir");
    gns::cmd::EvalArgs a;
    if (checkpoint) a.checkpoint = std::filesystem::path(checkpoint);
    a.dataset = dataset;
    if (split) a.split = split;
    if (metrics) a.metrics = metrics;
    a.out = out_dir;
    gns::cmd::eval(source_of(config), a);
  });
}

gns_status gns_ablate(const gns_config* config, const char* dataset, const char* axis,
                      const char* values, size_t seeds, const char* out_dir,
                      gns_progress_fn progress, void* user) {
  return guarded([&] {
    require(dataset, "dataset");
    require(axis, "axis");
    require(values, "values");
    require(out_dir, "out_dir");
    gns::cmd::AblateArgs a;
    a.dataset = dataset;
    a.axis = axis;
    a.values = split_list(values);
    a.seeds = seeds;
    a.out = out_dir;
    a.progress = bridge(progress, user);
    gns::cmd::ablate(source_of(config), a);
  });
}

gns_status gns_plot(const char* in_csv, const char* out) {
  return guarded([&] {
    require(in_csv, "in_csv");
    require(out, "out");
    gns::cmd::plot({in_csv, out});
  });
}

gns_status gns_trajectory_read(const char* path, gns_trajectory** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gns_trajectory{gns::read_trajectory(path)};
  });
}

gns_status gns_trajectory_shape(const gns_trajectory* t, size_t* num_steps, size_t* num_particles,
                                size_t* dim, size_t* num_globals) {
  return guarded([&] {
    require(t, "trajectory");
    if (num_steps) *num_steps = t->traj.num_steps();
    if (num_particles) *num_particles = t->traj.num_particles();
    if (dim) *dim = t->traj.dim();
    if (num_globals) *num_globals = t->traj.num_globals;
  });
}

gns_status gns_trajectory_frame(const gns_trajectory* t, size_t frame, double* out, size_t out_len) {
  return guarded([&] {
    require(t, "trajectory");
    require(out, "out");
    if (frame >= t->traj.num_steps()) {
      throw gns::usage_error("frame " + std::to_string(frame) + " out of range (K=" +
                             std::to_string(t->traj.num_steps()) + ")");
    }
    const gns::Tensor& p = t->traj.positions[frame];
    if (out_len != p.size()) {
      throw gns::usage_error("output buffer holds " + std::to_string(out_len) + " values; frame has " +
                             std::to_string(p.size()));
    }
    std::memcpy(out, p.data(), p.size() * sizeof(double));
  });
}

gns_status gns_trajectory_materials(const gns_trajectory* t, uint8_t* out, size_t out_len) {
  return guarded([&] {
    require(t, "trajectory");
    require(out, "out");
    if (out_len != t->traj.material.size()) {
      throw gns::usage_error("output buffer holds " + std::to_string(out_len) + " ids; trajectory has " +
                             std::to_string(t->traj.material.size()));
    }
    std::memcpy(out, t->traj.material.data(), out_len);
  });
}

void gns_trajectory_free(gns_trajectory* t) { delete t; }

gns_status gns_model_load(const char* checkpoint, gns_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = new gns_model{gns::load_checkpoint(checkpoint)};
  });
}

gns_status gns_model_info(const gns_model* m, size_t* dim, size_t* history, size_t* num_globals,
                          size_t* num_parameters) {
  return guarded([&] {
    require(m, "model");
    const gns::GnsConfig& c = m->state.model.config();
    if (dim) *dim = c.dim;
    if (history) *history = c.history;
    if (num_globals) *num_globals = c.num_globals;
    if (num_parameters) *num_parameters = m->state.model.params().total_elements();
  });
}

gns_status gns_model_predict(const gns_model* m, const double* positions, size_t num_particles,
                             const uint8_t* material, const double* globals,
                             const double* box_lower, const double* box_upper, double* accel_out) {
  return guarded([&] {
    require(m, "model");
    require(positions, "positions");
    require(material, "material");
    require(box_lower, "box_lower");
    require(box_upper, "box_upper");
    require(accel_out, "accel_out");
    const gns::GnsConfig& c = m->state.model.config();
    if (c.num_globals > 0) require(globals, "globals");
    const std::size_t frame = num_particles * c.dim;
    gns::ParticleState s;
    for (std::size_t k = 0; k <= c.history; ++k) {
      s.position_history.emplace_back(
          num_particles, c.dim,
          std::vector<double>(positions + k * frame, positions + (k + 1) * frame));
    }
    s.material.assign(material, material + num_particles);
    if (c.num_globals > 0) s.globals.assign(globals, globals + c.num_globals);
    gns::Box box{{box_lower, box_lower + c.dim}, {box_upper, box_upper + c.dim}};
    box.validate();
    const gns::Tensor a = gns::predict_accel(m->state.model, m->state.stats, s, box);
    std::memcpy(accel_out, a.data(), a.size() * sizeof(double));
  });
}

void gns_model_free(gns_model* m) { delete m; }

}  // extern "C"
