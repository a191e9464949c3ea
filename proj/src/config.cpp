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

#include <fstream>
#include <set>
#include <sstream>

#include "gns/error.hpp"
#include "gns/json_config.hpp"

namespace gns {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and complains about anything left over.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw usage_error(path_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw usage_error(path_ + "." + key + ": wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw usage_error(path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void get_enum(ObjectReader& r, const char* key, Enum& out, Parse parse) {
  std::string s;
  r.get(key, s);
  if (!s.empty()) out = parse(s);
}

}  // namespace

json scenario_to_json(const ScenarioConfig& c) {
  return json{{"kind", scenario_kind_name(c.kind)},
              {"dim", c.dim},
              {"box_lower", c.box.lower},
              {"box_upper", c.box.upper},
              {"min_particles", c.min_particles},
              {"max_particles", c.max_particles},
              {"num_steps", c.num_steps},
              {"dt", c.dt},
              {"gravity", c.gravity},
              {"gravity_jitter", c.gravity_jitter},
              {"drag", c.drag},
              {"restitution", c.restitution},
              {"repulsion_stiffness", c.repulsion_stiffness},
              {"repulsion_radius", c.repulsion_radius},
              {"initial_speed", c.initial_speed},
              {"spring_spacing", c.spring_spacing},
              {"spring_link_factor", c.spring_link_factor},
              {"spring_stiffness", c.spring_stiffness},
              {"spring_damping", c.spring_damping},
              {"boundary_particles", c.boundary_particles},
              {"suggested_radius", c.suggested_radius}};
}

ScenarioConfig scenario_from_json(const json& j) {
  ObjectReader r(j, "scenario");
  // The kind picks the defaults the remaining keys override.
  ScenarioConfig c;
  get_enum(r, "kind", c.kind, parse_scenario_kind);
  c = ScenarioConfig::defaults(c.kind);
  r.get("dim", c.dim);
  if (c.box.dim() != c.dim) {
    c.box.lower.assign(c.dim, 0.0);
    c.box.upper.assign(c.dim, 1.0);
  }
  r.get("box_lower", c.box.lower);
  r.get("box_upper", c.box.upper);
  r.get("min_particles", c.min_particles);
  r.get("max_particles", c.max_particles);
  r.get("num_steps", c.num_steps);
  r.get("dt", c.dt);
  r.get("gravity", c.gravity);
  r.get("gravity_jitter", c.gravity_jitter);
  r.get("drag", c.drag);
  r.get("restitution", c.restitution);
  r.get("repulsion_stiffness", c.repulsion_stiffness);
  r.get("repulsion_radius", c.repulsion_radius);
  r.get("initial_speed", c.initial_speed);
  r.get("spring_spacing", c.spring_spacing);
  r.get("spring_link_factor", c.spring_link_factor);
  r.get("spring_stiffness", c.spring_stiffness);
  r.get("spring_damping", c.spring_damping);
  r.get("boundary_particles", c.boundary_particles);
  r.get("suggested_radius", c.suggested_radius);
  r.finish();
  c.validate();
  return c;
}

json gns_config_to_json(const GnsConfig& c) {
  return json{{"latent_size", c.latent_size},
              {"mlp_hidden_size", c.mlp_hidden_size},
              {"mlp_hidden_layers", c.mlp_hidden_layers},
              {"message_passing_steps", c.message_passing_steps},
              {"shared_processor_params", c.shared_processor_params},
              {"encoder_variant", encoder_variant_name(c.encoder_variant)},
              {"use_layer_norm", c.use_layer_norm},
              {"update_edge_latents", c.update_edge_latents},
              {"history", c.history},
              {"connectivity_radius", c.connectivity_radius},
              {"include_self_edges", c.include_self_edges},
              {"dim", c.dim},
              {"num_globals", c.num_globals}};
}

GnsConfig gns_config_from_json(const json& j) { return gns_config_from_json(j, GnsConfig{}); }

GnsConfig gns_config_from_json(const json& j, const GnsConfig& base) {
  ObjectReader r(j, "model");
  GnsConfig c = base;
  r.get("latent_size", c.latent_size);
  r.get("mlp_hidden_size", c.mlp_hidden_size);
  r.get("mlp_hidden_layers", c.mlp_hidden_layers);
  r.get("message_passing_steps", c.message_passing_steps);
  r.get("shared_processor_params", c.shared_processor_params);
  get_enum(r, "encoder_variant", c.encoder_variant, parse_encoder_variant);
  r.get("use_layer_norm", c.use_layer_norm);
  r.get("update_edge_latents", c.update_edge_latents);
  r.get("history", c.history);
  r.get("connectivity_radius", c.connectivity_radius);
  r.get("include_self_edges", c.include_self_edges);
  r.get("dim", c.dim);
  r.get("num_globals", c.num_globals);
  r.finish();
  c.validate();
  return c;
}

json noise_config_to_json(const NoiseConfig& c) {
  return json{{"type", noise_type_name(c.type)},
              {"sigma_v", c.sigma_v},
              {"position_correction", c.position_correction},
              {"reconnect_graph", c.reconnect_graph}};
}

NoiseConfig noise_config_from_json(const json& j) { return noise_config_from_json(j, NoiseConfig{}); }

NoiseConfig noise_config_from_json(const json& j, const NoiseConfig& base) {
  ObjectReader r(j, "train.noise");
  NoiseConfig c = base;
  get_enum(r, "type", c.type, parse_noise_type);
  r.get("sigma_v", c.sigma_v);
  r.get("position_correction", c.position_correction);
  r.get("reconnect_graph", c.reconnect_graph);
  r.finish();
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"max_steps", c.max_steps},
              {"lr_start", c.lr_start},
              {"lr_final", c.lr_final},
              {"lr_decay_steps", c.lr_decay_steps},
              {"shuffle_buffer", c.shuffle_buffer},
              {"noise", noise_config_to_json(c.noise)},
              {"eval_every", c.eval_every},
              {"num_valid_trajectories", c.num_valid_trajectories},
              {"log_every", c.log_every},
              {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) { return train_config_from_json(j, TrainConfig{}); }

TrainConfig train_config_from_json(const json& j, const TrainConfig& base) {
  ObjectReader r(j, "train");
  TrainConfig c = base;
  r.get("batch_size", c.batch_size);
  r.get("max_steps", c.max_steps);
  r.get("lr_start", c.lr_start);
  r.get("lr_final", c.lr_final);
  r.get("lr_decay_steps", c.lr_decay_steps);
  r.get("shuffle_buffer", c.shuffle_buffer);
  if (const json* n = r.child("noise")) c.noise = noise_config_from_json(*n, c.noise);
  r.get("eval_every", c.eval_every);
  r.get("num_valid_trajectories", c.num_valid_trajectories);
  r.get("log_every", c.log_every);
  r.get("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

json metric_options_to_json(const MetricOptions& c) {
  return json{{"mse", c.mse},
              {"ot", c.ot},
              {"mmd", c.mmd},
              {"mmd_sigma", c.mmd_sigma},
              {"sinkhorn_eps_factor", c.sinkhorn_eps_factor},
              {"sinkhorn_iterations", c.sinkhorn_iterations},
              {"max_points", c.max_points},
              {"distribution_stride", c.distribution_stride},
              {"rollout_steps", c.rollout_steps},
              {"seed", c.seed}};
}

MetricOptions metric_options_from_json(const json& j) {
  ObjectReader r(j, "metrics");
  MetricOptions c;
  r.get("mse", c.mse);
  r.get("ot", c.ot);
  r.get("mmd", c.mmd);
  r.get("mmd_sigma", c.mmd_sigma);
  r.get("sinkhorn_eps_factor", c.sinkhorn_eps_factor);
  r.get("sinkhorn_iterations", c.sinkhorn_iterations);
  r.get("max_points", c.max_points);
  r.get("distribution_stride", c.distribution_stride);
  r.get("rollout_steps", c.rollout_steps);
  r.get("seed", c.seed);
  r.finish();
  if (!(c.mmd_sigma > 0.0)) throw usage_error("metrics.mmd_sigma must be positive");
  if (!(c.sinkhorn_eps_factor > 0.0)) throw usage_error("metrics.sinkhorn_eps_factor must be positive");
  if (c.sinkhorn_iterations == 0) throw usage_error("metrics.sinkhorn_iterations must be positive");
  if (c.max_points == 0) throw usage_error("metrics.max_points must be positive");
  return c;
}

json splits_to_json(const SplitSizes& s) {
  return json{{"train", s.train}, {"valid", s.valid}, {"test", s.test}};
}

SplitSizes splits_from_json(const json& j) {
  ObjectReader r(j, "splits");
  SplitSizes s;
  r.get("train", s.train);
  r.get("valid", s.valid);
  r.get("test", s.test);
  r.finish();
  return s;
}

GnsConfig desk_model_defaults() {
  GnsConfig c;
  c.latent_size = 32;
  c.mlp_hidden_size = 32;
  c.message_passing_steps = 5;
  c.connectivity_radius = 0.1;
  c.num_globals = 1;
  return c;
}

TrainConfig desk_train_defaults() {
  TrainConfig c;
  c.lr_start = 3e-4;
  c.noise.sigma_v = 3e-4;
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return json{{"seed", c.seed},
              {"scenario", scenario_to_json(c.scenario)},
              {"splits", splits_to_json(c.splits)},
              {"model", gns_config_to_json(c.model)},
              {"train", train_config_to_json(c.train)},
              {"metrics", metric_options_to_json(c.metrics)}};
}

RunConfig run_config_from_json(const json& j) {
  ObjectReader r(j, "config");
  RunConfig c;
  r.get("seed", c.seed);
  if (const json* s = r.child("scenario")) c.scenario = scenario_from_json(*s);
  if (const json* s = r.child("splits")) c.splits = splits_from_json(*s);
  if (const json* s = r.child("model")) c.model = gns_config_from_json(*s, c.model);
  if (const json* s = r.child("train")) c.train = train_config_from_json(*s, c.train);
  if (const json* s = r.child("metrics")) c.metrics = metric_options_from_json(*s);
  r.finish();
  return c;
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw usage_error(what + " is not valid JSON: " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("config file '" + path.string() + "' cannot be opened");
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(parse_json_text(ss.str(), "config file '" + path.string() + "'"));
}

}  // namespace gns
