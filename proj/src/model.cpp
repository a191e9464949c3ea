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

#include "gns/model.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "gns/error.hpp"

namespace gns {

void GnsConfig::validate() const {
  if (latent_size < 1 || mlp_hidden_size < 1) throw usage_error("latent and MLP sizes must be >= 1");
  if (message_passing_steps < 1) throw usage_error("message_passing_steps must be >= 1");
  if (history < 1) throw usage_error("history (C) must be >= 1");
  if (!(connectivity_radius > 0.0)) throw usage_error("connectivity_radius must be positive");
  if (dim != 2 && dim != 3) throw usage_error("dim must be 2 or 3");
}

namespace {

std::string block_prefix(const GnsConfig& c, std::size_t m) {
  if (c.shared_processor_params) return "processor/shared";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "processor/block_%02zu", m);
  return buf;
}

std::size_t mlp_count(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out,
                      bool ln) {
  std::size_t n = 0;
  std::size_t prev = in;
  for (std::size_t l = 0; l < layers; ++l) {
    n += prev * hidden + hidden;
    prev = hidden;
  }
  n += prev * out + out;
  if (ln) n += 2 * out;
  return n;
}

}  // namespace

GnsModel::GnsModel(const GnsConfig& config, std::uint64_t seed)
    : config_(config), layout_(config.layout()) {
  config_.validate();
  Rng rng(seed);
  declare(&rng);
}

GnsModel::GnsModel(const GnsConfig& config, const ParamStore& params)
    : config_(config), layout_(config.layout()) {
  config_.validate();
  declare(nullptr);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor* src = params.find(params_.name(i));
    if (!src) throw data_error("checkpoint is missing parameter '" + params_.name(i) + "'");
    if (!src->same_shape(params_.value(i))) {
      throw data_error("checkpoint parameter '" + params_.name(i) + "' has shape " +
                       src->shape_string() + ", config implies " +
                       params_.value(i).shape_string());
    }
    params_.value(i) = *src;
  }
}

GnsModel::Mlp GnsModel::declare_mlp(const std::string& prefix, std::size_t in, std::size_t out,
                                    bool layer_norm, Rng* rng) {
  Mlp mlp;
  std::size_t prev = in;
  const std::size_t layers = config_.mlp_hidden_layers + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t width = l + 1 == layers ? out : config_.mlp_hidden_size;
    Tensor w(prev, width);
    if (rng) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& v : w.values()) v = u(*rng);
    }
    const std::string layer = prefix + "/linear_" + std::to_string(l);
    mlp.weights.push_back(params_.size());
    params_.add(layer + "/weight", std::move(w));
    mlp.biases.push_back(params_.size());
    params_.add(layer + "/bias", Tensor(1, width, 0.0));
    prev = width;
  }
  if (layer_norm) {
    mlp.layer_norm = true;
    mlp.ln_gain = params_.size();
    params_.add(prefix + "/layer_norm/gain", Tensor(1, out, 1.0));
    mlp.ln_bias = params_.size();
    params_.add(prefix + "/layer_norm/bias", Tensor(1, out, 0.0));
  }
  return mlp;
}

void GnsModel::declare(Rng* rng) {
  const std::size_t L = config_.latent_size;
  const bool ln = config_.use_layer_norm;

  Tensor table(kNumMaterials, kMaterialEmbeddingSize);
  if (rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : table.values()) v = u(*rng);
  }
  embedding_ = params_.size();
  params_.add("material_embedding", std::move(table));

  encoder_node_ = declare_mlp("encoder/node", layout_.node_cols(), L, ln, rng);
  if (config_.encoder_variant == EncoderVariant::kRelative) {
    encoder_edge_ = declare_mlp("encoder/edge", layout_.edge_cols(), L, ln, rng);
  } else {
    Tensor bias(1, L);
    if (rng) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (double& v : bias.values()) v = u(*rng);
    }
    edge_bias_ = params_.size();
    params_.add("encoder/edge_bias", std::move(bias));
  }

  const std::size_t blocks = config_.shared_processor_params ? 1 : config_.message_passing_steps;
  for (std::size_t m = 0; m < blocks; ++m) {
    const std::string prefix = block_prefix(config_, m);
    block_edge_.push_back(declare_mlp(prefix + "/edge", 3 * L, L, ln, rng));
    block_node_.push_back(declare_mlp(prefix + "/node", 2 * L, L, ln, rng));
  }
  decoder_ = declare_mlp("decoder", L, config_.dim, false, rng);
}

std::size_t GnsModel::parameter_count(const GnsConfig& c) {
  const FeatureLayout layout = c.layout();
  const std::size_t L = c.latent_size, H = c.mlp_hidden_size, K = c.mlp_hidden_layers;
  const bool ln = c.use_layer_norm;
  std::size_t n = kNumMaterials * kMaterialEmbeddingSize;
  n += mlp_count(layout.node_cols(), H, K, L, ln);
  n += c.encoder_variant == EncoderVariant::kRelative ? mlp_count(layout.edge_cols(), H, K, L, ln)
                                                      : L;
  const std::size_t blocks = c.shared_processor_params ? 1 : c.message_passing_steps;
  n += blocks * (mlp_count(3 * L, H, K, L, ln) + mlp_count(2 * L, H, K, L, ln));
  n += mlp_count(L, H, K, c.dim, false);
  return n;
}

BoundParams GnsModel::bind(ad::Tape& tape) const {
  BoundParams b;
  b.vars.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) b.vars.push_back(tape.leaf(params_.value(i)));
  return b;
}

ad::Var GnsModel::run_mlp(const BoundParams& p, const Mlp& mlp, ad::Var x) const {
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    x = ad::add_row(ad::matmul(x, p.vars[mlp.weights[l]]), p.vars[mlp.biases[l]]);
    if (l + 1 < mlp.weights.size()) x = ad::relu(x);
  }
  if (mlp.layer_norm) x = ad::layer_norm(x, p.vars[mlp.ln_gain], p.vars[mlp.ln_bias]);
  return x;
}

LatentGraph GnsModel::encode(const BoundParams& p, const FeaturizedSample& s) const {
  if (s.node_features.cols() != layout_.continuous_node_cols()) {
    throw usage_error("encode: node features have " + std::to_string(s.node_features.cols()) +
                      " columns, config expects " +
                      std::to_string(layout_.continuous_node_cols()));
  }
  if (s.edge_features.cols() != layout_.edge_cols() || s.edge_features.rows() != s.edges.size()) {
    throw usage_error("encode: edge features " + s.edge_features.shape_string() +
                      " do not match " + std::to_string(s.edges.size()) + " edges x " +
                      std::to_string(layout_.edge_cols()));
  }
  ad::Tape& tape = p.vars.front().tape();
  const std::size_t n = s.num_nodes();
  const std::size_t pre = layout_.pre_embedding_cols();

  Tensor before(n, pre), globals(n, layout_.num_globals);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = s.node_features.row(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(pre), before.row(i).begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(pre), src.end(), globals.row(i).begin());
  }
  std::vector<std::uint32_t> mats(s.material.begin(), s.material.end());
  const ad::Var parts[] = {tape.constant(std::move(before)),
                           ad::gather_rows(p.vars[embedding_], mats),
                           tape.constant(std::move(globals))};
  LatentGraph g;
  g.edge_list = &s.edges;
  g.nodes = run_mlp(p, encoder_node_, ad::concat_cols(parts));
  if (config_.encoder_variant == EncoderVariant::kRelative) {
    g.edges = run_mlp(p, encoder_edge_, tape.constant(s.edge_features));
  } else {
    g.edges = ad::broadcast_rows(p.vars[edge_bias_], s.edges.size());
  }
  return g;
}

LatentGraph GnsModel::gn_block(const BoundParams& p, std::size_t block, const LatentGraph& g) const {
  const std::size_t k = config_.shared_processor_params ? 0 : block;
  const graph::EdgeList& el = *g.edge_list;
  const ad::Var edge_in[] = {g.edges, ad::gather_rows(g.nodes, el.receivers),
                             ad::gather_rows(g.nodes, el.senders)};
  const ad::Var updated_edges = ad::add(g.edges, run_mlp(p, block_edge_[k], ad::concat_cols(edge_in)));
  const ad::Var aggregated = ad::scatter_sum(updated_edges, el.receivers, g.nodes.rows());
  const ad::Var node_in[] = {g.nodes, aggregated};
  LatentGraph out;
  out.edge_list = g.edge_list;
  out.nodes = ad::add(g.nodes, run_mlp(p, block_node_[k], ad::concat_cols(node_in)));
  out.edges = config_.update_edge_latents ? updated_edges : g.edges;
  return out;
}

LatentGraph GnsModel::process(const BoundParams& p, const LatentGraph& g0) const {
  LatentGraph g = g0;
  for (std::size_t m = 0; m < config_.message_passing_steps; ++m) g = gn_block(p, m, g);
  return g;
}

ad::Var GnsModel::decode(const BoundParams& p, const LatentGraph& g) const {
  return run_mlp(p, decoder_, g.nodes);
}

ad::Var GnsModel::forward(const BoundParams& p, const FeaturizedSample& normalized) const {
  return decode(p, process(p, encode(p, normalized)));
}

void GnsModel::zero_decoder_output() {
  params_.value(decoder_.weights.back()).fill(0.0);
  params_.value(decoder_.biases.back()).fill(0.0);
}

Tensor predict_accel(const GnsModel& model, const NormStats& stats, const ParticleState& state,
                     const Box& box) {
  const GnsConfig& c = model.config();
  const graph::EdgeList edges =
      graph::radius_edges(state.current(), c.connectivity_radius, c.include_self_edges);
  const FeaturizedSample raw = featurize(state, edges, model.layout(), box, c.connectivity_radius);
  const FeaturizedSample normalized = stats.normalize_inputs(raw);
  ad::Tape tape(false);
  const BoundParams p = model.bind(tape);
  const ad::Var y = model.forward(p, normalized);
  return stats.target.denormalize(y.value());
}

}  // namespace gns
