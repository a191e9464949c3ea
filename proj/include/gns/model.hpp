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
#include <string>
#include <vector>

#include "gns/autodiff.hpp"
#include "gns/features.hpp"
#include "gns/graph.hpp"
#include "gns/params.hpp"
#include "gns/random.hpp"

namespace gns {

struct GnsConfig {
  std::size_t latent_size = 128;
  std::size_t mlp_hidden_size = 128;
  std::size_t mlp_hidden_layers = 2;
  std::size_t message_passing_steps = 10;
  bool shared_processor_params = false;
  EncoderVariant encoder_variant = EncoderVariant::kRelative;
  bool use_layer_norm = true;
  bool update_edge_latents = true;
  std::size_t history = 5;
  double connectivity_radius = 0.015;
  bool include_self_edges = false;

  // Input layout, fixed by the dataset the model is trained on.
  std::size_t dim = 2;
  std::size_t num_globals = 0;

  void validate() const;
  FeatureLayout layout() const {
    return FeatureLayout{dim, history, num_globals, encoder_variant};
  }
};

/// Latent graph: node and edge latents recorded on a tape, plus the
/// connectivity they live on.
struct LatentGraph {
  ad::Var nodes;
  ad::Var edges;
  const graph::EdgeList* edge_list = nullptr;
};

/// Parameters of the encode-process-decode network bound to a tape, aligned
/// with the model's ParamStore.
struct BoundParams {
  std::vector<ad::Var> vars;
};

/// The learned dynamics function: encoder MLPs, M message-passing blocks,
/// decoder MLP and the material embedding table.
///
/// Every MLP has `mlp_hidden_layers` ReLU hidden layers; all MLPs except the
/// decoder end in a LayerNorm (when enabled). Processor blocks update edges
/// as e' = e + phi_e([e, v_recv, v_send]) and nodes as
/// v' = v + phi_v([v, sum of incoming e']).
class GnsModel {
 public:
  /// Fresh model; weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
  GnsModel(const GnsConfig& config, std::uint64_t seed);
  /// Model from stored parameters; names and shapes are checked.
  GnsModel(const GnsConfig& config, const ParamStore& params);

  const GnsConfig& config() const { return config_; }
  const FeatureLayout& layout() const { return layout_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Closed-form parameter count for a configuration.
  static std::size_t parameter_count(const GnsConfig& config);

  BoundParams bind(ad::Tape& tape) const;

  LatentGraph encode(const BoundParams& p, const FeaturizedSample& normalized) const;
  LatentGraph gn_block(const BoundParams& p, std::size_t block, const LatentGraph& g) const;
  LatentGraph process(const BoundParams& p, const LatentGraph& g0) const;
  /// N x D normalized accelerations.
  ad::Var decode(const BoundParams& p, const LatentGraph& g) const;

  /// encode -> process -> decode on normalized inputs.
  ad::Var forward(const BoundParams& p, const FeaturizedSample& normalized) const;

  /// Sets every output-layer weight and bias of the decoder to zero.
  void zero_decoder_output();

 private:
  struct Mlp {
    std::vector<std::size_t> weights;
    std::vector<std::size_t> biases;
    std::size_t ln_gain = 0;
    std::size_t ln_bias = 0;
    bool layer_norm = false;
  };

  void declare(Rng* rng);
  Mlp declare_mlp(const std::string& prefix, std::size_t in, std::size_t out, bool layer_norm,
                  Rng* rng);
  ad::Var run_mlp(const BoundParams& p, const Mlp& mlp, ad::Var x) const;

  GnsConfig config_;
  FeatureLayout layout_;
  ParamStore params_;
  Mlp encoder_node_;
  Mlp encoder_edge_;
  std::size_t edge_bias_ = 0;
  std::vector<Mlp> block_edge_;
  std::vector<Mlp> block_node_;
  Mlp decoder_;
  std::size_t embedding_ = 0;
};

/// Full pipeline for one state: graph build, featurize, normalize, forward,
/// denormalize. Returns physical (per-step^2) accelerations, N x D.
Tensor predict_accel(const GnsModel& model, const NormStats& stats, const ParticleState& state,
                     const Box& box);

}  // namespace gns
