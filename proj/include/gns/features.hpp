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
#include <span>
#include <string>
#include <vector>

#include "gns/graph.hpp"
#include "gns/tensor.hpp"

namespace gns {

enum class Material : std::uint8_t {
  kWater = 0,
  kSand = 1,
  kGoop = 2,
  kRigid = 3,
  kBoundary = 4,
};
inline constexpr std::size_t kNumMaterials = 5;
inline constexpr std::size_t kMaterialEmbeddingSize = 16;

const char* material_name(Material m);
inline bool is_boundary(std::uint8_t material) {
  return material == static_cast<std::uint8_t>(Material::kBoundary);
}

/// Axis-aligned container.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  double diagonal() const;
  void validate() const;
};

/// Positions of N particles over the last C+1 steps plus per-particle
/// material ids and per-step global features.
struct ParticleState {
  std::vector<Tensor> position_history;  // oldest first, each N x D
  std::vector<std::uint8_t> material;
  std::vector<double> globals;

  std::size_t num_particles() const {
    return position_history.empty() ? 0 : position_history.back().rows();
  }
  std::size_t dim() const {
    return position_history.empty() ? 0 : position_history.back().cols();
  }
  const Tensor& current() const { return position_history.back(); }

  /// Throws data errors on inconsistent shapes, unknown materials or
  /// non-finite coordinates.
  void validate(std::size_t history_velocities) const;
};

enum class EncoderVariant { kRelative, kAbsolute };

const char* encoder_variant_name(EncoderVariant v);
EncoderVariant parse_encoder_variant(const std::string& s);

/// Column layout of node and edge inputs. Node inputs are assembled as
/// [velocities (C*D), wall distances (2D), position (D, absolute only),
/// material embedding, globals (G)]; everything but the embedding is
/// normalized.
struct FeatureLayout {
  std::size_t dim = 2;
  std::size_t history = 5;  // C
  std::size_t num_globals = 0;
  EncoderVariant variant = EncoderVariant::kRelative;

  std::size_t velocity_cols() const { return history * dim; }
  std::size_t wall_cols() const { return 2 * dim; }
  std::size_t position_cols() const { return variant == EncoderVariant::kAbsolute ? dim : 0; }
  /// Normalized columns preceding the embedding.
  std::size_t pre_embedding_cols() const {
    return velocity_cols() + wall_cols() + position_cols();
  }
  std::size_t continuous_node_cols() const { return pre_embedding_cols() + num_globals; }
  std::size_t node_cols() const { return continuous_node_cols() + kMaterialEmbeddingSize; }
  std::size_t edge_cols() const { return variant == EncoderVariant::kRelative ? dim + 1 : 0; }
};

/// Network inputs and supervision for one state (or a batch of states
/// concatenated into one disjoint graph).
struct FeaturizedSample {
  Tensor node_features;  // N x continuous_node_cols
  Tensor edge_features;  // E x edge_cols
  graph::EdgeList edges;
  std::vector<std::uint8_t> material;
  Tensor target_accel;                // N x D, empty when unsupervised
  std::vector<std::uint8_t> loss_mask;  // false exactly on boundary particles

  std::size_t num_nodes() const { return node_features.rows(); }
};

/// p[k] - p[k-1] for k = 1..C (unit time step).
std::vector<Tensor> finite_diff_velocity(std::span<const Tensor> history);

/// p_next - 2 p_curr + p_prev.
Tensor finite_diff_accel(const Tensor& prev, const Tensor& curr, const Tensor& next);

/// Distance to each of the 2D walls, ordered (lower_0, upper_0, lower_1, ...),
/// each clipped from above at `radius`.
Tensor wall_distances(const Tensor& positions, const Box& box, double radius);

/// Raw (unnormalized) features for `state` on the given edges.
FeaturizedSample featurize(const ParticleState& state, const graph::EdgeList& edges,
                           const FeatureLayout& layout, const Box& box, double radius);

/// Joins samples into one graph; edge indices of later samples are offset.
FeaturizedSample concat_samples(std::span<const FeaturizedSample> samples);

/// Streaming per-column mean/variance from exact sums.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(std::size_t cols) : sum_(cols, 0.0), sumsq_(cols, 0.0) {}

  static constexpr double kStdFloor = 1e-8;

  std::size_t cols() const { return sum_.size(); }
  double count() const { return count_; }

  /// Adds every row of `rows`; with a mask, only rows where it is true.
  void update(const Tensor& rows, std::span<const std::uint8_t> mask = {});

  double mean(std::size_t col) const;
  double variance(std::size_t col) const;
  /// sqrt(variance) floored at kStdFloor; 1 before any data is seen.
  double stddev(std::size_t col) const;

  Tensor normalize(const Tensor& x) const;
  Tensor denormalize(const Tensor& x) const;

  const std::vector<double>& sums() const { return sum_; }
  const std::vector<double>& sums_of_squares() const { return sumsq_; }
  void restore(std::vector<double> sum, std::vector<double> sumsq, double count);

 private:
  std::vector<double> sum_;
  std::vector<double> sumsq_;
  double count_ = 0.0;
};

/// Accumulators for node inputs, edge inputs and acceleration targets.
struct NormStats {
  RunningStats node;
  RunningStats edge;
  RunningStats target;

  static NormStats for_layout(const FeatureLayout& layout);

  /// Accumulates a raw sample. Targets of masked-out particles are skipped.
  void update(const FeaturizedSample& raw);

  /// Normalizes node and edge inputs (targets untouched).
  FeaturizedSample normalize_inputs(const FeaturizedSample& raw) const;
};

}  // namespace gns
