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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gns/rollout.hpp"
#include "gns/tensor.hpp"
#include "gns/trajectory.hpp"

namespace gns {

/// Mean squared difference over all frames, particles and axes.
double mse(std::span<const Tensor> pred, std::span<const Tensor> truth);
double mse(const Tensor& pred, const Tensor& truth);

struct SinkhornResult {
  /// <P, C> for the entropic plan P; the entropy term is not included.
  double cost = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// L1 violation of the row marginals at exit.
  double marginal_error = 0.0;
  double epsilon = 0.0;
};

inline constexpr double kDefaultSinkhornEpsFactor = 1e-3;
inline constexpr std::size_t kDefaultSinkhornIterations = 500;

/// Entropic optimal transport between uniform point clouds with squared
/// Euclidean ground cost, iterated in the log domain. `epsilon` <= 0 selects
/// `eps_factor` times the mean pairwise cost. The regularization
/// is annealed geometrically from the largest cost down to `epsilon` over the
/// first half of the iterations. Both inputs are put in lexicographic row
/// order first, so the result is exactly permutation invariant.
SinkhornResult sinkhorn_ot(const Tensor& a, const Tensor& b, double epsilon = 0.0,
                           std::size_t iterations = kDefaultSinkhornIterations,
                           double eps_factor = kDefaultSinkhornEpsFactor);

/// Biased (V-statistic) squared MMD with a Gaussian kernel
/// exp(-|x - y|^2 / (2 sigma^2)). Always >= 0 up to rounding.
double mmd(const Tensor& a, const Tensor& b, double sigma = 0.1);

struct MetricOptions {
  bool mse = true;
  bool ot = true;
  bool mmd = true;
  double mmd_sigma = 0.1;
  double sinkhorn_eps_factor = kDefaultSinkhornEpsFactor;
  std::size_t sinkhorn_iterations = kDefaultSinkhornIterations;
  /// Distributional metrics subsample frames to at most this many particles.
  std::size_t max_points = 1000;
  /// Distributional metrics are evaluated on every stride-th rollout frame
  /// (and the last one).
  std::size_t distribution_stride = 10;
  /// Rollout length in predicted steps; 0 runs to the end of each trajectory.
  std::size_t rollout_steps = 0;
  std::uint64_t seed = 0;
};

struct TrajectoryMetrics {
  double one_step_mse = 0.0;
  double rollout_mse = 0.0;
  double ot = 0.0;
  double mmd = 0.0;
  bool sinkhorn_converged = true;
  std::optional<std::size_t> failed_step;
  // One entry per predicted step; NaN where a metric was not evaluated.
  std::vector<double> one_step_curve;
  std::vector<double> rollout_curve;
  std::vector<double> ot_curve;
  std::vector<double> mmd_curve;
};

struct MetricReport {
  MetricOptions options;
  std::vector<TrajectoryMetrics> per_trajectory;
  double one_step_mse = 0.0;
  double rollout_mse = 0.0;
  double ot = 0.0;
  double mmd = 0.0;
  bool subsampled = false;
};

/// One-step metrics feed ground-truth windows at every step; rollout metrics
/// run the predictor autoregressively over the whole trajectory. Boundary
/// particles are excluded everywhere. A rollout that blows up reports
/// failed_step and an infinite rollout MSE.
MetricReport evaluate(const AccelPredictor& predictor, std::span<const Trajectory> truth,
                      std::size_t history, const MetricOptions& options);

std::string report_to_json(const MetricReport& report);
/// step,one_step_mse,rollout_mse,ot,mmd averaged over trajectories.
std::string report_curves_csv(const MetricReport& report);

}  // namespace gns
