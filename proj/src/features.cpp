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

#include "gns/features.hpp"

#include <algorithm>
#include <cmath>

#include "gns/error.hpp"

namespace gns {

const char* material_name(Material m) {
  switch (m) {
    case Material::kWater: return "water";
    case Material::kSand: return "sand";
    case Material::kGoop: return "goop";
    case Material::kRigid: return "rigid";
    case Material::kBoundary: return "boundary";
  }
  return "unknown";
}

double Box::diagonal() const {
  double s = 0.0;
  for (std::size_t d = 0; d < dim(); ++d) s += (upper[d] - lower[d]) * (upper[d] - lower[d]);
  return std::sqrt(s);
}

void Box::validate() const {
  if (lower.size() != upper.size() || (lower.size() != 2 && lower.size() != 3)) {
    throw usage_error("box must have matching 2D or 3D bounds");
  }
  for (std::size_t d = 0; d < dim(); ++d) {
    if (!(upper[d] > lower[d])) {
      throw usage_error("box axis " + std::to_string(d) + " has upper <= lower");
    }
  }
}

void ParticleState::validate(std::size_t history_velocities) const {
  if (position_history.size() != history_velocities + 1) {
    throw data_error("state has " + std::to_string(position_history.size()) +
                     " position frames, expected C+1 = " +
                     std::to_string(history_velocities + 1));
  }
  const Tensor& ref = position_history.back();
  for (const Tensor& p : position_history) {
    if (!p.same_shape(ref)) throw data_error("position history frames differ in shape");
    if (!p.all_finite()) throw data_error("position history contains non-finite coordinates");
  }
  if (material.size() != ref.rows()) {
    throw data_error("state has " + std::to_string(material.size()) + " material ids for " +
                     std::to_string(ref.rows()) + " particles");
  }
  for (std::size_t i = 0; i < material.size(); ++i) {
    if (material[i] >= kNumMaterials) {
      throw data_error("unknown material id " + std::to_string(material[i]) + " for particle " +
                       std::to_string(i));
    }
  }
}

const char* encoder_variant_name(EncoderVariant v) {
  return v == EncoderVariant::kRelative ? "relative" : "absolute";
}

EncoderVariant parse_encoder_variant(const std::string& s) {
  if (s == "relative") return EncoderVariant::kRelative;
  if (s == "absolute") return EncoderVariant::kAbsolute;
  throw usage_error("unknown encoder variant '" + s + "' (expected relative|absolute)");
}

std::vector<Tensor> finite_diff_velocity(std::span<const Tensor> history) {
  std::vector<Tensor> v;
  if (history.size() < 2) return v;
  v.reserve(history.size() - 1);
  for (std::size_t k = 1; k < history.size(); ++k) {
    const Tensor& a = history[k - 1];
    const Tensor& b = history[k];
    if (!a.same_shape(b)) throw usage_error("finite_diff_velocity: frames differ in shape");
    Tensor out(b.rows(), b.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] - a[i];
    v.push_back(std::move(out));
  }
  return v;
}

Tensor finite_diff_accel(const Tensor& prev, const Tensor& curr, const Tensor& next) {
  if (!prev.same_shape(curr) || !curr.same_shape(next)) {
    throw usage_error("finite_diff_accel: frames differ in shape");
  }
  Tensor out(curr.rows(), curr.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = next[i] - 2.0 * curr[i] + prev[i];
  return out;
}

Tensor wall_distances(const Tensor& positions, const Box& box, double radius) {
  const std::size_t dim = positions.cols();
  if (box.dim() != dim) throw usage_error("wall_distances: box and positions differ in D");
  Tensor out(positions.rows(), 2 * dim);
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      out(i, 2 * d) = std::min(positions(i, d) - box.lower[d], radius);
      out(i, 2 * d + 1) = std::min(box.upper[d] - positions(i, d), radius);
    }
  }
  return out;
}

FeaturizedSample featurize(const ParticleState& state, const graph::EdgeList& edges,
                           const FeatureLayout& layout, const Box& box, double radius) {
  state.validate(layout.history);
  if (state.dim() != layout.dim) {
    throw data_error("state has D=" + std::to_string(state.dim()) + ", model expects D=" +
                     std::to_string(layout.dim));
  }
  if (state.globals.size() != layout.num_globals) {
    throw data_error("state has " + std::to_string(state.globals.size()) +
                     " global features, model expects " + std::to_string(layout.num_globals));
  }
  const std::size_t n = state.num_particles();
  const std::size_t dim = layout.dim;
  const Tensor& pos = state.current();

  FeaturizedSample s;
  s.node_features = Tensor(n, layout.continuous_node_cols());
  const auto velocities = finite_diff_velocity(state.position_history);
  const Tensor walls = wall_distances(pos, box, radius);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = s.node_features.row(i);
    std::size_t c = 0;
    for (const Tensor& v : velocities)
      for (std::size_t d = 0; d < dim; ++d) row[c++] = v(i, d);
    for (std::size_t w = 0; w < 2 * dim; ++w) row[c++] = walls(i, w);
    if (layout.variant == EncoderVariant::kAbsolute)
      for (std::size_t d = 0; d < dim; ++d) row[c++] = pos(i, d);
    for (double g : state.globals) row[c++] = g;
  }

  s.edge_features = Tensor(edges.size(), layout.edge_cols());
  if (layout.variant == EncoderVariant::kRelative) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::uint32_t recv = edges.receivers[e], send = edges.senders[e];
      if (recv >= n || send >= n) throw usage_error("edge index out of range");
      auto row = s.edge_features.row(e);
      double norm2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        row[d] = pos(recv, d) - pos(send, d);
        norm2 += row[d] * row[d];
      }
      row[dim] = std::sqrt(norm2);
    }
  }
  s.edges = edges;
  s.material = state.material;
  s.loss_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.loss_mask[i] = is_boundary(state.material[i]) ? 0 : 1;
  return s;
}

FeaturizedSample concat_samples(std::span<const FeaturizedSample> samples) {
  if (samples.empty()) throw usage_error("concat_samples: no samples");
  if (samples.size() == 1) return samples[0];
  std::size_t n = 0, e = 0;
  const std::size_t fv = samples[0].node_features.cols();
  const std::size_t fe = samples[0].edge_features.cols();
  const std::size_t ft = samples[0].target_accel.cols();
  const bool has_target = !samples[0].target_accel.empty();
  for (const auto& s : samples) {
    if (s.node_features.cols() != fv || s.edge_features.cols() != fe) {
      throw usage_error("concat_samples: feature widths differ");
    }
    n += s.num_nodes();
    e += s.edges.size();
  }
  FeaturizedSample out;
  out.node_features = Tensor(n, fv);
  out.edge_features = Tensor(e, fe);
  if (has_target) out.target_accel = Tensor(n, ft);
  out.edges.senders.reserve(e);
  out.edges.receivers.reserve(e);
  std::size_t node_off = 0, edge_off = 0;
  for (const auto& s : samples) {
    std::copy(s.node_features.data(), s.node_features.data() + s.node_features.size(),
              out.node_features.data() + node_off * fv);
    std::copy(s.edge_features.data(), s.edge_features.data() + s.edge_features.size(),
              out.edge_features.data() + edge_off * fe);
    if (has_target) {
      std::copy(s.target_accel.data(), s.target_accel.data() + s.target_accel.size(),
                out.target_accel.data() + node_off * ft);
    }
    for (std::size_t k = 0; k < s.edges.size(); ++k) {
      out.edges.senders.push_back(static_cast<std::uint32_t>(s.edges.senders[k] + node_off));
      out.edges.receivers.push_back(static_cast<std::uint32_t>(s.edges.receivers[k] + node_off));
    }
    out.material.insert(out.material.end(), s.material.begin(), s.material.end());
    out.loss_mask.insert(out.loss_mask.end(), s.loss_mask.begin(), s.loss_mask.end());
    node_off += s.num_nodes();
    edge_off += s.edges.size();
  }
  return out;
}

void RunningStats::update(const Tensor& rows, std::span<const std::uint8_t> mask) {
  if (rows.rows() == 0) return;
  if (rows.cols() != cols()) {
    throw usage_error("stats update with " + std::to_string(rows.cols()) + " columns, expected " +
                      std::to_string(cols()));
  }
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    if (!mask.empty() && !mask[r]) continue;
    auto row = rows.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      sum_[c] += row[c];
      sumsq_[c] += row[c] * row[c];
    }
    count_ += 1.0;
  }
}

double RunningStats::mean(std::size_t col) const {
  return count_ > 0.0 ? sum_[col] / count_ : 0.0;
}

double RunningStats::variance(std::size_t col) const {
  if (count_ <= 0.0) return 1.0;
  const double m = mean(col);
  return std::max(0.0, sumsq_[col] / count_ - m * m);
}

double RunningStats::stddev(std::size_t col) const {
  if (count_ <= 0.0) return 1.0;
  return std::max(std::sqrt(variance(col)), kStdFloor);
}

Tensor RunningStats::normalize(const Tensor& x) const {
  if (x.cols() != cols()) throw usage_error("normalize: column count mismatch");
  Tensor out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double m = mean(c), s = stddev(c);
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) = (x(r, c) - m) / s;
  }
  return out;
}

Tensor RunningStats::denormalize(const Tensor& x) const {
  if (x.cols() != cols()) throw usage_error("denormalize: column count mismatch");
  Tensor out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double m = mean(c), s = stddev(c);
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) = x(r, c) * s + m;
  }
  return out;
}

void RunningStats::restore(std::vector<double> sum, std::vector<double> sumsq, double count) {
  if (sum.size() != sumsq.size()) throw data_error("stats restore: sum/sumsq length mismatch");
  sum_ = std::move(sum);
  sumsq_ = std::move(sumsq);
  count_ = count;
}

NormStats NormStats::for_layout(const FeatureLayout& layout) {
  return {RunningStats(layout.continuous_node_cols()), RunningStats(layout.edge_cols()),
          RunningStats(layout.dim)};
}

void NormStats::update(const FeaturizedSample& raw) {
  node.update(raw.node_features);
  if (edge.cols() > 0) edge.update(raw.edge_features);
  if (!raw.target_accel.empty()) target.update(raw.target_accel, raw.loss_mask);
}

FeaturizedSample NormStats::normalize_inputs(const FeaturizedSample& raw) const {
  FeaturizedSample out = raw;
  out.node_features = node.normalize(raw.node_features);
  if (edge.cols() > 0) out.edge_features = edge.normalize(raw.edge_features);
  return out;
}

}  // namespace gns
