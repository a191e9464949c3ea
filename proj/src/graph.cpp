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

#include "gns/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gns/error.hpp"

namespace gns::graph {

KdTree::KdTree(const Tensor& points, std::size_t leaf_capacity)
    : num_points_(points.rows()), dim_(points.cols()), leaf_capacity_(std::max<std::size_t>(1, leaf_capacity)) {
  if (dim_ != 2 && dim_ != 3) {
    throw usage_error("k-d tree supports D in {2, 3}, got D=" + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < num_points_; ++i) {
    for (std::size_t d = 0; d < dim_; ++d) {
      if (!std::isfinite(points(i, d))) {
        throw data_error("non-finite coordinate for particle " + std::to_string(i) +
                         " (axis " + std::to_string(d) + ")");
      }
    }
  }
  coords_.assign(points.data(), points.data() + points.size());
  order_.resize(num_points_);
  for (std::size_t i = 0; i < num_points_; ++i) order_[i] = static_cast<std::uint32_t>(i);
  if (num_points_ > 0) build(0, static_cast<std::uint32_t>(num_points_));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Node node;
  node.begin = begin;
  node.end = end;
  for (std::size_t d = 0; d < dim_; ++d) {
    node.lo[d] = coords_[order_[begin] * dim_ + d];
    node.hi[d] = node.lo[d];
  }
  for (std::uint32_t k = begin; k < end; ++k) {
    for (std::size_t d = 0; d < dim_; ++d) {
      const double v = coords_[order_[k] * dim_ + d];
      node.lo[d] = std::min(node.lo[d], v);
      node.hi[d] = std::max(node.hi[d], v);
    }
  }
  if (end - begin > leaf_capacity_) {
    std::size_t axis = 0;
    for (std::size_t d = 1; d < dim_; ++d) {
      if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis]) axis = d;
    }
    // All points coincide along every axis: splitting cannot separate them.
    if (node.hi[axis] > node.lo[axis]) {
      const std::uint32_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         const double va = coords_[a * dim_ + axis];
                         const double vb = coords_[b * dim_ + axis];
                         return va < vb || (va == vb && a < b);
                       });
      node.left = build(begin, mid);
      node.right = build(mid, end);
    }
  }
  nodes_[id] = node;
  return id;
}

void KdTree::query(std::int32_t id, const double* center, double r2,
                   std::vector<std::uint32_t>& out) const {
  const Node& node = nodes_[id];
  double box_d2 = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double gap = 0.0;
    if (center[d] < node.lo[d]) {
      gap = node.lo[d] - center[d];
    } else if (center[d] > node.hi[d]) {
      gap = center[d] - node.hi[d];
    }
    box_d2 += gap * gap;
  }
  if (box_d2 > r2) return;
  if (node.left < 0) {
    for (std::uint32_t k = node.begin; k < node.end; ++k) {
      const std::uint32_t p = order_[k];
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double diff = coords_[p * dim_ + d] - center[d];
        d2 += diff * diff;
      }
      if (d2 <= r2) out.push_back(p);
    }
    return;
  }
  query(node.left, center, r2, out);
  query(node.right, center, r2, out);
}

std::vector<std::uint32_t> KdTree::query_radius(std::span<const double> center,
                                                double radius) const {
  if (center.size() != dim_) {
    throw usage_error("query center has " + std::to_string(center.size()) +
                      " coordinates, tree has D=" + std::to_string(dim_));
  }
  std::vector<std::uint32_t> out;
  if (nodes_.empty() || !(radius >= 0.0)) return out;
  query(0, center.data(), radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::uint32_t>> KdTree::leaves() const {
  std::vector<std::vector<std::uint32_t>> out;
  for (const Node& n : nodes_) {
    if (n.left >= 0) continue;
    out.emplace_back(order_.begin() + n.begin, order_.begin() + n.end);
  }
  return out;
}

EdgeList radius_edges(const KdTree& tree, const Tensor& points, double radius, bool include_self) {
  if (!(radius > 0.0)) throw usage_error("connectivity radius must be positive");
  if (points.rows() != tree.size() || points.cols() != tree.dim()) {
    throw usage_error("radius_edges: points " + points.shape_string() +
                      " do not match the tree");
  }
  EdgeList edges;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto receiver = static_cast<std::uint32_t>(i);
    for (std::uint32_t j : tree.query_radius(points.row(i), radius)) {
      if (j == receiver && !include_self) continue;
      edges.senders.push_back(j);
      edges.receivers.push_back(receiver);
    }
  }
  return edges;
}

EdgeList radius_edges(const Tensor& points, double radius, bool include_self) {
  return radius_edges(KdTree(points), points, radius, include_self);
}

double mean_degree(const EdgeList& edges, std::size_t num_nodes) {
  return num_nodes ? static_cast<double>(edges.size()) / static_cast<double>(num_nodes) : 0.0;
}

}  // namespace gns::graph
