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
#include <vector>

#include "gns/tensor.hpp"

namespace gns::graph {

/// Directed edges as parallel sender/receiver lists.
struct EdgeList {
  std::vector<std::uint32_t> senders;
  std::vector<std::uint32_t> receivers;

  std::size_t size() const { return senders.size(); }
  bool empty() const { return senders.empty(); }
};

/// Static k-d tree over N x D points (D in {2, 3}). Leaves hold up to
/// `leaf_capacity` point indices; each node stores the bounding box of its
/// points, which drives the radius-query pruning.
class KdTree {
 public:
  static constexpr std::size_t kDefaultLeafCapacity = 16;

  explicit KdTree(const Tensor& points, std::size_t leaf_capacity = kDefaultLeafCapacity);

  std::size_t size() const { return num_points_; }
  std::size_t dim() const { return dim_; }

  /// Indices of all points with squared distance <= radius^2 from `center`,
  /// ascending.
  std::vector<std::uint32_t> query_radius(std::span<const double> center, double radius) const;

  /// Point indices per leaf, in tree order. Exposed for invariant checks.
  std::vector<std::vector<std::uint32_t>> leaves() const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double lo[3] = {0, 0, 0};
    double hi[3] = {0, 0, 0};
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void query(std::int32_t node, const double* center, double r2,
             std::vector<std::uint32_t>& out) const;

  std::size_t num_points_ = 0;
  std::size_t dim_ = 0;
  std::size_t leaf_capacity_ = kDefaultLeafCapacity;
  std::vector<double> coords_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// All pairs within `radius` (inclusive), both directions, sorted by
/// (receiver, sender). Self pairs only when `include_self`.
EdgeList radius_edges(const KdTree& tree, const Tensor& points, double radius, bool include_self);

/// Builds the tree and queries in one call.
EdgeList radius_edges(const Tensor& points, double radius, bool include_self);

/// Mean incoming-edge count per node; 0 for an empty point set.
double mean_degree(const EdgeList& edges, std::size_t num_nodes);

}  // namespace gns::graph
