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
#include <functional>
#include <span>
#include <vector>

#include "gns/tensor.hpp"

namespace gns::ad {

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in execution order, so the node
/// list is already a topological order and `backward` walks it once in
/// reverse.
///
/// A tape created with `record = false` still computes values but stores no
/// backward closures; use it for inference.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  /// Value that never receives a gradient (features, targets).
  Var constant(Tensor value);
  /// Differentiable input (model parameter).
  Var leaf(Tensor value);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Gradient accumulated into `v` by the last `backward` call. Unused
  /// leaves report an exact zero tensor of the right shape.
  Tensor grad(Var v) const;

  /// Seeds d(output)/d(output) = 1 for a 1x1 output and propagates.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var push(Tensor value, bool requires_grad, BackwardFn fn);
  const Tensor& value_at(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad_at(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad_at(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adds `g` into the gradient of node `id` (allocating it on first use).
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Differentiable primitives. All shape mismatches throw gns::Error(kUsage)
// naming both shapes.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, double s);
/// x (n x d) + bias (1 x d) broadcast over rows.
Var add_row(Var x, Var bias);
/// Repeats a 1 x d row n times.
Var broadcast_rows(Var row, std::size_t n);
Var relu(Var x);
/// Per-row normalization over the feature axis, then gain * xhat + bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);
/// out[index[e]] += src[e]; rows without contributions stay zero.
Var scatter_sum(Var src, std::span<const std::uint32_t> index, std::size_t n);
/// out[e] = src[index[e]].
Var gather_rows(Var src, std::span<const std::uint32_t> index);
Var concat_cols(std::span<const Var> parts);
/// Mean over all elements, 1 x 1.
Var mean(Var x);
/// Mean squared error over all elements of the rows where mask is true.
/// An all-false mask yields an exact zero loss and zero gradients.
Var mse_loss(Var pred, Var target, std::span<const std::uint8_t> mask);
Var mse_loss(Var pred, Var target);

}  // namespace gns::ad
