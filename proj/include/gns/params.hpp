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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gns/tensor.hpp"

namespace gns {

/// Ordered collection of named parameter tensors. Insertion order is the
/// canonical order used by optimizers and checkpoints.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Tensor& value(std::size_t i) { return entries_[i].value; }
  const Tensor& value(std::size_t i) const { return entries_[i].value; }

  const Tensor* find(const std::string& name) const;
  Tensor* find(const std::string& name);
  std::size_t index_of(const std::string& name) const;

  std::size_t total_elements() const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators, one pair per parameter in ParamStore
/// order.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_params(const ParamStore& params, AdamConfig config = {});
};

/// One bias-corrected Adam update. `grads` is aligned with `params`.
/// Throws gns::Error(kNumeric) naming the parameter on a non-finite gradient;
/// parameters are left untouched in that case.
void adam_step(ParamStore& params, std::span<const Tensor> grads, AdamState& state, double lr);

// Checkpoint file: a flat manifest of named tensors with little-endian
// payloads. Each entry records its own storage precision.
enum class Precision : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

struct NamedTensor {
  std::string name;
  Tensor value;
  Precision precision = Precision::kFloat32;
};

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> entries);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

}  // namespace gns
