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

#include "gns/params.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "gns/error.hpp"

namespace gns {

namespace detail {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "' for reading");
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("write to '" + path + "' failed");
}

}  // namespace detail

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw usage_error("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({name, std::move(init)});
  return entries_.back().value;
}

const Tensor* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].value;
}

Tensor* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].value;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw usage_error("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

AdamState AdamState::for_params(const ParamStore& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params.value(i);
    s.m.emplace_back(p.rows(), p.cols(), 0.0);
    s.v.emplace_back(p.rows(), p.cols(), 0.0);
  }
  return s;
}

void adam_step(ParamStore& params, std::span<const Tensor> grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw usage_error("adam_step: " + std::to_string(grads.size()) + " gradients and " +
                      std::to_string(state.m.size()) + " moment slots for " +
                      std::to_string(params.size()) + " parameters");
  }
  if (!(lr > 0.0)) throw usage_error("adam_step: learning rate must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].same_shape(params.value(i))) {
      throw usage_error("adam_step: gradient for '" + params.name(i) + "' has shape " +
                        grads[i].shape_string() + ", parameter " +
                        params.value(i).shape_string());
    }
    if (!grads[i].all_finite()) {
      throw numeric_error("non-finite gradient for parameter '" + params.name(i) + "'");
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.value(i);
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'N', 'S', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> entries) {
  detail::ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 8));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const NamedTensor& e : entries) {
    if (e.name.size() > 0xffff) throw usage_error("checkpoint entry name too long");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.put_bytes(e.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.precision));
    w.put<std::uint64_t>(e.value.rows());
    w.put<std::uint64_t>(e.value.cols());
    w.put<std::uint64_t>(e.value.size());
  }
  for (const NamedTensor& e : entries) {
    for (double v : e.value.values()) {
      if (e.precision == Precision::kFloat32) {
        w.put<float>(static_cast<float>(v));
      } else {
        w.put<double>(v);
      }
    }
  }
  detail::write_file(path.string(), w.bytes());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  const std::vector<char> bytes = detail::read_file(path.string());
  detail::ByteReader r(bytes.data(), bytes.size(), "checkpoint '" + path.string() + "'");
  if (r.get_string(8) != std::string(kCheckpointMagic, 8)) {
    throw data_error("checkpoint '" + path.string() + "': bad magic at byte offset 0");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw data_error("checkpoint '" + path.string() + "': unsupported version " +
                     std::to_string(version) + " at byte offset 8");
  }
  const auto count = r.get<std::uint32_t>();
  struct Header {
    std::string name;
    Precision precision;
    std::uint64_t rows, cols;
  };
  std::vector<Header> headers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>();
    Header h;
    h.name = r.get_string(len);
    const auto prec_offset = r.offset();
    const auto prec = r.get<std::uint8_t>();
    if (prec > 1) {
      throw data_error("checkpoint '" + path.string() + "': unknown precision tag " +
                       std::to_string(prec) + " at byte offset " + std::to_string(prec_offset));
    }
    h.precision = static_cast<Precision>(prec);
    h.rows = r.get<std::uint64_t>();
    h.cols = r.get<std::uint64_t>();
    const auto n = r.get<std::uint64_t>();
    if (n != h.rows * h.cols) {
      throw data_error("checkpoint '" + path.string() + "': entry '" + h.name +
                       "' element count " + std::to_string(n) + " does not match shape");
    }
    headers.push_back(std::move(h));
  }
  std::vector<NamedTensor> out;
  out.reserve(headers.size());
  for (const Header& h : headers) {
    std::vector<double> data(h.rows * h.cols);
    for (double& v : data) {
      v = h.precision == Precision::kFloat32 ? static_cast<double>(r.get<float>()) : r.get<double>();
    }
    out.push_back({h.name, Tensor(h.rows, h.cols, std::move(data)), h.precision});
  }
  if (r.remaining() != 0) {
    throw data_error("checkpoint '" + path.string() + "': " + std::to_string(r.remaining()) +
                     " trailing bytes at byte offset " + std::to_string(r.offset()));
  }
  return out;
}

}  // namespace gns
