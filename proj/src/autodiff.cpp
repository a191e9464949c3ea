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

#include "gns/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <utility>

#include "gns/error.hpp"

namespace gns::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw usage_error(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                    b.shape_string());
}

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw usage_error(std::string(op) + ": operands on different tapes");
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (record_ && requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.same_shape(n.value) || n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.rows(), n.value.cols(), 0.0);
  }
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.same_shape(n.value) && n.grad.size() == n.value.size()) return n.grad;
  return Tensor(n.value.rows(), n.value.cols(), 0.0);
}

void Tape::backward(Var output) {
  if (!record_) throw usage_error("backward on a non-recording tape");
  const Tensor& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) {
    throw usage_error("backward: output must be 1x1, got " + out.shape_string());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[output.id()].requires_grad) return;
  grad_buffer(output.id())[0] = 1.0;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  Tape& t = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    if (tp.requires_grad_at(ia)) {
      as_matrix(tp.grad_buffer(ia)).noalias() +=
          as_matrix(g) * as_matrix(tp.value_at(ib)).transpose();
    }
    if (tp.requires_grad_at(ib)) {
      as_matrix(tp.grad_buffer(ib)).noalias() +=
          as_matrix(tp.value_at(ia)).transpose() * as_matrix(g);
    }
  });
}

namespace {

Var add_scaled(Var a, Var b, double sb, const char* op) {
  require_same_tape(a, b, op);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_mismatch(op, av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + sb * bv[i];
  Tape& t = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [ia, ib, sb](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    if (tp.requires_grad_at(ia)) {
      Tensor& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.requires_grad_at(ib)) {
      Tensor& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sb * g[i];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return add_scaled(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_scaled(a, b, -1.0, "sub"); }

Var scale(Var x, double s) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * xv[i];
  Tape& t = x.tape();
  const std::size_t ix = x.id();
  return t.push(std::move(out), t.requires_grad(x), [ix, s](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    Tensor& gx = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
  });
}

Var add_row(Var x, Var bias) {
  require_same_tape(x, bias, "add_row");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) shape_mismatch("add_row", xv, bv);
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  Tape& t = x.tape();
  const std::size_t ix = x.id(), ib = bias.id();
  const bool rg = t.requires_grad(x) || t.requires_grad(bias);
  return t.push(std::move(out), rg, [ix, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    if (tp.requires_grad_at(ix)) {
      Tensor& gx = tp.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tp.requires_grad_at(ib)) {
      Tensor& gb = tp.grad_buffer(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
    }
  });
}

Var broadcast_rows(Var row, std::size_t n) {
  const Tensor& rv = row.value();
  if (rv.rows() != 1) throw usage_error("broadcast_rows: expected a 1xd row, got " + rv.shape_string());
  Tensor out(n, rv.cols());
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = rv[c];
  }
  Tape& t = row.tape();
  const std::size_t ir = row.id();
  return t.push(std::move(out), t.requires_grad(row), [ir](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    Tensor& gr = tp.grad_buffer(ir);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto src = g.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) gr[c] += src[c];
    }
  });
}

Var relu(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  Tape& t = x.tape();
  const std::size_t ix = x.id();
  return t.push(std::move(out), t.requires_grad(x), [ix](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& xv = tp.value_at(ix);
    Tensor& gx = tp.grad_buffer(ix);
    // Subgradient 0 at the kink.
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require_same_tape(x, gain, "layer_norm");
  require_same_tape(x, bias, "layer_norm");
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  const std::size_t n = xv.rows(), d = xv.cols();
  if (d == 0) throw usage_error("layer_norm: feature axis must be non-empty");
  if (gv.rows() != 1 || gv.cols() != d) shape_mismatch("layer_norm", xv, gv);
  if (bv.rows() != 1 || bv.cols() != d) shape_mismatch("layer_norm", xv, bv);

  Tensor xhat(n, d);
  std::vector<double> rstd(n);
  Tensor out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = xv.row(r);
    double mu = 0.0;
    for (double v : xr) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    auto hr = xhat.row(r);
    auto orow = out.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      hr[c] = (xr[c] - mu) * rstd[r];
      orow[c] = gv[c] * hr[c] + bv[c];
    }
  }

  Tape& t = x.tape();
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  const bool rg = t.requires_grad(x) || t.requires_grad(gain) || t.requires_grad(bias);
  return t.push(
      std::move(out), rg,
      [ix, ig, ib, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_at(self);
        const Tensor& gv = tp.value_at(ig);
        const std::size_t n = g.rows(), d = g.cols();
        if (tp.requires_grad_at(ig)) {
          Tensor& gg = tp.grad_buffer(ig);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gg[c] += g(r, c) * xhat(r, c);
        }
        if (tp.requires_grad_at(ib)) {
          Tensor& gb = tp.grad_buffer(ib);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gb[c] += g(r, c);
        }
        if (tp.requires_grad_at(ix)) {
          Tensor& gx = tp.grad_buffer(ix);
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t r = 0; r < n; ++r) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              const double dh = g(r, c) * gv[c];
              mean_dh += dh;
              mean_dh_h += dh * xhat(r, c);
            }
            mean_dh *= inv_d;
            mean_dh_h *= inv_d;
            for (std::size_t c = 0; c < d; ++c) {
              const double dh = g(r, c) * gv[c];
              gx(r, c) += rstd[r] * (dh - mean_dh - xhat(r, c) * mean_dh_h);
            }
          }
        }
      });
}

Var scatter_sum(Var src, std::span<const std::uint32_t> index, std::size_t n) {
  const Tensor& sv = src.value();
  if (index.size() != sv.rows()) {
    throw usage_error("scatter_sum: " + std::to_string(index.size()) + " indices for " +
                      std::to_string(sv.rows()) + " rows");
  }
  Tensor out(n, sv.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= n) {
      throw usage_error("scatter_sum: index " + std::to_string(index[e]) + " at position " +
                        std::to_string(e) + " out of range [0, " + std::to_string(n) + ")");
    }
    auto dst = out.row(index[e]);
    auto s = sv.row(e);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += s[c];
  }
  Tape& t = src.tape();
  const std::size_t is = src.id();
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return t.push(std::move(out), t.requires_grad(src),
                [is, idx = std::move(idx)](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad_at(self);
                  Tensor& gs = tp.grad_buffer(is);
                  for (std::size_t e = 0; e < idx.size(); ++e) {
                    auto dst = gs.row(e);
                    auto s = g.row(idx[e]);
                    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += s[c];
                  }
                });
}

Var gather_rows(Var src, std::span<const std::uint32_t> index) {
  const Tensor& sv = src.value();
  Tensor out(index.size(), sv.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= sv.rows()) {
      throw usage_error("gather_rows: index " + std::to_string(index[e]) + " at position " +
                        std::to_string(e) + " out of range [0, " + std::to_string(sv.rows()) +
                        ")");
    }
    auto dst = out.row(e);
    auto s = sv.row(index[e]);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = s[c];
  }
  Tape& t = src.tape();
  const std::size_t is = src.id();
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return t.push(std::move(out), t.requires_grad(src),
                [is, idx = std::move(idx)](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad_at(self);
                  Tensor& gs = tp.grad_buffer(is);
                  for (std::size_t e = 0; e < idx.size(); ++e) {
                    auto dst = gs.row(idx[e]);
                    auto s = g.row(e);
                    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += s[c];
                  }
                });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw usage_error("concat_cols: no inputs");
  Tape& t = parts[0].tape();
  const std::size_t n = parts[0].rows();
  std::size_t width = 0;
  bool rg = false;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw usage_error("concat_cols: operands on different tapes");
    if (p.rows() != n) shape_mismatch("concat_cols", parts[0].value(), p.value());
    width += p.cols();
    rg = rg || t.requires_grad(p);
  }
  Tensor out(n, width);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < n; ++r) {
      auto src = pv.row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += pv.cols();
  }
  return t.push(std::move(out), rg,
                [ids = std::move(ids), offsets = std::move(offsets)](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad_at(self);
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (!tp.requires_grad_at(ids[k])) continue;
                    Tensor& gp = tp.grad_buffer(ids[k]);
                    for (std::size_t r = 0; r < gp.rows(); ++r) {
                      auto dst = gp.row(r);
                      auto src = g.row(r);
                      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[offsets[k] + c];
                    }
                  }
                });
}

Var mean(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  const double inv = xv.size() ? 1.0 / static_cast<double>(xv.size()) : 0.0;
  Tape& t = x.tape();
  const std::size_t ix = x.id();
  return t.push(Tensor::scalar(s * inv), t.requires_grad(x), [ix, inv](Tape& tp, std::size_t self) {
    const double g = tp.grad_at(self)[0];
    Tensor& gx = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * inv;
  });
}

Var mse_loss(Var pred, Var target, std::span<const std::uint8_t> mask) {
  require_same_tape(pred, target, "mse_loss");
  const Tensor& pv = pred.value();
  const Tensor& tv = target.value();
  if (!pv.same_shape(tv)) shape_mismatch("mse_loss", pv, tv);
  if (mask.size() != pv.rows()) {
    throw usage_error("mse_loss: mask length " + std::to_string(mask.size()) + " for " +
                      std::to_string(pv.rows()) + " rows");
  }
  std::size_t active = 0;
  for (std::uint8_t m : mask) active += m ? 1 : 0;
  const std::size_t count = active * pv.cols();
  const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < pv.rows(); ++r) {
    if (!mask[r]) continue;
    for (std::size_t c = 0; c < pv.cols(); ++c) {
      const double d = pv(r, c) - tv(r, c);
      s += d * d;
    }
  }
  Tape& t = pred.tape();
  const std::size_t ip = pred.id(), it = target.id();
  const bool rg = t.requires_grad(pred) || t.requires_grad(target);
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return t.push(Tensor::scalar(s * inv), rg,
                [ip, it, inv, m = std::move(m)](Tape& tp, std::size_t self) {
                  const double g = tp.grad_at(self)[0];
                  const Tensor& pv = tp.value_at(ip);
                  const Tensor& tv = tp.value_at(it);
                  const bool gp = tp.requires_grad_at(ip), gt = tp.requires_grad_at(it);
                  for (std::size_t r = 0; r < pv.rows(); ++r) {
                    if (!m[r]) continue;
                    for (std::size_t c = 0; c < pv.cols(); ++c) {
                      const double d = 2.0 * inv * g * (pv(r, c) - tv(r, c));
                      if (gp) tp.grad_buffer(ip)(r, c) += d;
                      if (gt) tp.grad_buffer(it)(r, c) -= d;
                    }
                  }
                });
}

Var mse_loss(Var pred, Var target) {
  std::vector<std::uint8_t> all(pred.rows(), 1);
  return mse_loss(pred, target, all);
}

}  // namespace gns::ad
