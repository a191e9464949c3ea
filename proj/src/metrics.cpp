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

#include "gns/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "gns/error.hpp"
#include "gns/json_config.hpp"
#include "gns/random.hpp"

namespace gns {

double mse(const Tensor& pred, const Tensor& truth) {
  if (!pred.same_shape(truth)) {
    throw usage_error("mse: shape mismatch " + pred.shape_string() + " vs " + truth.shape_string());
  }
  if (pred.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double mse(std::span<const Tensor> pred, std::span<const Tensor> truth) {
  if (pred.size() != truth.size()) {
    throw usage_error("mse: " + std::to_string(pred.size()) + " predicted frames vs " +
                      std::to_string(truth.size()) + " ground-truth frames");
  }
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!pred[k].same_shape(truth[k])) {
      throw usage_error("mse: frame " + std::to_string(k) + " shape mismatch " +
                        pred[k].shape_string() + " vs " + truth[k].shape_string());
    }
    for (std::size_t i = 0; i < pred[k].size(); ++i) {
      s += (pred[k][i] - truth[k][i]) * (pred[k][i] - truth[k][i]);
    }
    n += pred[k].size();
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

namespace {

Tensor sorted_rows(const Tensor& x) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    auto ra = x.row(a), rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = x.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

void check_clouds(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == 0 || b.rows() == 0) throw usage_error(std::string(op) + ": empty point set");
  if (a.cols() != b.cols()) {
    throw usage_error(std::string(op) + ": dimension mismatch " + a.shape_string() + " vs " +
                      b.shape_string());
  }
}

}  // namespace

SinkhornResult sinkhorn_ot(const Tensor& a_in, const Tensor& b_in, double epsilon,
                           std::size_t iterations, double eps_factor) {
  if (!(eps_factor > 0.0)) throw usage_error("sinkhorn_ot: eps_factor must be positive");
  check_clouds(a_in, b_in, "sinkhorn_ot");
  Tensor a = sorted_rows(a_in);
  Tensor b = sorted_rows(b_in);
  // The transposed problem has the same value; fixing the operand order
  // makes the iterate, and so the result, exactly symmetric.
  if (std::lexicographical_compare(b.values().begin(), b.values().end(), a.values().begin(),
                                   a.values().end())) {
    std::swap(a, b);
  }
  SinkhornResult res;
  // Identical clouds are at distance zero; the entropic bias is skipped.
  if (a == b) {
    res.converged = true;
    return res;
  }
  const std::size_t n = a.rows(), m = b.rows();
  std::vector<double> cost(n * m);
  double mean_cost = 0.0, max_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cost[i * m + j] = sq_dist(a.row(i), b.row(j));
      mean_cost += cost[i * m + j];
      max_cost = std::max(max_cost, cost[i * m + j]);
    }
  }
  mean_cost /= static_cast<double>(n * m);

  if (max_cost == 0.0) {
    res.converged = true;
    return res;
  }
  const double eps = epsilon > 0.0 ? epsilon : eps_factor * mean_cost;
  res.epsilon = eps;
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  std::vector<double> f(n, 0.0), g(m, 0.0), buf(std::max(n, m));

  const std::size_t anneal = std::max<std::size_t>(1, iterations / 2);
  double cur = std::max(max_cost, eps);
  const double shrink = std::pow(eps / cur, 1.0 / static_cast<double>(anneal));

  auto lse = [](std::span<double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
  };

  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) buf[j] = log_b + (g[j] - cost[i * m + j]) / cur;
      f[i] = -cur * lse(std::span<double>(buf.data(), m));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = log_a + (f[i] - cost[i * m + j]) / cur;
      g[j] = -cur * lse(std::span<double>(buf.data(), n));
    }
    res.iterations = it + 1;
    if (cur > eps) cur = std::max(eps, cur * shrink);
  }
  cur = eps;

  double total = 0.0, marginal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double p = std::exp(log_a + log_b + (f[i] + g[j] - cost[i * m + j]) / cur);
      row += p;
      total += p * cost[i * m + j];
    }
    marginal += std::abs(row - std::exp(log_a));
  }
  res.cost = total;
  res.marginal_error = marginal;
  res.converged = marginal < 1e-3;
  return res;
}

double mmd(const Tensor& a_in, const Tensor& b_in, double sigma) {
  check_clouds(a_in, b_in, "mmd");
  if (!(sigma > 0.0)) throw usage_error("mmd: bandwidth must be positive");
  const Tensor a = sorted_rows(a_in);
  const Tensor b = sorted_rows(b_in);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  auto mean_kernel = [&](const Tensor& x, const Tensor& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < y.rows(); ++j) s += std::exp(-sq_dist(x.row(i), y.row(j)) * inv);
    return s / static_cast<double>(x.rows() * y.rows());
  };
  const double kab = a.rows() <= b.rows() ? mean_kernel(a, b) : mean_kernel(b, a);
  const double v = mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * kab;
  return std::max(0.0, v);
}

namespace {

std::vector<std::size_t> active_particles(const Trajectory& t) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.num_particles(); ++i)
    if (!is_boundary(t.material[i])) idx.push_back(i);
  return idx;
}

Tensor select_rows(const Tensor& x, std::span<const std::size_t> idx) {
  Tensor out(idx.size(), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto src = x.row(idx[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

MetricReport evaluate(const AccelPredictor& predictor, std::span<const Trajectory> truth,
                      std::size_t history, const MetricOptions& options) {
  MetricReport report;
  report.options = options;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t stride = std::max<std::size_t>(1, options.distribution_stride);
  for (std::size_t ti = 0; ti < truth.size(); ++ti) {
    const Trajectory& t = truth[ti];
    if (t.num_steps() < history + 2) {
      throw data_error("evaluation trajectory " + std::to_string(ti) + " has " +
                       std::to_string(t.num_steps()) + " frames; C+2 required");
    }
    const std::vector<std::size_t> active = active_particles(t);
    std::size_t steps = t.num_steps() - history - 1;
    if (options.rollout_steps > 0) steps = std::min(steps, options.rollout_steps);
    TrajectoryMetrics tm;

    if (options.mse) {
      for (std::size_t frame = history; frame < history + steps; ++frame) {
        const ParticleState s = t.state_at(frame, history);
        const auto& h = s.position_history;
        Tensor vel(h.back().rows(), h.back().cols());
        for (std::size_t j = 0; j < vel.size(); ++j) vel[j] = h.back()[j] - h[h.size() - 2][j];
        EulerResult next = euler_update(h.back(), vel, predictor.predict(s, t, frame));
        if (const Tensor* exact = predictor.replay(t, frame)) next.position = *exact;
        tm.one_step_curve.push_back(
            mse(select_rows(next.position, active), select_rows(t.positions[frame + 1], active)));
      }
      tm.one_step_mse = mean_of(tm.one_step_curve);
    }

    RolloutOptions ro;
    ro.history = history;
    ro.start_frame = history;
    ro.steps = steps;
    const Rollout r = rollout(predictor, t, ro);
    tm.failed_step = r.failed_step;
    // A blown-up final frame is excluded from the averages.
    const std::size_t usable = r.failed_step ? *r.failed_step - 1 : r.predicted_steps();

    std::vector<std::size_t> sample = active;
    if (sample.size() > options.max_points) {
      Rng rng(derive_seed(options.seed, 0x5eed, ti));
      std::shuffle(sample.begin(), sample.end(), rng);
      sample.resize(options.max_points);
      std::sort(sample.begin(), sample.end());
      report.subsampled = true;
    }
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t frame = history + 1 + k;
      const bool have = k < usable;
      const Tensor* pred = have ? &r.trajectory.positions[frame] : nullptr;
      tm.rollout_curve.push_back(
          have && options.mse ? mse(select_rows(*pred, active), select_rows(t.positions[frame], active))
                              : nan);
      const bool dist_step = have && (k % stride == 0 || k + 1 == usable);
      if (dist_step && options.ot) {
        const SinkhornResult ot = sinkhorn_ot(select_rows(*pred, sample),
                                              select_rows(t.positions[frame], sample),
                                              0.0, options.sinkhorn_iterations,
                                              options.sinkhorn_eps_factor);
        tm.ot_curve.push_back(ot.cost);
        tm.sinkhorn_converged = tm.sinkhorn_converged && ot.converged;
      } else {
        tm.ot_curve.push_back(nan);
      }
      tm.mmd_curve.push_back(dist_step && options.mmd
                                 ? mmd(select_rows(*pred, sample),
                                       select_rows(t.positions[frame], sample), options.mmd_sigma)
                                 : nan);
    }
    tm.rollout_mse = mean_of(tm.rollout_curve);
    // A blown-up rollout must not look better than a stable one.
    if (r.failed_step && options.mse) tm.rollout_mse = std::numeric_limits<double>::infinity();
    tm.ot = mean_of(tm.ot_curve);
    tm.mmd = mean_of(tm.mmd_curve);
    report.per_trajectory.push_back(std::move(tm));
  }
  std::vector<double> a, b, c, d;
  for (const auto& tm : report.per_trajectory) {
    a.push_back(tm.one_step_mse);
    b.push_back(tm.rollout_mse);
    c.push_back(tm.ot);
    d.push_back(tm.mmd);
  }
  report.one_step_mse = mean_of(a);
  report.rollout_mse = mean_of(b);
  report.ot = mean_of(c);
  report.mmd = mean_of(d);
  return report;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json curve_json(const std::vector<double>& c) {
  nlohmann::json out = nlohmann::json::array();
  for (double v : c) out.push_back(number_or_null(v));
  return out;
}

}  // namespace

std::string report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["format"] = "gns-metric-report";
  j["version"] = 1;
  j["options"] = metric_options_to_json(r.options);
  j["subsampled"] = r.subsampled;
  j["aggregate"] = {{"one_step_mse", number_or_null(r.one_step_mse)},
                    {"rollout_mse", number_or_null(r.rollout_mse)},
                    {"ot", number_or_null(r.ot)},
                    {"mmd", number_or_null(r.mmd)}};
  nlohmann::json per = nlohmann::json::array();
  for (const auto& tm : r.per_trajectory) {
    nlohmann::json e;
    e["one_step_mse"] = number_or_null(tm.one_step_mse);
    e["rollout_mse"] = number_or_null(tm.rollout_mse);
    e["ot"] = number_or_null(tm.ot);
    e["mmd"] = number_or_null(tm.mmd);
    e["sinkhorn_converged"] = tm.sinkhorn_converged;
    e["failed_step"] = tm.failed_step ? nlohmann::json(*tm.failed_step) : nlohmann::json(nullptr);
    e["curves"] = {{"one_step_mse", curve_json(tm.one_step_curve)},
                   {"rollout_mse", curve_json(tm.rollout_curve)},
                   {"ot", curve_json(tm.ot_curve)},
                   {"mmd", curve_json(tm.mmd_curve)}};
    per.push_back(std::move(e));
  }
  j["trajectories"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string report_curves_csv(const MetricReport& r) {
  std::size_t steps = 0;
  for (const auto& tm : r.per_trajectory) steps = std::max(steps, tm.rollout_curve.size());
  std::string out = "step,one_step_mse,rollout_mse,ot,mmd\n";
  char buf[64];
  auto column_mean = [&](auto member, std::size_t k) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& tm : r.per_trajectory) {
      const std::vector<double>& c = tm.*member;
      if (k < c.size() && std::isfinite(c[k])) {
        s += c[k];
        ++n;
      }
    }
    return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t k = 0; k < steps; ++k) {
    out += std::to_string(k + 1);
    for (auto member : {&TrajectoryMetrics::one_step_curve, &TrajectoryMetrics::rollout_curve,
                        &TrajectoryMetrics::ot_curve, &TrajectoryMetrics::mmd_curve}) {
      const double v = column_mean(member, k);
      out += ",";
      if (std::isfinite(v)) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace gns
