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

#include "gns/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gns/error.hpp"
#include "gns/json_config.hpp"
#include "gns/rollout.hpp"

namespace gns {

namespace {

// RNG streams derived from the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSamplerStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw usage_error("batch_size must be >= 1");
  if (max_steps < 0) throw usage_error("max_steps must be >= 0");
  if (!(lr_final > 0.0) || !(lr_start >= lr_final)) {
    throw usage_error("learning rates must satisfy lr_start >= lr_final > 0");
  }
  if (!(lr_decay_steps > 0.0)) throw usage_error("lr_decay_steps must be positive");
  if (shuffle_buffer < batch_size) throw usage_error("shuffle_buffer must be >= batch_size");
  if (eval_every < 0 || log_every < 1) throw usage_error("eval_every >= 0 and log_every >= 1 required");
  noise.validate();
}

double lr_schedule(const TrainConfig& c, std::int64_t step) {
  if (step < 0) throw usage_error("lr_schedule: step must be >= 0");
  return c.lr_final +
         (c.lr_start - c.lr_final) * std::pow(0.1, static_cast<double>(step) / c.lr_decay_steps);
}

std::size_t pairs_per_trajectory(std::size_t num_steps, std::size_t history) {
  return num_steps >= history + 2 ? num_steps - history - 1 : 0;
}

PairSampler::PairSampler(std::vector<std::size_t> lengths, std::size_t history,
                         std::size_t buffer_size, std::uint64_t seed)
    : lengths_(std::move(lengths)), history_(history), capacity_(buffer_size), rng_(seed) {
  if (lengths_.empty()) throw data_error("no training trajectories");
  if (capacity_ < 1) throw usage_error("shuffle buffer size must be >= 1");
  for (std::size_t i = 0; i < lengths_.size(); ++i) {
    if (lengths_[i] < history_ + 2) {
      throw data_error("training trajectory " + std::to_string(i) + " has " +
                       std::to_string(lengths_[i]) + " frames; C+2 = " +
                       std::to_string(history_ + 2) + " required");
    }
    pairs_per_epoch_ += pairs_per_trajectory(lengths_[i], history_);
  }
  cursor_frame_ = static_cast<std::uint32_t>(history_);
}

SampleRef PairSampler::pull() {
  SampleRef r{cursor_traj_, cursor_frame_};
  if (++cursor_frame_ + 1 >= lengths_[cursor_traj_]) {
    cursor_traj_ = static_cast<std::uint32_t>((cursor_traj_ + 1) % lengths_.size());
    cursor_frame_ = static_cast<std::uint32_t>(history_);
  }
  return r;
}

SampleRef PairSampler::next() {
  while (buffer_.size() < capacity_) buffer_.push_back(pull());
  std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
  const std::size_t k = pick(rng_);
  const SampleRef out = buffer_[k];
  buffer_[k] = pull();
  return out;
}

FeaturizedSample make_training_sample(const GnsModel& model, const TrainItem& item,
                                      const NoiseConfig& noise, Rng& rng) {
  const GnsConfig& c = model.config();
  const Trajectory& traj = *item.trajectory;
  if (item.frame + 1 >= traj.num_steps()) throw usage_error("training pair has no target frame");
  const ParticleState clean = traj.state_at(item.frame, c.history);
  const CorruptedState noisy = corrupt(clean, noise, rng);
  const auto& h = clean.position_history;
  const Tensor true_accel =
      finite_diff_accel(h[h.size() - 2], h.back(), traj.positions[item.frame + 1]);
  const graph::EdgeList edges =
      graph::radius_edges(noise.reconnect_graph ? noisy.state.current() : clean.current(),
                          c.connectivity_radius, c.include_self_edges);
  FeaturizedSample s = featurize(noisy.state, edges, model.layout(), traj.box, c.connectivity_radius);
  s.target_accel = adjust_target(true_accel, noisy.velocity_noise, noisy.position_noise,
                                 noise.position_correction);
  // Boundary particles are static: their target is exactly zero.
  for (std::size_t i = 0; i < s.num_nodes(); ++i) {
    if (!s.loss_mask[i]) {
      for (double& v : s.target_accel.row(i)) v = 0.0;
    }
  }
  return s;
}

Tensor normalized_targets(const NormStats& stats, const FeaturizedSample& raw) {
  return stats.target.normalize(raw.target_accel);
}

LossAndGrads loss_and_grads(const GnsModel& model, const FeaturizedSample& normalized) {
  ad::Tape tape;
  const BoundParams p = model.bind(tape);
  const ad::Var pred = model.forward(p, normalized);
  const ad::Var target = tape.constant(normalized.target_accel);
  const ad::Var loss = ad::mse_loss(pred, target, normalized.loss_mask);
  tape.backward(loss);
  LossAndGrads out;
  out.loss = loss.value()[0];
  out.grads.reserve(p.vars.size());
  for (const ad::Var& v : p.vars) out.grads.push_back(tape.grad(v));
  return out;
}

StepDiagnostics train_step(GnsModel& model, NormStats& stats, AdamState& adam,
                           std::span<const TrainItem> batch, const TrainConfig& config, Rng& rng) {
  if (batch.empty()) throw usage_error("train_step: empty batch");
  std::vector<FeaturizedSample> raw;
  raw.reserve(batch.size());
  for (const TrainItem& item : batch) {
    raw.push_back(make_training_sample(model, item, config.noise, rng));
    stats.update(raw.back());
  }
  FeaturizedSample joined = stats.normalize_inputs(concat_samples(raw));
  joined.target_accel = normalized_targets(stats, joined);

  StepDiagnostics diag;
  diag.lr = lr_schedule(config, adam.step);
  LossAndGrads lg = loss_and_grads(model, joined);
  diag.loss = lg.loss;
  double sq = 0.0;
  for (const Tensor& g : lg.grads)
    for (double v : g.values()) sq += v * v;
  diag.grad_norm = std::sqrt(sq);
  if (!std::isfinite(diag.loss)) {
    std::ostringstream msg;
    msg << "non-finite training loss at step " << adam.step << " (lr " << diag.lr
        << ", global grad norm " << diag.grad_norm << ")";
    for (std::size_t i = 0; i < lg.grads.size(); ++i) {
      double s = 0.0;
      for (double v : lg.grads[i].values()) s += v * v;
      msg << "\n  " << model.params().name(i) << ": grad norm " << std::sqrt(s);
    }
    throw numeric_error(msg.str());
  }
  adam_step(model.params(), lg.grads, adam, diag.lr);
  return diag;
}

TrainingState init_training_state(const GnsConfig& model_config, const TrainConfig& config) {
  GnsModel model(model_config, derive_seed(config.seed, kInitStream));
  NormStats stats = NormStats::for_layout(model.layout());
  AdamState adam = AdamState::for_params(model.params());
  return TrainingState{std::move(model), std::move(stats), std::move(adam), 0,
                       std::numeric_limits<double>::infinity(), -1};
}

namespace {

void put_stats(std::vector<NamedTensor>& out, const std::string& prefix, const RunningStats& s) {
  out.push_back({prefix + "/sum", Tensor(1, s.cols(), s.sums()), Precision::kFloat64});
  out.push_back({prefix + "/sumsq", Tensor(1, s.cols(), s.sums_of_squares()), Precision::kFloat64});
  out.push_back({prefix + "/count", Tensor::scalar(s.count()), Precision::kFloat64});
}

const Tensor& require_entry(const std::unordered_map<std::string, const Tensor*>& m,
                            const std::string& name, const std::string& path) {
  auto it = m.find(name);
  if (it == m.end()) throw data_error("checkpoint '" + path + "' lacks entry '" + name + "'");
  return *it->second;
}

RunningStats get_stats(const std::unordered_map<std::string, const Tensor*>& m,
                       const std::string& prefix, const std::string& path, std::size_t cols) {
  const Tensor& sum = require_entry(m, prefix + "/sum", path);
  const Tensor& sumsq = require_entry(m, prefix + "/sumsq", path);
  const Tensor& count = require_entry(m, prefix + "/count", path);
  if (sum.size() != cols || sumsq.size() != cols) {
    throw data_error("checkpoint '" + path + "': statistics '" + prefix + "' have " +
                     std::to_string(sum.size()) + " columns, config implies " +
                     std::to_string(cols));
  }
  RunningStats s(cols);
  s.restore(std::vector<double>(sum.values().begin(), sum.values().end()),
            std::vector<double>(sumsq.values().begin(), sumsq.values().end()), count[0]);
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state,
                     bool with_optimizer, const std::string& extra_json) {
  const Precision param_precision = with_optimizer ? Precision::kFloat64 : Precision::kFloat32;
  std::vector<NamedTensor> entries;
  const ParamStore& params = state.model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    entries.push_back({params.name(i), params.value(i), param_precision});
  }
  put_stats(entries, "stats/node", state.stats.node);
  put_stats(entries, "stats/edge", state.stats.edge);
  put_stats(entries, "stats/target", state.stats.target);
  entries.push_back({"train/step", Tensor::scalar(static_cast<double>(state.step)), Precision::kFloat64});
  entries.push_back({"train/best_val_mse", Tensor::scalar(state.best_val_mse), Precision::kFloat64});
  entries.push_back({"train/best_step", Tensor::scalar(static_cast<double>(state.best_step)), Precision::kFloat64});
  if (with_optimizer) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      entries.push_back({"adam/m/" + params.name(i), state.adam.m[i], Precision::kFloat64});
      entries.push_back({"adam/v/" + params.name(i), state.adam.v[i], Precision::kFloat64});
    }
    entries.push_back({"adam/step", Tensor::scalar(static_cast<double>(state.adam.step)), Precision::kFloat64});
  }
  write_checkpoint(path, entries);

  nlohmann::json sidecar;
  sidecar["format"] = "gns-checkpoint";
  sidecar["version"] = 1;
  sidecar["model"] = gns_config_to_json(state.model.config());
  sidecar["step"] = state.step;
  sidecar["has_optimizer_state"] = with_optimizer;
  sidecar["extra"] = nlohmann::json::parse(extra_json);
  std::ofstream out(path.string() + ".json", std::ios::trunc);
  if (!out) throw data_error("cannot write checkpoint sidecar for '" + path.string() + "'");
  out << sidecar.dump(2) << "\n";
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream in(p + ".json");
  if (!in) throw data_error("checkpoint sidecar '" + p + ".json' not found");
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("checkpoint sidecar '" + p + ".json' is not valid JSON: " + e.what());
  }
  const GnsConfig config = gns_config_from_json(sidecar.at("model"));
  const std::vector<NamedTensor> entries = read_checkpoint(path);
  std::unordered_map<std::string, const Tensor*> by_name;
  ParamStore stored;
  for (const NamedTensor& e : entries) by_name.emplace(e.name, &e.value);
  for (const NamedTensor& e : entries) {
    if (e.name.rfind("stats/", 0) == 0 || e.name.rfind("train/", 0) == 0 ||
        e.name.rfind("adam/", 0) == 0) {
      continue;
    }
    stored.add(e.name, e.value);
  }
  GnsModel model(config, stored);
  if (stored.size() != model.params().size()) {
    throw data_error("checkpoint '" + p + "' has " + std::to_string(stored.size()) +
                     " parameters, config implies " + std::to_string(model.params().size()));
  }
  const FeatureLayout layout = model.layout();
  NormStats stats{get_stats(by_name, "stats/node", p, layout.continuous_node_cols()),
                  get_stats(by_name, "stats/edge", p, layout.edge_cols()),
                  get_stats(by_name, "stats/target", p, layout.dim)};
  AdamState adam = AdamState::for_params(model.params());
  if (by_name.count("adam/step")) {
    adam.step = static_cast<std::int64_t>(require_entry(by_name, "adam/step", p)[0]);
    for (std::size_t i = 0; i < model.params().size(); ++i) {
      adam.m[i] = require_entry(by_name, "adam/m/" + model.params().name(i), p);
      adam.v[i] = require_entry(by_name, "adam/v/" + model.params().name(i), p);
    }
  }
  TrainingState s{std::move(model), std::move(stats), std::move(adam), 0,
                  std::numeric_limits<double>::infinity(), -1};
  s.step = static_cast<std::int64_t>(require_entry(by_name, "train/step", p)[0]);
  s.best_val_mse = require_entry(by_name, "train/best_val_mse", p)[0];
  s.best_step = static_cast<std::int64_t>(require_entry(by_name, "train/best_step", p)[0]);
  return s;
}

double validation_rollout_mse(const GnsModel& model, const NormStats& stats,
                              std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t c = model.config().history;
  double total = 0.0;
  for (const Trajectory& t : trajectories) {
    if (t.num_steps() < c + 2) throw data_error("validation trajectory shorter than C+2 frames");
    RolloutOptions opt;
    opt.history = c;
    opt.start_frame = c;
    opt.steps = t.num_steps() - c - 1;
    const Rollout r = rollout(model, stats, t, opt);
    if (r.failed_step) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = c + 1; k < t.num_steps(); ++k) {
      const Tensor& pred = r.trajectory.positions[k];
      const Tensor& truth = t.positions[k];
      for (std::size_t i = 0; i < t.num_particles(); ++i) {
        if (is_boundary(t.material[i])) continue;
        for (std::size_t d = 0; d < t.dim(); ++d) {
          const double e = pred(i, d) - truth(i, d);
          sum += e * e;
          ++count;
        }
      }
    }
    total += count ? sum / static_cast<double>(count) : 0.0;
  }
  return total / static_cast<double>(trajectories.size());
}

std::string format_log_csv(std::span<const LogRow> rows) {
  std::string out = "step,loss,lr,val_rollout_mse\n";
  char buf[160];
  for (const LogRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,", static_cast<long long>(r.step), r.loss, r.lr);
    out += buf;
    if (r.val_rollout_mse) {
      std::snprintf(buf, sizeof(buf), "%.9g", *r.val_rollout_mse);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

namespace {

void quantize_params(GnsModel& model) {
  ParamStore& p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (double& v : p.value(i).values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

FitResult fit(const GnsConfig& model_config, const TrainConfig& config,
              std::span<const Trajectory> train, std::span<const Trajectory> valid,
              const FitOptions& options) {
  config.validate();
  model_config.validate();
  if (train.empty()) throw data_error("fit: training split is empty");

  TrainingState state = options.resume_from ? load_checkpoint(*options.resume_from)
                                            : init_training_state(model_config, config);
  if (options.resume_from &&
      gns_config_to_json(state.model.config()) != gns_config_to_json(model_config)) {
    throw usage_error("resume checkpoint does not match the model configuration");
  }

  std::vector<std::size_t> lengths;
  for (const Trajectory& t : train) lengths.push_back(t.num_steps());
  PairSampler sampler(lengths, model_config.history, config.shuffle_buffer,
                      derive_seed(config.seed, kSamplerStream));
  for (std::int64_t s = 0; s < state.step * static_cast<std::int64_t>(config.batch_size); ++s) {
    sampler.next();
  }
  const std::span<const Trajectory> val =
      valid.subspan(0, std::min(valid.size(), config.num_valid_trajectories));

  namespace fs = std::filesystem;
  const bool persist = !options.out_dir.empty();
  std::ofstream log_file;
  if (persist) {
    fs::create_directories(options.out_dir);
    // A resumed run continues the existing log.
    const fs::path log_path = options.out_dir / "train_log.csv";
    const bool append = options.resume_from && fs::exists(log_path);
    log_file.open(log_path, append ? std::ios::app : std::ios::trunc);
    if (!log_file) throw data_error("cannot write training log in '" + options.out_dir.string() + "'");
    if (!append) log_file << "step,loss,lr,val_rollout_mse\n";
  }

  FitResult result{std::move(state), std::nullopt, {}};
  TrainingState& st = result.final_state;
  auto snapshot_best = [&](double mse) {
    st.best_val_mse = mse;
    st.best_step = st.step;
    TrainingState best{st.model, st.stats, AdamState{}, st.step, mse, st.step};
    quantize_params(best.model);
    if (persist) save_checkpoint(options.out_dir / "best.ckpt", best, false);
    result.best_state = std::move(best);
  };

  std::vector<TrainItem> batch(config.batch_size);
  while (st.step < config.max_steps) {
    for (TrainItem& item : batch) {
      const SampleRef ref = sampler.next();
      item = {&train[ref.trajectory], ref.frame};
    }
    Rng noise_rng(derive_seed(config.seed, kNoiseStream, static_cast<std::uint64_t>(st.step)));
    const StepDiagnostics d = train_step(st.model, st.stats, st.adam, batch, config, noise_rng);
    st.step += 1;
    if (options.on_step) options.on_step(st.step, d.loss);

    const bool eval_now = !val.empty() && ((config.eval_every > 0 && st.step % config.eval_every == 0) ||
                                           st.step == config.max_steps);
    std::optional<double> val_mse;
    if (eval_now) {
      val_mse = validation_rollout_mse(st.model, st.stats, val);
      if (*val_mse < st.best_val_mse || st.best_step < 0) snapshot_best(*val_mse);
    }
    if (st.step % config.log_every == 0 || val_mse || st.step == config.max_steps) {
      LogRow row{st.step, d.loss, d.lr, val_mse};
      result.log.push_back(row);
      if (persist) {
        log_file << format_log_csv(std::span<const LogRow>(&row, 1)).substr(
            std::string_view("step,loss,lr,val_rollout_mse\n").size());
        log_file.flush();
      }
    }
  }
  if (persist) save_checkpoint(options.out_dir / "last.ckpt", st, true);
  return result;
}

}  // namespace gns
