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

#include "gns/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gns/error.hpp"
#include "gns/metrics.hpp"
#include "gns/plot.hpp"
#include "gns/rollout.hpp"
#include "gns/train.hpp"

namespace gns::cmd {

using nlohmann::json;

namespace {

std::vector<std::string> split_key(const std::string& dotted) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(dotted);
  while (std::getline(in, part, '.')) {
    if (part.empty()) throw usage_error("malformed config key '" + dotted + "'");
    parts.push_back(part);
  }
  if (parts.empty()) throw usage_error("empty config key");
  return parts;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw data_error("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void say(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

ConfigSource ConfigSource::from_file(const fs::path& path) {
  ConfigSource s;
  s.overrides = parse_json_text(read_text(path), "config file '" + path.string() + "'");
  if (!s.overrides.is_object()) throw usage_error("config file '" + path.string() + "' must hold an object");
  run_config_from_json(s.overrides);  // reject unknown keys early
  return s;
}

void ConfigSource::set(const std::string& dotted_key, json value) {
  const auto parts = split_key(dotted_key);
  json* node = &overrides;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw usage_error("config key '" + dotted_key + "' crosses a non-object");
    node = &next;
  }
  (*node)[parts.back()] = std::move(value);
}

bool ConfigSource::has(const std::string& dotted_key) const {
  const json* node = &overrides;
  for (const auto& part : split_key(dotted_key)) {
    if (!node->is_object()) return false;
    auto it = node->find(part);
    if (it == node->end()) return false;
    node = &*it;
  }
  return true;
}

RunConfig ConfigSource::resolve() const { return run_config_from_json(overrides); }

RunConfig resolve_for_dataset(const ConfigSource& source, const Dataset& dataset) {
  RunConfig c = source.resolve();
  c.scenario = dataset.scenario;
  c.seed = dataset.seed;
  c.splits = {dataset.train.size(), dataset.valid.size(), dataset.test.size()};
  c.model.dim = dataset.scenario.dim;
  for (const char* name : {"train", "valid", "test"}) {
    const auto& entries = dataset.split(name);
    if (!entries.empty()) {
      c.model.num_globals = read_trajectory(entries.front().file).num_globals;
      break;
    }
  }
  if (!source.has("model.connectivity_radius")) {
    c.model.connectivity_radius = dataset.scenario.suggested_radius;
  }
  c.model.validate();
  return c;
}

void echo_config(const fs::path& dir, const RunConfig& config) {
  write_text(dir / "config.json", run_config_to_json(config).dump(2) + "\n");
}

void gen(const ConfigSource& source, const fs::path& out) {
  const RunConfig c = source.resolve();
  make_dataset(c.scenario, c.splits, c.seed, out);
  echo_config(out, c);
}

std::vector<Trajectory> load_split(const Dataset& dataset, const std::string& split,
                                   std::size_t limit) {
  const auto& entries = dataset.split(split);
  const std::size_t n = limit ? std::min(limit, entries.size()) : entries.size();
  std::vector<Trajectory> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(read_trajectory(entries[i].file));
  return out;
}

void train(const ConfigSource& source, const TrainArgs& args) {
  const Dataset ds = load_dataset_manifest(args.dataset);
  const RunConfig c = resolve_for_dataset(source, ds);
  const std::vector<Trajectory> tr = load_split(ds, "train");
  const std::vector<Trajectory> va = load_split(ds, "valid", c.train.num_valid_trajectories);
  if (tr.empty()) throw data_error("dataset '" + args.dataset.string() + "' has no training trajectories");
  fs::create_directories(args.out);
  echo_config(args.out, c);

  FitOptions fo;
  fo.out_dir = args.out;
  fo.resume_from = args.resume;
  double acc = 0.0;
  std::int64_t n = 0;
  const std::int64_t every = std::max<std::int64_t>(1, c.train.log_every);
  fo.on_step = [&](std::int64_t step, double loss) {
    acc += loss;
    ++n;
    if (step % every == 0 || step == c.train.max_steps) {
      say(args.progress, "step " + std::to_string(step) + " loss " + num(acc / static_cast<double>(n)));
      acc = 0.0;
      n = 0;
    }
  };
  const FitResult r = fit(c.model, c.train, tr, va, fo);
  if (r.best_state) {
    say(args.progress, "best validation rollout MSE " + num(r.best_state->best_val_mse) +
                           " at step " + std::to_string(r.best_state->best_step));
  }
}

namespace {

void check_compatible(const GnsConfig& model, const Trajectory& t, const std::string& what) {
  if (t.dim() != model.dim || t.num_globals != model.num_globals) {
    throw data_error("checkpoint/config mismatch: model expects D=" + std::to_string(model.dim) +
                     ", G=" + std::to_string(model.num_globals) + " but " + what + " has D=" +
                     std::to_string(t.dim()) + ", G=" + std::to_string(t.num_globals));
  }
}

// Model keys the user set explicitly must agree with the checkpoint.
void check_checkpoint_config(const ConfigSource& source, const GnsConfig& stored) {
  if (!source.overrides.contains("model") || !source.overrides["model"].is_object()) return;
  const json have = gns_config_to_json(stored);
  for (const auto& [key, value] : source.overrides["model"].items()) {
    if (have.contains(key) && have[key] != value) {
      throw data_error("checkpoint/config mismatch: model." + key + " is " + value.dump() +
                       " in the configuration but " + have[key].dump() + " in the checkpoint");
    }
  }
}

}  // namespace

void rollout(const RolloutArgs& args) {
  const TrainingState st = load_checkpoint(args.checkpoint);
  const Dataset ds = load_dataset_manifest(args.dataset);
  const auto& entries = ds.split(args.split);
  if (args.traj_index >= entries.size()) {
    throw usage_error("--traj-index " + std::to_string(args.traj_index) + " out of range: split '" +
                      args.split + "' has " + std::to_string(entries.size()) + " trajectories");
  }
  const Trajectory src = read_trajectory(entries[args.traj_index].file);
  check_compatible(st.model.config(), src, "trajectory " + entries[args.traj_index].file.string());
  const std::size_t C = st.model.config().history;
  if (src.num_steps() < C + 1) throw data_error("source trajectory is shorter than the C+1 window");

  RolloutOptions ro;
  ro.history = C;
  ro.start_frame = C;
  ro.steps = args.steps ? args.steps : src.num_steps() - C - 1;
  if (ro.steps == 0) throw usage_error("rollout needs at least one step");
  const Rollout r = gns::rollout(st.model, st.stats, src, ro);

  Trajectory out = r.trajectory;
  write_trajectory(args.out, out);
  json meta;
  meta["format"] = "gns-rollout";
  meta["version"] = 1;
  meta["checkpoint"] = args.checkpoint.string();
  meta["checkpoint_step"] = st.step;
  meta["dataset"] = args.dataset.string();
  meta["dataset_seed"] = ds.seed;
  meta["split"] = args.split;
  meta["traj_index"] = args.traj_index;
  meta["trajectory_seed"] = entries[args.traj_index].seed;
  meta["start_frame"] = r.start_frame;
  meta["initial_frames"] = r.initial_frames;
  meta["predicted_steps"] = r.predicted_steps();
  meta["failed_step"] = r.failed_step ? json(*r.failed_step) : json(nullptr);
  write_text(args.out.string() + ".json", meta.dump(2) + "\n");
  if (args.timings_csv) {
    std::string csv = "step,seconds\n";
    for (std::size_t i = 0; i < r.step_seconds.size(); ++i) {
      csv += std::to_string(i + 1) + "," + num(r.step_seconds[i]) + "\n";
    }
    write_text(*args.timings_csv, csv);
  }
  if (r.failed_step) throw numeric_error(r.failure);
}

void eval(const ConfigSource& source, const EvalArgs& args) {
  const Dataset ds = load_dataset_manifest(args.dataset);
  RunConfig c = resolve_for_dataset(source, ds);
  std::optional<TrainingState> st;
  if (args.checkpoint) {
    st = load_checkpoint(*args.checkpoint);
    check_checkpoint_config(source, st->model.config());
    c.model = st->model.config();
  }
  c.metrics.mse = c.metrics.ot = c.metrics.mmd = false;
  std::istringstream list(args.metrics);
  std::string m;
  while (std::getline(list, m, ',')) {
    if (m == "mse") c.metrics.mse = true;
    else if (m == "ot") c.metrics.ot = true;
    else if (m == "mmd") c.metrics.mmd = true;
    else throw usage_error("unknown metric '" + m + "' (expected mse, ot, mmd)");
  }
  const std::vector<Trajectory> truth = load_split(ds, args.split);
  if (truth.empty()) throw data_error("split '" + args.split + "' is empty");
  for (const Trajectory& t : truth) check_compatible(c.model, t, "split '" + args.split + "'");

  GroundTruthPredictor oracle;
  std::optional<ModelPredictor> model;
  if (st) model.emplace(st->model, st->stats);
  const AccelPredictor& predictor = model ? static_cast<const AccelPredictor&>(*model) : oracle;
  const MetricReport report = evaluate(predictor, truth, c.model.history, c.metrics);

  json j = json::parse(report_to_json(report));
  j["predictor"] = st ? "model" : "oracle";
  j["checkpoint"] = args.checkpoint ? json(args.checkpoint->string()) : json(nullptr);
  j["split"] = args.split;
  fs::create_directories(args.out);
  write_text(args.out / "report.json", j.dump(2) + "\n");
  write_text(args.out / "curves.csv", report_curves_csv(report));
  echo_config(args.out, c);
}

AblationAxis parse_ablation_axis(const std::string& s) {
  if (s == "M") return AblationAxis::kMessagePassing;
  if (s == "radius") return AblationAxis::kRadius;
  if (s == "noise") return AblationAxis::kNoise;
  if (s == "shared") return AblationAxis::kShared;
  if (s == "encoder") return AblationAxis::kEncoder;
  throw usage_error("unknown ablation axis '" + s + "' (expected M, radius, noise, shared, encoder)");
}

const char* ablation_axis_name(AblationAxis a) {
  switch (a) {
    case AblationAxis::kMessagePassing: return "M";
    case AblationAxis::kRadius: return "radius";
    case AblationAxis::kNoise: return "noise";
    case AblationAxis::kShared: return "shared";
    case AblationAxis::kEncoder: return "encoder";
  }
  return "?";
}

namespace {

double parse_number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw usage_error(std::string(what) + " value '" + s + "' is not a number");
  return v;
}

}  // namespace

void apply_axis(RunConfig& c, AblationAxis axis, const std::string& value) {
  switch (axis) {
    case AblationAxis::kMessagePassing: {
      const double m = parse_number(value, "M");
      if (m < 0 || m != std::floor(m)) throw usage_error("M value '" + value + "' must be a non-negative integer");
      c.model.message_passing_steps = static_cast<std::size_t>(m);
      break;
    }
    case AblationAxis::kRadius:
      c.model.connectivity_radius = parse_number(value, "radius");
      break;
    case AblationAxis::kNoise:
      c.train.noise.sigma_v = parse_number(value, "noise");
      break;
    case AblationAxis::kShared:
      if (value == "true" || value == "1" || value == "shared") c.model.shared_processor_params = true;
      else if (value == "false" || value == "0" || value == "unshared") c.model.shared_processor_params = false;
      else throw usage_error("shared value '" + value + "' must be true or false");
      break;
    case AblationAxis::kEncoder:
      c.model.encoder_variant = parse_encoder_variant(value);
      break;
  }
  c.model.validate();
  c.train.validate();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<AblationRow> run_ablation(const RunConfig& base, AblationAxis axis,
                                      const std::vector<std::string>& values, std::size_t seeds,
                                      std::span<const Trajectory> train,
                                      std::span<const Trajectory> valid,
                                      std::span<const Trajectory> test, const Progress& progress) {
  if (values.empty()) throw usage_error("ablation needs at least one value");
  if (seeds == 0) throw usage_error("ablation needs at least one seed");
  if (test.empty()) throw data_error("ablation needs a non-empty test split");
  std::vector<AblationRow> rows;
  for (const std::string& value : values) {
    RunConfig c = base;
    apply_axis(c, axis, value);
    MetricOptions mo = c.metrics;
    mo.ot = mo.mmd = false;
    mo.mse = true;
    AblationRow row;
    row.value = value;
    for (std::size_t s = 0; s < seeds; ++s) {
      TrainConfig tc = c.train;
      tc.seed = base.train.seed + s;
      const FitResult fr = fit(c.model, tc, train, valid);
      const TrainingState& st = fr.best_state ? *fr.best_state : fr.final_state;
      const ModelPredictor predictor(st.model, st.stats);
      const MetricReport rep = evaluate(predictor, test, c.model.history, mo);
      row.one_step_mse.push_back(rep.one_step_mse);
      row.rollout_mse.push_back(rep.rollout_mse);
      say(progress, std::string(ablation_axis_name(axis)) + "=" + value + " seed " +
                        std::to_string(tc.seed) + ": one-step " + num(rep.one_step_mse) +
                        ", rollout " + num(rep.rollout_mse));
    }
    row.median_one_step = median(row.one_step_mse);
    row.median_rollout = median(row.rollout_mse);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(AblationAxis axis, const std::vector<AblationRow>& rows) {
  std::string out =
      "axis,value,seeds,one_step_mse_median,one_step_mse_min,one_step_mse_max,"
      "rollout_mse_median,rollout_mse_min,rollout_mse_max\n";
  for (const AblationRow& r : rows) {
    auto [olo, ohi] = std::minmax_element(r.one_step_mse.begin(), r.one_step_mse.end());
    auto [rlo, rhi] = std::minmax_element(r.rollout_mse.begin(), r.rollout_mse.end());
    out += std::string(ablation_axis_name(axis)) + "," + r.value + "," +
           std::to_string(r.one_step_mse.size()) + "," + num(r.median_one_step) + "," + num(*olo) +
           "," + num(*ohi) + "," + num(r.median_rollout) + "," + num(*rlo) + "," + num(*rhi) + "\n";
  }
  return out;
}

void ablate(const ConfigSource& source, const AblateArgs& args) {
  const AblationAxis axis = parse_ablation_axis(args.axis);
  const Dataset ds = load_dataset_manifest(args.dataset);
  const RunConfig base = resolve_for_dataset(source, ds);
  for (const std::string& v : args.values) {
    RunConfig probe = base;
    apply_axis(probe, axis, v);  // reject bad values before any training
  }
  const std::vector<Trajectory> tr = load_split(ds, "train");
  const std::vector<Trajectory> va = load_split(ds, "valid", base.train.num_valid_trajectories);
  const std::vector<Trajectory> te = load_split(ds, "test");
  if (tr.empty()) throw data_error("dataset '" + args.dataset.string() + "' has no training trajectories");
  fs::create_directories(args.out);
  echo_config(args.out, base);
  const auto rows = run_ablation(base, axis, args.values, args.seeds, tr, va, te, args.progress);
  write_text(args.out / "ablation.csv", ablation_csv(axis, rows));
}

void plot(const PlotArgs& args) {
  const plot::Table t = plot::parse_csv(read_text(args.in));
  std::string svg;
  if (t.column("axis") >= 0 && t.column("value") >= 0) {
    std::vector<std::string> labels;
    for (const auto& row : t.cells) labels.push_back(row.size() > 1 ? row[1] : "");
    const std::string axis = t.cells.empty() || t.cells[0].empty() ? "" : t.cells[0][0];
    std::vector<std::string> panels;
    for (const char* metric : {"one_step_mse", "rollout_mse"}) {
      const int med = t.column(std::string(metric) + "_median");
      if (med < 0) throw data_error("ablation CSV lacks column " + std::string(metric) + "_median");
      plot::BarChart b;
      b.title = std::string(metric == std::string("one_step_mse") ? "One-step" : "Rollout") +
                " MSE vs " + axis;
      b.y_label = "MSE (median over seeds)";
      b.log_y = true;
      b.labels = labels;
      b.values = t.numbers(med);
      const int lo = t.column(std::string(metric) + "_min");
      const int hi = t.column(std::string(metric) + "_max");
      if (lo >= 0 && hi >= 0) {
        b.low = t.numbers(lo);
        b.high = t.numbers(hi);
      }
      panels.push_back(plot::bar_chart_svg(b));
    }
    svg = plot::combine_svg(panels);
  } else {
    if (t.header.size() < 2) throw data_error("curve CSV needs an x column and at least one series");
    plot::LineChart ch;
    ch.title = args.in.filename().string();
    ch.x_label = t.header[0];
    ch.y_label = "value";
    ch.log_y = true;
    const std::vector<double> x = t.numbers(0);
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      std::vector<double> y = t.numbers(static_cast<int>(c));
      if (std::none_of(y.begin(), y.end(), [](double v) { return std::isfinite(v) && v > 0; })) continue;
      ch.series.push_back({t.header[c], x, std::move(y)});
    }
    svg = plot::line_chart_svg(ch);
  }
  const std::string ext = args.out.extension().string();
  if (ext == ".csv") {
    // CSV output: the parsed table, normalized, plus the SVG next to it.
    std::string csv;
    for (std::size_t i = 0; i < t.header.size(); ++i) csv += (i ? "," : "") + t.header[i];
    csv += "\n";
    for (const auto& row : t.cells) {
      for (std::size_t i = 0; i < row.size(); ++i) csv += (i ? "," : "") + row[i];
      csv += "\n";
    }
    write_text(args.out, csv);
    fs::path svg_path = args.out;
    svg_path.replace_extension(".svg");
    write_text(svg_path, svg);
  } else {
    write_text(args.out, svg);
  }
}

}  // namespace gns::cmd
