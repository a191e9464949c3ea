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

// Command-line front end. Talks to the simulator only through the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gns/gns.h"

namespace {

struct ConfigDeleter {
  void operator()(gns_config* c) const { gns_config_free(c); }
};
using ConfigPtr = std::unique_ptr<gns_config, ConfigDeleter>;

// Thrown to unwind with a status from the library.
struct Failure {
  gns_status status;
};

void check(gns_status s) {
  if (s != GNS_OK) throw Failure{s};
}

void print_progress(const char* msg, void* user) {
  if (*static_cast<const bool*>(user)) std::fprintf(stderr, "%s\n", msg);
}

// Applies a "key=value" override; the value is JSON when it parses as JSON
// and a plain string otherwise.
void apply_set(gns_config* cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", assignment.c_str());
    throw Failure{GNS_ERROR_USAGE};
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  if (gns_config_set_json(cfg, key.c_str(), value.c_str()) != GNS_OK) {
    check(gns_config_set_string(cfg, key.c_str(), value.c_str()));
  }
}

struct Common {
  std::string config_path;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a config key, e.g. --set train.lr_start=3e-4");
  }

  ConfigPtr build() const {
    gns_config* raw = nullptr;
    check(config_path.empty() ? gns_config_new(&raw) : gns_config_load(config_path.c_str(), &raw));
    ConfigPtr cfg(raw);
    for (const auto& s : sets) apply_set(cfg.get(), s);
    return cfg;
  }
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned particle simulation: data generation, training, rollout and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gns_version());
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  // gen
  Common gen_common;
  std::string gen_scenario, gen_out, gen_splits;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen", "Generate a ground-truth dataset");
  gen_common.attach(gen);
  gen->add_option("--scenario", gen_scenario, "gravity-bounce or springs");
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--splits", gen_splits, "train,valid,test trajectory counts (default 50,5,5)");
  gen->add_option("--seed", gen_seed, "Base seed");

  // train
  Common train_common;
  std::string train_dataset, train_out, train_resume;
  std::optional<std::int64_t> train_steps;
  std::optional<std::uint64_t> train_seed;
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train_common.attach(train);
  train->add_option("--dataset", train_dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", train_out, "Output run directory")->required();
  train->add_option("--max-steps", train_steps, "Number of optimizer steps");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--resume", train_resume, "Resume from a last.ckpt")->check(CLI::ExistingFile);

  // rollout
  std::string ro_ckpt, ro_dataset, ro_split = "test", ro_out, ro_timings;
  std::size_t ro_index = 0, ro_steps = 0;
  auto* ro = app.add_subcommand("rollout", "Roll a trained model out on one trajectory");
  ro->add_option("--checkpoint", ro_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ro->add_option("--dataset", ro_dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ro->add_option("--split", ro_split, "train, valid or test");
  ro->add_option("--traj-index", ro_index, "Trajectory index within the split");
  ro->add_option("--steps", ro_steps, "Predicted steps (default: to the end of the source)");
  ro->add_option("--out", ro_out, "Output trajectory file; metadata goes to <out>.json")->required();
  ro->add_option("--timings", ro_timings, "Also write per-step wall-clock timings to this CSV");

  // eval
  Common eval_common;
  std::string ev_ckpt, ev_dataset, ev_split = "test", ev_metrics = "mse,ot,mmd", ev_out;
  bool ev_oracle = false;
  std::optional<std::uint64_t> ev_seed;
  auto* ev = app.add_subcommand("eval", "Compute one-step and rollout metrics");
  eval_common.attach(ev);
  auto* ck = ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->check(CLI::ExistingFile);
  auto* orc = ev->add_flag("--oracle", ev_oracle, "Evaluate the ground-truth oracle instead of a model");
  ck->excludes(orc);
  ev->add_option("--dataset", ev_dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--split", ev_split, "train, valid or test");
  ev->add_option("--metrics", ev_metrics, "Comma list of mse, ot, mmd");
  ev->add_option("--seed", ev_seed, "Subsampling seed for distributional metrics");
  ev->add_option("--out", ev_out, "Output directory")->required();

  // ablate
  Common ab_common;
  std::string ab_dataset, ab_axis, ab_out;
  std::vector<std::string> ab_values;
  std::size_t ab_seeds = 3;
  std::optional<std::int64_t> ab_steps;
  auto* ab = app.add_subcommand("ablate", "Sweep one design axis with everything else fixed");
  ab_common.attach(ab);
  ab->add_option("--dataset", ab_dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ab->add_option("--axis", ab_axis, "M, radius, noise, shared or encoder")->required();
  ab->add_option("--values", ab_values, "Values to try")->required()->delimiter(',');
  ab->add_option("--seeds", ab_seeds, "Seeds per value (default 3)");
  ab->add_option("--steps", ab_steps, "Training steps per model");
  ab->add_option("--out", ab_out, "Output directory")->required();

  // plot
  std::string pl_in, pl_out;
  auto* pl = app.add_subcommand("plot", "Render curves or ablation CSV as SVG");
  pl->add_option("--in", pl_in, "curves.csv, train_log.csv or ablation.csv")->required()->check(CLI::ExistingFile);
  pl->add_option("--out", pl_out, "Output .svg (or .csv to also copy the table)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return GNS_ERROR_USAGE;
  }

  bool verbose = !quiet;
  try {
    if (*gen) {
      ConfigPtr cfg = gen_common.build();
      if (!gen_scenario.empty()) check(gns_config_set_string(cfg.get(), "scenario.kind", gen_scenario.c_str()));
      if (gen_seed) check(gns_config_set_json(cfg.get(), "seed", std::to_string(*gen_seed).c_str()));
      if (!gen_splits.empty()) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : gen_splits + ",") {
          if (c == ',') {
            parts.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
        if (parts.size() != 3) {
          std::fprintf(stderr, "error: --splits expects three comma-separated counts\n");
          return GNS_ERROR_USAGE;
        }
        const char* names[] = {"splits.train", "splits.valid", "splits.test"};
        for (int i = 0; i < 3; ++i) check(gns_config_set_json(cfg.get(), names[i], parts[i].c_str()));
      }
      check(gns_gen(cfg.get(), gen_out.c_str()));
    } else if (*train) {
      ConfigPtr cfg = train_common.build();
      if (train_steps) check(gns_config_set_json(cfg.get(), "train.max_steps", std::to_string(*train_steps).c_str()));
      if (train_seed) check(gns_config_set_json(cfg.get(), "train.seed", std::to_string(*train_seed).c_str()));
      check(gns_train(cfg.get(), train_dataset.c_str(), train_out.c_str(), opt(train_resume),
                      print_progress, &verbose));
    } else if (*ro) {
      check(gns_rollout(ro_ckpt.c_str(), ro_dataset.c_str(), ro_split.c_str(), ro_index, ro_steps,
                        ro_out.c_str(), opt(ro_timings)));
    } else if (*ev) {
      if (ev_ckpt.empty() && !ev_oracle) {
        std::fprintf(stderr, "error: eval needs --checkpoint or --oracle\n");
        return GNS_ERROR_USAGE;
      }
      ConfigPtr cfg = eval_common.build();
      if (ev_seed) check(gns_config_set_json(cfg.get(), "metrics.seed", std::to_string(*ev_seed).c_str()));
      check(gns_eval(cfg.get(), opt(ev_ckpt), ev_dataset.c_str(), ev_split.c_str(), ev_metrics.c_str(),
                     ev_out.c_str()));
    } else if (*ab) {
      ConfigPtr cfg = ab_common.build();
      if (ab_steps) check(gns_config_set_json(cfg.get(), "train.max_steps", std::to_string(*ab_steps).c_str()));
      std::string values;
      for (const auto& v : ab_values) values += (values.empty() ? "" : ",") + v;
      check(gns_ablate(cfg.get(), ab_dataset.c_str(), ab_axis.c_str(), values.c_str(), ab_seeds,
                       ab_out.c_str(), print_progress, &verbose));
    } else if (*pl) {
      check(gns_plot(pl_in.c_str(), pl_out.c_str()));
    }
  } catch (const Failure& f) {
    const char* kinds[] = {"", "usage error", "data error", "numeric error"};
    const int code = static_cast<int>(f.status);
    std::fprintf(stderr, "%s: %s\n", code >= 1 && code <= 3 ? kinds[code] : "error", gns_last_error());
    return code;
  }
  return 0;
}
