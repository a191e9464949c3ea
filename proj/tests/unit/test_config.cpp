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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gns/commands.hpp"
#include "gns/error.hpp"
#include "gns/json_config.hpp"
#include "gns/plot.hpp"

using namespace gns;
using nlohmann::json;

namespace {

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("configuration structs round trip through JSON") {
  RunConfig c;
  c.seed = 9;
  c.scenario = ScenarioConfig::defaults(ScenarioKind::kSprings);
  c.splits = {4, 3, 2};
  c.model.message_passing_steps = 3;
  c.model.encoder_variant = EncoderVariant::kAbsolute;
  c.model.shared_processor_params = true;
  c.train.noise.type = NoiseType::kCorrelated;
  c.train.noise.sigma_v = 1e-3;
  c.train.lr_start = 5e-4;
  c.metrics.mmd_sigma = 0.2;
  c.metrics.rollout_steps = 40;
  const json j = run_config_to_json(c);
  const RunConfig back = run_config_from_json(j);
  CHECK(run_config_to_json(back) == j);
  CHECK(back.model.encoder_variant == EncoderVariant::kAbsolute);
  CHECK(back.train.noise.type == NoiseType::kCorrelated);
  CHECK(back.scenario.kind == ScenarioKind::kSprings);
  CHECK(back.metrics.rollout_steps == 40);
}

TEST_CASE("missing sections keep desk defaults") {
  const RunConfig c = run_config_from_json(json::object());
  CHECK(c.model.latent_size == desk_model_defaults().latent_size);
  CHECK(c.model.message_passing_steps == 5);
  CHECK(c.train.noise.sigma_v == desk_train_defaults().noise.sigma_v);
  const RunConfig partial = run_config_from_json(json::parse(R"({"model": {"latent_size": 16}})"));
  CHECK(partial.model.latent_size == 16);
  CHECK(partial.model.mlp_hidden_size == desk_model_defaults().mlp_hidden_size);
}

TEST_CASE("unknown keys and wrong types are usage errors naming the path") {
  const std::string unknown = error_text([] {
    run_config_from_json(json::parse(R"({"train": {"noise": {"sigma": 1}}})"));
  });
  CHECK(unknown.find("train.noise") != std::string::npos);
  CHECK(unknown.find("unknown key 'sigma'") != std::string::npos);
  try {
    run_config_from_json(json::parse(R"({"model": {"latent_size": "big"}})"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUsage);
    CHECK(std::string(e.what()).find("latent_size") != std::string::npos);
  }
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"train": {"noise": {"type": "pink"}}})")), Error);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"metrics": {"mmd_sigma": 0}})")), Error);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"([1, 2])")), Error);
  CHECK_THROWS_AS(parse_json_text("{oops", "inline"), Error);
}

TEST_CASE("scenario kind selects its own defaults") {
  const ScenarioConfig s = scenario_from_json(json::parse(R"({"kind": "springs"})"));
  CHECK(s.suggested_radius == ScenarioConfig::defaults(ScenarioKind::kSprings).suggested_radius);
  const ScenarioConfig d3 = scenario_from_json(json::parse(R"({"dim": 3})"));
  CHECK(d3.box.dim() == 3);
  CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"kind": "mpm"})")), Error);
}

TEST_CASE("config files and dotted overrides") {
  const auto dir = std::filesystem::temp_directory_path() / "gns_unit" / "cfg";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "run.json") << R"({"train": {"max_steps": 7}, "seed": 3})";
  }
  cmd::ConfigSource src = cmd::ConfigSource::from_file(dir / "run.json");
  CHECK(src.has("train.max_steps"));
  CHECK(!src.has("train.noise.sigma_v"));
  src.set("train.noise.sigma_v", 1e-3);
  src.set("model.message_passing_steps", 2);
  CHECK(src.has("train.noise.sigma_v"));
  const RunConfig c = src.resolve();
  CHECK(c.train.max_steps == 7);
  CHECK(c.seed == 3);
  CHECK(c.train.noise.sigma_v == 1e-3);
  CHECK(c.model.message_passing_steps == 2);
  CHECK(load_run_config(dir / "run.json").train.max_steps == 7);
  CHECK_THROWS_AS(cmd::ConfigSource::from_file(dir / "absent.json"), Error);
  src.set("model.bogus", true);
  CHECK_THROWS_AS(src.resolve(), Error);
}

TEST_CASE("ablation axes") {
  RunConfig c;
  cmd::apply_axis(c, cmd::AblationAxis::kMessagePassing, "3");
  CHECK(c.model.message_passing_steps == 3);
  cmd::apply_axis(c, cmd::AblationAxis::kNoise, "1e-4");
  CHECK(c.train.noise.sigma_v == 1e-4);
  cmd::apply_axis(c, cmd::AblationAxis::kShared, "true");
  CHECK(c.model.shared_processor_params);
  cmd::apply_axis(c, cmd::AblationAxis::kEncoder, "absolute");
  CHECK(c.model.encoder_variant == EncoderVariant::kAbsolute);
  cmd::apply_axis(c, cmd::AblationAxis::kRadius, "0.05");
  CHECK(c.model.connectivity_radius == 0.05);
  CHECK_THROWS_AS(cmd::apply_axis(c, cmd::AblationAxis::kMessagePassing, "2.5"), Error);
  CHECK_THROWS_AS(cmd::apply_axis(c, cmd::AblationAxis::kRadius, "-1"), Error);
  CHECK_THROWS_AS(cmd::apply_axis(c, cmd::AblationAxis::kShared, "maybe"), Error);
  CHECK(cmd::parse_ablation_axis("M") == cmd::AblationAxis::kMessagePassing);
  CHECK(std::string(cmd::ablation_axis_name(cmd::AblationAxis::kNoise)) == "noise");
  CHECK_THROWS_AS(cmd::parse_ablation_axis("depth"), Error);

  CHECK(cmd::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(cmd::median({4.0, 1.0}) == 2.5);
  CHECK(std::isnan(cmd::median({})));

  cmd::AblationRow row{"1", {0.5, 0.25, 1.0}, {2.0, 3.0, 1.0}, 0.5, 2.0};
  const std::string csv = cmd::ablation_csv(cmd::AblationAxis::kMessagePassing, {row});
  CHECK(csv.rfind("axis,value,seeds,one_step_mse_median,one_step_mse_min,one_step_mse_max,"
                  "rollout_mse_median,rollout_mse_min,rollout_mse_max\n", 0) == 0);
  CHECK(csv.find("M,1,3,0.5,0.25,1,2,1,3\n") != std::string::npos);
}

TEST_CASE("csv parsing and svg charts") {
  const plot::Table t = plot::parse_csv("step,a,b\n1,0.5,\n2,0.25,3\n");
  CHECK(t.header == std::vector<std::string>{"step", "a", "b"});
  CHECK(t.column("b") == 2);
  CHECK(t.column("c") == -1);
  const auto b = t.numbers(2);
  REQUIRE(b.size() == 2);
  CHECK(std::isnan(b[0]));
  CHECK(b[1] == 3.0);

  plot::LineChart lc;
  lc.title = "curves";
  lc.log_y = true;
  lc.series.push_back({"a", {1, 2, 3}, {1e-3, NAN, 1e-5}});
  const std::string svg = plot::line_chart_svg(lc);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("curves") != std::string::npos);

  plot::BarChart bc;
  bc.labels = {"x", "y"};
  bc.values = {1.0, 2.0};
  const std::string bars = plot::bar_chart_svg(bc);
  CHECK(bars.find("<rect") != std::string::npos);
  const std::string both = plot::combine_svg({svg, bars});
  CHECK(both.rfind("<svg", 0) == 0);
}
