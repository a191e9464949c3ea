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
#include <map>
#include <sstream>

#include "common/fixtures.hpp"
#include "gns/datagen.hpp"
#include "gns/error.hpp"
#include "gns/train.hpp"

using namespace gns;
using namespace gns::testing;

namespace {

std::vector<Trajectory> small_dataset(std::size_t count, std::size_t steps, std::uint64_t seed) {
  ScenarioConfig sc = ScenarioConfig::defaults(ScenarioKind::kGravityBounce);
  sc.min_particles = 12;
  sc.max_particles = 16;
  sc.num_steps = steps;
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(simulate_scenario(sc, seed + i));
  return out;
}

GnsConfig train_model_config() {
  GnsConfig c = tiny_config();
  c.connectivity_radius = 0.15;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.lr_decay_steps = 5e6;
  CHECK(lr_schedule(c, 0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_schedule(c, 5000000) == doctest::Approx(1e-6 + (1e-4 - 1e-6) * 0.1).epsilon(1e-12));
  CHECK(lr_schedule(c, 5000000) == doctest::Approx(1.09e-5).epsilon(1e-12));
  CHECK(lr_schedule(c, 500000000) == doctest::Approx(1e-6).epsilon(1e-9));
  double prev = lr_schedule(c, 0);
  for (std::int64_t j = 1000; j < 20000000; j *= 3) {
    const double cur = lr_schedule(c, j);
    CHECK(cur < prev);
    CHECK(cur > 1e-6);
    prev = cur;
  }
  CHECK_THROWS_AS(lr_schedule(c, -1), Error);
}

TEST_CASE("training configuration validation") {
  TrainConfig c;
  c.lr_final = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.lr_start = 1e-7;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.shuffle_buffer = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("pair counting") {
  CHECK(pairs_per_trajectory(1000, 5) == 994);
  CHECK(pairs_per_trajectory(7, 5) == 1);
  CHECK(pairs_per_trajectory(6, 5) == 0);
  PairSampler s({1000, 7}, 5, 10, 0);
  CHECK(s.pairs_per_epoch() == 995);
  CHECK_THROWS_AS(PairSampler({6}, 5, 10, 0), Error);
}

TEST_CASE("a shuffle buffer of one streams pairs in order") {
  PairSampler s({8, 9}, 5, 1, 42);
  const std::vector<SampleRef> expected{{0, 5}, {0, 6}, {1, 5}, {1, 6}, {1, 7}, {0, 5}};
  for (const SampleRef& e : expected) CHECK(s.next() == e);
}

TEST_CASE("the shuffled stream covers every pair equally often") {
  PairSampler s({20, 30, 12}, 5, 16, 3);
  const std::size_t epoch = s.pairs_per_epoch();
  CHECK(epoch == 14 + 24 + 6);
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> counts;
  for (std::size_t k = 0; k < epoch * 200; ++k) {
    const SampleRef r = s.next();
    CHECK(r.frame >= 5);
    counts[{r.trajectory, r.frame}]++;
  }
  CHECK(counts.size() == epoch);
  for (const auto& [key, n] : counts) CHECK(std::abs(n - 200) < 20);
}

TEST_CASE("loss is zero when the decoder outputs the normalized targets") {
  const GnsConfig c = train_model_config();
  const GnsModel m(c, 1);
  const auto data = small_dataset(1, 20, 5);
  Rng rng(1);
  NoiseConfig nc;
  FeaturizedSample s = make_training_sample(m, {&data[0], 8}, nc, rng);
  ad::Tape tape(false);
  s.target_accel = m.forward(m.bind(tape), s).value();
  CHECK(loss_and_grads(m, s).loss == 0.0);
}

TEST_CASE("an all-boundary batch has zero loss and zero gradient") {
  const GnsConfig c = train_model_config();
  GnsModel m(c, 1);
  auto data = small_dataset(1, 20, 9);
  std::fill(data[0].material.begin(), data[0].material.end(), static_cast<std::uint8_t>(Material::kBoundary));
  NormStats stats = NormStats::for_layout(c.layout());
  AdamState adam = AdamState::for_params(m.params());
  TrainConfig tc;
  Rng rng(2);
  const std::vector<TrainItem> batch{{&data[0], 6}, {&data[0], 10}};
  const StepDiagnostics d = train_step(m, stats, adam, batch, tc, rng);
  CHECK(d.loss == 0.0);
  CHECK(d.grad_norm == 0.0);
}

TEST_CASE("one gradient step reduces the loss on a fixed batch for most seeds") {
  const GnsConfig c = train_model_config();
  const auto data = small_dataset(2, 20, 100);
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GnsModel m(c, seed);
    NormStats stats = NormStats::for_layout(c.layout());
    NoiseConfig quiet;
    quiet.sigma_v = 0.0;
    Rng rng(seed);
    std::vector<FeaturizedSample> raw{make_training_sample(m, {&data[0], 7}, quiet, rng),
                                      make_training_sample(m, {&data[1], 12}, quiet, rng)};
    for (const auto& r : raw) stats.update(r);
    FeaturizedSample s = stats.normalize_inputs(concat_samples(raw));
    s.target_accel = normalized_targets(stats, s);
    const LossAndGrads before = loss_and_grads(m, s);
    AdamState adam = AdamState::for_params(m.params());
    adam_step(m.params(), before.grads, adam, 1e-3);
    if (loss_and_grads(m, s).loss < before.loss) ++improved;
  }
  CHECK(improved >= 18);
}

TEST_CASE("target statistics normalize accumulated targets") {
  const GnsConfig c = train_model_config();
  const GnsModel m(c, 0);
  const auto data = small_dataset(4, 40, 300);
  NormStats stats = NormStats::for_layout(c.layout());
  NoiseConfig nc;
  nc.sigma_v = 3e-4;
  Rng rng(5);
  std::vector<FeaturizedSample> seen;
  PairSampler sampler({40, 40, 40, 40}, c.history, 64, 1);
  for (int k = 0; k < 1000; ++k) {
    const SampleRef r = sampler.next();
    seen.push_back(make_training_sample(m, {&data[r.trajectory], r.frame}, nc, rng));
    stats.update(seen.back());
  }
  double sum = 0.0, sum2 = 0.0, n = 0.0;
  for (const auto& s : seen) {
    const Tensor t = normalized_targets(stats, s);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (!s.loss_mask[i]) continue;
      for (double v : t.row(i)) {
        sum += v;
        sum2 += v * v;
        n += 1;
      }
    }
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::abs(sum2 / n - mean * mean - 1.0) < 0.1);
}

TEST_CASE("fit with zero steps returns the initial model and a header-only log") {
  const auto data = small_dataset(2, 20, 40);
  TrainConfig tc;
  tc.max_steps = 0;
  const auto dir = std::filesystem::temp_directory_path() / "gns_unit" / "fit0";
  std::filesystem::remove_all(dir);
  FitOptions fo;
  fo.out_dir = dir;
  const FitResult r = fit(train_model_config(), tc, data, data, fo);
  CHECK(r.log.empty());
  CHECK(!r.best_state);
  CHECK(slurp(dir / "train_log.csv") == "step,loss,lr,val_rollout_mse\n");
  CHECK(r.final_state.model.params().value(3) == init_training_state(train_model_config(), tc).model.params().value(3));
}

TEST_CASE("resuming reproduces the uninterrupted loss sequence bit for bit") {
  const auto data = small_dataset(3, 24, 70);
  const std::span<const Trajectory> train(data.data(), 2), valid(data.data() + 2, 1);
  TrainConfig tc;
  tc.max_steps = 8;
  tc.eval_every = 4;
  tc.log_every = 1;
  tc.lr_start = 1e-3;
  tc.shuffle_buffer = 8;
  tc.seed = 17;
  const auto root = std::filesystem::temp_directory_path() / "gns_unit" / "resume";
  std::filesystem::remove_all(root);

  std::vector<double> straight;
  FitOptions a;
  a.out_dir = root / "straight";
  a.on_step = [&](std::int64_t, double l) { straight.push_back(l); };
  fit(train_model_config(), tc, train, valid, a);

  std::vector<double> resumed;
  TrainConfig half = tc;
  half.max_steps = 3;
  FitOptions b;
  b.out_dir = root / "first";
  b.on_step = [&](std::int64_t, double l) { resumed.push_back(l); };
  fit(train_model_config(), half, train, valid, b);
  FitOptions c2;
  c2.out_dir = root / "first";
  c2.resume_from = root / "first" / "last.ckpt";
  c2.on_step = [&](std::int64_t, double l) { resumed.push_back(l); };
  fit(train_model_config(), tc, train, valid, c2);

  REQUIRE(resumed.size() == straight.size());
  for (std::size_t i = 0; i < straight.size(); ++i) CHECK(resumed[i] == straight[i]);
  CHECK(std::filesystem::exists(root / "straight" / "best.ckpt"));

  // A checkpoint does not resume into a different architecture.
  GnsConfig other = train_model_config();
  other.latent_size = 6;
  CHECK_THROWS_AS(fit(other, tc, train, valid, c2), Error);
}

TEST_CASE("checkpoints round trip model, statistics and optimizer state") {
  const GnsConfig c = train_model_config();
  TrainingState st = init_training_state(c, TrainConfig{});
  const auto data = small_dataset(1, 20, 3);
  Rng rng(4);
  const std::vector<TrainItem> batch{{&data[0], 7}, {&data[0], 9}};
  train_step(st.model, st.stats, st.adam, batch, TrainConfig{}, rng);
  st.step = 1;
  const auto path = std::filesystem::temp_directory_path() / "gns_unit" / "state.ckpt";
  save_checkpoint(path, st, true, R"({"note": "x"})");
  const TrainingState back = load_checkpoint(path);
  CHECK(back.step == 1);
  CHECK(back.adam.step == st.adam.step);
  for (std::size_t i = 0; i < st.model.params().size(); ++i) {
    CHECK(back.model.params().value(i) == st.model.params().value(i));
    CHECK(back.adam.m[i] == st.adam.m[i]);
  }
  CHECK(back.stats.node.mean(0) == st.stats.node.mean(0));
  std::filesystem::remove(path.string() + ".json");
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}

TEST_CASE("training log formatting") {
  const std::vector<LogRow> rows{{10, 0.5, 1e-4, std::nullopt}, {20, 0.25, 9e-5, 0.125}};
  CHECK(format_log_csv(rows) == "step,loss,lr,val_rollout_mse\n10,0.5,0.0001,\n20,0.25,9e-05,0.125\n");
}
