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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "common/oracles.hpp"
#include "common/fixtures.hpp"
#include "gns/error.hpp"
#include "gns/model.hpp"

using namespace gns;
using namespace gns::testing;

TEST_CASE("parameter count of the published architecture") {
  // Layer shapes written out by hand: (inputs x outputs) weights plus biases.
  auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
  const std::size_t node_in = 5 * 2 /*velocities*/ + 4 /*walls*/ + 1 /*global*/ + 16 /*embedding*/;
  const std::size_t enc_node = dense(node_in, 128) + dense(128, 128) + dense(128, 128) + 2 * 128;
  const std::size_t enc_edge = dense(3, 128) + dense(128, 128) + dense(128, 128) + 2 * 128;
  const std::size_t proc_edge = dense(384, 128) + dense(128, 128) + dense(128, 128) + 2 * 128;
  const std::size_t proc_node = dense(256, 128) + dense(128, 128) + dense(128, 128) + 2 * 128;
  const std::size_t dec = dense(128, 128) + dense(128, 128) + dense(128, 2);
  const std::size_t expected = 5 * 16 + enc_node + enc_edge + 10 * (proc_edge + proc_node) + dec;
  CHECK(expected == 1591890);

  GnsConfig c;
  c.num_globals = 1;
  CHECK(GnsModel::parameter_count(c) == expected);
  const GnsModel m(c, 0);
  CHECK(m.params().total_elements() == expected);

  c.shared_processor_params = true;
  CHECK(GnsModel::parameter_count(c) == expected - 9 * (proc_edge + proc_node));
  c.encoder_variant = EncoderVariant::kAbsolute;
  c.shared_processor_params = false;
  const GnsModel a(c, 0);
  CHECK(a.params().total_elements() == GnsModel::parameter_count(c));
}

TEST_CASE("configuration validation") {
  GnsConfig c = tiny_config();
  c.latent_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.connectivity_radius = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.dim = 4;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("models rebuilt from stored parameters check names and shapes") {
  const GnsConfig c = tiny_config();
  const GnsModel m(c, 3);
  const GnsModel copy(c, m.params());
  CHECK(copy.params().value(1) == m.params().value(1));
  GnsConfig wider = c;
  wider.latent_size = c.latent_size + 1;
  CHECK_THROWS_AS(GnsModel(wider, m.params()), Error);
}

TEST_CASE("forward output is N x D and a zeroed decoder predicts the target mean") {
  const GnsConfig c = tiny_config();
  GnsModel m(c, 1);
  const auto scene = random_scene(12, c, 5);
  const NormStats stats = NormStats::for_layout(c.layout());
  const Tensor a = predict_accel(m, stats, scene.state, scene.box);
  CHECK(a.rows() == 12);
  CHECK(a.cols() == 2);
  CHECK(a.all_finite());
  m.zero_decoder_output();
  const Tensor z = predict_accel(m, stats, scene.state, scene.box);
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("predictions are permutation equivariant") {
  const GnsConfig c = tiny_config();
  const GnsModel m(c, 2);
  const NormStats stats = NormStats::for_layout(c.layout());
  const auto scene = random_scene(20, c, 8);
  std::vector<std::size_t> perm(20);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  const ParticleState shuffled = permute_state(scene.state, perm);
  const Tensor a = predict_accel(m, stats, scene.state, scene.box);
  const Tensor b = predict_accel(m, stats, shuffled, scene.box);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t d = 0; d < 2; ++d) CHECK(std::abs(b(i, d) - a(perm[i], d)) <= 1e-5);
}

TEST_CASE("relative encoder is translation invariant away from walls") {
  GnsConfig c = tiny_config();
  c.connectivity_radius = 0.05;
  const NormStats stats = NormStats::for_layout(c.layout());
  const auto scene = random_scene(15, c, 11, 0.4, 0.6);
  const ParticleState moved = translate_state(scene.state, {0.1, -0.05});
  const GnsModel rel(c, 5);
  const Tensor a = predict_accel(rel, stats, scene.state, scene.box);
  const Tensor b = predict_accel(rel, stats, moved, scene.box);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-5);

  c.encoder_variant = EncoderVariant::kAbsolute;
  const GnsModel abs(c, 5);
  const NormStats abs_stats = NormStats::for_layout(c.layout());
  const Tensor p = predict_accel(abs, abs_stats, scene.state, scene.box);
  const Tensor q = predict_accel(abs, abs_stats, moved, scene.box);
  double diff = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) diff = std::max(diff, std::abs(p[i] - q[i]));
  CHECK(diff > 1e-6);
}

TEST_CASE("information travels at most M hops") {
  for (std::size_t M : {1, 2, 3}) {
    GnsConfig c = tiny_config();
    c.message_passing_steps = M;
    c.connectivity_radius = 0.06;
    const GnsModel m(c, 7);
    const NormStats stats = NormStats::for_layout(c.layout());
    const ParticleState chain = chain_state(10, 0.05, c);
    ParticleState poked = chain;
    poked.position_history.front()(0, 1) += 0.01;  // changes only particle 0's velocity
    const Box box{{0.0, 0.0}, {1.0, 1.0}};
    const Tensor a = predict_accel(m, stats, chain, box);
    const Tensor b = predict_accel(m, stats, poked, box);
    for (std::size_t i = 0; i < 10; ++i) {
      const bool same = a(i, 0) == b(i, 0) && a(i, 1) == b(i, 1);
      if (i > M) CHECK(same);
      if (i == M) CHECK(!same);
    }
  }
}

TEST_CASE("full model gradient matches finite differences on a 6-particle graph") {
  const GnsConfig c = tiny_config();
  const GnsModel m(c, 13);
  const auto scene = random_scene(6, c, 21, 0.3, 0.7);
  const auto edges = graph::radius_edges(scene.state.current(), c.connectivity_radius, false);
  REQUIRE(!edges.empty());
  FeaturizedSample s = featurize(scene.state, edges, c.layout(), scene.box, c.connectivity_radius);
  std::mt19937_64 rng(3);
  s.target_accel = random_tensor(6, 2, rng);
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < m.params().size(); ++i) params.push_back(m.params().value(i));
  const double err = gradient_check([&](ad::Tape& t, const std::vector<ad::Var>& leaves) {
    const BoundParams bp{leaves};
    return ad::mse_loss(m.forward(bp, s), t.constant(s.target_accel), s.loss_mask);
  }, params);
  CHECK(err < 1e-4);
}
