// Copyright 2026 The dmprl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "dmprl/ppo.hpp"

using namespace dmprl;

namespace {

EpisodeBuffer tiny_buffer(const std::vector<double>& rewards,
                          const std::vector<double>& values, bool terminal) {
  EpisodeBuffer b;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Transition tr;
    tr.reward = rewards[i];
    tr.value = values[i];
    tr.done = terminal && i + 1 == rewards.size();
    b.transitions.push_back(tr);
  }
  return b;
}

RlRunConfig small_run(Algo algo, EnvKind kind, std::uint64_t seed) {
  RlRunConfig run;
  run.algo = algo;
  run.env.kind = kind;
  run.dmp = DmpConfig::with_steps(35, 5);
  run.ppo.batch_size = 256;
  run.ppo.minibatches = 8;
  run.hidden = {32, 32};
  run.seed = seed;
  return run;
}

}  // namespace

TEST_CASE("gae: gamma = 0 collapses to one-step TD errors") {
  EpisodeBuffer b = tiny_buffer({1.0, 2.0, 3.0}, {0.5, 0.25, 0.125}, true);
  PpoConfig cfg;
  cfg.gamma = 0.0;
  cfg.gae_lambda = 0.95;
  gae(b, cfg);
  for (int t = 0; t < 3; ++t)
    CHECK(b.advantages[t] ==
          doctest::Approx(b.transitions[t].reward - b.transitions[t].value));
}

TEST_CASE("gae: lambda = 0 collapses to one-step TD errors") {
  EpisodeBuffer b = tiny_buffer({1.0, 0.5, -0.5}, {0.2, 0.4, 0.6}, true);
  PpoConfig cfg;
  cfg.gamma = 0.9;
  cfg.gae_lambda = 0.0;
  gae(b, cfg);
  CHECK(b.advantages[0] == doctest::Approx(1.0 + 0.9 * 0.4 - 0.2));
  CHECK(b.advantages[1] == doctest::Approx(0.5 + 0.9 * 0.6 - 0.4));
  CHECK(b.advantages[2] == doctest::Approx(-0.5 - 0.6));
}

TEST_CASE("gae: three-step hand example") {
  // gamma = lambda = 0.9, r = [1, 0, 1], v = [0.5, 0.5, 0.5], terminal end:
  //   d2 = 1 - 0.5 = 0.5                         A2 = 0.5
  //   d1 = 0 + 0.9*0.5 - 0.5 = -0.05             A1 = -0.05 + 0.81*0.5 = 0.355
  //   d0 = 1 + 0.9*0.5 - 0.5 = 0.95              A0 = 0.95 + 0.81*0.355
  EpisodeBuffer b = tiny_buffer({1.0, 0.0, 1.0}, {0.5, 0.5, 0.5}, true);
  PpoConfig cfg;
  cfg.gamma = 0.9;
  cfg.gae_lambda = 0.9;
  gae(b, cfg);
  CHECK(b.advantages[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.advantages[1] == doctest::Approx(0.355).epsilon(1e-12));
  CHECK(b.advantages[0] == doctest::Approx(1.23755).epsilon(1e-12));
  for (int t = 0; t < 3; ++t)
    CHECK(b.returns[t] == doctest::Approx(b.advantages[t] + 0.5));
}

TEST_CASE("gae: bootstrap value feeds the last transition when not done") {
  EpisodeBuffer b = tiny_buffer({1.0}, {0.5}, false);
  b.bootstrap_valid = true;
  b.bootstrap_value = 2.0;
  PpoConfig cfg;
  cfg.gamma = 0.5;
  cfg.gae_lambda = 1.0;
  gae(b, cfg);
  CHECK(b.advantages[0] == doctest::Approx(1.0 + 0.5 * 2.0 - 0.5));
}

TEST_CASE("normalize_advantages: unit statistics after normalization") {
  Rng rng(3);
  VectorXd adv = rng.normal_vector(512) * 7.0;
  adv.array() += 3.0;
  normalize_advantages(adv);
  CHECK(std::abs(adv.mean()) <= 1e-6);
  const double std = std::sqrt((adv.array() - adv.mean()).square().mean());
  CHECK(std::abs(std - 1.0) <= 1e-6);
}

TEST_CASE("clipped_surrogate: bounded above by (1 + clip) * |advantage|") {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double ratio = std::exp(rng.uniform(-3.0, 3.0));
    const double adv = rng.uniform(-5.0, 5.0);
    const double s = clipped_surrogate(ratio, adv, 0.1);
    CHECK(s <= (1.0 + 0.1) * std::abs(adv) + 1e-12);
  }
}

TEST_CASE("inverse_controller: identity passes the target through") {
  VectorXd y_t(2), yd_t(2), y(2), yd(2);
  y_t << 0.3, -0.2;
  yd_t.setZero();
  y << 0.0, 0.0;
  yd << 1.0, 1.0;
  CHECK(inverse_controller(y_t, yd_t, y, yd, OmegaMode::kIdentity) == y_t);
}

TEST_CASE("inverse_controller: PD force vanishes at the target state") {
  VectorXd y(2), yd(2);
  y << 0.4, 0.1;
  yd << -0.3, 0.2;
  const VectorXd f = inverse_controller(y, yd, y, yd, OmegaMode::kPd);
  CHECK(f.norm() == 0.0);
}

TEST_CASE("inverse_controller: PD tracking reaches a target on the env") {
  EnvConfig cfg;
  cfg.control = ControlMode::kForce;
  cfg.horizon = 200;
  PlanarEnv env(cfg);
  env.reset(5);
  VectorXd target(2);
  target << 0.4, -0.3;
  const VectorXd zero2 = VectorXd::Zero(2);
  for (int i = 0; i < 50; ++i) {
    const VectorXd f = inverse_controller(target, zero2, env.agent_pos(),
                                          env.agent_vel(), OmegaMode::kPd);
    env.step(f);
  }
  CHECK((env.agent_pos() - target).norm() < 0.05);
}

TEST_CASE("collector: block arithmetic, head indices, sample accounting") {
  RlRunConfig run = small_run(Algo::kNdp, EnvKind::kReach, 11);
  run.env.success_radius = 1e-9;  // episodes always run the full horizon
  run.env.stale_k = 5;
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  RolloutCollector collector(agent, run.env, run.ppo, master.fork(2), master.fork(1));

  CollectStats cs;
  EpisodeBuffer buffer = collector.collect(200, &cs);

  // 200 requested -> exactly one full episode of 100 plus one more block
  // boundary; transitions come in whole blocks of 5.
  CHECK(buffer.size() % 5 == 0);
  for (std::size_t i = 0; i < buffer.size(); ++i)
    CHECK(buffer.transitions[i].value_head == static_cast<int>(i % 5));
  CHECK(collector.total_decisions() * 5 == static_cast<std::int64_t>(buffer.size()));
  // With no early termination every completed episode has exactly horizon
  // steps.
  CHECK(cs.episodes * 100 <= collector.total_env_steps());
  CHECK(collector.total_env_steps() ==
        static_cast<std::int64_t>(buffer.size()));
}

TEST_CASE("collector: full-horizon episodes account steps exactly") {
  RlRunConfig run = small_run(Algo::kPpo, EnvKind::kReach, 13);
  run.env.success_radius = 1e-9;
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  RolloutCollector collector(agent, run.env, run.ppo, master.fork(2), master.fork(1));
  CollectStats cs;
  collector.collect(500, &cs);
  CHECK(cs.episodes == 5);
  CHECK(collector.total_env_steps() == 500);
  CHECK(cs.episodes * run.env.horizon == 500);
}

TEST_CASE("collector: deterministic buffers for identical seeds") {
  for (Algo algo : {Algo::kNdp, Algo::kPpoMulti}) {
    auto make = [&](std::uint64_t seed) {
      RlRunConfig run = small_run(algo, EnvKind::kPush, seed);
      Rng master(run.seed);
      Rng init = master.fork(0);
      auto agent = std::make_unique<RlAgent>(run.algo, run.env, run.dmp, run.ppo,
                                             run.hidden, init);
      EnvConfig env_cfg = run.env;
      env_cfg.stale_k = agent->k();
      auto collector = std::make_unique<RolloutCollector>(
          *agent, env_cfg, run.ppo, master.fork(2), master.fork(1));
      EpisodeBuffer b = collector->collect(120);
      return std::make_pair(std::move(agent), std::move(b));
    };
    auto [agent_a, a] = make(21);
    auto [agent_b, b] = make(21);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.transitions[i].obs_n == b.transitions[i].obs_n);
      CHECK(a.transitions[i].action == b.transitions[i].action);
      CHECK(a.transitions[i].reward == b.transitions[i].reward);
      CHECK(a.transitions[i].logp == b.transitions[i].logp);
    }
  }
}

TEST_CASE("ppo_update: identity policy gives zero surrogate, no clipping") {
  RlRunConfig run = small_run(Algo::kNdp, EnvKind::kReach, 31);
  run.ppo.epochs = 1;
  run.ppo.minibatches = 1;
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  EnvConfig env_cfg = run.env;
  env_cfg.stale_k = agent.k();
  RolloutCollector collector(agent, env_cfg, run.ppo, master.fork(2), master.fork(1));
  EpisodeBuffer buffer = collector.collect(100);
  gae(buffer, run.ppo);
  Rng shuffle = master.fork(3);
  const UpdateStats stats = ppo_update(agent, buffer, run.ppo, shuffle);
  // ratio == 1 everywhere: the surrogate equals the mean normalized
  // advantage, which is zero by construction.
  CHECK(std::abs(stats.pg_loss_per_epoch[0]) < 1e-10);
  CHECK(stats.clip_fraction == 0.0);
}

TEST_CASE("ppo_update: zero advantages produce no actor motion") {
  RlRunConfig run = small_run(Algo::kPpo, EnvKind::kReach, 37);
  run.ppo.epochs = 2;
  run.ppo.minibatches = 2;
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  RolloutCollector collector(agent, run.env, run.ppo, master.fork(2), master.fork(1));
  EpisodeBuffer buffer = collector.collect(64);
  gae(buffer, run.ppo);
  buffer.advantages.setZero();
  // Make returns equal stored values so the critic is also stationary.
  for (std::size_t i = 0; i < buffer.size(); ++i)
    buffer.returns[i] = buffer.transitions[i].value;

  const std::vector<MatrixXd> before = agent.actor_net().weights();
  const VectorXd log_std_before = agent.log_std();
  Rng shuffle = master.fork(3);
  ppo_update(agent, buffer, run.ppo, shuffle);
  for (std::size_t l = 0; l < before.size(); ++l)
    CHECK((agent.actor_net().weights()[l] - before[l]).norm() == 0.0);
  CHECK(agent.log_std() == log_std_before);
}

TEST_CASE("ppo_update: surrogate loss mostly non-increasing over 10 epochs") {
  RlRunConfig run = small_run(Algo::kPpo, EnvKind::kReach, 41);
  run.ppo.epochs = 10;
  run.ppo.minibatches = 4;
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  RolloutCollector collector(agent, run.env, run.ppo, master.fork(2), master.fork(1));
  EpisodeBuffer buffer = collector.collect(256);
  gae(buffer, run.ppo);
  Rng shuffle = master.fork(3);
  const UpdateStats stats = ppo_update(agent, buffer, run.ppo, shuffle);
  REQUIRE(stats.pg_loss_per_epoch.size() == 10);
  int non_increasing = 0;
  for (std::size_t e = 1; e < stats.pg_loss_per_epoch.size(); ++e)
    if (stats.pg_loss_per_epoch[e] <= stats.pg_loss_per_epoch[e - 1] + 1e-9)
      ++non_increasing;
  CHECK(non_increasing >= 7);  // 8 of 10 epochs including the baseline
}

TEST_CASE("ppo-multi: head layout and k = 1 equivalence to vanilla shapes") {
  RlRunConfig run = small_run(Algo::kPpoMulti, EnvKind::kReach, 43);
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  CHECK(agent.k() == 5);
  CHECK(agent.actor_net().spec().output_dim == 5 * 2);
  CHECK(agent.critic().heads() == 5);

  DmpConfig dmp1 = DmpConfig::with_steps(35, 1);
  RlAgent agent1(Algo::kPpoMulti, run.env, dmp1, run.ppo, run.hidden, init);
  CHECK(agent1.k() == 1);
  CHECK(agent1.actor_net().spec().output_dim == 2);
  CHECK(agent1.critic().heads() == 1);
}

TEST_CASE("ndp decision: means are the sub-sampled rollout positions") {
  RlRunConfig run = small_run(Algo::kNdp, EnvKind::kReach, 47);
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  Rng probe(9);
  const VectorXd obs = probe.normal_vector(6);
  const VectorXd y0 = probe.uniform_vector(2, -0.5, 0.5);
  const VectorXd y0_dot = VectorXd::Zero(2);
  const RlAgent::Decision dec = agent.decide(obs, y0, y0_dot);
  const auto pts = subsample(dec.tape, agent.k());
  for (int j = 0; j < agent.k(); ++j)
    CHECK((dec.means.row(j).head(2).transpose() - pts[j].y).norm() == 0.0);
}

TEST_CASE("ndp mean-path gradient matches finite differences through PPO") {
  // Scalar probe: L = sum_j u_j . mean_j(theta); compares the actor
  // gradient assembled by backward_decision against finite differences.
  RlRunConfig run = small_run(Algo::kNdp, EnvKind::kReach, 53);
  run.dmp = DmpConfig::with_steps(20, 4);
  run.dmp.n_basis = 4;
  run.hidden = {8, 8};
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);

  Rng probe(3);
  const VectorXd obs = probe.normal_vector(6);
  const VectorXd y0 = probe.uniform_vector(2, -0.5, 0.5);
  const VectorXd y0_dot = probe.uniform_vector(2, -0.2, 0.2);
  MatrixXd u = MatrixXd::Zero(agent.k(), agent.act_dim());
  for (int j = 0; j < agent.k(); ++j)
    for (int d = 0; d < agent.act_dim(); ++d) u(j, d) = probe.normal();

  auto loss = [&]() {
    const RlAgent::Decision dec = agent.decide(obs, y0, y0_dot);
    return (u.array() * dec.means.array()).sum();
  };

  const RlAgent::Decision dec = agent.decide(obs, y0, y0_dot);
  MlpGrads grads = agent.actor_net().zero_grads();
  agent.backward_decision(dec, u, y0, y0_dot, grads);

  Mlp& net = agent.actor_net();
  const double h = 1e-4;
  int checked = 0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index r = 0; r < net.weights()[l].rows(); r += 3) {
      for (Eigen::Index c = 0; c < net.weights()[l].cols(); c += 3) {
        const double orig = net.weights()[l](r, c);
        net.weights()[l](r, c) = orig + h;
        net.mark_params_changed();
        const double lp = loss();
        net.weights()[l](r, c) = orig - h;
        net.mark_params_changed();
        const double lm = loss();
        net.weights()[l](r, c) = orig;
        net.mark_params_changed();
        CHECK(rel_error(grads.d_weights[l](r, c), (lp - lm) / (2 * h), 1e-8) < 1e-3);
        ++checked;
      }
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("train_rl: deterministic metric series for identical seeds") {
  RlRunConfig run = small_run(Algo::kNdp, EnvKind::kReach, 61);
  run.total_env_steps = 600;
  run.ppo.batch_size = 200;
  const auto log_a = train_rl(run);
  const auto log_b = train_rl(run);
  REQUIRE(log_a.size() == log_b.size());
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    CHECK(log_a[i].env_steps == log_b[i].env_steps);
    CHECK(log_a[i].episode_return == log_b[i].episode_return);
    CHECK(log_a[i].pg_loss == log_b[i].pg_loss);
  }
}

TEST_CASE("agent checkpoints round-trip bit-exactly") {
  RlRunConfig run = small_run(Algo::kNdp, EnvKind::kPush, 67);
  Rng master(run.seed);
  Rng init = master.fork(0);
  RlAgent agent(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  // Push some data through the normalizer so its state is nontrivial.
  Rng probe(1);
  for (int i = 0; i < 10; ++i) agent.normalizer().update(probe.normal_vector(8));

  const auto path = std::filesystem::temp_directory_path() / "dmprl_agent_ck.bin";
  agent.save(path.string());
  RlAgent other(run.algo, run.env, run.dmp, run.ppo, run.hidden, init);
  other.load(path.string());

  const VectorXd obs = probe.normal_vector(8);
  const VectorXd y0 = VectorXd::Zero(2);
  const VectorXd y0d = VectorXd::Zero(2);
  const auto da = agent.decide(agent.normalizer().normalize(obs), y0, y0d);
  const auto db = other.decide(other.normalizer().normalize(obs), y0, y0d);
  CHECK(da.means == db.means);
  std::filesystem::remove(path);
}
