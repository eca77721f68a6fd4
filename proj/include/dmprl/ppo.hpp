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

// On-policy training with a clipped surrogate objective and a multi-action
// critic. Three interchangeable policies share the machinery:
//
//   ndp        the actor predicts dynamical-system parameters (w, g); the
//              k action means are sub-sampled from the integrated rollout
//              and the mean-path gradient flows through the analytic
//              trajectory jacobians
//   ppo        raw per-step actions, k = 1, single value head
//   ppo-multi  the actor predicts k raw action means at once; same k-head
//              critic and stale-state semantics as ndp, no dynamical system
//
// Every stochastic draw comes from streams forked off one master seed, so
// single-threaded training runs are bit-reproducible.

#ifndef DMPRL_PPO_HPP_
#define DMPRL_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "dmprl/common.hpp"
#include "dmprl/dmp.hpp"
#include "dmprl/dmp_gradients.hpp"
#include "dmprl/env.hpp"
#include "dmprl/mlp.hpp"
#include "dmprl/policy.hpp"

namespace dmprl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.1;
  int epochs = 10;
  int minibatches = 32;
  int batch_size = 2048;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double lr = 3e-4;
  bool normalize_returns = true;   // scale rewards by the running return std
  bool linear_lr_decay = true;     // anneal lr to zero over the step budget

  void validate() const {
    if (epochs <= 0 || minibatches <= 0 || batch_size <= 0)
      throw ConfigError("ppo: epochs/minibatches/batch_size must be positive");
    if (!(clip > 0.0)) throw ConfigError("ppo: clip must be > 0");
  }
};

enum class Algo { kNdp, kPpo, kPpoMulti };

inline std::string to_string(Algo a) {
  switch (a) {
    case Algo::kNdp: return "ndp";
    case Algo::kPpo: return "ppo";
    case Algo::kPpoMulti: return "ppo-multi";
  }
  throw ConfigError("unknown algo");
}

inline Algo algo_from_string(const std::string& name) {
  if (name == "ndp") return Algo::kNdp;
  if (name == "ppo") return Algo::kPpo;
  if (name == "ppo-multi") return Algo::kPpoMulti;
  throw ConfigError("unknown algo: " + name);
}

enum class OmegaMode { kIdentity, kPd };

// Maps a desired robot state to an executable action: identity passes the
// position target through; PD emits a force command.
inline VectorXd inverse_controller(const VectorXd& y_target,
                                   const VectorXd& yd_target, const VectorXd& y,
                                   const VectorXd& yd, OmegaMode mode,
                                   double kp = 100.0, double kd = 20.0) {
  switch (mode) {
    case OmegaMode::kIdentity:
      return y_target;
    case OmegaMode::kPd:
      return kp * (y_target - y) + kd * (yd_target - yd);
  }
  throw ConfigError("inverse_controller: unknown mode");
}

struct Transition {
  VectorXd obs_n;    // normalized observation at the decision point
  VectorXd y0;       // robot position read from the raw observation
  VectorXd y0_dot;   // robot velocity read from the raw observation
  VectorXd action;
  double logp = 0.0;
  double reward = 0.0;
  bool done = false;       // episode ended here (success or horizon)
  bool truncated = false;  // ended by the time limit, not by the task
  double truncation_value = 0.0;  // head-0 value of the post-step obs
  int value_head = 0;  // sub-step position within the decision block
  double value = 0.0;
};

// Scales rewards by the running standard deviation of the discounted
// return, leaving the mean untouched.
class ReturnNormalizer {
 public:
  explicit ReturnNormalizer(double gamma) : gamma_(gamma) {}

  double scale(double reward, bool done) {
    running_ = gamma_ * running_ + reward;
    count_ += 1.0;
    const double delta = running_ - mean_;
    mean_ += delta / count_;
    m2_ += delta * (running_ - mean_);
    if (done) running_ = 0.0;
    if (count_ < 2.0) return reward;
    const double std = std::sqrt(std::max(m2_ / count_, 1e-8));
    return std::clamp(reward / std, -10.0, 10.0);
  }

 private:
  double gamma_;
  double running_ = 0.0;
  double count_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct EpisodeBuffer {
  std::vector<Transition> transitions;
  VectorXd advantages;
  VectorXd returns;
  double bootstrap_value = 0.0;  // head-0 value of the next decision obs
  bool bootstrap_valid = false;

  std::size_t size() const { return transitions.size(); }
};

// Standard GAE(gamma, lambda) over the flattened transition sequence. Within
// a block the next value is the following head of the same decision; across
// blocks it is head 0 of the next decision point. Task terminations cut the
// chain; time-limit truncations bootstrap from the post-step observation.
inline void gae(EpisodeBuffer& buffer, const PpoConfig& cfg) {
  const int n = static_cast<int>(buffer.transitions.size());
  buffer.advantages.resize(n);
  buffer.returns.resize(n);
  double running = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const Transition& tr = buffer.transitions[t];
    double delta;
    if (!tr.done) {
      const double next_value =
          (t + 1 < n) ? buffer.transitions[t + 1].value
                      : (buffer.bootstrap_valid ? buffer.bootstrap_value : 0.0);
      delta = tr.reward + cfg.gamma * next_value - tr.value;
      running = delta + cfg.gamma * cfg.gae_lambda * running;
    } else if (tr.truncated) {
      delta = tr.reward + cfg.gamma * tr.truncation_value - tr.value;
      running = delta;  // new episode beyond this point
    } else {
      delta = tr.reward - tr.value;
      running = delta;
    }
    buffer.advantages[t] = running;
    buffer.returns[t] = running + tr.value;
  }
}

// In-place standardization; the std floor keeps the result exactly
// unit-scale for any non-degenerate batch.
inline void normalize_advantages(VectorXd& adv) {
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  const double std = std::max(std::sqrt(var), 1e-8);
  adv = (adv.array() - mean) / std;
}

// Per-sample clipped surrogate objective (the quantity PPO maximizes).
inline double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

// One RL policy bundle: actor (either kind), state-independent log-std,
// k-head critic, observation normalizer, one Adam over everything.
class RlAgent {
 public:
  RlAgent(Algo algo, const EnvConfig& env_cfg, const DmpConfig& dmp_cfg,
          const PpoConfig& ppo_cfg, const std::vector<int>& hidden, Rng init_rng,
          double w_scale = 1.0)
      : algo_(algo),
        dmp_cfg_(dmp_cfg),
        act_dim_(env_cfg.action_dim()),
        k_(algo == Algo::kPpo ? 1 : dmp_cfg.k_rollout),
        opt_(ppo_cfg.lr) {
    const int obs_dim = env_cfg.obs_dim();
    if (algo_ == Algo::kNdp) {
      DmpActorSpec spec;
      spec.obs_dim = obs_dim;
      spec.hidden = hidden;
      spec.dof = 2;
      spec.n_basis = dmp_cfg.n_basis;
      spec.learn_alpha = dmp_cfg.learn_alpha;
      spec.extra_action_dims = act_dim_ - 2;
      spec.w_scale = w_scale;
      actor_ = DmpActor(spec, dmp_cfg, init_rng);
    } else {
      multi_actor_ = Mlp(MlpSpec{obs_dim, hidden, k_ * act_dim_}, init_rng, 0.01);
    }
    critic_ = Critic(obs_dim, hidden, k_, init_rng);
    log_std_ = VectorXd::Zero(act_dim_);
    normalizer_ = ObsNormalizer(obs_dim);
  }

  Algo algo() const { return algo_; }
  int k() const { return k_; }
  int act_dim() const { return act_dim_; }
  VectorXd& log_std() { return log_std_; }
  Critic& critic() { return critic_; }
  const Critic& critic() const { return critic_; }
  ObsNormalizer& normalizer() { return normalizer_; }
  DmpActor& dmp_actor() { return actor_; }
  Mlp& actor_net() {
    return algo_ == Algo::kNdp ? actor_.net() : multi_actor_;
  }
  const Mlp& actor_net() const {
    return algo_ == Algo::kNdp ? actor_.net() : multi_actor_;
  }

  struct Decision {
    MatrixXd means;  // [k x act_dim]
    Mlp::Cache cache;
    DmpActorOutput out;  // ndp only
    RolloutTape tape;    // ndp only
  };

  Decision decide(const VectorXd& obs_n, const VectorXd& y0,
                  const VectorXd& y0_dot) const {
    Decision dec;
    dec.means.resize(k_, act_dim_);
    if (algo_ == Algo::kNdp) {
      const VectorXd raw = actor_.net().forward(obs_n, &dec.cache);
      dec.out = actor_.decode(raw, y0);
      dec.tape = rollout(dec.out.params, y0, y0_dot, actor_.effective_config(dec.out));
      const auto pts = subsample(dec.tape, k_);
      for (int j = 0; j < k_; ++j) {
        dec.means.row(j).head(2) = pts[j].y.transpose();
        if (act_dim_ > 2) dec.means.row(j).tail(act_dim_ - 2) = dec.out.extra.transpose();
      }
    } else {
      const VectorXd raw = multi_actor_.forward(obs_n, &dec.cache);
      for (int j = 0; j < k_; ++j)
        dec.means.row(j) = raw.segment(j * act_dim_, act_dim_).transpose();
    }
    return dec;
  }

  // Accumulates actor-parameter gradients for dL/d(means).
  void backward_decision(const Decision& dec, const MatrixXd& d_means,
                         const VectorXd& y0, const VectorXd& y0_dot,
                         MlpGrads& actor_grads) const {
    if (algo_ == Algo::kNdp) {
      std::vector<VectorXd> upstream(k_);
      for (int j = 0; j < k_; ++j) upstream[j] = d_means.row(j).head(2).transpose();
      const ParamGradients pg = backward(dec.tape, upstream);

      double d_alpha_raw = 0.0;
      if (dmp_cfg_.learn_alpha) {
        const auto alpha_jac = alpha_jacobian_fd(dec.out.params, y0, y0_dot,
                                                 dec.tape.config);
        const int stride = dec.tape.config.m_steps / k_;
        double d_alpha = 0.0;
        for (int j = 0; j < k_; ++j)
          d_alpha += upstream[j].dot(alpha_jac[(j + 1) * stride]);
        d_alpha_raw = d_alpha * dec.out.alpha;  // alpha = alpha_cfg * exp(raw)
      }

      VectorXd d_extra = VectorXd::Zero(act_dim_ - 2);
      for (int j = 0; j < k_; ++j) d_extra += d_means.row(j).tail(act_dim_ - 2).transpose();

      const VectorXd raw_up =
          actor_.fold_upstream(pg.d_w, pg.d_g, d_alpha_raw, d_extra);
      actor_.net().backward(dec.cache, raw_up, actor_grads);
    } else {
      VectorXd raw_up(k_ * act_dim_);
      for (int j = 0; j < k_; ++j)
        raw_up.segment(j * act_dim_, act_dim_) = d_means.row(j).transpose();
      multi_actor_.backward(dec.cache, raw_up, actor_grads);
    }
  }

  ParamRefs trainable_params() {
    ParamRefs p = ParamRefs::of(actor_net());
    p.append(log_std_);
    p.append(critic_.net());
    return p;
  }

  void mark_params_changed() {
    actor_net().mark_params_changed();
    critic_.net().mark_params_changed();
  }

  AdamOptimizer& optimizer() { return opt_; }

  void save(const std::string& path) const {
    checkpoint::Writer w(path);
    checkpoint::save_mlp(w, "actor", actor_net());
    w.tensor("log_std", log_std_);
    checkpoint::save_mlp(w, "critic", critic_.net());
    w.scalar("norm.count", normalizer_.count());
    w.tensor("norm.mean", normalizer_.mean());
    w.tensor("norm.m2", normalizer_.m2());
    if (!w.good()) throw ConfigError("checkpoint write failed: " + path);
  }

  void load(const std::string& path) {
    checkpoint::Reader r(path);
    checkpoint::load_mlp(r, "actor", actor_net());
    log_std_ = r.vector("log_std");
    checkpoint::load_mlp(r, "critic", critic_.net());
    normalizer_.set_count(r.scalar("norm.count"));
    normalizer_.mean() = r.vector("norm.mean");
    normalizer_.m2() = r.vector("norm.m2");
  }

 private:
  Algo algo_;
  DmpConfig dmp_cfg_;
  int act_dim_;
  int k_;
  DmpActor actor_;
  Mlp multi_actor_;
  VectorXd log_std_;
  Critic critic_;
  ObsNormalizer normalizer_;
  AdamOptimizer opt_;
};

struct CollectStats {
  int episodes = 0;
  int successes = 0;
  double return_sum = 0.0;
  std::int64_t env_steps = 0;
};

// Rolls the policy in the environment, one decision every k sub-steps,
// until at least `batch_size` transitions have been stored and the current
// decision block is complete. Episodes continue across batches.
class RolloutCollector {
 public:
  RolloutCollector(RlAgent& agent, const EnvConfig& env_cfg,
                   const PpoConfig& ppo_cfg, Rng action_rng, Rng episode_rng)
      : agent_(agent), env_(env_cfg), action_rng_(action_rng),
        episode_rng_(episode_rng),
        return_norm_(ppo_cfg.gamma),
        normalize_returns_(ppo_cfg.normalize_returns) {
    if (env_cfg.horizon % agent.k() != 0)
      throw ConfigError("collector: env horizon must be divisible by k");
  }

  PlanarEnv& env() { return env_; }
  std::int64_t total_env_steps() const { return total_env_steps_; }
  std::int64_t total_decisions() const { return total_decisions_; }

  EpisodeBuffer collect(int batch_size, CollectStats* stats = nullptr) {
    EpisodeBuffer buffer;
    buffer.transitions.reserve(batch_size + agent_.k());

    while (static_cast<int>(buffer.size()) < batch_size) {
      if (!episode_active_) {
        obs_raw_ = env_.reset(episode_rng_.next_u64());
        episode_active_ = true;
        episode_return_ = 0.0;
      }
      agent_.normalizer().update(obs_raw_);
      const VectorXd obs_n = agent_.normalizer().normalize(obs_raw_);
      const VectorXd y0 = obs_raw_.head(2);
      const VectorXd y0_dot = obs_raw_.segment(2, 2);
      const RlAgent::Decision dec = agent_.decide(obs_n, y0, y0_dot);
      ++total_decisions_;
      const VectorXd values = agent_.critic().forward(obs_n);

      for (int j = 0; j < agent_.k(); ++j) {
        const VectorXd mean = dec.means.row(j).transpose();
        const VectorXd action = gaussian::sample(mean, agent_.log_std(), action_rng_);
        const double logp = gaussian::log_prob(action, mean, agent_.log_std());
        const StepResult res = env_.step(action);
        ++total_env_steps_;
        episode_return_ += res.reward;

        Transition tr;
        tr.obs_n = obs_n;
        tr.y0 = y0;
        tr.y0_dot = y0_dot;
        tr.action = action;
        tr.logp = logp;
        tr.reward = normalize_returns_ ? return_norm_.scale(res.reward, res.done)
                                       : res.reward;
        tr.done = res.done;
        tr.value_head = j;
        tr.value = values[j];
        if (res.done && !env_.success()) {
          // Horizon truncation: bootstrap from the state the episode was
          // cut off in rather than treating it as terminal.
          tr.truncated = true;
          tr.truncation_value =
              agent_.critic().forward(agent_.normalizer().normalize(res.obs))[0];
        }
        buffer.transitions.push_back(std::move(tr));

        obs_raw_ = res.obs;
        if (res.done) {
          episode_active_ = false;
          if (stats) {
            ++stats->episodes;
            stats->successes += env_.success() ? 1 : 0;
            stats->return_sum += episode_return_;
          }
          recent_success_.push_back(env_.success());
          if (recent_success_.size() > 20) recent_success_.pop_front();
          break;  // flush the partial block at the episode boundary
        }
      }
    }
    if (stats) stats->env_steps = total_env_steps_;

    buffer.bootstrap_valid = episode_active_;
    if (episode_active_) {
      const VectorXd obs_n = agent_.normalizer().normalize(obs_raw_);
      buffer.bootstrap_value = agent_.critic().forward(obs_n)[0];
    }
    return buffer;
  }

  // Success rate over the most recent 20 completed episodes.
  double rolling_success() const {
    if (recent_success_.empty()) return 0.0;
    double s = 0.0;
    for (bool b : recent_success_) s += b ? 1.0 : 0.0;
    return s / recent_success_.size();
  }

 private:
  RlAgent& agent_;
  PlanarEnv env_;
  Rng action_rng_;
  Rng episode_rng_;
  ReturnNormalizer return_norm_;
  bool normalize_returns_;
  VectorXd obs_raw_;
  bool episode_active_ = false;
  double episode_return_ = 0.0;
  std::int64_t total_env_steps_ = 0;
  std::int64_t total_decisions_ = 0;
  std::deque<bool> recent_success_;
};

struct UpdateStats {
  std::vector<double> pg_loss_per_epoch;
  std::vector<double> value_loss_per_epoch;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double pre_clip_grad_norm = 0.0;
};

// One PPO update over a collected buffer: advantage normalization, then
// `epochs` passes of minibatched clipped-surrogate steps.
inline UpdateStats ppo_update(RlAgent& agent, EpisodeBuffer& buffer,
                              const PpoConfig& cfg, Rng& shuffle_rng) {
  cfg.validate();
  const int n = static_cast<int>(buffer.size());
  if (n == 0) throw ContractError("ppo_update: empty buffer");
  if (buffer.advantages.size() != n)
    throw ContractError("ppo_update: run gae() first");
  normalize_advantages(buffer.advantages);

  UpdateStats stats;
  stats.entropy = gaussian::entropy(agent.log_std());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int chunk = (n + cfg.minibatches - 1) / cfg.minibatches;

  MlpGrads actor_grads = agent.actor_net().zero_grads();
  MlpGrads critic_grads = agent.critic().net().zero_grads();
  VectorXd log_std_grad = VectorXd::Zero(agent.act_dim());

  long clipped_count = 0, sample_count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_pg = 0.0, epoch_value = 0.0;

    for (int start = 0; start < n; start += chunk) {
      const int end = std::min(n, start + chunk);
      const int mb = end - start;
      actor_grads.setZero();
      critic_grads.setZero();
      log_std_grad.setZero();

      for (int s = start; s < end; ++s) {
        const Transition& tr = buffer.transitions[order[s]];
        const double adv = buffer.advantages[order[s]];
        const double ret = buffer.returns[order[s]];

        const RlAgent::Decision dec = agent.decide(tr.obs_n, tr.y0, tr.y0_dot);
        const VectorXd mean = dec.means.row(tr.value_head).transpose();
        const double logp = gaussian::log_prob(tr.action, mean, agent.log_std());
        const double ratio = std::exp(logp - tr.logp);
        const double surr1 = ratio * adv;
        const double surr2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        epoch_pg += -std::min(surr1, surr2);
        ++sample_count;
        if (surr1 > surr2) ++clipped_count;

        // d(-min)/d logp: active only on the unclipped branch.
        const double d_logp = (surr1 <= surr2) ? -adv * ratio : 0.0;
        if (d_logp != 0.0) {
          const VectorXd d_mean =
              d_logp * gaussian::d_log_prob_d_mean(tr.action, mean, agent.log_std());
          MatrixXd d_means = MatrixXd::Zero(agent.k(), agent.act_dim());
          d_means.row(tr.value_head) = d_mean.transpose();
          agent.backward_decision(dec, d_means, tr.y0, tr.y0_dot, actor_grads);
          log_std_grad +=
              d_logp * gaussian::d_log_prob_d_log_std(tr.action, mean, agent.log_std());
        }
        // Entropy bonus: dH/dlog_std = 1 per dimension.
        log_std_grad.array() -= cfg.entropy_coef;

        Mlp::Cache vcache;
        const VectorXd v = agent.critic().forward(tr.obs_n, &vcache);
        const double v_err = v[tr.value_head] - ret;
        epoch_value += 0.5 * v_err * v_err;
        VectorXd v_up = VectorXd::Zero(agent.k());
        v_up[tr.value_head] = cfg.value_coef * v_err;
        agent.critic().net().backward(vcache, v_up, critic_grads);
      }

      const double inv = 1.0 / mb;
      actor_grads *= inv;
      critic_grads *= inv;
      log_std_grad *= inv;

      GradRefs grads = GradRefs::of(actor_grads);
      grads.append(log_std_grad);
      grads.append(critic_grads);
      stats.pre_clip_grad_norm = clip_grad_norm(grads, cfg.max_grad_norm);

      ParamRefs params = agent.trainable_params();
      agent.optimizer().step(params, grads);
      agent.mark_params_changed();
    }
    stats.pg_loss_per_epoch.push_back(epoch_pg / n);
    stats.value_loss_per_epoch.push_back(epoch_value / n);
  }
  stats.clip_fraction =
      sample_count > 0 ? static_cast<double>(clipped_count) / sample_count : 0.0;
  if (!std::isfinite(stats.pg_loss_per_epoch.back()))
    throw NumericError("ppo_update: non-finite loss");
  return stats;
}

struct RlMetricPoint {
  std::int64_t env_steps = 0;
  double episode_return = 0.0;
  double success_rate = 0.0;  // rolling over the last 20 episodes
  double pg_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct RlRunConfig {
  Algo algo = Algo::kNdp;
  EnvConfig env;
  DmpConfig dmp;
  PpoConfig ppo;
  std::vector<int> hidden = {100, 100};
  double w_scale = 1.0;
  std::int64_t total_env_steps = 200000;
  std::uint64_t seed = 0;
};

// Full training loop. `should_stop` (optional) ends training early, e.g.
// once a success threshold is reached.
inline std::vector<RlMetricPoint> train_rl(
    const RlRunConfig& run,
    const std::function<void(const RlMetricPoint&)>& on_metric = nullptr,
    const std::function<bool(const RlMetricPoint&)>& should_stop = nullptr) {
  run.env.validate();
  run.ppo.validate();

  Rng master(run.seed);
  Rng init_rng = master.fork(0);
  Rng episode_rng = master.fork(1);
  Rng action_rng = master.fork(2);
  Rng shuffle_rng = master.fork(3);

  EnvConfig env_cfg = run.env;
  RlAgent agent(run.algo, env_cfg, run.dmp, run.ppo, run.hidden, init_rng,
                run.w_scale);
  env_cfg.stale_k = agent.k();
  RolloutCollector collector(agent, env_cfg, run.ppo, action_rng, episode_rng);

  std::vector<RlMetricPoint> log;
  while (collector.total_env_steps() < run.total_env_steps) {
    if (run.ppo.linear_lr_decay) {
      const double frac = static_cast<double>(collector.total_env_steps()) /
                          static_cast<double>(run.total_env_steps);
      agent.optimizer().set_learning_rate(run.ppo.lr * (1.0 - frac));
    }
    CollectStats cs;
    EpisodeBuffer buffer = collector.collect(run.ppo.batch_size, &cs);
    gae(buffer, run.ppo);
    const UpdateStats us = ppo_update(agent, buffer, run.ppo, shuffle_rng);

    RlMetricPoint mp;
    mp.env_steps = collector.total_env_steps();
    mp.episode_return = cs.episodes > 0 ? cs.return_sum / cs.episodes : 0.0;
    mp.success_rate = collector.rolling_success();
    mp.pg_loss = us.pg_loss_per_epoch.back();
    mp.value_loss = us.value_loss_per_epoch.back();
    mp.entropy = us.entropy;
    log.push_back(mp);
    if (on_metric) on_metric(mp);
    if (should_stop && should_stop(mp)) break;
  }
  return log;
}

}  // namespace dmprl

#endif  // DMPRL_PPO_HPP_
