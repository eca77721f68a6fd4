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

// Planar point-mass environments: reach, push, throw. Each runs inside the
// workspace [-1, 1]^2 with semi-implicit Euler physics. Non-agent state
// exposed through observations and rewards is refreshed only every
// `stale_k` steps; the agent's own position and velocity are always fresh.

#ifndef DMPRL_ENV_HPP_
#define DMPRL_ENV_HPP_

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "dmprl/common.hpp"

namespace dmprl {

enum class EnvKind { kReach, kPush, kThrow };

inline std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kReach: return "point-reach";
    case EnvKind::kPush: return "point-push";
    case EnvKind::kThrow: return "point-throw";
  }
  throw ConfigError("unknown env kind");
}

inline EnvKind env_kind_from_string(const std::string& name) {
  if (name == "point-reach" || name == "reach") return EnvKind::kReach;
  if (name == "point-push" || name == "push") return EnvKind::kPush;
  if (name == "point-throw" || name == "throw") return EnvKind::kThrow;
  throw ConfigError("unknown env name: " + name);
}

enum class ControlMode { kPositionTarget, kForce };

struct EnvConfig {
  EnvKind kind = EnvKind::kReach;
  int horizon = 100;
  int stale_k = 1;  // non-agent state refresh cadence; horizon % stale_k == 0
  ControlMode control = ControlMode::kPositionTarget;

  double dt = 0.02;
  double mass = 1.0;
  double damping = 0.1;
  // Sliding friction on the object keeps pushes quasi-static; the agent's
  // viscous damping stays at 0.1.
  double object_damping = 20.0;
  double pd_kp = 200.0;  // internal tracker for position-target commands
  double pd_kd = 30.0;
  double force_limit = 100.0;
  double success_radius = 0.05;
  double success_bonus = 10.0;
  double disk_radius = 0.05;   // agent and object disks (push contact)
  double restitution = 0.5;    // elastic coefficient of the push contact
  double gravity = 9.8;        // acts on the thrown object after release
  // Push reward shaping: reach term toward the object (with a contact
  // slack so orbiting the object is free) and a potential-based bonus on
  // object progress toward the goal.
  double push_hover_weight = 0.5;
  double push_hover_slack = 0.0;
  double push_progress_weight = 0.0;

  void validate() const {
    if (horizon <= 0) throw ConfigError("env: horizon must be positive");
    if (stale_k <= 0 || horizon % stale_k != 0)
      throw ConfigError("env: horizon must be divisible by stale_k");
    if (!(dt > 0.0)) throw ConfigError("env: dt must be > 0");
  }

  int action_dim() const { return kind == EnvKind::kThrow ? 3 : 2; }
  int obs_dim() const { return kind == EnvKind::kReach ? 6 : 8; }
  bool has_object() const { return kind != EnvKind::kReach; }
};

struct StepResult {
  VectorXd obs;
  double reward = 0.0;
  bool done = false;
};

struct TraceRow {
  int t = 0;
  double agent_x = 0, agent_y = 0;
  double object_x = 0, object_y = 0;
  double goal_x = 0, goal_y = 0;
  double reward = 0;
};

class PlanarEnv {
 public:
  explicit PlanarEnv(const EnvConfig& config) : cfg_(config), rng_(0) {
    cfg_.validate();
  }

  const EnvConfig& config() const { return cfg_; }

  VectorXd reset(std::uint64_t seed) {
    rng_ = Rng(seed * UINT64_C(0x9e3779b97f4a7c15) + 1);
    steps_ = 0;
    done_ = false;
    success_ = false;
    released_ = false;
    trace_.clear();

    agent_pos_.setZero(2);
    agent_vel_.setZero(2);
    object_pos_.setZero(2);
    object_vel_.setZero(2);

    switch (cfg_.kind) {
      case EnvKind::kReach:
        goal_ = sample_annulus(0.3, 0.8);
        break;
      case EnvKind::kPush: {
        goal_ = sample_annulus(0.3, 0.8);
        // Object spawns between the agent and the goal with a small lateral
        // offset, so contact is reachable from the start position.
        const VectorXd dir = goal_.normalized();
        VectorXd perp(2);
        perp << -dir[1], dir[0];
        object_pos_ = 0.45 * goal_ + rng_.uniform(-0.03, 0.03) * perp;
        break;
      }
      case EnvKind::kThrow: {
        // Random start in the upper band, fixed goal disk below.
        agent_pos_[0] = rng_.uniform(-0.5, 0.5);
        agent_pos_[1] = rng_.uniform(0.3, 0.7);
        goal_ = VectorXd(2);
        goal_ << 0.6, -0.6;
        object_pos_ = agent_pos_;
        break;
      }
    }
    stale_object_ = object_pos_;
    prev_dist_view_ = ((cfg_.kind == EnvKind::kReach ? agent_pos_ : stale_object_) -
                       goal_).norm();
    return observation();
  }

  StepResult step(const VectorXd& action) {
    if (done_) throw ContractError("env: step after episode end");
    if (action.size() != cfg_.action_dim())
      throw ContractError("env: action dimension mismatch");
    if (!all_finite(action)) throw NumericError("env: non-finite action");

    // Agent force.
    VectorXd force(2);
    if (cfg_.control == ControlMode::kPositionTarget) {
      const VectorXd cmd = clamp_ws(action.head(2));
      force = cfg_.pd_kp * (cmd - agent_pos_) - cfg_.pd_kd * agent_vel_;
    } else {
      force = action.head(2).cwiseMax(-cfg_.force_limit).cwiseMin(cfg_.force_limit);
    }

    // Semi-implicit Euler for the agent.
    agent_vel_ += cfg_.dt * (force - cfg_.damping * agent_vel_) / cfg_.mass;
    agent_pos_ += cfg_.dt * agent_vel_;
    agent_pos_ = clamp_ws(agent_pos_);

    if (cfg_.kind == EnvKind::kPush) step_push_object();
    if (cfg_.kind == EnvKind::kThrow) step_throw_object(action);

    ++steps_;
    if (steps_ % cfg_.stale_k == 0) stale_object_ = object_pos_;

    // Reward against the possibly stale view: the agent is always fresh,
    // the object is the last captured copy. Pushing adds a reaching term
    // toward the object, mirroring shaped tabletop-push rewards.
    const VectorXd reward_body =
        cfg_.kind == EnvKind::kReach ? agent_pos_ : stale_object_;
    const double dist_view = (reward_body - goal_).norm();
    double reward = -dist_view;
    if (cfg_.kind == EnvKind::kPush) {
      reward -= cfg_.push_hover_weight *
                std::max(0.0, (agent_pos_ - stale_object_).norm() -
                                  cfg_.push_hover_slack);
      reward += cfg_.push_progress_weight * (prev_dist_view_ - dist_view);
    }
    if (dist_view < cfg_.success_radius) reward += cfg_.success_bonus;
    prev_dist_view_ = dist_view;

    // Success uses the true state.
    const VectorXd& true_body =
        cfg_.kind == EnvKind::kReach ? agent_pos_ : object_pos_;
    if ((true_body - goal_).norm() < cfg_.success_radius) success_ = true;
    done_ = success_ || steps_ >= cfg_.horizon;

    trace_.push_back({steps_, agent_pos_[0], agent_pos_[1], object_pos_[0],
                      object_pos_[1], goal_[0], goal_[1], reward});
    return {observation(), reward, done_};
  }

  bool success() const { return success_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }
  const VectorXd& goal() const { return goal_; }
  const VectorXd& agent_pos() const { return agent_pos_; }
  const VectorXd& agent_vel() const { return agent_vel_; }
  const VectorXd& object_pos() const { return object_pos_; }
  const VectorXd& object_vel() const { return object_vel_; }
  bool released() const { return released_; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  VectorXd observation() const {
    VectorXd obs(cfg_.obs_dim());
    if (cfg_.has_object())
      obs << agent_pos_, agent_vel_, stale_object_, goal_;
    else
      obs << agent_pos_, agent_vel_, goal_;
    return obs;
  }

  void write_trace_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("env: cannot open trace file: " + path);
    if (cfg_.has_object())
      out << "t,agent_x,agent_y,object_x,object_y,goal_x,goal_y,reward\n";
    else
      out << "t,agent_x,agent_y,goal_x,goal_y,reward\n";
    char line[256];
    for (const TraceRow& r : trace_) {
      if (cfg_.has_object())
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      r.t, r.agent_x, r.agent_y, r.object_x, r.object_y,
                      r.goal_x, r.goal_y, r.reward);
      else
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.t,
                      r.agent_x, r.agent_y, r.goal_x, r.goal_y, r.reward);
      out << line;
    }
  }

 private:
  static VectorXd clamp_ws(const VectorXd& p) {
    return p.cwiseMax(-1.0).cwiseMin(1.0);
  }

  VectorXd sample_annulus(double r_min, double r_max) {
    const double radius = rng_.uniform(r_min, r_max);
    const double angle = rng_.uniform(0.0, 2.0 * std::numbers::pi);
    VectorXd g(2);
    g << radius * std::cos(angle), radius * std::sin(angle);
    return g;
  }

  void step_push_object() {
    // Impulse exchange between equal-mass disks with restitution, then
    // positional de-penetration moving the object only.
    const double contact_dist = 2.0 * cfg_.disk_radius;
    VectorXd delta = object_pos_ - agent_pos_;
    double dist = delta.norm();
    if (dist < contact_dist) {
      VectorXd normal = dist > 1e-12 ? VectorXd(delta / dist) : VectorXd::Unit(2, 0);
      const double approach = (agent_vel_ - object_vel_).dot(normal);
      if (approach > 0.0) {
        const double impulse = (1.0 + cfg_.restitution) * approach / 2.0;
        object_vel_ += impulse * normal;
        agent_vel_ -= impulse * normal;
      }
      object_pos_ = agent_pos_ + normal * contact_dist;
    }
    object_vel_ += cfg_.dt * (-cfg_.object_damping * object_vel_) / cfg_.mass;
    object_pos_ += cfg_.dt * object_vel_;
    object_pos_ = clamp_ws(object_pos_);
  }

  void step_throw_object(const VectorXd& action) {
    if (!released_ && action[2] > 0.5) released_ = true;
    if (!released_) {
      object_pos_ = agent_pos_;
      object_vel_ = agent_vel_;
    } else {
      object_vel_[1] -= cfg_.dt * cfg_.gravity;
      object_pos_ += cfg_.dt * object_vel_;
      object_pos_ = clamp_ws(object_pos_);
    }
  }

  EnvConfig cfg_;
  Rng rng_;
  int steps_ = 0;
  bool done_ = false;
  bool success_ = false;
  bool released_ = false;
  VectorXd agent_pos_{2}, agent_vel_{2};
  VectorXd object_pos_{2}, object_vel_{2};
  VectorXd stale_object_{2};
  VectorXd goal_{2};
  double prev_dist_view_ = 0.0;
  std::vector<TraceRow> trace_;
};

}  // namespace dmprl

#endif  // DMPRL_ENV_HPP_
