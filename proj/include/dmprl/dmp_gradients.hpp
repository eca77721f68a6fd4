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

// Analytical reverse-mode gradients of a rolled-out trajectory with respect
// to the forcing weights w and the goal g. The jacobians are accumulated
// forward alongside the same recursion the integrator uses, mirroring it
// line by line:
//
//   Wdd_t = alpha * (-beta * W_{t-1} - Wd_{t-1}) + df/dw(x_t)
//   Wd_t  = Wd_{t-1} + Wdd_{t-1} * dt
//   W_t   = W_{t-1} + Wd_{t-1} * dt
//
//   Gdd_t = alpha * (beta * (1 - G_{t-1}) - Gd_{t-1}) + df/dg(x_t)
//   Gd_t  = Gd_{t-1} + Gdd_{t-1} * dt
//   G_t   = G_{t-1} + Gd_{t-1} * dt
//
// with all seeds zero, so W_0 = W_1 = 0 and G_0 = G_1 = 0 exactly. Degrees
// of freedom do not couple: y[d] depends only on w[d, :] and g[d].

#ifndef DMPRL_DMP_GRADIENTS_HPP_
#define DMPRL_DMP_GRADIENTS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "dmprl/common.hpp"
#include "dmprl/dmp.hpp"

namespace dmprl {

// Position jacobians per timestep: d_y_d_w[t] is [dof x n_basis] with entry
// (d, i) = dy_t[d] / dw[d, i]; d_y_d_g[t][d] = dy_t[d] / dg[d]. Length
// m_steps + 1, index 0 is the (identically zero) initial-state jacobian.
struct DmpGradients {
  std::vector<MatrixXd> d_y_d_w;
  std::vector<VectorXd> d_y_d_g;
};

struct ForcingPartials {
  VectorXd d_f_d_w;  // [n_basis]: per-dof scale is (g[d] - y0[d]), see below
  VectorXd d_f_d_g;  // [dof]
};

// Partials of the forcing term at phase x:
//   df[d]/dw[d,i] = (psi_i / sum_j psi_j) * (g[d] - y0[d]) * x
//   df[d]/dg[d]   = (sum_j psi_j w[d,j] / sum_j psi_j) * x
// d_f_d_w stores the dof-independent factor (psi_i / sum) * x; multiply by
// (g[d] - y0[d]) to obtain the partial for dof d.
inline ForcingPartials forcing_partials(const VectorXd& psi, double x,
                                        const DmpParams& params,
                                        const VectorXd& y0,
                                        const DmpConfig& config) {
  ForcingPartials out;
  if (config.zero_forcing) {
    out.d_f_d_w = VectorXd::Zero(config.n_basis);
    out.d_f_d_g = VectorXd::Zero(y0.size());
    return out;
  }
  const double sum = checked_basis_sum(psi);
  out.d_f_d_w = (psi / sum) * x;
  out.d_f_d_g = (params.w * psi / sum) * x;
  return out;
}

inline ForcingPartials forcing_partials(double x, const DmpParams& params,
                                        const VectorXd& y0,
                                        const DmpConfig& config) {
  return forcing_partials(basis_eval(x, config), x, params, y0, config);
}

// Runs the forward jacobian recursion over a recorded rollout.
inline DmpGradients trajectory_jacobians(const RolloutTape& tape) {
  const DmpConfig& cfg = tape.config;
  const Eigen::Index dof = tape.y0.size();
  const int n = cfg.n_basis;
  const int m = cfg.m_steps;
  if (static_cast<int>(tape.states.size()) != m + 1 ||
      static_cast<int>(tape.psi.size()) != m)
    throw ContractError("trajectory_jacobians: tape/config mismatch");

  DmpGradients out;
  out.d_y_d_w.assign(m + 1, MatrixXd::Zero(dof, n));
  out.d_y_d_g.assign(m + 1, VectorXd::Zero(dof));

  MatrixXd w_pos = MatrixXd::Zero(dof, n);
  MatrixXd w_vel = MatrixXd::Zero(dof, n);
  MatrixXd w_acc = MatrixXd::Zero(dof, n);
  VectorXd g_pos = VectorXd::Zero(dof);
  VectorXd g_vel = VectorXd::Zero(dof);
  VectorXd g_acc = VectorXd::Zero(dof);

  const VectorXd goal_minus_y0 = tape.params.g - tape.y0;

  for (int t = 1; t <= m; ++t) {
    const double x_t = tape.states[t].x;
    const ForcingPartials fp =
        forcing_partials(tape.psi[t - 1], x_t, tape.params, tape.y0, cfg);

    const MatrixXd w_acc_next =
        cfg.alpha * (-cfg.beta * w_pos - w_vel) +
        goal_minus_y0 * fp.d_f_d_w.transpose();
    const VectorXd g_acc_next =
        cfg.alpha * (cfg.beta * (VectorXd::Ones(dof) - g_pos) - g_vel) +
        fp.d_f_d_g;

    const MatrixXd w_vel_next = w_vel + w_acc * cfg.dt;
    const MatrixXd w_pos_next = w_pos + w_vel * cfg.dt;
    const VectorXd g_vel_next = g_vel + g_acc * cfg.dt;
    const VectorXd g_pos_next = g_pos + g_vel * cfg.dt;

    w_pos = w_pos_next;
    w_vel = w_vel_next;
    w_acc = w_acc_next;
    g_pos = g_pos_next;
    g_vel = g_vel_next;
    g_acc = g_acc_next;

    out.d_y_d_w[t] = w_pos;
    out.d_y_d_g[t] = g_pos;
  }
  return out;
}

struct ParamGradients {
  MatrixXd d_w;  // [dof x n_basis]
  VectorXd d_g;  // [dof]
};

// Chain rule over the sub-sampled trajectory: given upstream gradients
// dL/dy at the k sub-sampled states, accumulates dL/dw and dL/dg.
inline ParamGradients backward(const RolloutTape& tape,
                               const std::vector<VectorXd>& upstream) {
  const int k = tape.config.k_rollout;
  if (static_cast<int>(upstream.size()) != k)
    throw ContractError("backward: upstream length must equal k_rollout");
  const DmpGradients jac = trajectory_jacobians(tape);
  const Eigen::Index dof = tape.y0.size();
  const int stride = tape.config.m_steps / k;

  ParamGradients out;
  out.d_w = MatrixXd::Zero(dof, tape.config.n_basis);
  out.d_g = VectorXd::Zero(dof);
  for (int j = 0; j < k; ++j) {
    if (upstream[j].size() != dof)
      throw ContractError("backward: upstream entry has wrong dof");
    const int idx = (j + 1) * stride;
    out.d_w += upstream[j].asDiagonal() * jac.d_y_d_w[idx];
    out.d_g += upstream[j].cwiseProduct(jac.d_y_d_g[idx]);
  }
  return out;
}

// Central finite differences of the full position trajectory with respect to
// every entry of (w, g). Used as the independent oracle for the analytic
// recursion; kept free of any code path shared with trajectory_jacobians.
inline DmpGradients fd_trajectory_jacobians(const DmpParams& params,
                                            const VectorXd& y0,
                                            const VectorXd& y0_dot,
                                            const DmpConfig& config,
                                            double h = 1e-5) {
  const Eigen::Index dof = y0.size();
  const int n = config.n_basis;
  const int m = config.m_steps;

  DmpGradients out;
  out.d_y_d_w.assign(m + 1, MatrixXd::Zero(dof, n));
  out.d_y_d_g.assign(m + 1, VectorXd::Zero(dof));

  auto positions = [&](const DmpParams& p) {
    const RolloutTape tape = rollout(p, y0, y0_dot, config);
    std::vector<VectorXd> ys(m + 1);
    for (int t = 0; t <= m; ++t) ys[t] = tape.states[t].y;
    return ys;
  };

  for (Eigen::Index d = 0; d < dof; ++d) {
    for (int i = 0; i < n; ++i) {
      DmpParams plus = params, minus = params;
      plus.w(d, i) += h;
      minus.w(d, i) -= h;
      const auto yp = positions(plus);
      const auto ym = positions(minus);
      for (int t = 0; t <= m; ++t)
        out.d_y_d_w[t](d, i) = (yp[t][d] - ym[t][d]) / (2.0 * h);
    }
    DmpParams plus = params, minus = params;
    plus.g[d] += h;
    minus.g[d] -= h;
    const auto yp = positions(plus);
    const auto ym = positions(minus);
    for (int t = 0; t <= m; ++t)
      out.d_y_d_g[t][d] = (yp[t][d] - ym[t][d]) / (2.0 * h);
  }
  return out;
}

struct FdReport {
  double max_rel_error = 0.0;
  int worst_timestep = -1;
  std::string worst_entry;  // e.g. "w(1,3)" or "g(0)"
};

// Elementwise comparison of a set of analytic jacobians against the
// finite-difference oracle. Split out from fd_check so tests can feed
// deliberately corrupted jacobians through the same comparison.
inline FdReport fd_compare(const DmpGradients& analytic,
                           const DmpParams& params, const VectorXd& y0,
                           const VectorXd& y0_dot, const DmpConfig& config,
                           double h = 1e-5, double abs_floor = 1e-8) {
  const DmpGradients fd = fd_trajectory_jacobians(params, y0, y0_dot, config, h);
  FdReport report;
  const Eigen::Index dof = y0.size();
  for (int t = 0; t <= config.m_steps; ++t) {
    for (Eigen::Index d = 0; d < dof; ++d) {
      for (int i = 0; i < config.n_basis; ++i) {
        const double e =
            rel_error(analytic.d_y_d_w[t](d, i), fd.d_y_d_w[t](d, i), abs_floor);
        if (e > report.max_rel_error) {
          report.max_rel_error = e;
          report.worst_timestep = t;
          report.worst_entry = "w(" + std::to_string(d) + "," + std::to_string(i) + ")";
        }
      }
      const double e = rel_error(analytic.d_y_d_g[t][d], fd.d_y_d_g[t][d], abs_floor);
      if (e > report.max_rel_error) {
        report.max_rel_error = e;
        report.worst_timestep = t;
        report.worst_entry = "g(" + std::to_string(d) + ")";
      }
    }
  }
  return report;
}

// Runs the analytic recursion and checks it against central differences.
inline FdReport fd_check(const DmpParams& params, const VectorXd& y0,
                         const VectorXd& y0_dot, const DmpConfig& config,
                         double h = 1e-5) {
  if (h < 1e-7 || h > 1e-3) throw ConfigError("fd_check: h out of [1e-7, 1e-3]");
  const RolloutTape tape = rollout(params, y0, y0_dot, config);
  return fd_compare(trajectory_jacobians(tape), params, y0, y0_dot, config, h);
}

// RMS over the rollout of the per-basis position jacobian with a unit
// displacement scale: s_i = rms_t of dy_t/dw_i / (g - y0). A fixed property
// of the configuration, used to precondition weight heads so every basis
// coordinate has the same trajectory influence.
inline VectorXd basis_influence_rms(const DmpConfig& config) {
  const int n = config.n_basis, m = config.m_steps;
  VectorXd j_pos = VectorXd::Zero(n), j_vel = VectorXd::Zero(n),
           j_acc = VectorXd::Zero(n);
  VectorXd acc = VectorXd::Zero(n);
  double x = 1.0;
  for (int t = 1; t <= m; ++t) {
    x = canonical_step(x, config);
    const VectorXd psi = basis_eval(x, config);
    const VectorXd src = (psi / checked_basis_sum(psi)) * x;
    const VectorXd j_acc_next = config.alpha * (-config.beta * j_pos - j_vel) + src;
    const VectorXd j_vel_next = j_vel + j_acc * config.dt;
    const VectorXd j_pos_next = j_pos + j_vel * config.dt;
    j_pos = j_pos_next;
    j_vel = j_vel_next;
    j_acc = j_acc_next;
    acc += j_pos.cwiseProduct(j_pos);
  }
  return (acc / m).cwiseSqrt().cwiseMax(1e-12);
}

// d y_t / d alpha by central differences, with beta held at alpha / 4
// (critical damping is preserved while alpha is learned; no analytic
// recursion exists for this partial). Returns one [dof] vector per timestep.
inline std::vector<VectorXd> alpha_jacobian_fd(const DmpParams& params,
                                               const VectorXd& y0,
                                               const VectorXd& y0_dot,
                                               const DmpConfig& config,
                                               double h = 1e-5) {
  auto run = [&](double alpha) {
    DmpConfig c = config;
    c.alpha = alpha;
    c.beta = alpha / 4.0;
    return rollout(params, y0, y0_dot, c);
  };
  const double step = h * std::max(1.0, std::abs(config.alpha));
  const RolloutTape plus = run(config.alpha + step);
  const RolloutTape minus = run(config.alpha - step);
  std::vector<VectorXd> out(config.m_steps + 1);
  for (int t = 0; t <= config.m_steps; ++t)
    out[t] = (plus.states[t].y - minus.states[t].y) / (2.0 * step);
  return out;
}

}  // namespace dmprl

#endif  // DMPRL_DMP_GRADIENTS_HPP_
