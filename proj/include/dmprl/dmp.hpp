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

// Second-order goal-attractor dynamical system (DMP): radial basis forcing
// term, exponential phase variable, and explicit-Euler rollout with
// sub-sampling. All functions are pure; values are immutable after
// construction and safe to share across threads.

#ifndef DMPRL_DMP_HPP_
#define DMPRL_DMP_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "dmprl/common.hpp"

namespace dmprl {

enum class BasisKind {
  kGaussianRbf,
  kLinear,
  kMultiquadric,
  kInverseQuadric,
  kInverseMultiquadric,
};

inline std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::kGaussianRbf: return "gaussian";
    case BasisKind::kLinear: return "linear";
    case BasisKind::kMultiquadric: return "multiquadric";
    case BasisKind::kInverseQuadric: return "inverse_quadric";
    case BasisKind::kInverseMultiquadric: return "inverse_multiquadric";
  }
  throw ConfigError("unknown basis kind");
}

inline BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "gaussian") return BasisKind::kGaussianRbf;
  if (name == "linear") return BasisKind::kLinear;
  if (name == "multiquadric") return BasisKind::kMultiquadric;
  if (name == "inverse_quadric") return BasisKind::kInverseQuadric;
  if (name == "inverse_multiquadric") return BasisKind::kInverseMultiquadric;
  throw ConfigError("unknown basis kind: " + name);
}

// Fixed scalars of the dynamical system. `beta` defaults to `alpha / 4`
// (critical damping); overriding it is allowed but loses that guarantee.
struct DmpConfig {
  int n_basis = 6;
  double alpha = 25.0;
  double beta = 25.0 / 4.0;
  double a_x = 1.0;
  double dt = 1.0 / 35.0;  // m_steps * dt = 1 by default
  int m_steps = 35;
  int k_rollout = 5;  // actions sub-sampled per rollout, must divide m_steps
  BasisKind basis = BasisKind::kGaussianRbf;
  double epsilon = 1.0;  // shape parameter of the quadric kernels
  bool learn_alpha = false;
  bool zero_forcing = false;  // "only-g": forcing term pinned to zero

  static DmpConfig with_steps(int m, int k) {
    DmpConfig c;
    c.m_steps = m;
    c.k_rollout = k;
    c.dt = 1.0 / static_cast<double>(m);
    return c;
  }

  void validate() const {
    if (n_basis <= 0) throw ConfigError("dmp: n_basis must be positive");
    if (!(alpha > 0.0)) throw ConfigError("dmp: alpha must be > 0");
    if (!(beta > 0.0)) throw ConfigError("dmp: beta must be > 0");
    if (!(a_x > 0.0)) throw ConfigError("dmp: a_x must be > 0");
    if (!(dt > 0.0)) throw ConfigError("dmp: dt must be > 0");
    if (!(epsilon > 0.0)) throw ConfigError("dmp: epsilon must be > 0");
    if (m_steps <= 0) throw ConfigError("dmp: m_steps must be positive");
    if (k_rollout <= 0 || k_rollout > m_steps)
      throw ConfigError("dmp: k_rollout must satisfy 1 <= k <= m_steps");
    if (m_steps % k_rollout != 0)
      throw ConfigError("dmp: k_rollout must divide m_steps evenly");
  }
};

// Learnable quantities predicted per decision step: forcing weights
// w [dof x n_basis] and goal g [dof].
struct DmpParams {
  MatrixXd w;
  VectorXd g;

  Eigen::Index dof() const { return g.size(); }

  static DmpParams zeros(Eigen::Index dof, int n_basis) {
    DmpParams p;
    p.w = MatrixXd::Zero(dof, n_basis);
    p.g = VectorXd::Zero(dof);
    return p;
  }
};

struct DmpState {
  VectorXd y;       // position
  VectorXd y_dot;   // velocity
  VectorXd y_ddot;  // acceleration
  double x = 1.0;   // canonical phase, x0 = 1
};

// Everything the analytical backward pass needs: the full state sequence
// (m_steps + 1 entries, index 0 is the initial state) and the basis vector
// used by the forcing term at each of the m integration steps.
struct RolloutTape {
  std::vector<DmpState> states;
  std::vector<VectorXd> psi;  // psi[t-1] = basis at the phase used in step t
  DmpParams params;
  DmpConfig config;
  VectorXd y0;
};

// Basis activations at phase x. Gaussian kernels use centers
// c_i = exp(-i * a_x / n) for i in {1..n} and widths h_i = n / c_i; the
// quadric family is index-independent by construction.
inline VectorXd basis_eval(double x, const DmpConfig& config) {
  if (!std::isfinite(x)) throw NumericError("basis_eval: non-finite phase");
  const int n = config.n_basis;
  VectorXd psi(n);
  switch (config.basis) {
    case BasisKind::kGaussianRbf:
      for (int i = 0; i < n; ++i) {
        const double c = std::exp(-static_cast<double>(i + 1) * config.a_x /
                                  static_cast<double>(n));
        const double h = static_cast<double>(n) / c;
        const double d = x - c;
        psi[i] = std::exp(-h * d * d);
      }
      break;
    case BasisKind::kLinear:
      psi.setConstant(x);
      break;
    case BasisKind::kMultiquadric:
      psi.setConstant(std::sqrt(1.0 + (config.epsilon * x) * (config.epsilon * x)));
      break;
    case BasisKind::kInverseQuadric:
      psi.setConstant(1.0 / (1.0 + (config.epsilon * x) * (config.epsilon * x)));
      break;
    case BasisKind::kInverseMultiquadric:
      psi.setConstant(1.0 / std::sqrt(1.0 + (config.epsilon * x) * (config.epsilon * x)));
      break;
  }
  return psi;
}

// Basis sums below this magnitude raise instead of dividing; a Gaussian sum
// is strictly positive so this only fires for pathological quadric configs.
inline constexpr double kBasisSumFloor = 1e-10;

inline double checked_basis_sum(const VectorXd& psi) {
  const double sum = psi.sum();
  if (std::abs(sum) < kBasisSumFloor)
    throw NumericError("forcing: singular basis (|sum psi| < 1e-10)");
  return sum;
}

// Forcing term f(x, g) = (sum_i psi_i w_i / sum_i psi_i) * x * (g - y0),
// evaluated per degree of freedom with a precomputed basis vector.
inline VectorXd forcing_with_basis(const VectorXd& psi, double x,
                                   const DmpParams& params, const VectorXd& y0,
                                   const DmpConfig& config) {
  if (params.g.size() != y0.size() || params.w.rows() != y0.size() ||
      params.w.cols() != config.n_basis)
    throw ContractError("forcing: inconsistent dimensions");
  if (config.zero_forcing) return VectorXd::Zero(y0.size());
  const double sum = checked_basis_sum(psi);
  const VectorXd weighted = params.w * psi;  // per dof: sum_i psi_i w_{d,i}
  return ((weighted / sum) * x).cwiseProduct(params.g - y0);
}

inline VectorXd forcing(double x, const DmpParams& params, const VectorXd& y0,
                        const DmpConfig& config) {
  return forcing_with_basis(basis_eval(x, config), x, params, y0, config);
}

// One explicit-Euler step of the phase variable.
inline double canonical_step(double x, const DmpConfig& config) {
  if (!std::isfinite(x)) throw NumericError("canonical_step: non-finite phase");
  return x + config.dt * (-config.a_x * x);
}

// One integrator step. The phase advances first, the acceleration is
// evaluated at the advanced phase, and the velocity/position updates use the
// previous step's derivatives:
//   x_t   = x_{t-1} + dt * (-a_x x_{t-1})
//   ydd_t = alpha * (beta * (g - y_{t-1}) - yd_{t-1}) + f(x_t, g)
//   yd_t  = yd_{t-1} + ydd_{t-1} * dt
//   y_t   = y_{t-1} + yd_{t-1} * dt
inline DmpState step(const DmpState& state, const DmpParams& params,
                     const VectorXd& y0, const DmpConfig& config) {
  DmpState next;
  next.x = canonical_step(state.x, config);
  const VectorXd f = forcing(next.x, params, y0, config);
  next.y_ddot = config.alpha * (config.beta * (params.g - state.y) - state.y_dot) + f;
  next.y_dot = state.y_dot + state.y_ddot * config.dt;
  next.y = state.y + state.y_dot * config.dt;
  if (!all_finite(next.y) || !all_finite(next.y_dot) || !all_finite(next.y_ddot))
    throw NumericError("step: integration diverged (non-finite state)");
  return next;
}

// Unrolls the integrator for m_steps from (y0, y0_dot, ydd0 = 0, x0 = 1) and
// records every intermediate quantity the backward pass needs.
inline RolloutTape rollout(const DmpParams& params, const VectorXd& y0,
                           const VectorXd& y0_dot, const DmpConfig& config) {
  config.validate();
  if (!all_finite(y0) || !all_finite(y0_dot) || !all_finite(params.w) ||
      !all_finite(params.g))
    throw NumericError("rollout: non-finite inputs");
  if (params.g.size() != y0.size() || y0_dot.size() != y0.size() ||
      params.w.rows() != y0.size() || params.w.cols() != config.n_basis)
    throw ContractError("rollout: inconsistent dimensions");

  RolloutTape tape;
  tape.params = params;
  tape.config = config;
  tape.y0 = y0;
  tape.states.reserve(config.m_steps + 1);
  tape.psi.reserve(config.m_steps);

  DmpState s;
  s.y = y0;
  s.y_dot = y0_dot;
  s.y_ddot = VectorXd::Zero(y0.size());
  s.x = 1.0;
  tape.states.push_back(s);

  for (int t = 1; t <= config.m_steps; ++t) {
    DmpState next;
    next.x = canonical_step(s.x, config);
    const VectorXd psi = basis_eval(next.x, config);
    const VectorXd f = forcing_with_basis(psi, next.x, params, y0, config);
    next.y_ddot =
        config.alpha * (config.beta * (params.g - s.y) - s.y_dot) + f;
    next.y_dot = s.y_dot + s.y_ddot * config.dt;
    next.y = s.y + s.y_dot * config.dt;
    if (!all_finite(next.y) || !all_finite(next.y_dot) ||
        !all_finite(next.y_ddot))
      throw NumericError("rollout: integration diverged at step " +
                         std::to_string(t));
    tape.psi.push_back(psi);
    tape.states.push_back(next);
    s = next;
  }
  return tape;
}

struct SubsampledPoint {
  VectorXd y;
  VectorXd y_dot;
  int state_index = 0;  // index into tape.states
};

// The k states at indices m/k, 2m/k, ..., m: the initial state is excluded
// and the final integrator state is always included.
inline std::vector<SubsampledPoint> subsample(const RolloutTape& tape, int k) {
  const int m = tape.config.m_steps;
  if (k <= 0 || k > m || m % k != 0)
    throw ConfigError("subsample: k must divide m_steps");
  const int stride = m / k;
  std::vector<SubsampledPoint> out;
  out.reserve(k);
  for (int j = 1; j <= k; ++j) {
    const int idx = j * stride;
    out.push_back({tape.states[idx].y, tape.states[idx].y_dot, idx});
  }
  return out;
}

}  // namespace dmprl

#endif  // DMPRL_DMP_HPP_
