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

// Policy-side building blocks: the actor network that maps observations to
// dynamical-system parameters, a critic with one value head per sub-sampled
// action, a running observation normalizer, diagonal-Gaussian action
// distributions, and a binary checkpoint format.

#ifndef DMPRL_POLICY_HPP_
#define DMPRL_POLICY_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "dmprl/common.hpp"
#include "dmprl/dmp.hpp"
#include "dmprl/dmp_gradients.hpp"
#include "dmprl/mlp.hpp"

namespace dmprl {

// Actor output layout (one flat vector from the final linear layer):
//   [ w(0,0..n-1), w(1,0..n-1), ..., g_offset(0..dof-1),
//     alpha_raw (if learn_alpha), extra actions... ]
// The goal is parameterized as an offset from the current robot position,
// and alpha as alpha_cfg * exp(alpha_raw), so zero network output reproduces
// the unforced default system.
struct DmpActorSpec {
  int obs_dim = 0;
  std::vector<int> hidden = {100, 100};
  int dof = 2;
  int n_basis = 6;
  bool learn_alpha = false;
  int extra_action_dims = 0;  // env action dims not driven by the system
  // Weight heads are preconditioned by the per-basis trajectory influence
  // (basis_influence_rms), so raw outputs of O(1) shape the rollout at O(1);
  // w_scale multiplies on top of that.
  double w_scale = 1.0;

  int output_dim() const {
    return dof * (n_basis + 1) + (learn_alpha ? 1 : 0) + extra_action_dims;
  }
};

struct DmpActorOutput {
  DmpParams params;      // w and absolute goal (y0 + predicted offset)
  double alpha = 0.0;    // effective alpha (config value unless learned)
  double alpha_raw = 0.0;
  VectorXd extra;        // raw pass-through means for extra action dims
};

class DmpActor {
 public:
  DmpActor() = default;

  DmpActor(const DmpActorSpec& spec, const DmpConfig& dmp, Rng& rng)
      : spec_(spec), dmp_(dmp),
        net_(MlpSpec{spec.obs_dim, spec.hidden, spec.output_dim()}, rng, 0.01) {
    if (spec.learn_alpha != dmp.learn_alpha)
      throw ConfigError("actor: learn_alpha flags disagree");
    w_gain_ = spec.w_scale * basis_influence_rms(dmp).cwiseInverse();
  }

  const DmpActorSpec& spec() const { return spec_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  DmpActorOutput decode(const VectorXd& raw, const VectorXd& y0) const {
    if (raw.size() != spec_.output_dim())
      throw ContractError("actor decode: raw output size mismatch");
    if (y0.size() != spec_.dof)
      throw ContractError("actor decode: y0 dof mismatch");
    DmpActorOutput out;
    out.params.w = MatrixXd(spec_.dof, spec_.n_basis);
    for (int d = 0; d < spec_.dof; ++d)
      for (int i = 0; i < spec_.n_basis; ++i)
        out.params.w(d, i) = w_gain_[i] * raw[d * spec_.n_basis + i];
    out.params.g = y0 + raw.segment(spec_.dof * spec_.n_basis, spec_.dof);
    int cursor = spec_.dof * (spec_.n_basis + 1);
    if (spec_.learn_alpha) {
      out.alpha_raw = raw[cursor++];
      out.alpha = dmp_.alpha * std::exp(out.alpha_raw);
    } else {
      out.alpha = dmp_.alpha;
    }
    out.extra = raw.segment(cursor, spec_.extra_action_dims);
    return out;
  }

  DmpActorOutput forward(const VectorXd& obs, const VectorXd& y0,
                         Mlp::Cache* cache = nullptr) const {
    return decode(net_.forward(obs, cache), y0);
  }

  // Folds gradients on (w, g, alpha_raw, extra) back into a raw-output
  // gradient vector matching the final layer.
  VectorXd fold_upstream(const MatrixXd& d_w, const VectorXd& d_g,
                         double d_alpha_raw, const VectorXd& d_extra) const {
    VectorXd up = VectorXd::Zero(spec_.output_dim());
    for (int d = 0; d < spec_.dof; ++d)
      for (int i = 0; i < spec_.n_basis; ++i)
        up[d * spec_.n_basis + i] = w_gain_[i] * d_w(d, i);
    up.segment(spec_.dof * spec_.n_basis, spec_.dof) = d_g;
    int cursor = spec_.dof * (spec_.n_basis + 1);
    if (spec_.learn_alpha) up[cursor++] = d_alpha_raw;
    if (spec_.extra_action_dims > 0)
      up.segment(cursor, spec_.extra_action_dims) = d_extra;
    return up;
  }

  // Effective dynamical-system config for one decision (alpha possibly
  // replaced by the learned value, beta kept at alpha / 4).
  DmpConfig effective_config(const DmpActorOutput& out) const {
    DmpConfig c = dmp_;
    if (spec_.learn_alpha) {
      c.alpha = out.alpha;
      c.beta = out.alpha / 4.0;
    }
    return c;
  }

 private:
  DmpActorSpec spec_;
  DmpConfig dmp_;
  VectorXd w_gain_;  // w_scale / basis influence, per basis index
  Mlp net_;
};

// Critic trunk with `heads` scalar outputs, one per sub-sampled action slot.
class Critic {
 public:
  Critic() = default;
  Critic(int obs_dim, const std::vector<int>& hidden, int heads, Rng& rng)
      : heads_(heads), net_(MlpSpec{obs_dim, hidden, heads}, rng, 1.0) {
    if (heads <= 0) throw ConfigError("critic: head count must be positive");
  }

  int heads() const { return heads_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  VectorXd forward(const VectorXd& obs, Mlp::Cache* cache = nullptr) const {
    return net_.forward(obs, cache);
  }

 private:
  int heads_ = 0;
  Mlp net_;
};

// Diagonal Gaussian with state-independent log standard deviations.
namespace gaussian {

inline double log_prob(const VectorXd& action, const VectorXd& mean,
                       const VectorXd& log_std) {
  double lp = 0.0;
  for (Eigen::Index d = 0; d < action.size(); ++d) {
    const double sd = std::exp(log_std[d]);
    const double z = (action[d] - mean[d]) / sd;
    lp += -0.5 * z * z - log_std[d] - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

// d log p / d mean.
inline VectorXd d_log_prob_d_mean(const VectorXd& action, const VectorXd& mean,
                                  const VectorXd& log_std) {
  VectorXd g(action.size());
  for (Eigen::Index d = 0; d < action.size(); ++d) {
    const double var = std::exp(2.0 * log_std[d]);
    g[d] = (action[d] - mean[d]) / var;
  }
  return g;
}

// d log p / d log_std.
inline VectorXd d_log_prob_d_log_std(const VectorXd& action,
                                     const VectorXd& mean,
                                     const VectorXd& log_std) {
  VectorXd g(action.size());
  for (Eigen::Index d = 0; d < action.size(); ++d) {
    const double sd = std::exp(log_std[d]);
    const double z = (action[d] - mean[d]) / sd;
    g[d] = z * z - 1.0;
  }
  return g;
}

inline double entropy(const VectorXd& log_std) {
  return log_std.sum() +
         0.5 * log_std.size() * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

inline VectorXd sample(const VectorXd& mean, const VectorXd& log_std, Rng& rng) {
  VectorXd a(mean.size());
  for (Eigen::Index d = 0; d < mean.size(); ++d)
    a[d] = mean[d] + std::exp(log_std[d]) * rng.normal();
  return a;
}

}  // namespace gaussian

// Running mean/variance normalizer (Welford). Updated once per consumed
// decision observation during training; frozen at evaluation.
class ObsNormalizer {
 public:
  ObsNormalizer() = default;
  explicit ObsNormalizer(int dim)
      : count_(0.0), mean_(VectorXd::Zero(dim)), m2_(VectorXd::Zero(dim)) {}

  void update(const VectorXd& obs) {
    count_ += 1.0;
    const VectorXd delta = obs - mean_;
    mean_ += delta / count_;
    m2_ += delta.cwiseProduct(obs - mean_);
  }

  VectorXd normalize(const VectorXd& obs) const {
    if (count_ < 2.0) return obs;
    const VectorXd var = (m2_ / count_).cwiseMax(1e-8);
    VectorXd z = (obs - mean_).cwiseQuotient(var.cwiseSqrt());
    return z.cwiseMax(-10.0).cwiseMin(10.0);
  }

  double count() const { return count_; }
  VectorXd& mean() { return mean_; }
  VectorXd& m2() { return m2_; }
  const VectorXd& mean() const { return mean_; }
  const VectorXd& m2() const { return m2_; }
  void set_count(double c) { count_ = c; }

 private:
  double count_ = 0.0;
  VectorXd mean_;
  VectorXd m2_;
};

// Versioned binary checkpoint: named tensors with shape headers; save/load
// round-trips bit-exactly.
namespace checkpoint {

inline constexpr char kMagic[8] = {'D', 'M', 'P', 'R', 'L', 'C', 'K', '1'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("checkpoint: cannot open for write: " + path);
    out_.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = 1;
    out_.write(reinterpret_cast<const char*>(&version), sizeof(version));
  }

  void tensor(const std::string& name, const MatrixXd& m) {
    const std::uint32_t len = static_cast<std::uint32_t>(name.size());
    out_.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out_.write(name.data(), len);
    const std::uint64_t rows = m.rows(), cols = m.cols();
    out_.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out_.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }

  void tensor(const std::string& name, const VectorXd& v) {
    tensor(name, MatrixXd(v));
  }

  void scalar(const std::string& name, double s) {
    const MatrixXd m = MatrixXd::Constant(1, 1, s);
    tensor(name, m);
  }

  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw ConfigError("checkpoint: cannot open for read: " + path);
    char magic[8];
    in_.read(magic, sizeof(magic));
    if (!in_ || std::string(magic, 8) != std::string(kMagic, 8))
      throw ConfigError("checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    in_.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw ConfigError("checkpoint: unsupported version");
  }

  // Reads the next tensor; the stored name must match.
  MatrixXd tensor(const std::string& expected_name) {
    std::uint32_t len = 0;
    in_.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string name(len, '\0');
    in_.read(name.data(), len);
    if (!in_ || name != expected_name)
      throw ConfigError("checkpoint: expected tensor '" + expected_name +
                        "', found '" + name + "'");
    std::uint64_t rows = 0, cols = 0;
    in_.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in_.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    MatrixXd m(rows, cols);
    for (std::uint64_t r = 0; r < rows; ++r)
      for (std::uint64_t c = 0; c < cols; ++c) {
        double v = 0.0;
        in_.read(reinterpret_cast<char*>(&v), sizeof(v));
        m(r, c) = v;
      }
    if (!in_) throw ConfigError("checkpoint: truncated tensor payload");
    return m;
  }

  VectorXd vector(const std::string& expected_name) {
    return VectorXd(tensor(expected_name));
  }

  double scalar(const std::string& expected_name) {
    return tensor(expected_name)(0, 0);
  }

 private:
  std::ifstream in_;
};

inline void save_mlp(Writer& w, const std::string& prefix, const Mlp& net) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    w.tensor(prefix + ".w" + std::to_string(l), net.weights()[l]);
    w.tensor(prefix + ".b" + std::to_string(l), net.biases()[l]);
  }
}

inline void load_mlp(Reader& r, const std::string& prefix, Mlp& net) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const MatrixXd w = r.tensor(prefix + ".w" + std::to_string(l));
    if (w.rows() != net.weights()[l].rows() || w.cols() != net.weights()[l].cols())
      throw ConfigError("checkpoint: layer shape mismatch");
    net.weights()[l] = w;
    net.biases()[l] = r.vector(prefix + ".b" + std::to_string(l));
  }
  net.mark_params_changed();
}

}  // namespace checkpoint

}  // namespace dmprl

#endif  // DMPRL_POLICY_HPP_
