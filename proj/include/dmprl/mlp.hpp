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

// Fully-connected network with tanh hidden layers, manual backpropagation,
// and an Adam optimizer with global gradient-norm clipping. No autodiff
// framework is involved anywhere in this project.

#ifndef DMPRL_MLP_HPP_
#define DMPRL_MLP_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dmprl/common.hpp"

namespace dmprl {

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden = {100, 100};
  int output_dim = 0;

  void validate() const {
    if (input_dim <= 0 || output_dim <= 0)
      throw ConfigError("mlp: dimensions must be positive");
    for (int h : hidden)
      if (h <= 0) throw ConfigError("mlp: hidden sizes must be positive");
  }

  std::int64_t param_count() const {
    std::int64_t total = 0;
    int in = input_dim;
    for (int h : hidden) {
      total += static_cast<std::int64_t>(in) * h + h;
      in = h;
    }
    total += static_cast<std::int64_t>(in) * output_dim + output_dim;
    return total;
  }
};

// Per-layer gradients, same shapes as the parameters.
struct MlpGrads {
  std::vector<MatrixXd> d_weights;
  std::vector<VectorXd> d_biases;

  void setZero() {
    for (auto& m : d_weights) m.setZero();
    for (auto& v : d_biases) v.setZero();
  }

  MlpGrads& operator+=(const MlpGrads& other) {
    for (std::size_t i = 0; i < d_weights.size(); ++i) {
      d_weights[i] += other.d_weights[i];
      d_biases[i] += other.d_biases[i];
    }
    return *this;
  }

  MlpGrads& operator*=(double s) {
    for (auto& m : d_weights) m *= s;
    for (auto& v : d_biases) v *= s;
    return *this;
  }
};

class Mlp {
 public:
  Mlp() = default;

  // Weights uniform in +-1/sqrt(fan_in), biases zero. `output_scale` shrinks
  // the final layer (policy heads start near zero output).
  Mlp(const MlpSpec& spec, Rng& rng, double output_scale = 1.0) : spec_(spec) {
    spec.validate();
    int in = spec.input_dim;
    std::vector<int> outs = spec.hidden;
    outs.push_back(spec.output_dim);
    for (std::size_t l = 0; l < outs.size(); ++l) {
      const int out = outs[l];
      const double limit = 1.0 / std::sqrt(static_cast<double>(in));
      const double scale = (l + 1 == outs.size()) ? output_scale : 1.0;
      MatrixXd w(out, in);
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) w(r, c) = scale * rng.uniform(-limit, limit);
      weights_.push_back(std::move(w));
      biases_.push_back(VectorXd::Zero(out));
      in = out;
    }
  }

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::vector<MatrixXd>& weights() { return weights_; }
  std::vector<VectorXd>& biases() { return biases_; }
  const std::vector<MatrixXd>& weights() const { return weights_; }
  const std::vector<VectorXd>& biases() const { return biases_; }

  // Bump after any external parameter mutation so outstanding caches are
  // rejected by backward().
  void mark_params_changed() { ++version_; }
  std::uint64_t version() const { return version_; }

  struct Cache {
    std::vector<VectorXd> activations;  // [0] = input, then post-tanh layers
    std::uint64_t version = 0;
  };

  VectorXd forward(const VectorXd& input, Cache* cache = nullptr) const {
    if (input.size() != spec_.input_dim)
      throw ContractError("mlp forward: input dimension mismatch");
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(input);
      cache->version = version_;
    }
    VectorXd a = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      VectorXd z = weights_[l] * a + biases_[l];
      if (l + 1 < weights_.size()) z = z.array().tanh();
      a = std::move(z);
      if (cache && l + 1 < weights_.size()) cache->activations.push_back(a);
    }
    return a;
  }

  MlpGrads zero_grads() const {
    MlpGrads g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.d_weights.push_back(MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
      g.d_biases.push_back(VectorXd::Zero(biases_[l].size()));
    }
    return g;
  }

  // Exact reverse-mode gradients given dL/d(output). Accumulates into
  // `grads`; optionally reports dL/d(input).
  void backward(const Cache& cache, const VectorXd& upstream, MlpGrads& grads,
                VectorXd* input_grad = nullptr) const {
    if (cache.version != version_)
      throw ContractError("mlp backward: stale forward cache");
    if (cache.activations.size() != weights_.size())
      throw ContractError("mlp backward: cache layer count mismatch");
    if (upstream.size() != spec_.output_dim)
      throw ContractError("mlp backward: upstream dimension mismatch");

    VectorXd delta = upstream;  // dL/dz for the current layer
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const VectorXd& a_in = cache.activations[l];
      grads.d_weights[l] += delta * a_in.transpose();
      grads.d_biases[l] += delta;
      if (l > 0) {
        VectorXd da = weights_[l].transpose() * delta;
        // a_in is the tanh output of layer l-1: d tanh = 1 - a^2.
        delta = da.cwiseProduct(
            (1.0 - a_in.array().square()).matrix());
      } else if (input_grad) {
        *input_grad = weights_[0].transpose() * delta;
      }
    }
  }

 private:
  MlpSpec spec_;
  std::vector<MatrixXd> weights_;
  std::vector<VectorXd> biases_;
  std::uint64_t version_ = 0;
};

// A flat view over every trainable tensor of a model group, so one optimizer
// can step policies made of several parts (net layers, log-std, critic).
struct ParamRefs {
  std::vector<MatrixXd*> mats;
  std::vector<VectorXd*> vecs;

  static ParamRefs of(Mlp& net) {
    ParamRefs r;
    for (auto& w : net.weights()) r.mats.push_back(&w);
    for (auto& b : net.biases()) r.vecs.push_back(&b);
    return r;
  }

  void append(Mlp& net) {
    for (auto& w : net.weights()) mats.push_back(&w);
    for (auto& b : net.biases()) vecs.push_back(&b);
  }

  void append(VectorXd& v) { vecs.push_back(&v); }
};

struct GradRefs {
  std::vector<MatrixXd*> mats;
  std::vector<VectorXd*> vecs;

  static GradRefs of(MlpGrads& g) {
    GradRefs r;
    for (auto& m : g.d_weights) r.mats.push_back(&m);
    for (auto& v : g.d_biases) r.vecs.push_back(&v);
    return r;
  }

  void append(MlpGrads& g) {
    for (auto& m : g.d_weights) mats.push_back(&m);
    for (auto& v : g.d_biases) vecs.push_back(&v);
  }

  void append(VectorXd& v) { vecs.push_back(&v); }

  double squared_norm() const {
    double s = 0.0;
    for (const auto* m : mats) s += m->squaredNorm();
    for (const auto* v : vecs) s += v->squaredNorm();
    return s;
  }

  void scale(double f) {
    for (auto* m : mats) *m *= f;
    for (auto* v : vecs) *v *= f;
  }
};

// Rescales the whole gradient group so its global L2 norm is at most
// `max_norm`. Returns the pre-clip norm.
inline double clip_grad_norm(GradRefs& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (std::isfinite(norm) && norm > max_norm && norm > 0.0)
    grads.scale(max_norm / norm);
  return norm;
}

// Adam with bias-corrected moment estimates.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr = 3e-4, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  void step(ParamRefs& params, const GradRefs& grads) {
    for (const auto* m : grads.mats)
      if (!m->allFinite()) throw NumericError("adam: non-finite gradient");
    for (const auto* v : grads.vecs)
      if (!v->allFinite()) throw NumericError("adam: non-finite gradient");
    if (!initialized_) {
      for (auto* p : params.mats) {
        m_mats_.push_back(MatrixXd::Zero(p->rows(), p->cols()));
        v_mats_.push_back(MatrixXd::Zero(p->rows(), p->cols()));
      }
      for (auto* p : params.vecs) {
        m_vecs_.push_back(VectorXd::Zero(p->size()));
        v_vecs_.push_back(VectorXd::Zero(p->size()));
      }
      initialized_ = true;
    }
    if (params.mats.size() != m_mats_.size() || params.vecs.size() != m_vecs_.size())
      throw ContractError("adam: parameter group changed shape");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.mats.size(); ++i) {
      auto& m = m_mats_[i];
      auto& v = v_mats_[i];
      const MatrixXd& g = *grads.mats[i];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g.array().square().matrix();
      params.mats[i]->array() -=
          lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
    }
    for (std::size_t i = 0; i < params.vecs.size(); ++i) {
      auto& m = m_vecs_[i];
      auto& v = v_vecs_[i];
      const VectorXd& g = *grads.vecs[i];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g.array().square().matrix();
      params.vecs[i]->array() -=
          lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  bool initialized_ = false;
  long t_ = 0;
  std::vector<MatrixXd> m_mats_, v_mats_;
  std::vector<VectorXd> m_vecs_, v_vecs_;
};

}  // namespace dmprl

#endif  // DMPRL_MLP_HPP_
