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

// Behavior cloning on a synthetic planar digit-stroke task. Each class is a
// fixed smooth parametric curve; samples differ by a small affine jitter.
// The trainer clones strokes either through the dynamical-system policy
// (one whole-trajectory rollout, k = T) or through a capacity-matched
// direct regressor that emits the raw T x 2 trajectory.

#ifndef DMPRL_IMITATION_HPP_
#define DMPRL_IMITATION_HPP_

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dmprl/common.hpp"
#include "dmprl/dmp.hpp"
#include "dmprl/dmp_gradients.hpp"
#include "dmprl/mlp.hpp"
#include "dmprl/policy.hpp"

namespace dmprl {

struct Demonstration {
  int digit = 0;
  VectorXd condition;  // class one-hot, optionally + flattened 8x8 raster
  MatrixXd target;     // [T x 2] end-effector positions
};

struct StrokeSpec {
  int digit = 0;
  int samples = 300;        // T
  double noise_scale = 1.0; // affine jitter magnitude multiplier
  bool include_raster = true;
};

namespace detail {

// Control polylines for the ten stylized single-stroke digits, in the unit
// box; mapped to [-0.72, 0.72]^2 at sampling time.
inline const std::vector<std::vector<std::pair<double, double>>>& digit_controls() {
  static const std::vector<std::vector<std::pair<double, double>>> controls = {
      {{0.50, 0.90}, {0.18, 0.68}, {0.18, 0.32}, {0.50, 0.10}, {0.82, 0.32},
       {0.82, 0.68}, {0.55, 0.88}, {0.30, 0.70}},
      {{0.32, 0.72}, {0.50, 0.90}, {0.50, 0.50}, {0.50, 0.10}},
      {{0.22, 0.72}, {0.45, 0.90}, {0.72, 0.80}, {0.70, 0.52}, {0.42, 0.30},
       {0.25, 0.12}, {0.75, 0.12}},
      {{0.42, 0.88}, {0.66, 0.90}, {0.74, 0.70}, {0.56, 0.52}, {0.74, 0.34},
       {0.58, 0.12}, {0.25, 0.16}},
      {{0.26, 0.90}, {0.22, 0.56}, {0.52, 0.50}, {0.62, 0.74}, {0.60, 0.12}},
      {{0.74, 0.88}, {0.38, 0.86}, {0.32, 0.60}, {0.56, 0.60}, {0.74, 0.40},
       {0.58, 0.14}, {0.30, 0.20}},
      {{0.66, 0.86}, {0.40, 0.62}, {0.26, 0.34}, {0.46, 0.12}, {0.68, 0.28},
       {0.58, 0.46}, {0.40, 0.50}},
      {{0.22, 0.88}, {0.50, 0.90}, {0.78, 0.88}, {0.56, 0.50}, {0.38, 0.12}},
      {{0.60, 0.86}, {0.36, 0.70}, {0.56, 0.52}, {0.72, 0.32}, {0.50, 0.14},
       {0.32, 0.30}, {0.48, 0.48}, {0.78, 0.56}},
      {{0.72, 0.72}, {0.50, 0.86}, {0.32, 0.66}, {0.50, 0.54}, {0.68, 0.68},
       {0.62, 0.36}, {0.54, 0.12}}};
  return controls;
}

// Uniform Catmull-Rom interpolation through the control points with
// duplicated endpoints; u in [0, 1].
inline Eigen::Vector2d catmull_rom(
    const std::vector<std::pair<double, double>>& pts, double u) {
  const int n = static_cast<int>(pts.size());
  const double s = u * (n - 1);
  int seg = std::min(n - 2, static_cast<int>(s));
  const double t = s - seg;
  auto at = [&](int i) {
    i = std::clamp(i, 0, n - 1);
    return Eigen::Vector2d(pts[i].first, pts[i].second);
  };
  const Eigen::Vector2d p0 = at(seg - 1), p1 = at(seg), p2 = at(seg + 1),
                        p3 = at(seg + 2);
  const double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

}  // namespace detail

inline constexpr int kNumDigitClasses = 10;
inline constexpr int kRasterSide = 8;

// The noise-free class curve sampled at T points. The pen moves along the
// spline at constant arc speed shaped by a smoothstep time profile, so every
// stroke starts and ends at rest.
inline MatrixXd digit_curve(int digit, int samples) {
  if (digit < 0 || digit >= kNumDigitClasses)
    throw ConfigError("digit class must be in [0, 9]");
  if (samples < 2) throw ConfigError("stroke sample count must be >= 2");
  const auto& pts = detail::digit_controls()[digit];

  const int dense = std::max(2048, 8 * samples);
  std::vector<Eigen::Vector2d> path(dense);
  for (int i = 0; i < dense; ++i)
    path[i] = detail::catmull_rom(pts, static_cast<double>(i) / (dense - 1));

  // Pen strokes carry no sharp corners: a few moving-average passes bound
  // the curvature to what a rest-to-rest motion can trace.
  const int window = dense / 48;
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<Eigen::Vector2d> smooth = path;
    for (int i = 0; i < dense; ++i) {
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      int count = 0;
      for (int o = -window; o <= window; ++o) {
        const int idx = std::clamp(i + o, 0, dense - 1);
        acc += path[idx];
        ++count;
      }
      smooth[i] = acc / count;
    }
    path = std::move(smooth);
  }

  std::vector<double> arc(dense, 0.0);
  for (int i = 1; i < dense; ++i)
    arc[i] = arc[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = arc.back();

  MatrixXd curve(samples, 2);
  int cursor = 0;
  for (int j = 0; j < samples; ++j) {
    const double u = static_cast<double>(j) / (samples - 1);
    const double eased = u * u * (3.0 - 2.0 * u);  // rest-to-rest profile
    const double s = eased * total;
    while (cursor + 1 < dense && arc[cursor + 1] < s) ++cursor;
    const double span = arc[cursor + 1] - arc[cursor];
    const double frac = span > 0.0 ? (s - arc[cursor]) / span : 0.0;
    const Eigen::Vector2d p = path[cursor] + frac * (path[cursor + 1] - path[cursor]);
    curve(j, 0) = (p.x() - 0.5) * 1.44;
    curve(j, 1) = (p.y() - 0.5) * 1.44;
  }
  return curve;
}

// 8x8 occupancy raster of a stroke over [-0.8, 0.8]^2, peak-normalized.
inline VectorXd rasterize_stroke(const MatrixXd& stroke) {
  VectorXd cells = VectorXd::Zero(kRasterSide * kRasterSide);
  for (Eigen::Index j = 0; j < stroke.rows(); ++j) {
    const int cx = std::clamp(
        static_cast<int>((stroke(j, 0) + 0.8) / 1.6 * kRasterSide), 0, kRasterSide - 1);
    const int cy = std::clamp(
        static_cast<int>((stroke(j, 1) + 0.8) / 1.6 * kRasterSide), 0, kRasterSide - 1);
    cells[cy * kRasterSide + cx] += 1.0;
  }
  const double peak = cells.maxCoeff();
  if (peak > 0.0) cells /= peak;
  return cells;
}

inline int condition_dim(bool include_raster) {
  return kNumDigitClasses + (include_raster ? kRasterSide * kRasterSide : 0);
}

// Reference pen motion of one class: a rest-to-rest attractor rollout whose
// forcing weights are least-squares fitted to the class curve once and
// cached. Pen strokes are exactly the family of motions the dynamical
// system produces, so demonstrations are generated from it directly.
struct ClassStroke {
  DmpParams params;  // class forcing weights and goal at reference pose
  VectorXd y0;       // reference start
  DmpConfig config;
};

inline const ClassStroke& class_stroke(int digit, int samples, int n_basis,
                                       double alpha) {
  struct Key {
    int digit, samples, n_basis;
    long alpha_milli;
    bool operator<(const Key& o) const {
      return std::tie(digit, samples, n_basis, alpha_milli) <
             std::tie(o.digit, o.samples, o.n_basis, o.alpha_milli);
    }
  };
  static std::map<Key, ClassStroke> cache;
  static std::mutex mutex;
  const Key key{digit, samples, n_basis, std::lround(alpha * 1000)};

  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  DmpConfig cfg = DmpConfig::with_steps(samples, samples);
  cfg.n_basis = n_basis;
  cfg.alpha = alpha;
  cfg.beta = alpha / 4.0;

  const MatrixXd curve = digit_curve(digit, samples);
  const VectorXd y0 = curve.row(0).transpose();
  const VectorXd goal = curve.row(samples - 1).transpose();

  // The rollout is affine in w for fixed (g, y0): per dof,
  //   y_d(t) = base_d(t) + (g_d - y0_d) * sum_i J_i(t) w(d, i)
  // where J is the per-basis unit response. Fitting w is linear least
  // squares on the residual to the class curve.
  MatrixXd response(samples, n_basis);
  {
    VectorXd j_pos = VectorXd::Zero(n_basis), j_vel = VectorXd::Zero(n_basis),
             j_acc = VectorXd::Zero(n_basis);
    double x = 1.0;
    for (int t = 1; t <= samples; ++t) {
      x = canonical_step(x, cfg);
      const VectorXd psi = basis_eval(x, cfg);
      const VectorXd src = (psi / checked_basis_sum(psi)) * x;
      const VectorXd j_acc_next = cfg.alpha * (-cfg.beta * j_pos - j_vel) + src;
      const VectorXd j_vel_next = j_vel + j_acc * cfg.dt;
      const VectorXd j_pos_next = j_pos + j_vel * cfg.dt;
      j_pos = j_pos_next;
      j_vel = j_vel_next;
      j_acc = j_acc_next;
      response.row(t - 1) = j_pos.transpose();
    }
  }
  DmpParams unforced = DmpParams::zeros(2, n_basis);
  unforced.g = goal;
  const RolloutTape base = rollout(unforced, y0, VectorXd::Zero(2), cfg);

  ClassStroke cs;
  cs.config = cfg;
  cs.y0 = y0;
  cs.params.g = goal;
  cs.params.w = MatrixXd::Zero(2, n_basis);
  // Ridge regression in the influence-normalized space keeps the fitted
  // weights free of the huge cancelling pairs an unregularized solve finds
  // on this heavily overlapping basis.
  const VectorXd influence = basis_influence_rms(cfg);
  const MatrixXd design = response * influence.cwiseInverse().asDiagonal();
  const MatrixXd gram = design.transpose() * design +
                        2e-4 * samples * MatrixXd::Identity(n_basis, n_basis);
  const auto solver = gram.ldlt();
  for (int d = 0; d < 2; ++d) {
    const double scale = goal[d] - y0[d];
    VectorXd residual(samples);
    for (int t = 1; t <= samples; ++t)
      residual[t - 1] = curve(t - 1, d) - base.states[t].y[d];
    // Degenerate displacement cannot carry forcing; glyphs are designed to
    // keep |goal - start| well away from zero in both coordinates.
    if (std::abs(scale) < 1e-6) continue;
    const VectorXd raw = solver.solve(design.transpose() * residual) / scale;
    cs.params.w.row(d) = raw.cwiseQuotient(influence).transpose();
  }
  return cache.emplace(key, std::move(cs)).first->second;
}

inline constexpr int kStrokeBasisDefault = 15;
inline constexpr double kStrokeAlphaDefault = 10.0;

// One sample of a class: the reference motion re-posed by a random per-axis
// scale and translation (which the attractor parameterization carries
// exactly), perturbed forcing weights for stroke-shape variation, and
// per-point measurement noise on the recorded trajectory.
inline Demonstration make_demonstration(const StrokeSpec& spec, Rng& rng) {
  const ClassStroke& cs = class_stroke(spec.digit, spec.samples,
                                       kStrokeBasisDefault, kStrokeAlphaDefault);
  const double ns = spec.noise_scale;
  const double sx = 1.0 + 0.08 * ns * rng.normal();
  const double sy = 1.0 + 0.08 * ns * rng.normal();
  const double tx = 0.12 * ns * rng.normal();
  const double ty = 0.12 * ns * rng.normal();

  const Eigen::Vector2d center = 0.5 * (cs.y0 + cs.params.g);
  DmpParams posed;
  posed.w = cs.params.w;
  for (Eigen::Index d = 0; d < 2; ++d)
    for (int i = 0; i < posed.w.cols(); ++i)
      posed.w(d, i) *= 1.0 + 0.06 * ns * rng.normal();
  const Eigen::Vector2d s(sx, sy);
  VectorXd y0(2), goal(2);
  for (int d = 0; d < 2; ++d) {
    y0[d] = center[d] + s[d] * (cs.y0[d] - center[d]) + (d == 0 ? tx : ty);
    goal[d] = center[d] + s[d] * (cs.params.g[d] - center[d]) + (d == 0 ? tx : ty);
  }
  posed.g = goal;

  const RolloutTape tape = rollout(posed, y0, VectorXd::Zero(2), cs.config);
  MatrixXd stroke(spec.samples, 2);
  for (int t = 1; t <= spec.samples; ++t)
    stroke.row(t - 1) = tape.states[t].y.transpose();
  for (Eigen::Index j = 0; j < stroke.rows(); ++j) {
    stroke(j, 0) += 0.03 * ns * rng.normal();
    stroke(j, 1) += 0.03 * ns * rng.normal();
  }

  Demonstration demo;
  demo.digit = spec.digit;
  demo.target = stroke;
  VectorXd onehot = VectorXd::Zero(kNumDigitClasses);
  onehot[spec.digit] = 1.0;
  if (spec.include_raster) {
    demo.condition = VectorXd(condition_dim(true));
    demo.condition << onehot, rasterize_stroke(stroke);
  } else {
    demo.condition = onehot;
  }
  return demo;
}

struct StrokeDataset {
  std::vector<Demonstration> train;
  std::vector<Demonstration> holdout;
  int T = 0;
  bool include_raster = true;
};

// Deterministic per seed: `num_per_class` samples per class, split 80/20
// within each class.
inline StrokeDataset generate_digit_dataset(int num_per_class, int T,
                                            std::uint64_t seed,
                                            double noise_scale = 1.0,
                                            bool include_raster = true,
                                            int num_classes = kNumDigitClasses) {
  if (num_per_class < 1) throw ConfigError("num_per_class must be >= 1");
  if (num_classes < 1 || num_classes > kNumDigitClasses)
    throw ConfigError("num_classes must be in [1, 10]");
  Rng rng(seed);
  StrokeDataset data;
  data.T = T;
  data.include_raster = include_raster;
  for (int digit = 0; digit < num_classes; ++digit) {
    StrokeSpec spec;
    spec.digit = digit;
    spec.samples = T;
    spec.noise_scale = noise_scale;
    spec.include_raster = include_raster;
    std::vector<Demonstration> samples;
    samples.reserve(num_per_class);
    for (int i = 0; i < num_per_class; ++i)
      samples.push_back(make_demonstration(spec, rng));
    const int holdout_from = std::max(1, (num_per_class * 4) / 5);
    for (int i = 0; i < num_per_class; ++i) {
      if (i < holdout_from)
        data.train.push_back(std::move(samples[i]));
      else
        data.holdout.push_back(std::move(samples[i]));
    }
  }
  return data;
}

// Sum over timesteps of squared Euclidean distance.
inline double bc_loss(const MatrixXd& predicted, const MatrixXd& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
    throw ContractError("bc_loss: trajectory length mismatch");
  return (predicted - target).array().square().sum();
}

inline double per_point_loss(const MatrixXd& predicted, const MatrixXd& target) {
  return bc_loss(predicted, target) / static_cast<double>(predicted.rows());
}

// JSONL export/import of demonstrations.
inline void save_dataset(const std::vector<Demonstration>& demos,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("dataset: cannot open for write: " + path);
  for (const Demonstration& d : demos) {
    nlohmann::json j;
    j["digit"] = d.digit;
    j["condition"] = std::vector<double>(d.condition.data(),
                                         d.condition.data() + d.condition.size());
    j["T"] = d.target.rows();
    std::vector<double> flat;
    flat.reserve(d.target.size());
    for (Eigen::Index r = 0; r < d.target.rows(); ++r) {
      flat.push_back(d.target(r, 0));
      flat.push_back(d.target(r, 1));
    }
    j["target"] = flat;
    out << j.dump() << "\n";
  }
}

inline std::vector<Demonstration> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("dataset: cannot open for read: " + path);
  std::vector<Demonstration> demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    Demonstration d;
    d.digit = j.at("digit").get<int>();
    const auto cond = j.at("condition").get<std::vector<double>>();
    d.condition = Eigen::Map<const VectorXd>(cond.data(), cond.size());
    const int T = j.at("T").get<int>();
    const auto flat = j.at("target").get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != 2 * T)
      throw ConfigError("dataset: target length does not match T");
    d.target.resize(T, 2);
    for (int r = 0; r < T; ++r) {
      d.target(r, 0) = flat[2 * r];
      d.target(r, 1) = flat[2 * r + 1];
    }
    demos.push_back(std::move(d));
  }
  return demos;
}

// Two tanh hidden layers of equal width sized so a network with the given
// input/output dimensions has a total parameter count as close as possible
// to `target_params`. Used to grow the dynamical-system actor's trunk until
// it matches the direct regressor (same [100, 100] trunk, raw T x 2 head).
inline std::vector<int> matched_hidden(int input_dim, int output_dim,
                                       std::int64_t target_params) {
  // (input_dim*h + h) + (h*h + h) + (h*out + out) = target
  const double out = output_dim;
  const double b = input_dim + 2.0 + out;
  const double c = out - static_cast<double>(target_params);
  const double h = (-b + std::sqrt(b * b - 4.0 * c)) / 2.0;
  return {std::max(2, static_cast<int>(std::lround(h))),
          std::max(2, static_cast<int>(std::lround(h)))};
}

struct ImitationOptions {
  int n_basis = 15;
  double alpha = 10.0;  // slower attractor; whole-stroke forcing stays mild
  std::vector<int> hidden = {100, 100};
  double w_scale = 1.0;
  double lr = 3e-4;
  bool linear_lr_decay = false;  // anneal lr to zero over the epoch budget
  int epochs = 100;
  int minibatch = 8;
  double max_grad_norm = 0.5;
  bool zero_forcing = false;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  double train_per_point = 0.0;
  double holdout_per_point = 0.0;
};

// Whole-trajectory prediction: one decision, k = T.
inline MatrixXd predict_stroke(const DmpActor& actor, const DmpConfig& cfg,
                               const Demonstration& demo) {
  const VectorXd y0 = demo.target.row(0).transpose();
  const DmpActorOutput out =
      actor.forward(demo.condition, y0, nullptr);
  const RolloutTape tape =
      rollout(out.params, y0, VectorXd::Zero(2), cfg);
  const auto pts = subsample(tape, cfg.k_rollout);
  MatrixXd pred(pts.size(), 2);
  for (std::size_t j = 0; j < pts.size(); ++j) pred.row(j) = pts[j].y.transpose();
  return pred;
}

struct ImitationResult {
  DmpActor actor;
  DmpConfig dmp;
  std::vector<EpochMetrics> log;
};

// Full behavior-cloning pipeline: condition -> (w, g) -> rollout ->
// sub-sample -> squared loss -> analytic backward -> clipped Adam step.
inline ImitationResult train_imitation(const StrokeDataset& data,
                                       const ImitationOptions& opt) {
  if (data.train.empty()) throw ConfigError("imitation: empty training set");
  const int T = data.T;

  DmpConfig cfg = DmpConfig::with_steps(T, T);
  cfg.n_basis = opt.n_basis;
  cfg.alpha = opt.alpha;
  cfg.beta = opt.alpha / 4.0;
  cfg.zero_forcing = opt.zero_forcing;
  cfg.validate();

  Rng master(opt.seed);
  Rng init_rng = master.fork(0);
  Rng shuffle_rng = master.fork(1);

  DmpActorSpec spec;
  spec.obs_dim = static_cast<int>(data.train.front().condition.size());
  spec.dof = 2;
  spec.n_basis = opt.n_basis;
  spec.w_scale = opt.w_scale;
  // Match the direct regressor's total parameter count (same trunk shape,
  // raw T x 2 head) by widening this actor's trunk.
  const std::int64_t direct_params =
      MlpSpec{spec.obs_dim, opt.hidden, 2 * T}.param_count();
  spec.hidden = matched_hidden(spec.obs_dim, spec.output_dim(), direct_params);
  DmpActor actor(spec, cfg, init_rng);
  AdamOptimizer optim(opt.lr);

  auto evaluate = [&](const std::vector<Demonstration>& demos) {
    if (demos.empty()) return 0.0;
    double total = 0.0;
    for (const Demonstration& d : demos)
      total += per_point_loss(predict_stroke(actor, cfg, d), d.target);
    return total / demos.size();
  };

  ImitationResult result;
  result.dmp = cfg;
  result.log.push_back({evaluate(data.train), evaluate(data.holdout)});

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (opt.linear_lr_decay)
      optim.set_learning_rate(opt.lr * (1.0 - static_cast<double>(epoch) / opt.epochs));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.minibatch)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(opt.minibatch));
      MlpGrads grads = actor.net().zero_grads();
      for (std::size_t s = start; s < end; ++s) {
        const Demonstration& demo = data.train[order[s]];
        const VectorXd y0 = demo.target.row(0).transpose();
        Mlp::Cache cache;
        const VectorXd raw = actor.net().forward(demo.condition, &cache);
        const DmpActorOutput out = actor.decode(raw, y0);
        const RolloutTape tape = rollout(out.params, y0, VectorXd::Zero(2), cfg);

        std::vector<VectorXd> upstream(T);
        double loss = 0.0;
        for (int j = 0; j < T; ++j) {
          const VectorXd residual =
              tape.states[j + 1].y - demo.target.row(j).transpose();
          loss += residual.squaredNorm();
          upstream[j] = 2.0 * residual;
        }
        if (!std::isfinite(loss))
          throw NumericError("imitation: training diverged (non-finite loss)");

        const ParamGradients pg = backward(tape, upstream);
        const VectorXd raw_up = actor.fold_upstream(
            pg.d_w, pg.d_g, 0.0, VectorXd::Zero(0));
        actor.net().backward(cache, raw_up, grads);
      }
      grads *= 1.0 / static_cast<double>(end - start);
      GradRefs grefs = GradRefs::of(grads);
      clip_grad_norm(grefs, opt.max_grad_norm);
      ParamRefs prefs = ParamRefs::of(actor.net());
      optim.step(prefs, grefs);
      actor.net().mark_params_changed();
    }
    result.log.push_back({evaluate(data.train), evaluate(data.holdout)});
  }
  result.actor = std::move(actor);
  return result;
}

struct DirectResult {
  Mlp net;
  std::vector<EpochMetrics> log;
};

inline MatrixXd predict_direct(const Mlp& net, const Demonstration& demo) {
  const VectorXd raw = net.forward(demo.condition);
  MatrixXd pred(raw.size() / 2, 2);
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    pred(r, 0) = raw[2 * r];
    pred(r, 1) = raw[2 * r + 1];
  }
  return pred;
}

// Same trunk shape, loss, optimizer, clipping, and schedule as the
// dynamical-system policy; the output head is the raw T x 2 trajectory.
inline DirectResult train_direct_baseline(const StrokeDataset& data,
                                          const ImitationOptions& opt) {
  if (data.train.empty()) throw ConfigError("imitation: empty training set");
  const int T = data.T;
  const int input_dim = static_cast<int>(data.train.front().condition.size());

  Rng master(opt.seed);
  Rng init_rng = master.fork(0);
  Rng shuffle_rng = master.fork(1);

  Mlp net(MlpSpec{input_dim, opt.hidden, 2 * T}, init_rng, 0.01);
  AdamOptimizer optim(opt.lr);

  auto evaluate = [&](const std::vector<Demonstration>& demos) {
    if (demos.empty()) return 0.0;
    double total = 0.0;
    for (const Demonstration& d : demos)
      total += per_point_loss(predict_direct(net, d), d.target);
    return total / demos.size();
  };

  DirectResult result;
  result.log.push_back({evaluate(data.train), evaluate(data.holdout)});

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (opt.linear_lr_decay)
      optim.set_learning_rate(opt.lr * (1.0 - static_cast<double>(epoch) / opt.epochs));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.minibatch)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(opt.minibatch));
      MlpGrads grads = net.zero_grads();
      for (std::size_t s = start; s < end; ++s) {
        const Demonstration& demo = data.train[order[s]];
        Mlp::Cache cache;
        const VectorXd raw = net.forward(demo.condition, &cache);
        VectorXd up(raw.size());
        double loss = 0.0;
        for (int j = 0; j < T; ++j) {
          const double rx = raw[2 * j] - demo.target(j, 0);
          const double ry = raw[2 * j + 1] - demo.target(j, 1);
          loss += rx * rx + ry * ry;
          up[2 * j] = 2.0 * rx;
          up[2 * j + 1] = 2.0 * ry;
        }
        if (!std::isfinite(loss))
          throw NumericError("imitation: baseline diverged (non-finite loss)");
        net.backward(cache, up, grads);
      }
      grads *= 1.0 / static_cast<double>(end - start);
      GradRefs grefs = GradRefs::of(grads);
      clip_grad_norm(grefs, opt.max_grad_norm);
      ParamRefs prefs = ParamRefs::of(net);
      optim.step(prefs, grefs);
      net.mark_params_changed();
    }
    result.log.push_back({evaluate(data.train), evaluate(data.holdout)});
  }
  result.net = std::move(net);
  return result;
}

// Largest discrete second difference of a trajectory, and the bound the
// dynamical structure implies for its own rollouts: |y_{t+1} - 2 y_t +
// y_{t-1}| = |ydd_{t-1}| dt^2 <= max_t |ydd_t| dt^2.
inline double max_second_difference(const MatrixXd& traj) {
  double worst = 0.0;
  for (Eigen::Index t = 1; t + 1 < traj.rows(); ++t) {
    const double d =
        (traj.row(t + 1) - 2.0 * traj.row(t) + traj.row(t - 1)).norm();
    worst = std::max(worst, d);
  }
  return worst;
}

inline double second_difference_bound(const RolloutTape& tape) {
  double max_acc = 0.0;
  for (const DmpState& s : tape.states)
    max_acc = std::max(max_acc, s.y_ddot.norm());
  return max_acc * tape.config.dt * tape.config.dt;
}

}  // namespace dmprl

#endif  // DMPRL_IMITATION_HPP_
