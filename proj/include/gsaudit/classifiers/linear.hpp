#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "gsaudit/classifiers/config.hpp"
#include "gsaudit/error.hpp"
#include "gsaudit/features.hpp"
#include "gsaudit/rng.hpp"

namespace gsaudit {

enum class LinearKind { Logistic, Hinge };

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  LinearKind kind = LinearKind::Logistic;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;  // LR: gradient inf-norm; SVM: projected-gradient gap
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Class-weighted logistic objective
///   sum_i s_i log(1 + exp(-y_i (w.x_i + b))) + ||w||^2 / (2C),
/// with y in {-1,+1}; the bias is not penalised.
inline double logistic_objective(const SparseMatrix& x, std::span<const double> y,
                                 std::span<const double> s, double c, std::span<const double> w,
                                 double b) {
  double f = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) f += s[i] * softplus(-y[i] * (x.dot(i, w) + b));
  double ww = 0.0;
  for (const double v : w) ww += v * v;
  return f + ww / (2.0 * c);
}

/// Gradient of logistic_objective: (d/dw, d/db).
inline std::pair<std::vector<double>, double> logistic_gradient(
    const SparseMatrix& x, std::span<const double> y, std::span<const double> s, double c,
    std::span<const double> w, double b) {
  std::vector<double> gw(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) gw[j] = w[j] / c;
  double gb = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double yi = y[i];
    const double coef = -s[i] * yi * sigmoid(-yi * (x.dot(i, w) + b));
    x.axpy(i, coef, gw);
    gb += coef;
  }
  return {std::move(gw), gb};
}

namespace detail {

inline void check_training_inputs(const FeatureMatrix& m) {
  if (m.labels.size() != m.rows()) throw DimensionError("label count differs from row count");
  if (!m.x.all_finite()) throw DomainError("feature matrix contains NaN or infinite values");
  const auto males = std::count(m.labels.begin(), m.labels.end(), Gender::Male);
  if (males == 0 || males == static_cast<std::ptrdiff_t>(m.labels.size())) {
    throw DomainError("training data must contain both classes");
  }
}

inline double inf_norm(std::span<const double> v, double extra) {
  double n = std::abs(extra);
  for (const double x : v) n = std::max(n, std::abs(x));
  return n;
}

}  // namespace detail

/// L2-regularised, class-weighted logistic regression by truncated Newton
/// (conjugate-gradient inner solves, Armijo backtracking). Converged when the
/// gradient inf-norm is at most tolerance * max(1, initial inf-norm).
inline LinearModel fit_logistic(const FeatureMatrix& m, const ClassWeights& weights,
                                const FitConfig& config) {
  config.validate();
  detail::check_training_inputs(m);
  const auto& x = m.x;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const auto y = signed_labels(m.labels);
  const auto s = sample_weights(m.labels, weights);
  const double c = config.c;

  LinearModel model;
  model.kind = LinearKind::Logistic;
  model.weights.assign(d, 0.0);
  double& b = model.bias;
  auto& w = model.weights;

  std::vector<double> z(n, 0.0);  // margins w.x_i + b
  auto objective_at = [&](std::span<const double> margins, std::span<const double> ww) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += s[i] * softplus(-y[i] * margins[i]);
    double sq = 0.0;
    for (const double v : ww) sq += v * v;
    return f + sq / (2.0 * c);
  };

  std::vector<double> gw(d);
  double gb = 0.0;
  std::vector<double> curvature(n);
  auto gradient = [&] {
    for (std::size_t j = 0; j < d; ++j) gw[j] = w[j] / c;
    gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(-y[i] * z[i]);
      const double coef = -s[i] * y[i] * p;
      x.axpy(i, coef, gw);
      gb += coef;
      curvature[i] = s[i] * p * (1.0 - p);
    }
  };

  // Hessian-vector product on the (w, b) block.
  std::vector<double> xv(n);
  auto hess_vec = [&](std::span<const double> vw, double vb, std::span<double> out_w,
                      double& out_b) {
    for (std::size_t j = 0; j < d; ++j) out_w[j] = vw[j] / c;
    out_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = curvature[i] * (x.dot(i, vw) + vb);
      x.axpy(i, u, out_w);
      out_b += u;
    }
  };

  double f = objective_at(z, w);
  gradient();
  const double threshold = config.tolerance * std::max(1.0, detail::inf_norm(gw, gb));

  std::vector<double> pw(d), rw(d), dw(d), hw(d), w_new(d), z_new(n);
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    const double gnorm = detail::inf_norm(gw, gb);
    if (gnorm <= threshold) {
      model.converged = true;
      break;
    }
    // CG on H p = -g.
    double g2 = gb * gb;
    for (const double v : gw) g2 += v * v;
    const double cg_tol = std::min(0.5, std::sqrt(std::sqrt(g2))) * std::sqrt(g2);
    std::fill(pw.begin(), pw.end(), 0.0);
    double pb = 0.0;
    for (std::size_t j = 0; j < d; ++j) rw[j] = -gw[j];
    double rb = -gb;
    dw = rw;
    double db = rb;
    double rr = g2;
    const int max_cg = static_cast<int>(std::min<std::size_t>(d + 1, 500));
    for (int k = 0; k < max_cg && std::sqrt(rr) > cg_tol; ++k) {
      double hb = 0.0;
      hess_vec(dw, db, hw, hb);
      double dhd = db * hb;
      for (std::size_t j = 0; j < d; ++j) dhd += dw[j] * hw[j];
      if (dhd <= 0.0) break;
      const double alpha = rr / dhd;
      for (std::size_t j = 0; j < d; ++j) {
        pw[j] += alpha * dw[j];
        rw[j] -= alpha * hw[j];
      }
      pb += alpha * db;
      rb -= alpha * hb;
      double rr_new = rb * rb;
      for (const double v : rw) rr_new += v * v;
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t j = 0; j < d; ++j) dw[j] = rw[j] + beta * dw[j];
      db = rb + beta * db;
    }
    double slope = gb * pb;
    for (std::size_t j = 0; j < d; ++j) slope += gw[j] * pw[j];
    if (slope >= 0.0) {  // CG produced no descent direction; fall back to steepest descent
      for (std::size_t j = 0; j < d; ++j) pw[j] = -gw[j];
      pb = -gb;
      slope = -g2;
    }
    for (std::size_t i = 0; i < n; ++i) xv[i] = x.dot(i, pw) + pb;

    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) w_new[j] = w[j] + step * pw[j];
      for (std::size_t i = 0; i < n; ++i) z_new[i] = z[i] + step * xv[i];
      f_new = objective_at(z_new, w_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    w.swap(w_new);
    z.swap(z_new);
    b += step * pb;
    f = f_new;
    gradient();
  }
  model.iterations = iter;
  model.final_gradient_norm = detail::inf_norm(gw, gb);
  if (!model.converged && model.final_gradient_norm <= threshold) model.converged = true;
  return model;
}

/// Class-weighted L1-loss (hinge) linear SVM by dual coordinate descent.
/// The bias is learned as the weight of a constant feature of value 1 (so
/// it shares the L2 penalty). Epoch order is a seeded permutation.
/// Converged when the projected-gradient gap of an epoch is <= tolerance.
inline LinearModel fit_linear_svm(const FeatureMatrix& m, const ClassWeights& weights,
                                  const FitConfig& config) {
  config.validate();
  detail::check_training_inputs(m);
  const auto& x = m.x;
  const std::size_t n = x.rows();
  const auto y = signed_labels(m.labels);
  const auto s = sample_weights(m.labels, weights);

  LinearModel model;
  model.kind = LinearKind::Hinge;
  model.weights.assign(x.cols(), 0.0);
  auto& w = model.weights;
  double& b = model.bias;

  std::vector<double> alpha(n, 0.0);
  std::vector<double> q_diag(n);
  std::vector<double> upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    q_diag[i] = x.row_squared_norm(i) + 1.0;
    upper[i] = config.c * s[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  int epoch = 0;
  double gap = 0.0;
  for (; epoch < config.max_iterations; ++epoch) {
    rng.shuffle(std::span(order));
    double pg_max = -HUGE_VAL;
    double pg_min = HUGE_VAL;
    for (const auto i : order) {
      const double g = y[i] * (x.dot(i, w) + b) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] == upper[i]) {
        pg = std::max(g, 0.0);
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / q_diag[i], 0.0, upper[i]);
        const double delta = (alpha[i] - old) * y[i];
        if (delta != 0.0) {
          x.axpy(i, delta, w);
          b += delta;
        }
      }
    }
    gap = pg_max - pg_min;
    if (gap <= config.tolerance) {
      model.converged = true;
      ++epoch;
      break;
    }
  }
  model.iterations = epoch;
  model.final_gradient_norm = gap;
  return model;
}

/// Raw decision values w.x + b.
inline std::vector<double> linear_margins(const LinearModel& model, const SparseMatrix& x) {
  if (x.cols() != model.weights.size()) {
    throw DimensionError("feature count " + std::to_string(x.cols()) + " differs from model's " +
                         std::to_string(model.weights.size()));
  }
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = x.dot(i, model.weights) + model.bias;
  return out;
}

/// Hinge-loss primal objective sum_i s_i max(0, 1 - y_i(w.x_i + b)) + (||w||^2 + b^2)/(2C),
/// the function fit_linear_svm minimises.
inline double svm_objective(const FeatureMatrix& m, const ClassWeights& weights, double c,
                            const LinearModel& model) {
  const auto y = signed_labels(m.labels);
  double f = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    f += weights.of(m.labels[i]) *
         std::max(0.0, 1.0 - y[i] * (m.x.dot(i, model.weights) + model.bias));
  }
  double sq = model.bias * model.bias;
  for (const double v : model.weights) sq += v * v;
  return f + sq / (2.0 * c);
}

}  // namespace gsaudit
