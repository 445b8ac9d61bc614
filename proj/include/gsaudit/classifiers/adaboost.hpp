#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gsaudit/classifiers/config.hpp"
#include "gsaudit/features.hpp"

namespace gsaudit {

/// h(x) = polarity if x[feature] > threshold, else -polarity.
struct Stump {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;

  int predict(double value) const { return value > threshold ? polarity : -polarity; }
  friend bool operator==(const Stump&, const Stump&) = default;
};

struct StumpEnsemble {
  std::vector<Stump> stumps;
  std::vector<double> weighted_errors;  // epsilon_t of each accepted stump
  std::size_t feature_count = 0;
  int rounds_requested = 0;
};

namespace detail {

struct StumpChoice {
  Stump stump;
  double error = 2.0;
};

/// Best weighted-error stump. Candidate thresholds: below every value (a
/// constant classifier) and midpoints between consecutive distinct values of
/// each feature, the implicit zeros counted as one block. Ties keep the
/// first candidate in (feature, threshold, polarity +1 before -1) order.
inline StumpChoice best_stump(const SortedColumns& columns, std::size_t rows,
                              std::span<const double> dist, std::span<const double> y) {
  double pos_total = 0.0;
  double neg_total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) (y[i] > 0 ? pos_total : neg_total) += dist[i];

  StumpChoice best;
  auto consider = [&](std::uint32_t feature, double threshold, double le_pos, double le_neg) {
    const double err_plus = le_pos + (neg_total - le_neg);
    const double err_minus = le_neg + (pos_total - le_pos);
    if (err_plus < best.error) best = {{feature, threshold, 1, 0.0}, err_plus};
    if (err_minus < best.error) best = {{feature, threshold, -1, 0.0}, err_minus};
  };
  consider(0, std::numeric_limits<double>::lowest(), 0.0, 0.0);

  const std::size_t features = columns.offsets.size() - 1;
  for (std::size_t f = 0; f < features; ++f) {
    const auto col = columns.column(f);
    if (col.empty()) continue;
    const auto feature = static_cast<std::uint32_t>(f);
    double nz_pos = 0.0;
    double nz_neg = 0.0;
    for (const auto& e : col) (y[e.row] > 0 ? nz_pos : nz_neg) += dist[e.row];
    const bool has_zeros = col.size() < rows;

    double le_pos = 0.0;
    double le_neg = 0.0;
    bool any = false;
    double last = 0.0;
    bool zeros_added = !has_zeros;
    auto add_zero_block = [&] {
      if (any && 0.0 > last) consider(feature, last + (0.0 - last) / 2, le_pos, le_neg);
      le_pos += pos_total - nz_pos;
      le_neg += neg_total - nz_neg;
      any = true;
      last = 0.0;
      zeros_added = true;
    };
    for (const auto& e : col) {
      if (!zeros_added && e.value >= 0.0) add_zero_block();
      if (any && e.value > last) consider(feature, last + (e.value - last) / 2, le_pos, le_neg);
      (y[e.row] > 0 ? le_pos : le_neg) += dist[e.row];
      any = true;
      last = e.value;
    }
    if (!zeros_added) add_zero_block();
  }
  return best;
}

/// Value of `feature` for every row (dense column extraction).
inline std::vector<double> dense_column(const SortedColumns& columns, std::size_t rows,
                                        std::uint32_t feature) {
  std::vector<double> v(rows, 0.0);
  for (const auto& e : columns.column(feature)) v[e.row] = e.value;
  return v;
}

}  // namespace detail

/// Discrete AdaBoost over decision stumps. The initial distribution is
/// proportional to the class weights; alpha_t = 0.5 ln((1 - eps_t) / eps_t).
/// Stops early once eps_t >= 0.5 (the stump is rejected unless it is the
/// first, which is kept with alpha = 0) or eps_t = 0 (kept, then stop).
inline StumpEnsemble fit_adaboost(const FeatureMatrix& m, const ClassWeights& weights,
                                  int rounds = 50, std::uint64_t /*seed*/ = 0) {
  if (rounds < 1) throw ConfigError("AdaBoost needs rounds >= 1");
  if (m.labels.size() != m.rows()) throw DimensionError("label count differs from row count");
  if (!m.x.all_finite()) throw DomainError("feature matrix contains NaN or infinite values");
  const std::size_t n = m.rows();
  if (n == 0) throw DomainError("AdaBoost needs at least one training row");
  const auto y = signed_labels(m.labels);
  const SortedColumns columns(m.x);

  std::vector<double> dist = sample_weights(m.labels, weights);
  double total = 0.0;
  for (const double v : dist) total += v;
  for (double& v : dist) v /= total;

  StumpEnsemble ens;
  ens.feature_count = m.cols();
  ens.rounds_requested = rounds;
  constexpr double kFloor = 1e-10;
  std::vector<int> h(n);
  for (int t = 0; t < rounds; ++t) {
    auto choice = detail::best_stump(columns, n, dist, y);
    const auto values = choice.stump.threshold == std::numeric_limits<double>::lowest()
                            ? std::vector<double>(n, 0.0)
                            : detail::dense_column(columns, n, choice.stump.feature);
    double eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = choice.stump.predict(values[i]);
      if (h[i] != static_cast<int>(y[i])) eps += dist[i];
    }
    if (eps >= 0.5 - 1e-12) {
      if (t == 0) {
        choice.stump.alpha = 0.0;
        ens.stumps.push_back(choice.stump);
        ens.weighted_errors.push_back(eps);
      }
      break;
    }
    const bool perfect = eps <= kFloor;
    const double e = std::max(eps, kFloor);
    choice.stump.alpha = 0.5 * std::log((1.0 - e) / e);
    ens.stumps.push_back(choice.stump);
    ens.weighted_errors.push_back(eps);
    if (perfect) break;

    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] *= std::exp(-choice.stump.alpha * y[i] * h[i]);
      norm += dist[i];
    }
    for (double& v : dist) v /= norm;
  }
  return ens;
}

/// Margins sum_t alpha_t h_t(x).
inline std::vector<double> adaboost_margins(const StumpEnsemble& ens, const SparseMatrix& x) {
  if (x.cols() != ens.feature_count) {
    throw DimensionError("feature count " + std::to_string(x.cols()) + " differs from model's " +
                         std::to_string(ens.feature_count));
  }
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (const auto& st : ens.stumps) s += st.alpha * st.predict(x.at(r, st.feature));
    out[r] = s;
  }
  return out;
}

}  // namespace gsaudit
