#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsaudit/classifiers/grid_search.hpp"
#include "gsaudit/classifiers/model.hpp"
#include "gsaudit/eval/metrics.hpp"
#include "gsaudit/features.hpp"
#include "gsaudit/parallel.hpp"
#include "gsaudit/stereotype.hpp"

namespace gsaudit {

struct HoldoutResult {
  MetricSet metrics;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool converged = true;
  FitConfig config;
  std::vector<double> scores;  // test-partition scores, in test-index order
  std::vector<Gender> labels;
};

/// Builds the (optionally stereotype-augmented) and row-normalized matrix
/// every harness trains on.
inline FeatureMatrix attack_features(const RatingCorpus& corpus,
                                     const std::optional<StereotypeModel>& model,
                                     AggregationMode mode = AggregationMode::Cardinality) {
  return l2_normalize_rows(build_matrix(corpus, model, mode));
}

inline HoldoutResult run_holdout(const FeatureMatrix& features, ClassifierKind kind,
                                 const FitConfig& config, double test_fraction, std::uint64_t seed) {
  const auto plan = make_split(features.labels, SplitKind::holdout(test_fraction), seed);
  const auto train = features.select_rows(plan.train_indices(0));
  const auto test = features.select_rows(plan.test_indices(0));
  const auto weights = balanced_weights(train.labels);
  const auto fitted = fit_classifier(kind, train, weights, config);

  HoldoutResult r;
  r.scores = predict_scores(fitted, test.x);
  r.labels = test.labels;
  const auto predicted = predict_classes(fitted, r.scores);
  r.metrics = metrics(confusion(predicted, test.labels), r.scores, test.labels);
  r.train_size = train.rows();
  r.test_size = test.rows();
  r.converged = fitted.converged();
  r.config = config;
  return r;
}

inline HoldoutResult run_holdout(const RatingCorpus& corpus, const std::optional<StereotypeModel>& model,
                                 ClassifierKind kind, const FitConfig& config,
                                 double test_fraction = 0.2, std::uint64_t seed = 0,
                                 AggregationMode mode = AggregationMode::Cardinality) {
  return run_holdout(attack_features(corpus, model, mode), kind, config, test_fraction, seed);
}

struct FoldResult {
  std::size_t fold = 0;
  MetricSet metrics;
  FitConfig chosen;
  bool converged = true;
  std::vector<GridCell> grid;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population: divisor k
};

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  std::map<std::string, MetricSummary> summary;  // keyed by metric name

  bool all_converged() const {
    return std::all_of(folds.begin(), folds.end(), [](const auto& f) { return f.converged; });
  }
};

inline const std::vector<std::pair<std::string, double MetricSet::*>>& metric_fields() {
  static const std::vector<std::pair<std::string, double MetricSet::*>> fields = {
      {"accuracy", &MetricSet::accuracy},   {"accuracy_male", &MetricSet::accuracy_male},
      {"accuracy_female", &MetricSet::accuracy_female}, {"precision", &MetricSet::precision},
      {"recall", &MetricSet::recall},       {"f_measure", &MetricSet::f_measure},
      {"auc", &MetricSet::auc}};
  return fields;
}

inline std::map<std::string, MetricSummary> summarize(const std::vector<FoldResult>& folds) {
  std::map<std::string, MetricSummary> out;
  const auto k = static_cast<double>(folds.size());
  for (const auto& [name, field] : metric_fields()) {
    double sum = 0.0;
    for (const auto& f : folds) sum += f.metrics.*field;
    const double mean = sum / k;
    double ss = 0.0;
    for (const auto& f : folds) ss += (f.metrics.*field - mean) * (f.metrics.*field - mean);
    out[name] = {mean, std::sqrt(ss / k)};
  }
  return out;
}

/// Stratified k-fold CV. Each outer fold grid-searches on its training part
/// (inner stratified folds, seeded by seed + fold + 1), refits the winner
/// on the whole training part and scores the held-out fold.
inline CvReport run_cv(const FeatureMatrix& features, ClassifierKind kind,
                       const std::vector<FitConfig>& grid, std::size_t k, std::uint64_t seed,
                       std::size_t inner_k = 3, std::size_t threads = worker_count()) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  const auto plan = make_split(features.labels, SplitKind::kfold(k), seed);
  CvReport report;
  report.k = k;
  report.seed = seed;
  report.folds.resize(k);
  parallel_for(k, threads, [&](std::size_t fold) {
    const auto train = features.select_rows(plan.train_indices(fold));
    const auto test = features.select_rows(plan.test_indices(fold));
    auto search = grid_search(kind, train, grid, inner_k, seed + fold + 1, 1);
    const auto fitted = fit_classifier(kind, train, balanced_weights(train.labels), search.best);
    const auto scores = predict_scores(fitted, test.x);
    const auto predicted = predict_classes(fitted, scores);
    auto& out = report.folds[fold];
    out.fold = fold;
    out.metrics = metrics(confusion(predicted, test.labels), scores, test.labels);
    out.chosen = search.best;
    out.converged = fitted.converged();
    out.grid = std::move(search.cells);
  });
  report.summary = summarize(report.folds);
  return report;
}

inline CvReport run_cv(const RatingCorpus& corpus, const std::optional<StereotypeModel>& model,
                       ClassifierKind kind, const std::vector<FitConfig>& grid, std::size_t k = 10,
                       std::uint64_t seed = 0, AggregationMode mode = AggregationMode::Cardinality) {
  return run_cv(attack_features(corpus, model, mode), kind, grid, k, seed);
}

inline nlohmann::json to_json(const HoldoutResult& r) {
  return {{"metrics", to_json(r.metrics)},
          {"train_size", r.train_size},
          {"test_size", r.test_size},
          {"converged", r.converged},
          {"config", to_json(r.config)}};
}

inline nlohmann::json to_json(const CvReport& r) {
  auto folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    auto grid = nlohmann::json::array();
    for (const auto& cell : f.grid) {
      nlohmann::json c = {{"config", to_json(cell.config)}, {"mean_auc", cell.mean_auc}};
      if (cell.failure) c["failure"] = *cell.failure;
      grid.push_back(std::move(c));
    }
    folds.push_back({{"fold", f.fold},
                     {"metrics", to_json(f.metrics)},
                     {"chosen_config", to_json(f.chosen)},
                     {"converged", f.converged},
                     {"grid", std::move(grid)}});
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [name, s] : r.summary) summary[name] = {{"mean", s.mean}, {"stddev", s.stddev}};
  return {{"k", r.k},
          {"seed", r.seed},
          {"stddev_divisor", "k"},
          {"folds", std::move(folds)},
          {"summary", std::move(summary)}};
}

/// One row per fold: fold,accuracy,...,auc.
inline std::string fold_csv(const CvReport& r) {
  std::string out = "fold";
  for (const auto& [name, _] : metric_fields()) out += "," + name;
  out += "\n";
  char buffer[32];
  for (const auto& f : r.folds) {
    out += std::to_string(f.fold);
    for (const auto& [_, field] : metric_fields()) {
      std::snprintf(buffer, sizeof buffer, ",%.17g", f.metrics.*field);
      out += buffer;
    }
    out += "\n";
  }
  return out;
}

inline std::string roc_csv(std::span<const RocPoint> points) {
  std::string out = "fpr,tpr,threshold\n";
  char buffer[96];
  for (const auto& p : points) {
    std::snprintf(buffer, sizeof buffer, "%.17g,%.17g,%.17g\n", p.fpr, p.tpr, p.threshold);
    out += buffer;
  }
  return out;
}

}  // namespace gsaudit
