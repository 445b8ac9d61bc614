#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsaudit/classifiers/model.hpp"
#include "gsaudit/eval/metrics.hpp"
#include "gsaudit/parallel.hpp"

namespace gsaudit {

struct GridCell {
  FitConfig config;
  std::vector<double> fold_auc;
  double mean_auc = 0.0;
  std::optional<std::string> failure;  // set when any inner fit threw
};

struct GridResult {
  FitConfig best;
  std::size_t best_index = 0;
  std::vector<GridCell> cells;
};

/// Picks the config with the highest mean inner-CV AUC on `m` (training data
/// only). Class weights are recomputed on each inner training part. Ties go
/// to the smaller C, then to the earlier grid entry.
inline GridResult grid_search(ClassifierKind kind, const FeatureMatrix& m,
                              const std::vector<FitConfig>& grid, std::size_t inner_k,
                              std::uint64_t seed, std::size_t threads = worker_count()) {
  if (grid.empty()) throw ConfigError("grid must contain at least one config");
  const auto plan = make_split(m.labels, SplitKind::kfold(inner_k), seed);

  GridResult result;
  result.cells.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.cells[g].config = grid[g];
    result.cells[g].fold_auc.assign(inner_k, 0.0);
  }
  std::vector<std::optional<std::string>> errors(grid.size() * inner_k);
  parallel_for(grid.size() * inner_k, threads, [&](std::size_t task) {
    const std::size_t g = task / inner_k;
    const std::size_t f = task % inner_k;
    try {
      const auto train = m.select_rows(plan.train_indices(f));
      const auto test = m.select_rows(plan.test_indices(f));
      const auto model = fit_classifier(kind, train, balanced_weights(train.labels), grid[g]);
      result.cells[g].fold_auc[f] = auc(predict_scores(model, test.x), test.labels);
    } catch (const std::exception& e) {
      errors[task] = e.what();
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    auto& cell = result.cells[g];
    for (std::size_t f = 0; f < inner_k; ++f) {
      if (errors[g * inner_k + f] && !cell.failure) cell.failure = errors[g * inner_k + f];
    }
    if (cell.failure) continue;
    double sum = 0.0;
    for (const double a : cell.fold_auc) sum += a;
    cell.mean_auc = sum / static_cast<double>(inner_k);
    if (!best) {
      best = g;
      continue;
    }
    const auto& incumbent = result.cells[*best];
    if (cell.mean_auc > incumbent.mean_auc ||
        (cell.mean_auc == incumbent.mean_auc && cell.config.c < incumbent.config.c)) {
      best = g;
    }
  }
  if (!best) {
    throw Error("every grid config failed; first error: " + *result.cells.front().failure);
  }
  result.best_index = *best;
  result.best = grid[*best];
  return result;
}

}  // namespace gsaudit
