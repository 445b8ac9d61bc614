#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace gsaudit;

namespace {

FeatureMatrix dense(const std::vector<std::vector<double>>& rows, const std::vector<Gender>& labels) {
  FeatureMatrix m;
  m.x = SparseMatrix(rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::pair<std::uint32_t, double>> e;
    for (std::size_t c = 0; c < rows[r].size(); ++c) e.emplace_back(static_cast<std::uint32_t>(c), rows[r][c]);
    m.x.append_row(e);
    m.user_ids.push_back(static_cast<std::int64_t>(r + 1));
  }
  m.labels = labels;
  m.rating_columns = m.x.cols();
  return m;
}

/// Noisy two-blob data in `d` dimensions; Male rows are shifted by +shift.
FeatureMatrix blobs(std::size_t n, std::size_t d, double shift, std::uint64_t seed, double male_share = 0.6) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<Gender> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const bool male = rng.uniform() < male_share;
    std::vector<double> row(d);
    for (auto& v : row) {
      // Irwin-Hall approximation to a standard normal
      double s = -6.0;
      for (int k = 0; k < 12; ++k) s += rng.uniform();
      v = s + (male ? shift : 0.0);
    }
    rows.push_back(row);
    labels.push_back(male ? Gender::Male : Gender::Female);
  }
  if (std::count(labels.begin(), labels.end(), Gender::Male) == 0) labels[0] = Gender::Male;
  if (std::count(labels.begin(), labels.end(), Gender::Female) == 0) labels[0] = Gender::Female;
  return dense(rows, labels);
}

FeatureMatrix flipped(FeatureMatrix m) {
  for (auto& g : m.labels) g = g == Gender::Male ? Gender::Female : Gender::Male;
  return m;
}

double accuracy(const std::vector<Gender>& pred, const std::vector<Gender>& labels) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

const std::vector<Gender> kSeparableLabels = {Gender::Female, Gender::Female, Gender::Male, Gender::Male};
const std::vector<std::vector<double>> kSeparableRows = {{0, 1}, {1, 0}, {3, 4}, {4, 3}};

}  // namespace

TEST(Logistic, GradientMatchesFiniteDifferences) {
  const auto m = blobs(40, 5, 1.0, 3);
  const auto y = signed_labels(m.labels);
  const auto s = sample_weights(m.labels, balanced_weights(m.labels));
  Rng rng(5);
  std::vector<double> w(5);
  for (auto& v : w) v = rng.uniform() - 0.5;
  const double b = 0.3;
  const double c = 0.7;
  const auto [gw, gb] = logistic_gradient(m.x, y, s, c, w, b);
  const double h = 1e-6;
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    const double fd = (logistic_objective(m.x, y, s, c, wp, b) - logistic_objective(m.x, y, s, c, wm, b)) / (2 * h);
    EXPECT_NEAR(gw[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
  const double fdb = (logistic_objective(m.x, y, s, c, w, b + h) - logistic_objective(m.x, y, s, c, w, b - h)) / (2 * h);
  EXPECT_NEAR(gb, fdb, 1e-5 * std::max(1.0, std::abs(fdb)));
}

TEST(Logistic, ConvergesToStationaryPointBelowZeroModel) {
  const auto m = blobs(200, 8, 0.8, 7);
  const auto cw = balanced_weights(m.labels);
  const auto model = fit_logistic(m, cw, {.c = 1.0});
  EXPECT_TRUE(model.converged);
  const auto y = signed_labels(m.labels);
  const auto s = sample_weights(m.labels, cw);
  const std::vector<double> zero(8, 0.0);
  EXPECT_LE(logistic_objective(m.x, y, s, 1.0, model.weights, model.bias),
            logistic_objective(m.x, y, s, 1.0, zero, 0.0));
  const auto [gw, gb] = logistic_gradient(m.x, y, s, 1.0, model.weights, model.bias);
  double g = std::abs(gb);
  for (const double v : gw) g = std::max(g, std::abs(v));
  EXPECT_LT(g, 1e-4);
}

TEST(Logistic, StrongerPenaltyShrinksWeights) {
  const auto m = blobs(150, 4, 1.0, 9);
  const auto cw = balanced_weights(m.labels);
  auto norm = [](const LinearModel& lm) {
    double s = 0;
    for (const double v : lm.weights) s += v * v;
    return s;
  };
  EXPECT_LT(norm(fit_logistic(m, cw, {.c = 0.01})), norm(fit_logistic(m, cw, {.c = 10.0})));
}

TEST(Linear, LabelFlipNegatesTheDecisionFunction) {
  for (const auto kind : {ClassifierKind::Logistic, ClassifierKind::Svm}) {
    const auto m = blobs(120, 6, 0.9, 13);
    const auto f = flipped(m);
    auto cfg = default_config(kind);
    cfg.tolerance = kind == ClassifierKind::Svm ? 1e-6 : 1e-10;
    cfg.max_iterations = 5000;
    const auto a = std::get<LinearModel>(fit_classifier(kind, m, balanced_weights(m.labels), cfg).model);
    const auto b = std::get<LinearModel>(fit_classifier(kind, f, balanced_weights(f.labels), cfg).model);
    for (std::size_t j = 0; j < a.weights.size(); ++j) EXPECT_NEAR(a.weights[j], -b.weights[j], 1e-5);
    EXPECT_NEAR(a.bias, -b.bias, 1e-5);
  }
}

TEST(Linear, SeparableToySetIsFitPerfectly) {
  const auto m = dense(kSeparableRows, kSeparableLabels);
  for (const auto kind : {ClassifierKind::Logistic, ClassifierKind::Svm}) {
    auto cfg = default_config(kind);
    cfg.c = 10.0;
    const auto model = fit_classifier(kind, m, balanced_weights(m.labels), cfg);
    EXPECT_DOUBLE_EQ(accuracy(predict_classes(model, predict_scores(model, m.x)), m.labels), 1.0)
        << to_string(kind);
  }
}

TEST(Svm, ObjectiveBelowZeroModelAndConverges) {
  const auto m = blobs(200, 5, 1.0, 17);
  const auto cw = balanced_weights(m.labels);
  const auto model = fit_linear_svm(m, cw, default_config(ClassifierKind::Svm));
  EXPECT_TRUE(model.converged);
  LinearModel zero;
  zero.weights.assign(5, 0.0);
  EXPECT_LE(svm_objective(m, cw, 1.0, model), svm_objective(m, cw, 1.0, zero));
}

TEST(Svm, IterationCapReportsNonConvergence) {
  const auto m = blobs(200, 5, 0.3, 19);
  FitConfig cfg = default_config(ClassifierKind::Svm);
  cfg.max_iterations = 1;
  cfg.tolerance = 1e-12;
  const auto model = fit_classifier(ClassifierKind::Svm, m, balanced_weights(m.labels), cfg);
  EXPECT_FALSE(model.converged());
}

TEST(Linear, RejectsSingleClassAndNonFinite) {
  auto m = dense({{1, 2}, {3, 4}}, {Gender::Male, Gender::Male});
  EXPECT_THROW(fit_logistic(m, {}, {}), DomainError);
  auto nan = dense({{1, NAN}, {3, 4}}, {Gender::Male, Gender::Female});
  EXPECT_THROW(fit_linear_svm(nan, {}, {}), DomainError);
  EXPECT_THROW(fit_logistic(dense({{1, 2}}, {Gender::Male, Gender::Female}), {}, {}), DimensionError);
}

TEST(AdaBoost, PerfectOneDimensionalSplitStopsEarly) {
  const auto m = dense({{1}, {2}, {3}, {4}, {5}, {6}},
                       {Gender::Female, Gender::Female, Gender::Female, Gender::Male, Gender::Male, Gender::Male});
  const auto ens = fit_adaboost(m, balanced_weights(m.labels), 50);
  ASSERT_EQ(ens.stumps.size(), 1U);
  EXPECT_DOUBLE_EQ(ens.weighted_errors[0], 0.0);
  EXPECT_GE(ens.stumps[0].threshold, 3.0);
  EXPECT_LT(ens.stumps[0].threshold, 4.0);
  const auto scores = adaboost_margins(ens, m.x);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(scores[i] > 0, m.labels[i] == Gender::Male);
}

TEST(AdaBoost, OneRoundIsASingleStump) {
  const auto m = blobs(100, 4, 1.0, 21);
  const auto ens = fit_adaboost(m, balanced_weights(m.labels), 1);
  EXPECT_EQ(ens.stumps.size(), 1U);
  EXPECT_THROW(fit_adaboost(m, balanced_weights(m.labels), 0), ConfigError);
}

TEST(AdaBoost, EveryAcceptedStumpBeatsChance) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = blobs(150, 6, 0.6, seed);
    const auto ens = fit_adaboost(m, balanced_weights(m.labels), 40);
    EXPECT_FALSE(ens.stumps.empty());
    for (std::size_t t = 0; t < ens.stumps.size(); ++t) {
      EXPECT_LT(ens.weighted_errors[t], 0.5);
      EXPECT_GT(ens.stumps[t].alpha, 0.0);
    }
  }
}

TEST(AdaBoost, SparseZerosAreSplittable) {
  // Only the Male rows have a non-zero in column 1.
  FeatureMatrix m;
  m.x = SparseMatrix(3);
  m.x.append_row({{0, 2.0}});
  m.x.append_row({{0, 5.0}, {1, 1.0}});
  m.x.append_row({{2, 1.0}});
  m.x.append_row({{1, 3.0}});
  m.labels = {Gender::Female, Gender::Male, Gender::Female, Gender::Male};
  m.user_ids = {1, 2, 3, 4};
  const auto ens = fit_adaboost(m, {}, 10);
  ASSERT_EQ(ens.stumps.size(), 1U);
  EXPECT_EQ(ens.stumps[0].feature, 1U);
}

TEST(BoostedTrees, ZeroRoundsPredictsThePrior) {
  const auto m = blobs(50, 3, 1.0, 23);
  FitConfig cfg = default_config(ClassifierKind::BoostedTrees);
  cfg.rounds = 0;
  // unit weights, so the prior is the raw Male share
  const auto model = fit_boosted_trees(m, {}, cfg);
  const double share = static_cast<double>(std::count(m.labels.begin(), m.labels.end(), Gender::Male)) / 50.0;
  for (const double p : boosted_probabilities(model, m.x)) EXPECT_NEAR(p, share, 1e-12);
  const auto balanced = fit_boosted_trees(m, balanced_weights(m.labels), cfg);
  for (const double p : boosted_probabilities(balanced, m.x)) EXPECT_NEAR(p, 0.5, 1e-12);
}

TEST(BoostedTrees, TrainingLossNeverIncreases) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto m = blobs(120, 5, 0.7, 100 + seed);
    FitConfig cfg = default_config(ClassifierKind::BoostedTrees);
    cfg.rounds = 30;
    cfg.eta = 1.0;
    const auto model = fit_boosted_trees(m, balanced_weights(m.labels), cfg);
    ASSERT_EQ(model.loss_history.size(), 31U);
    for (std::size_t t = 1; t < model.loss_history.size(); ++t) {
      EXPECT_LE(model.loss_history[t], model.loss_history[t - 1] + 1e-9);
    }
  }
}

TEST(BoostedTrees, StepFunctionLearnedWithinFiveRounds) {
  std::vector<std::vector<double>> rows;
  std::vector<Gender> labels;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({static_cast<double>(i), static_cast<double>((i * 7) % 11)});
    labels.push_back(i >= 25 ? Gender::Male : Gender::Female);
  }
  const auto m = dense(rows, labels);
  FitConfig cfg = default_config(ClassifierKind::BoostedTrees);
  cfg.rounds = 5;
  const auto model = fit_classifier(ClassifierKind::BoostedTrees, m, balanced_weights(m.labels), cfg);
  EXPECT_DOUBLE_EQ(accuracy(predict_classes(model, predict_scores(model, m.x)), labels), 1.0);
}

TEST(BoostedTrees, DepthIsBounded) {
  const auto m = blobs(200, 6, 0.5, 29);
  for (const int depth : {1, 2, 4}) {
    FitConfig cfg = default_config(ClassifierKind::BoostedTrees);
    cfg.rounds = 10;
    cfg.depth = depth;
    const auto model = fit_boosted_trees(m, balanced_weights(m.labels), cfg);
    for (const auto& t : model.trees) EXPECT_LE(t.depth(), depth);
  }
}

TEST(BoostedTrees, SingleClassIsDomainError) {
  const auto m = dense({{1}, {2}}, {Gender::Female, Gender::Female});
  EXPECT_THROW(fit_boosted_trees(m, {}, {}), DomainError);
}

class AllKinds : public ::testing::TestWithParam<ClassifierKind> {};

TEST_P(AllKinds, DeterministicAndDimensionChecked) {
  const auto m = blobs(120, 6, 0.8, 31);
  auto cfg = default_config(GetParam());
  cfg.rounds = 10;
  const auto a = fit_classifier(GetParam(), m, balanced_weights(m.labels), cfg);
  const auto b = fit_classifier(GetParam(), m, balanced_weights(m.labels), cfg);
  EXPECT_EQ(predict_scores(a, m.x), predict_scores(b, m.x));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_THROW(predict_scores(a, SparseMatrix(5)), DimensionError);
  EXPECT_TRUE(predict_scores(a, SparseMatrix(6)).empty());
  EXPECT_EQ(to_json(a)["schema"], kModelSchema);
}

TEST_P(AllKinds, BeatsChanceOnSeparatedBlobs) {
  const auto train = blobs(300, 6, 1.0, 37);
  const auto test = blobs(300, 6, 1.0, 41);
  auto cfg = default_config(GetParam());
  cfg.rounds = 20;
  const auto model = fit_classifier(GetParam(), train, balanced_weights(train.labels), cfg);
  EXPECT_GT(auc(predict_scores(model, test.x), test.labels), 0.8);
}

TEST_P(AllKinds, UpweightingFemalesRaisesFemalePredictions) {
  const auto m = blobs(300, 4, 0.4, 43);
  auto cfg = default_config(GetParam());
  cfg.rounds = 10;
  auto females = [&](const ClassWeights& w) {
    const auto model = fit_classifier(GetParam(), m, w, cfg);
    const auto pred = predict_classes(model, predict_scores(model, m.x));
    return std::count(pred.begin(), pred.end(), Gender::Female);
  };
  EXPECT_GT(females({1.0, 20.0}), females({1.0, 1.0}));
}

INSTANTIATE_TEST_SUITE_P(Kinds, AllKinds,
                         ::testing::Values(ClassifierKind::Logistic, ClassifierKind::Svm,
                                           ClassifierKind::AdaBoost, ClassifierKind::BoostedTrees),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(FitConfig, JsonOverridesAndValidation) {
  const auto base = default_config(ClassifierKind::Svm);
  const auto cfg = fit_config_from_json({{"c", 0.5}}, base);
  EXPECT_DOUBLE_EQ(cfg.c, 0.5);
  EXPECT_DOUBLE_EQ(cfg.tolerance, base.tolerance);
  EXPECT_THROW(fit_config_from_json({{"gamma", 1}}, base), ConfigError);
  EXPECT_THROW(fit_config_from_json({{"c", -1}}, base), ConfigError);
  EXPECT_THROW(fit_config_from_json({{"c", "big"}}, base), ConfigError);
  EXPECT_EQ(parse_classifier_kind("gbt"), ClassifierKind::BoostedTrees);
  EXPECT_THROW(parse_classifier_kind("rf"), ConfigError);
}

TEST(GridSearch, PrefersInformativeConfigAndRecordsFailures) {
  const auto m = blobs(150, 5, 1.0, 47);
  std::vector<FitConfig> grid = default_grid(ClassifierKind::AdaBoost);
  ASSERT_EQ(grid.size(), 2U);
  grid.insert(grid.begin(), grid.front());
  grid.front().rounds = 0;  // invalid for AdaBoost
  const auto r = grid_search(ClassifierKind::AdaBoost, m, grid, 3, 5, 1);
  EXPECT_TRUE(r.cells[0].failure.has_value());
  EXPECT_NE(r.best_index, 0U);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    double sum = 0;
    for (const double a : r.cells[g].fold_auc) sum += a;
    EXPECT_NEAR(r.cells[g].mean_auc, sum / 3.0, 1e-12);
    EXPECT_LE(r.cells[g].mean_auc, r.cells[r.best_index].mean_auc);
  }
}

TEST(GridSearch, TiesGoToSmallerC) {
  // Identical configs except C; constant scores tie every AUC at 0.5.
  FeatureMatrix m;
  m.x = SparseMatrix(1);
  for (int i = 0; i < 30; ++i) {
    m.x.append_row({});
    m.labels.push_back(i % 3 == 0 ? Gender::Female : Gender::Male);
    m.user_ids.push_back(i);
  }
  std::vector<FitConfig> grid;
  for (const double c : {10.0, 0.1, 1.0}) grid.push_back({.c = c});
  const auto r = grid_search(ClassifierKind::Logistic, m, grid, 3, 1, 1);
  EXPECT_DOUBLE_EQ(r.best.c, 0.1);
}

TEST(GridSearch, AllFailingThrows) {
  const auto m = blobs(60, 3, 1.0, 53);
  FitConfig bad = default_config(ClassifierKind::AdaBoost);
  bad.rounds = 0;
  EXPECT_THROW(grid_search(ClassifierKind::AdaBoost, m, {bad}, 3, 1, 1), Error);
}

TEST(GridSearch, ThreadCountDoesNotChangeTheResult) {
  const auto m = blobs(120, 4, 0.7, 59);
  const auto grid = default_grid(ClassifierKind::Logistic);
  const auto a = grid_search(ClassifierKind::Logistic, m, grid, 3, 2, 1);
  const auto b = grid_search(ClassifierKind::Logistic, m, grid, 3, 2, 3);
  EXPECT_EQ(a.best_index, b.best_index);
  for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_EQ(a.cells[g].fold_auc, b.cells[g].fold_auc);
}
