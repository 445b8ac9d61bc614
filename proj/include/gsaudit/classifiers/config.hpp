#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsaudit/error.hpp"

namespace gsaudit {

enum class ClassifierKind { Logistic, Svm, AdaBoost, BoostedTrees };

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Logistic: return "lr";
    case ClassifierKind::Svm: return "svm";
    case ClassifierKind::AdaBoost: return "adaboost";
    case ClassifierKind::BoostedTrees: return "gbt";
  }
  return "?";
}

inline ClassifierKind parse_classifier_kind(std::string_view s) {
  if (s == "lr") return ClassifierKind::Logistic;
  if (s == "svm") return ClassifierKind::Svm;
  if (s == "adaboost") return ClassifierKind::AdaBoost;
  if (s == "gbt") return ClassifierKind::BoostedTrees;
  throw ConfigError("unknown classifier '" + std::string(s) + "' (expected lr|svm|adaboost|gbt)");
}

/// Hyper-parameters shared by all learners. Linear models read c,
/// max_iterations and tolerance; ensembles read rounds (and the tree knobs).
struct FitConfig {
  double c = 1.0;            // inverse L2 strength: penalty is ||w||^2 / (2c)
  int max_iterations = 1000;  // Newton steps (LR) or epochs (SVM)
  double tolerance = 1e-6;    // LR: relative gradient inf-norm; SVM: projected-gradient gap
  std::uint64_t seed = 0;
  int rounds = 50;
  int depth = 3;
  double eta = 0.3;
  double lambda = 1.0;
  double min_child_weight = 1.0;

  void validate() const {
    if (!(c > 0.0)) throw ConfigError("regularization C must be positive");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (rounds < 0) throw ConfigError("rounds must be >= 0");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  }

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

inline FitConfig default_config(ClassifierKind kind) {
  FitConfig c;
  switch (kind) {
    case ClassifierKind::Logistic: break;
    case ClassifierKind::Svm: c.tolerance = 1e-2; break;
    case ClassifierKind::AdaBoost: c.rounds = 50; break;
    case ClassifierKind::BoostedTrees: c.rounds = 100; break;
  }
  return c;
}

/// C in {0.01, 0.1, 1, 10} for linear models; rounds in {50, 100} for ensembles.
inline std::vector<FitConfig> default_grid(ClassifierKind kind) {
  std::vector<FitConfig> grid;
  if (kind == ClassifierKind::Logistic || kind == ClassifierKind::Svm) {
    for (const double c : {0.01, 0.1, 1.0, 10.0}) {
      auto cfg = default_config(kind);
      cfg.c = c;
      grid.push_back(cfg);
    }
  } else {
    for (const int rounds : {50, 100}) {
      auto cfg = default_config(kind);
      cfg.rounds = rounds;
      grid.push_back(cfg);
    }
  }
  return grid;
}

inline nlohmann::json to_json(const FitConfig& c) {
  return {{"c", c.c},
          {"max_iterations", c.max_iterations},
          {"tolerance", c.tolerance},
          {"seed", c.seed},
          {"rounds", c.rounds},
          {"depth", c.depth},
          {"eta", c.eta},
          {"lambda", c.lambda},
          {"min_child_weight", c.min_child_weight}};
}

/// Fields absent from `j` keep the values of `base`.
inline FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base) {
  if (!j.is_object()) throw ConfigError("fit config must be a JSON object");
  static const std::vector<std::string> known = {"c",   "max_iterations", "tolerance",
                                                 "seed", "rounds",         "depth",
                                                 "eta", "lambda",         "min_child_weight"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown fit config field '" + key + "'");
    }
  }
  try {
    base.c = j.value("c", base.c);
    base.max_iterations = j.value("max_iterations", base.max_iterations);
    base.tolerance = j.value("tolerance", base.tolerance);
    base.seed = j.value("seed", base.seed);
    base.rounds = j.value("rounds", base.rounds);
    base.depth = j.value("depth", base.depth);
    base.eta = j.value("eta", base.eta);
    base.lambda = j.value("lambda", base.lambda);
    base.min_child_weight = j.value("min_child_weight", base.min_child_weight);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fit config: ") + e.what());
  }
  base.validate();
  return base;
}

}  // namespace gsaudit
