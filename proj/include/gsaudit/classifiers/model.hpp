#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsaudit/classifiers/adaboost.hpp"
#include "gsaudit/classifiers/boosted_trees.hpp"
#include "gsaudit/classifiers/config.hpp"
#include "gsaudit/classifiers/linear.hpp"

namespace gsaudit {

/// A fitted decision function of any supported kind.
struct TrainedClassifier {
  ClassifierKind kind = ClassifierKind::Logistic;
  FitConfig config;
  ClassWeights weights;
  std::variant<LinearModel, StumpEnsemble, BoostedTrees> model;

  /// Ensembles have no convergence criterion and always report true.
  bool converged() const {
    if (const auto* lm = std::get_if<LinearModel>(&model)) return lm->converged;
    return true;
  }

  /// Scores above this threshold are classified Male.
  double decision_threshold() const {
    return kind == ClassifierKind::Logistic || kind == ClassifierKind::BoostedTrees ? 0.5 : 0.0;
  }
};

inline TrainedClassifier fit_classifier(ClassifierKind kind, const FeatureMatrix& m,
                                        const ClassWeights& weights, const FitConfig& config) {
  TrainedClassifier out{kind, config, weights, LinearModel{}};
  switch (kind) {
    case ClassifierKind::Logistic: out.model = fit_logistic(m, weights, config); break;
    case ClassifierKind::Svm: out.model = fit_linear_svm(m, weights, config); break;
    case ClassifierKind::AdaBoost:
      config.validate();
      out.model = fit_adaboost(m, weights, config.rounds, config.seed);
      break;
    case ClassifierKind::BoostedTrees: out.model = fit_boosted_trees(m, weights, config); break;
  }
  return out;
}

/// Logistic: P(Male). SVM: signed margin. AdaBoost: stage-weighted vote.
/// Boosted trees: P(Male).
inline std::vector<double> predict_scores(const TrainedClassifier& c, const SparseMatrix& x) {
  switch (c.kind) {
    case ClassifierKind::Logistic: {
      auto z = linear_margins(std::get<LinearModel>(c.model), x);
      for (double& v : z) v = sigmoid(v);
      return z;
    }
    case ClassifierKind::Svm: return linear_margins(std::get<LinearModel>(c.model), x);
    case ClassifierKind::AdaBoost: return adaboost_margins(std::get<StumpEnsemble>(c.model), x);
    case ClassifierKind::BoostedTrees:
      return boosted_probabilities(std::get<BoostedTrees>(c.model), x);
  }
  return {};
}

inline std::vector<Gender> predict_classes(const TrainedClassifier& c, std::span<const double> scores) {
  std::vector<Gender> out(scores.size());
  const double t = c.decision_threshold();
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > t ? Gender::Male : Gender::Female;
  return out;
}

inline constexpr const char* kModelSchema = "gs-audit/model-v1";

inline nlohmann::json to_json(const TrainedClassifier& c) {
  nlohmann::json j = {{"schema", kModelSchema},
                      {"classifier", std::string(to_string(c.kind))},
                      {"config", to_json(c.config)},
                      {"class_weights", {{"male", c.weights.male}, {"female", c.weights.female}}},
                      {"converged", c.converged()}};
  if (const auto* lm = std::get_if<LinearModel>(&c.model)) {
    j["weights"] = lm->weights;
    j["bias"] = lm->bias;
    j["iterations"] = lm->iterations;
    j["final_gradient_norm"] = lm->final_gradient_norm;
  } else if (const auto* ens = std::get_if<StumpEnsemble>(&c.model)) {
    auto stumps = nlohmann::json::array();
    for (const auto& s : ens->stumps) {
      stumps.push_back({{"feature", s.feature},
                        {"threshold", s.threshold},
                        {"polarity", s.polarity},
                        {"alpha", s.alpha}});
    }
    j["stumps"] = std::move(stumps);
    j["weighted_errors"] = ens->weighted_errors;
    j["feature_count"] = ens->feature_count;
  } else {
    const auto& bt = std::get<BoostedTrees>(c.model);
    auto trees = nlohmann::json::array();
    for (const auto& t : bt.trees) {
      auto nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) {
          nodes.push_back({{"value", n.value}});
        } else {
          nodes.push_back({{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right}});
        }
      }
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    j["eta"] = bt.eta;
    j["base_score"] = bt.base_score;
    j["feature_count"] = bt.feature_count;
    j["loss_history"] = bt.loss_history;
  }
  return j;
}

}  // namespace gsaudit
