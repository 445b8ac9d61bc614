#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsaudit/corpus.hpp"
#include "gsaudit/error.hpp"

namespace gsaudit {

/// Male is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const Gender> predictions, std::span<const Gender> labels) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("prediction count " + std::to_string(predictions.size()) +
                         " differs from label count " + std::to_string(labels.size()));
  }
  if (labels.empty()) throw DomainError("confusion matrix needs at least one sample");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_male = predictions[i] == Gender::Male;
    const bool is_male = labels[i] == Gender::Male;
    if (pred_male && is_male) ++cm.tp;
    else if (pred_male) ++cm.fp;
    else if (is_male) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

/// Rank-based AUC: the share of (Male, Female) pairs where the Male row
/// scores higher, tied pairs counting one half.
inline double auc(std::span<const double> scores, std::span<const Gender> labels) {
  if (scores.size() != labels.size()) throw DimensionError("score count differs from label count");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the Mann-Whitney U, kept integral so the result is one exact division.
  std::uint64_t twice_u = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t pos_total = 0;
  std::uint64_t neg_total = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == Gender::Male ? pos : neg) += 1;
      ++j;
    }
    twice_u += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    pos_total += pos;
    neg_total += neg;
    i = j;
  }
  if (pos_total == 0 || neg_total == 0) throw DomainError("AUC needs both classes present");
  return static_cast<double>(twice_u) / static_cast<double>(2 * pos_total * neg_total);
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // rows scoring >= threshold are predicted Male
};

/// ROC vertices from (0,0) to (1,1), one per distinct score.
inline std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const Gender> labels) {
  if (scores.size() != labels.size()) throw DimensionError("score count differs from label count");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto pos_total = static_cast<double>(std::count(labels.begin(), labels.end(), Gender::Male));
  const auto neg_total = static_cast<double>(labels.size()) - pos_total;
  if (pos_total == 0 || neg_total == 0) throw DomainError("ROC needs both classes present");
  std::vector<RocPoint> out{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0;
  double fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == Gender::Male ? tp : fp) += 1;
      ++i;
    }
    out.push_back({fp / neg_total, tp / pos_total, s});
  }
  return out;
}

struct MetricSet {
  double accuracy = 0.0;
  double accuracy_male = 0.0;
  double accuracy_female = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double auc = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::string> undefined;  // names of metrics whose ratio was 0/0, reported as 0

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

inline MetricSet metrics(const ConfusionMatrix& cm, std::span<const double> scores,
                         std::span<const Gender> labels) {
  if (cm.total() != labels.size()) throw DimensionError("confusion total differs from label count");
  MetricSet m;
  m.confusion = cm;
  auto ratio = [&](double num, double den, const char* name) {
    if (den == 0.0) {
      m.undefined.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  m.accuracy = ratio(tp + tn, static_cast<double>(cm.total()), "accuracy");
  m.accuracy_male = ratio(tp, tp + fn, "accuracy_male");
  m.accuracy_female = ratio(tn, tn + fp, "accuracy_female");
  m.precision = ratio(tp, tp + fp, "precision");
  m.recall = ratio(tp, tp + fn, "recall");
  m.f_measure = ratio(2.0 * m.precision * m.recall, m.precision + m.recall, "f_measure");
  m.auc = auc(scores, labels);
  return m;
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

inline nlohmann::json to_json(const MetricSet& m) {
  return {{"accuracy", m.accuracy},
          {"accuracy_male", m.accuracy_male},
          {"accuracy_female", m.accuracy_female},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f_measure", m.f_measure},
          {"auc", m.auc},
          {"confusion", to_json(m.confusion)},
          {"undefined", m.undefined}};
}

}  // namespace gsaudit
