#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gsaudit/classifiers/config.hpp"
#include "gsaudit/classifiers/linear.hpp"
#include "gsaudit/features.hpp"

namespace gsaudit {

/// Internal node when feature >= 0 (x[feature] <= threshold goes left);
/// leaf otherwise.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const SparseMatrix& x, std::size_t row) const {
    std::int32_t k = 0;
    while (!nodes[k].is_leaf()) {
      const auto& node = nodes[k];
      k = x.at(row, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left
                                                                              : node.right;
    }
    return nodes[k].value;
  }

  int depth() const { return depth_from(0); }

 private:
  int depth_from(std::int32_t k) const {
    if (nodes[k].is_leaf()) return 0;
    return 1 + std::max(depth_from(nodes[k].left), depth_from(nodes[k].right));
  }
};

/// P(Male | x) = sigmoid(base_score + eta * sum_t tree_t(x)).
struct BoostedTrees {
  std::vector<RegressionTree> trees;
  double eta = 0.3;
  double base_score = 0.0;  // logit of the class-weighted Male prior
  int max_depth = 3;
  std::size_t feature_count = 0;
  std::vector<double> loss_history;  // weighted training log-loss, before round 1 and after each
};

namespace detail {

struct SplitCandidate {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

inline double weighted_log_loss(std::span<const double> margin, std::span<const double> y,
                                std::span<const double> s) {
  double loss = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) loss += s[i] * softplus(-y[i] * margin[i]);
  return loss;
}

}  // namespace detail

/// Gradient boosting on the class-weighted logistic loss with second-order
/// leaf weights -G / (H + lambda) and exact greedy splits grown level by
/// level to config.depth. Each leaf's shrunken step is halved until it does
/// not raise that leaf's loss, so the training loss never increases.
inline BoostedTrees fit_boosted_trees(const FeatureMatrix& m, const ClassWeights& weights,
                                      const FitConfig& config) {
  config.validate();
  if (m.labels.size() != m.rows()) throw DimensionError("label count differs from row count");
  if (!m.x.all_finite()) throw DomainError("feature matrix contains NaN or infinite values");
  const std::size_t n = m.rows();
  const auto y = signed_labels(m.labels);
  const auto s = sample_weights(m.labels, weights);

  double male_mass = 0.0;
  double total_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_mass += s[i];
    if (y[i] > 0) male_mass += s[i];
  }
  if (male_mass <= 0.0 || male_mass >= total_mass) {
    throw DomainError("training data must contain both classes");
  }
  const double prior = male_mass / total_mass;

  BoostedTrees model;
  model.eta = config.eta;
  model.max_depth = config.depth;
  model.base_score = std::log(prior / (1.0 - prior));
  model.feature_count = m.cols();

  std::vector<double> margin(n, model.base_score);
  model.loss_history.push_back(detail::weighted_log_loss(margin, y, s));
  if (config.rounds == 0) return model;

  const SortedColumns columns(m.x);
  const std::size_t features = m.cols();
  std::vector<double> grad(n), hess(n);
  std::vector<std::int32_t> node_of_row(n);

  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      const double target = y[i] > 0 ? 1.0 : 0.0;
      grad[i] = s[i] * (p - target);
      hess[i] = s[i] * p * (1.0 - p);
    }
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::fill(node_of_row.begin(), node_of_row.end(), 0);
    std::vector<std::int32_t> frontier{0};

    for (int level = 0; level < config.depth && !frontier.empty(); ++level) {
      // slot = position in frontier; -1 for rows not in a frontier node
      std::vector<std::int32_t> slot_of_node(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < frontier.size(); ++k) {
        slot_of_node[frontier[k]] = static_cast<std::int32_t>(k);
      }
      const std::size_t slots = frontier.size();
      std::vector<detail::NodeStats> totals(slots);
      std::vector<std::int32_t> row_slot(n, -1);
      for (std::size_t i = 0; i < n; ++i) {
        const auto node = node_of_row[i];
        if (node < 0 || node >= static_cast<std::int32_t>(slot_of_node.size())) continue;
        const auto slot = slot_of_node[node];
        if (slot < 0) continue;
        row_slot[i] = slot;
        totals[slot].g += grad[i];
        totals[slot].h += hess[i];
        ++totals[slot].count;
      }
      std::vector<detail::SplitCandidate> best(slots);
      std::vector<detail::NodeStats> nz(slots), run(slots);
      std::vector<double> last(slots);
      std::vector<char> any(slots), zeros_added(slots);

      auto evaluate = [&](std::size_t slot, std::int32_t feature, double threshold) {
        const auto& tot = totals[slot];
        const double gl = run[slot].g;
        const double hl = run[slot].h;
        const double gr = tot.g - gl;
        const double hr = tot.h - hl;
        if (hl < config.min_child_weight || hr < config.min_child_weight) return;
        const double gain = 0.5 * (gl * gl / (hl + config.lambda) + gr * gr / (hr + config.lambda) -
                                   tot.g * tot.g / (tot.h + config.lambda));
        if (gain > best[slot].gain + 1e-12) best[slot] = {gain, feature, threshold};
      };

      std::vector<std::size_t> touched;
      for (std::size_t f = 0; f < features; ++f) {
        const auto col = columns.column(f);
        if (col.empty()) continue;
        const auto feature = static_cast<std::int32_t>(f);
        touched.clear();
        for (const auto& e : col) {
          const auto slot = row_slot[e.row];
          if (slot < 0) continue;
          if (nz[slot].count == 0) touched.push_back(static_cast<std::size_t>(slot));
          nz[slot].g += grad[e.row];
          nz[slot].h += hess[e.row];
          ++nz[slot].count;
        }
        for (const auto slot : touched) {
          run[slot] = {};
          any[slot] = 0;
          zeros_added[slot] = nz[slot].count == totals[slot].count;
        }
        auto add_zero_block = [&](std::size_t slot) {
          if (zeros_added[slot]) return;
          if (any[slot] && 0.0 > last[slot]) {
            evaluate(slot, feature, last[slot] + (0.0 - last[slot]) / 2);
          }
          run[slot].g += totals[slot].g - nz[slot].g;
          run[slot].h += totals[slot].h - nz[slot].h;
          run[slot].count += totals[slot].count - nz[slot].count;
          any[slot] = 1;
          last[slot] = 0.0;
          zeros_added[slot] = 1;
        };
        bool crossed = false;
        for (const auto& e : col) {
          if (!crossed && e.value >= 0.0) {
            for (const auto slot : touched) add_zero_block(slot);
            crossed = true;
          }
          const auto slot = row_slot[e.row];
          if (slot < 0) continue;
          if (any[slot] && e.value > last[slot]) {
            evaluate(static_cast<std::size_t>(slot), feature,
                     last[slot] + (e.value - last[slot]) / 2);
          }
          run[slot].g += grad[e.row];
          run[slot].h += hess[e.row];
          ++run[slot].count;
          any[slot] = 1;
          last[slot] = e.value;
        }
        if (!crossed) {
          for (const auto slot : touched) add_zero_block(slot);
        }
        for (const auto slot : touched) nz[slot] = {};
      }

      std::vector<std::int32_t> next_frontier;
      std::vector<std::int32_t> left_child(slots, -1), right_child(slots, -1);
      for (std::size_t k = 0; k < slots; ++k) {
        if (best[k].feature < 0) continue;
        const auto node = frontier[k];
        const auto l = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[node].feature = best[k].feature;
        tree.nodes[node].threshold = best[k].threshold;
        tree.nodes[node].left = l;
        tree.nodes[node].right = l + 1;
        left_child[k] = l;
        right_child[k] = l + 1;
        next_frontier.push_back(l);
        next_frontier.push_back(l + 1);
      }
      // Route rows of split nodes: zeros first, then fix the non-zeros.
      for (std::size_t i = 0; i < n; ++i) {
        const auto slot = row_slot[i];
        if (slot < 0 || left_child[slot] < 0) continue;
        const auto& node = tree.nodes[frontier[slot]];
        node_of_row[i] = 0.0 <= node.threshold ? left_child[slot] : right_child[slot];
      }
      for (std::size_t k = 0; k < slots; ++k) {
        if (left_child[k] < 0) continue;
        const auto& node = tree.nodes[frontier[k]];
        for (const auto& e : columns.column(static_cast<std::size_t>(node.feature))) {
          if (row_slot[e.row] != static_cast<std::int32_t>(k)) continue;
          node_of_row[e.row] = e.value <= node.threshold ? left_child[k] : right_child[k];
        }
      }
      frontier = std::move(next_frontier);
    }

    // Leaf values with per-leaf step safeguarding.
    const std::size_t node_count = tree.nodes.size();
    std::vector<std::vector<std::size_t>> rows_of(node_count);
    for (std::size_t i = 0; i < n; ++i) rows_of[static_cast<std::size_t>(node_of_row[i])].push_back(i);
    for (std::size_t k = 0; k < node_count; ++k) {
      auto& node = tree.nodes[k];
      if (!node.is_leaf()) continue;
      double g = 0.0;
      double h = 0.0;
      for (const auto i : rows_of[k]) {
        g += grad[i];
        h += hess[i];
      }
      double value = (h + config.lambda) > 0.0 ? -g / (h + config.lambda) : 0.0;
      auto leaf_loss = [&](double shift) {
        double loss = 0.0;
        for (const auto i : rows_of[k]) loss += s[i] * softplus(-y[i] * (margin[i] + shift));
        return loss;
      };
      const double base = leaf_loss(0.0);
      int halvings = 0;
      while (value != 0.0 && leaf_loss(config.eta * value) > base) {
        value *= 0.5;
        if (++halvings > 40) value = 0.0;
      }
      node.value = value;
      for (const auto i : rows_of[k]) margin[i] += config.eta * value;
    }
    model.trees.push_back(std::move(tree));
    model.loss_history.push_back(detail::weighted_log_loss(margin, y, s));
  }
  return model;
}

/// Probabilities of the Male class.
inline std::vector<double> boosted_probabilities(const BoostedTrees& model, const SparseMatrix& x) {
  if (x.cols() != model.feature_count) {
    throw DimensionError("feature count " + std::to_string(x.cols()) + " differs from model's " +
                         std::to_string(model.feature_count));
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double f = model.base_score;
    for (const auto& t : model.trees) f += model.eta * t.predict(x, r);
    out[r] = sigmoid(f);
  }
  return out;
}

}  // namespace gsaudit
