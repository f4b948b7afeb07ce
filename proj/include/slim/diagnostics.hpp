#pragma once

// Interpretability and fit diagnostics for a grown tree: per-node effect
// functions, variance-based leaf importance, split-contribution attribution
// and fidelity/accuracy metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "slim/basis.hpp"
#include "slim/dataset.hpp"
#include "slim/error.hpp"
#include "slim/tree.hpp"

namespace slim {

namespace detail {

inline void require_feature(const DesignSpec& spec, int feature) {
  if (feature < 0 || feature >= static_cast<int>(spec.features.size())) {
    throw ArgumentError("unknown feature id " + std::to_string(feature));
  }
}

// Population variance by two passes.
inline double variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

// Per-feature block contributions of one record under `beta`.
inline void block_effects(const DesignSpec& spec, const Vector& beta, std::span<const int> cols,
                          std::span<const double> vals, std::vector<double>& out) {
  out.assign(spec.blocks.size(), 0.0);
  std::size_t j = 0;
  for (std::size_t a = 0; a < cols.size(); ++a) {
    const int c = cols[a];
    if (c == 0) continue;
    while (c >= spec.blocks[j].end_column()) ++j;
    out[j] += beta[c] * vals[a];
  }
}

}  // namespace detail

/// Uncentered contribution of `feature`'s block: its coefficients dotted
/// with the basis row of `value`.
inline double block_effect(const DesignSpec& spec, const Vector& beta, int feature,
                           const FeatureValue& value) {
  detail::require_feature(spec, feature);
  const auto& f = spec.features[static_cast<std::size_t>(feature)];
  const auto& b = spec.blocks[static_cast<std::size_t>(feature)];
  std::vector<int> cols;
  std::vector<double> vals;
  detail::append_block(f, b, value, cols, vals, nullptr);
  double s = 0.0;
  for (std::size_t a = 0; a < cols.size(); ++a) s += beta[cols[a]] * vals[a];
  return s;
}

/// h_jk(x): the node's effect of `feature` at `value`, centered so its mean
/// over the node's training rows is 0.
inline double effect_eval(const Tree& tree, int node_id, int feature, const FeatureValue& value) {
  const TreeNode& n = tree.node(node_id);
  detail::require_feature(tree.spec, feature);
  return block_effect(tree.spec, n.model.coefficients, feature, value) -
         n.effect_means[static_cast<std::size_t>(feature)];
}

struct EffectCurve {
  int node = 0;
  int feature = 0;
  std::vector<double> grid;          // continuous features
  std::vector<std::string> levels;   // categorical features
  std::vector<double> values;
};

/// Effect curves on `grid_points` evenly spaced points over each continuous
/// feature's root training range, or on every level of a categorical one.
inline EffectCurve effect_curve(const Tree& tree, int node_id, int feature, int grid_points = 100) {
  detail::require_feature(tree.spec, feature);
  if (grid_points < 2) throw ArgumentError("effect curves need at least 2 grid points");
  const auto& f = tree.spec.features[static_cast<std::size_t>(feature)];
  EffectCurve c;
  c.node = node_id;
  c.feature = feature;
  if (f.kind == FeatureKind::continuous) {
    for (int k = 0; k < grid_points; ++k) {
      const double x = k + 1 == grid_points
                           ? f.max
                           : f.min + (f.max - f.min) * static_cast<double>(k) / (grid_points - 1);
      c.grid.push_back(x);
      c.values.push_back(effect_eval(tree, node_id, feature, x));
    }
  } else {
    for (const auto& l : f.levels) {
      c.levels.push_back(l);
      c.values.push_back(effect_eval(tree, node_id, feature, l));
    }
  }
  return c;
}

/// Curves for every (leaf, feature), leaf ascending then feature ascending.
inline std::vector<EffectCurve> leaf_effect_curves(const Tree& tree, int grid_points = 100) {
  std::vector<EffectCurve> out;
  for (int leaf : tree.leaf_ids()) {
    for (std::size_t j = 0; j < tree.spec.features.size(); ++j) {
      out.push_back(effect_curve(tree, leaf, static_cast<int>(j), grid_points));
    }
  }
  return out;
}

struct ImportanceEntry {
  int leaf = 0;
  int feature = 0;
  double v = 0.0;
};

struct ImportanceTable {
  std::vector<ImportanceEntry> entries;  // leaf ascending, feature ascending
  std::vector<int> small_leaves;         // leaves with fewer than 2 rows
};

/// v_jk: variance (denominator n_k) of feature j's effect over the rows of
/// `data` routed to leaf k.
inline ImportanceTable leaf_importance(const Tree& tree, const SurrogateDataset& data) {
  TreeEvaluator ev(tree, data);
  const auto leaves = tree.leaf_ids();
  const std::size_t p = tree.spec.features.size();
  // effects[leaf][feature] -> values
  std::vector<std::vector<std::vector<double>>> effects(leaves.size(),
                                                        std::vector<std::vector<double>>(p));
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<double> per_block;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int leaf = ev.leaf(i);
    const auto k = static_cast<std::size_t>(std::lower_bound(leaves.begin(), leaves.end(), leaf) -
                                            leaves.begin());
    ev.sparse_row(i, cols, vals);
    detail::block_effects(tree.spec, tree.node(leaf).model.coefficients, cols, vals, per_block);
    for (std::size_t j = 0; j < p; ++j) effects[k][j].push_back(per_block[j]);
  }
  ImportanceTable table;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const bool small = effects[k].empty() || effects[k][0].size() < 2;
    if (small) table.small_leaves.push_back(leaves[k]);
    for (std::size_t j = 0; j < p; ++j) {
      table.entries.push_back({leaves[k], static_cast<int>(j),
                               small ? 0.0 : detail::variance(effects[k][j])});
    }
  }
  return table;
}

struct SplitContribution {
  int node = 0;
  std::vector<double> c;  // per feature
  std::vector<double> p;  // per feature, c / sum(c)
  bool no_interaction = false;
};

inline constexpr double kNoInteractionFloor = 1e-12;

/// Attribution of the split at `node_id` to each feature. For a record in
/// child C the difference d = h_jP(x) - h_jC(x) is taken relative to its
/// mean over C, which removes the arbitrary level each model assigns to a
/// block; c_j is the pooled variance of these differences over the parent.
inline SplitContribution split_contribution(const Tree& tree, int node_id,
                                            const SurrogateDataset& data) {
  const TreeNode& parent = tree.node(node_id);
  if (parent.is_leaf()) {
    throw ArgumentError("split contribution requested for leaf node " + std::to_string(node_id));
  }
  const std::size_t p = tree.spec.features.size();
  TreeEvaluator ev(tree, data);
  const TreeNode& left = tree.node(parent.left);
  const TreeNode& right = tree.node(parent.right);

  // Per child, per feature: the raw differences.
  std::vector<std::vector<double>> d_left(p), d_right(p);
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<double> hp, hc;
  std::int64_t members = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto path = ev.path(i);
    if (std::find(path.begin(), path.end(), node_id) == path.end()) continue;
    ++members;
    const bool goes_left = ev.goes_left(*parent.split, i);
    ev.sparse_row(i, cols, vals);
    detail::block_effects(tree.spec, parent.model.coefficients, cols, vals, hp);
    detail::block_effects(tree.spec, (goes_left ? left : right).model.coefficients, cols, vals, hc);
    auto& dst = goes_left ? d_left : d_right;
    for (std::size_t j = 0; j < p; ++j) dst[j].push_back(hp[j] - hc[j]);
  }

  SplitContribution out;
  out.node = node_id;
  out.c.assign(p, 0.0);
  out.p.assign(p, 0.0);
  if (members == 0) {
    out.no_interaction = true;
    return out;
  }
  const double n = static_cast<double>(members);
  for (std::size_t j = 0; j < p; ++j) {
    const double nl = static_cast<double>(d_left[j].size());
    const double nr = static_cast<double>(d_right[j].size());
    out.c[j] = (nl * detail::variance(d_left[j]) + nr * detail::variance(d_right[j])) / n;
  }
  const double total = std::accumulate(out.c.begin(), out.c.end(), 0.0);
  if (total < kNoInteractionFloor) {
    out.no_interaction = true;
    return out;
  }
  for (std::size_t j = 0; j < p; ++j) out.p[j] = out.c[j] / total;
  return out;
}

inline std::vector<SplitContribution> all_split_contributions(const Tree& tree,
                                                              const SurrogateDataset& data) {
  std::vector<SplitContribution> out;
  for (int id : tree.internal_ids()) out.push_back(split_contribution(tree, id, data));
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct RegressionMetrics {
  double mse = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;
};

namespace detail {
inline void require_pair(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) throw ArgumentError(std::string(who) + ": length mismatch");
  if (a.size() < 2) throw ArgumentError(std::string(who) + ": at least two values required");
}
}  // namespace detail

/// MSE and squared Pearson correlation of predictions against responses.
inline RegressionMetrics fidelity(std::span<const double> predictions,
                                  std::span<const double> responses) {
  detail::require_pair(predictions, responses, "fidelity");
  const double n = static_cast<double>(predictions.size());
  RegressionMetrics m;
  double mp = 0.0, mr = 0.0, se = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - responses[i];
    se += d * d;
    mp += predictions[i];
    mr += responses[i];
  }
  m.mse = se / n;
  mp /= n;
  mr /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double a = predictions[i] - mp, b = responses[i] - mr;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    m.r2 = 0.0;
    m.r2_defined = false;
  } else {
    m.r2 = sxy * sxy / (sxx * syy);
  }
  return m;
}

enum class TaskKind { continuous, binary };

struct AccuracyMetrics {
  TaskKind task = TaskKind::continuous;
  RegressionMetrics regression;  // continuous tasks
  double auc = 0.0;              // binary tasks
  double log_loss = 0.0;
  bool auc_defined = true;
};

inline double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Rank-statistic AUC with midranks for tied scores.
inline double auc_midrank(std::span<const double> scores, std::span<const double> labels,
                          bool* defined = nullptr) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1.0) {
        rank_sum_pos += midrank;
        pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) {
    if (defined) *defined = false;
    return 0.0;
  }
  if (defined) *defined = true;
  return (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

inline constexpr double kProbabilityClamp = 1e-12;

/// Accuracy against the original response. For binary tasks `predictions`
/// are mapped through the logistic function when `logit_scale` is set.
inline AccuracyMetrics accuracy(std::span<const double> predictions, std::span<const double> original,
                                TaskKind task, bool logit_scale = true) {
  detail::require_pair(predictions, original, "accuracy");
  AccuracyMetrics m;
  m.task = task;
  if (task == TaskKind::continuous) {
    m.regression = fidelity(predictions, original);
    return m;
  }
  std::vector<double> prob(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (original[i] != 0.0 && original[i] != 1.0) {
      throw DataError("binary accuracy requires 0/1 labels (row " + std::to_string(i) + ")");
    }
    double p = logit_scale ? logistic(predictions[i]) : predictions[i];
    if (!logit_scale && (p < 0.0 || p > 1.0)) {
      throw DataError("binary accuracy requires probabilities in [0, 1]");
    }
    prob[i] = p;
  }
  // The logistic map is monotone, so ranking the raw scores is equivalent.
  m.auc = auc_midrank(predictions, original, &m.auc_defined);
  double ll = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(prob[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    ll -= original[i] == 1.0 ? std::log(p) : std::log(1.0 - p);
  }
  m.log_loss = ll / static_cast<double>(prob.size());
  return m;
}

}  // namespace slim
