#pragma once

// Model-based regression tree with a main-effects model in every node.
//
// The split search follows the histogram approach: bin the split variable on
// global root-quantile edges, accumulate one GramStats per bin in a single
// pass over the node's rows, then sweep the thresholds left to right with
// running sums. Each candidate costs two small ridge solves; no candidate
// touches the raw rows again.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slim/basis.hpp"
#include "slim/dataset.hpp"
#include "slim/error.hpp"
#include "slim/linalg.hpp"
#include "slim/parallel.hpp"

namespace slim {

enum class LossKind { sse, gcv };

inline const char* to_string(LossKind k) { return k == LossKind::sse ? "sse" : "gcv"; }

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "sse") return LossKind::sse;
  if (s == "gcv") return LossKind::gcv;
  throw ArgumentError("unknown loss '" + s + "' (expected sse or gcv)");
}

inline constexpr double kDefaultLambda = 0.1;

struct GrowConfig {
  int max_depth = 3;
  int min_samples_leaf = 0;  // 0 selects max(2m, 30)
  std::vector<double> lambdas{kDefaultLambda};
  int num_bins = 50;
  LossKind loss = LossKind::gcv;
  double min_gain = 0.0;
  int exhaustive_category_limit = 12;
  int threads = 1;

  int resolved_min_samples_leaf(int design_width) const {
    return min_samples_leaf > 0 ? min_samples_leaf : std::max(2 * design_width, 30);
  }

  void validate(int design_width) const {
    if (max_depth < 0) throw ArgumentError("max_depth must be >= 0");
    if (num_bins < 2) throw ArgumentError("num_bins must be >= 2");
    if (!(min_gain >= 0.0)) throw ArgumentError("min_gain must be >= 0");
    if (lambdas.empty()) throw ArgumentError("at least one lambda is required");
    for (double l : lambdas) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ArgumentError("lambda must be finite and >= 0");
    }
    if (resolved_min_samples_leaf(design_width) < design_width) {
      throw ArgumentError("min_samples_leaf (" + std::to_string(min_samples_leaf) +
                          ") must be at least the design width " +
                          std::to_string(design_width));
    }
    if (exhaustive_category_limit < 1) {
      throw ArgumentError("exhaustive_category_limit must be >= 1");
    }
  }
};

/// Loss used to score a node: plain SSE, or SSE inflated by the GCV factor
/// (n times the GCV loss), which is on the same scale as SSE so child losses
/// can be summed.
inline double node_loss(const NodeModel& m, LossKind kind) {
  if (kind == LossKind::sse) return m.sse;
  return static_cast<double>(m.count) * gcv_loss(m.sse, m.count, m.effective_df);
}

/// Go left iff x <= threshold (continuous) or the level is in left_levels
/// or unseen (categorical). `left_levels` is sorted and always contains the
/// first level the node observed.
struct SplitRule {
  int feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<int> left_levels;

  bool goes_left_level(int level) const {
    return level < 0 || std::binary_search(left_levels.begin(), left_levels.end(), level);
  }
};

using SplitCandidate = SplitRule;

struct TreeNode {
  int id = 0;
  int depth = 0;
  std::int64_t count = 0;
  NodeModel model;
  double loss = 0.0;
  std::optional<SplitRule> split;
  int left = -1;
  int right = -1;
  double dsse = 0.0;
  // Mean of each feature's block contribution over the node's training rows.
  std::vector<double> effect_means;
  bool l1_failed = false;

  bool is_leaf() const { return !split.has_value(); }
};

struct Tree {
  DesignSpec spec;
  GrowConfig config;
  std::vector<TreeNode> nodes;  // sorted by id; nodes.front() is the root
  double l1_lambda = 0.0;       // nonzero once leaves were refit with a lasso

  const TreeNode& root() const { return nodes.front(); }

  const TreeNode* find(int id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const TreeNode& n, int v) { return n.id < v; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
  }
  TreeNode* find(int id) {
    return const_cast<TreeNode*>(static_cast<const Tree&>(*this).find(id));
  }
  const TreeNode& node(int id) const {
    const TreeNode* n = find(id);
    if (!n) throw ArgumentError("no tree node with id " + std::to_string(id));
    return *n;
  }
  TreeNode& node(int id) { return const_cast<TreeNode&>(static_cast<const Tree&>(*this).node(id)); }

  std::vector<int> leaf_ids() const {
    std::vector<int> out;
    for (const auto& n : nodes) {
      if (n.is_leaf()) out.push_back(n.id);
    }
    return out;
  }

  std::vector<int> internal_ids() const {
    std::vector<int> out;
    for (const auto& n : nodes) {
      if (!n.is_leaf()) out.push_back(n.id);
    }
    return out;
  }

  std::size_t size() const { return nodes.size(); }
};

// ---------------------------------------------------------------------------
// Candidate thresholds and binning

/// Split thresholds from the midpoint quantiles at levels k/num_bins,
/// k = 1..num_bins-1. Each quantile is replaced by the midpoint between the
/// observed values on either side of it, so every threshold induces a
/// distinct, nonempty partition of the root data.
inline std::vector<double> candidate_edges(std::span<const double> values, int num_bins) {
  if (num_bins < 2) throw ArgumentError("candidate_edges: num_bins must be >= 2");
  if (values.empty()) return {};
  auto sorted = sorted_finite_copy(values, "candidate_edges");
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> edges;
  if (distinct.size() < 2) return edges;
  for (int k = 1; k < num_bins; ++k) {
    const double q = midpoint_quantile_sorted(sorted, k, num_bins);
    // First distinct value strictly above q.
    auto hi = std::upper_bound(distinct.begin(), distinct.end(), q);
    if (hi == distinct.end() || hi == distinct.begin()) continue;
    const double t = 0.5 * (*(hi - 1) + *hi);
    if (edges.empty() || t > edges.back()) edges.push_back(t);
  }
  return edges;
}

inline int bin_of(std::span<const double> edges, double x) {
  return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

/// Per-feature bin codes for every training row.
struct FeatureBins {
  bool categorical = false;
  std::vector<double> edges;  // continuous only
  int num_bins = 0;           // edges+1, or number of levels
  std::vector<int> code;      // per training row
};

inline std::vector<FeatureBins> make_feature_bins(const SurrogateDataset& data,
                                                  const DesignSpec& spec, int num_bins) {
  const auto map = bind_columns(spec, data);
  std::vector<FeatureBins> out(spec.features.size());
  for (std::size_t j = 0; j < spec.features.size(); ++j) {
    const auto& col = data.features[static_cast<std::size_t>(map[j])];
    auto& fb = out[j];
    if (col.kind == FeatureKind::continuous) {
      fb.edges = candidate_edges(col.numeric, num_bins);
      fb.num_bins = static_cast<int>(fb.edges.size()) + 1;
      fb.code.reserve(col.numeric.size());
      for (double x : col.numeric) fb.code.push_back(bin_of(fb.edges, x));
    } else {
      fb.categorical = true;
      const auto& levels = spec.features[j].levels;
      fb.num_bins = static_cast<int>(levels.size());
      fb.code.reserve(col.labels.size());
      for (const auto& s : col.labels) {
        auto it = std::find(levels.begin(), levels.end(), s);
        fb.code.push_back(it == levels.end() ? -1 : static_cast<int>(it - levels.begin()));
      }
    }
  }
  return out;
}

/// Counts full passes over node rows made by bin_grams.
inline std::atomic<std::int64_t>& gram_pass_counter() {
  static std::atomic<std::int64_t> counter{0};
  return counter;
}

/// One GramStats per bin over the full design row, restricted to `rows`.
/// Rows with code < 0 (unseen category) are skipped.
inline std::vector<GramStats> bin_grams(const DesignMatrix& design,
                                        std::span<const double> responses,
                                        std::span<const std::uint32_t> rows,
                                        std::span<const int> codes, int num_bins) {
  gram_pass_counter().fetch_add(1, std::memory_order_relaxed);
  std::vector<GramStats> bins;
  bins.reserve(static_cast<std::size_t>(num_bins));
  for (int b = 0; b < num_bins; ++b) bins.emplace_back(design.columns);
  for (std::uint32_t i : rows) {
    const int c = codes[i];
    if (c < 0) continue;
    bins[static_cast<std::size_t>(c)].add_row(design.row(i), responses[i]);
  }
  return bins;
}

inline GramStats node_gram(const DesignMatrix& design, std::span<const double> responses,
                           std::span<const std::uint32_t> rows) {
  GramStats g(design.columns);
  for (std::uint32_t i : rows) g.add_row(design.row(i), responses[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Split search

struct SplitResult {
  SplitRule rule;
  NodeModel left;
  NodeModel right;
  double gain = 0.0;
};

namespace detail {

inline bool subset_less(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

inline bool rule_less(const SplitRule& a, const SplitRule& b) {
  if (a.feature != b.feature) return a.feature < b.feature;
  if (a.categorical) return subset_less(a.left_levels, b.left_levels);
  return a.threshold < b.threshold;
}

inline constexpr double kGainTieRelTol = 1e-10;

}  // namespace detail

/// Total order on split candidates: larger gain first; gains within a
/// relative 1e-10 tie and fall back to lower feature, lower threshold,
/// smaller left subset.
inline bool better_split(double gain_a, const SplitRule& a, double gain_b, const SplitRule& b) {
  const double scale = std::max(std::abs(gain_a), std::abs(gain_b));
  const double tol = detail::kGainTieRelTol * scale;
  if (gain_a > gain_b + tol) return true;
  if (gain_b > gain_a + tol) return false;
  return detail::rule_less(a, b);
}

struct SplitSearchContext {
  const GramStats* node = nullptr;
  double parent_loss = 0.0;
  const GrowConfig* config = nullptr;
  int min_samples_leaf = 1;
};

namespace detail {

// Fits both children and scores the partition; nullopt when infeasible.
inline std::optional<SplitResult> evaluate_partition(const SplitSearchContext& ctx,
                                                     const GramStats& left_gram,
                                                     SplitRule rule) {
  const auto msl = ctx.min_samples_leaf;
  if (left_gram.count < msl || ctx.node->count - left_gram.count < msl) return std::nullopt;
  const GramStats right_gram = gram_subtract(*ctx.node, left_gram);
  const auto& cfg = *ctx.config;
  RidgeFit lf = fit_ridge(left_gram, cfg.lambdas);
  RidgeFit rf = fit_ridge(right_gram, cfg.lambdas);
  if (cfg.loss == LossKind::gcv && (lf.saturated || rf.saturated)) return std::nullopt;
  const double gain = ctx.parent_loss - (node_loss(lf.model, cfg.loss) + node_loss(rf.model, cfg.loss));
  if (!(gain > cfg.min_gain)) return std::nullopt;
  return SplitResult{std::move(rule), std::move(lf.model), std::move(rf.model), gain};
}

inline void keep_better(std::optional<SplitResult>& best, std::optional<SplitResult> cand) {
  if (!cand) return;
  if (!best || better_split(cand->gain, cand->rule, best->gain, best->rule)) best = std::move(cand);
}

}  // namespace detail

/// Best split of one feature given its per-bin grams.
inline std::optional<SplitResult> best_split_for_feature(const SplitSearchContext& ctx,
                                                         int feature,
                                                         const FeatureBins& fb,
                                                         std::span<const GramStats> bins) {
  std::optional<SplitResult> best;
  const int m = static_cast<int>(ctx.node->dim());
  if (!fb.categorical) {
    GramStats left(m);
    const int last = static_cast<int>(bins.size()) - 1;
    for (int b = 0; b < last; ++b) {
      if (bins[static_cast<std::size_t>(b)].count == 0) continue;
      gram_merge_into(left, bins[static_cast<std::size_t>(b)]);
      if (left.count >= ctx.node->count) break;
      SplitRule rule;
      rule.feature = feature;
      rule.threshold = fb.edges[static_cast<std::size_t>(b)];
      detail::keep_better(best, detail::evaluate_partition(ctx, left, std::move(rule)));
    }
    return best;
  }

  std::vector<int> present, absent;
  for (int l = 0; l < static_cast<int>(bins.size()); ++l) {
    (bins[static_cast<std::size_t>(l)].count > 0 ? present : absent).push_back(l);
  }
  const int c = static_cast<int>(present.size());
  if (c < 2) return best;

  auto evaluate_subset = [&](const std::vector<int>& left_present) {
    GramStats left(m);
    for (int l : left_present) gram_merge_into(left, bins[static_cast<std::size_t>(l)]);
    SplitRule rule;
    rule.feature = feature;
    rule.categorical = true;
    rule.left_levels = left_present;
    rule.left_levels.insert(rule.left_levels.end(), absent.begin(), absent.end());
    std::sort(rule.left_levels.begin(), rule.left_levels.end());
    detail::keep_better(best, detail::evaluate_partition(ctx, left, std::move(rule)));
  };

  if (c <= ctx.config->exhaustive_category_limit) {
    // Every proper subset containing present[0].
    const std::uint64_t total = std::uint64_t{1} << (c - 1);
    for (std::uint64_t mask = 0; mask + 1 < total; ++mask) {
      std::vector<int> left{present[0]};
      for (int i = 1; i < c; ++i) {
        if (mask & (std::uint64_t{1} << (i - 1))) left.push_back(present[static_cast<std::size_t>(i)]);
      }
      evaluate_subset(left);
    }
    return best;
  }

  // Order levels by node mean response and scan the c-1 cut points.
  std::vector<int> order = present;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ga = bins[static_cast<std::size_t>(a)];
    const auto& gb = bins[static_cast<std::size_t>(b)];
    return ga.xty[0] / static_cast<double>(ga.count) < gb.xty[0] / static_cast<double>(gb.count);
  });
  for (int k = 1; k < c; ++k) {
    std::vector<int> left(order.begin(), order.begin() + k);
    if (std::find(left.begin(), left.end(), present[0]) == left.end()) {
      left.assign(order.begin() + k, order.end());
    }
    std::sort(left.begin(), left.end());
    evaluate_subset(left);
  }
  return best;
}

/// Reduces per-feature winners in feature order.
inline std::optional<SplitResult> best_split(
    const SplitSearchContext& ctx, const std::vector<FeatureBins>& features,
    const std::vector<std::vector<GramStats>>& per_feature_bins) {
  std::optional<SplitResult> best;
  for (std::size_t f = 0; f < features.size(); ++f) {
    detail::keep_better(best, best_split_for_feature(ctx, static_cast<int>(f), features[f],
                                                     per_feature_bins[f]));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Growth

namespace detail {

inline std::vector<double> block_effect_means(const DesignSpec& spec, const GramStats& g,
                                              const Vector& beta) {
  std::vector<double> means(spec.blocks.size(), 0.0);
  const double n = static_cast<double>(g.count);
  if (n <= 0) return means;
  for (std::size_t j = 0; j < spec.blocks.size(); ++j) {
    const auto& b = spec.blocks[j];
    means[j] = g.xtx.row(0).segment(b.first_column, b.width).dot(beta.segment(b.first_column, b.width)) / n;
  }
  return means;
}

inline TreeNode make_node(const DesignSpec& spec, const GrowConfig& cfg, const GramStats& g,
                          int id, int depth) {
  TreeNode node;
  node.id = id;
  node.depth = depth;
  node.count = g.count;
  RidgeFit fit = fit_ridge(g, cfg.lambdas);
  node.model = std::move(fit.model);
  node.loss = fit.saturated && cfg.loss == LossKind::gcv
                  ? std::numeric_limits<double>::infinity()
                  : node_loss(node.model, cfg.loss);
  node.effect_means = block_effect_means(spec, g, node.model.coefficients);
  return node;
}

inline bool row_goes_left(const SplitRule& rule, const FeatureBins& fb, std::uint32_t row) {
  const int code = fb.code[row];
  if (rule.categorical) return rule.goes_left_level(code);
  return code <= bin_of(fb.edges, rule.threshold);
}

}  // namespace detail

/// Grows a tree on `data` (every row is training data). Node ids are
/// assigned breadth-first from 0.
inline Tree grow(const SurrogateDataset& data, const DesignSpec& spec, const GrowConfig& config) {
  data.validate();
  spec.validate();
  if (data.size() == 0) throw DataError("cannot grow a tree on an empty dataset");
  const int m = spec.total_columns;
  config.validate(m);
  if (static_cast<std::int64_t>(data.size()) < m) {
    throw DataError("design width " + std::to_string(m) + " exceeds the number of rows " +
                    std::to_string(data.size()));
  }
  const int msl = config.resolved_min_samples_leaf(m);

  const DesignMatrix design = build_design(data, spec);
  const auto features = make_feature_bins(data, spec, config.num_bins);
  const std::span<const double> y(data.response);

  Tree tree;
  tree.spec = spec;
  tree.config = config;

  struct Pending {
    int id;
    std::vector<std::uint32_t> rows;
    GramStats gram;
  };
  std::vector<std::uint32_t> all(data.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  GramStats root_gram = node_gram(design, y, all);

  std::deque<Pending> queue;
  tree.nodes.push_back(detail::make_node(spec, config, root_gram, 0, 0));
  queue.push_back({0, std::move(all), std::move(root_gram)});
  int next_id = 1;

  while (!queue.empty()) {
    Pending cur = std::move(queue.front());
    queue.pop_front();
    TreeNode& node = tree.node(cur.id);
    if (node.depth >= config.max_depth) continue;
    if (node.count < 2 * static_cast<std::int64_t>(msl)) continue;
    if (!std::isfinite(node.loss)) continue;

    SplitSearchContext ctx{&cur.gram, node.loss, &config, msl};
    std::vector<std::optional<SplitResult>> winners(features.size());
    parallel_for(features.size(), config.threads, [&](std::size_t f) {
      auto bins = bin_grams(design, y, cur.rows, features[f].code, features[f].num_bins);
      winners[f] = best_split_for_feature(ctx, static_cast<int>(f), features[f], bins);
    });
    std::optional<SplitResult> best;
    for (auto& w : winners) detail::keep_better(best, std::move(w));
    if (!best) continue;

    const auto& fb = features[static_cast<std::size_t>(best->rule.feature)];
    std::vector<std::uint32_t> left_rows, right_rows;
    for (std::uint32_t i : cur.rows) {
      (detail::row_goes_left(best->rule, fb, i) ? left_rows : right_rows).push_back(i);
    }
    GramStats lg = node_gram(design, y, left_rows);
    GramStats rg = node_gram(design, y, right_rows);
    TreeNode left = detail::make_node(spec, config, lg, next_id, node.depth + 1);
    TreeNode right = detail::make_node(spec, config, rg, next_id + 1, node.depth + 1);
    const double dsse = node.loss - (left.loss + right.loss);
    if (!(dsse > config.min_gain)) continue;

    TreeNode& parent = tree.node(cur.id);
    parent.split = std::move(best->rule);
    parent.left = left.id;
    parent.right = right.id;
    parent.dsse = dsse;
    tree.nodes.push_back(std::move(left));
    tree.nodes.push_back(std::move(right));
    queue.push_back({next_id, std::move(left_rows), std::move(lg)});
    queue.push_back({next_id + 1, std::move(right_rows), std::move(rg)});
    next_id += 2;
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Pruning

/// Removes `id`'s descendants and turns it into a leaf.
inline void collapse_node(Tree& tree, int id) {
  std::vector<int> doomed;
  std::vector<int> stack;
  const TreeNode& n = tree.node(id);
  if (n.is_leaf()) return;
  stack.push_back(n.left);
  stack.push_back(n.right);
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    doomed.push_back(cur);
    const TreeNode& c = tree.node(cur);
    if (!c.is_leaf()) {
      stack.push_back(c.left);
      stack.push_back(c.right);
    }
  }
  TreeNode& target = tree.node(id);
  target.split.reset();
  target.left = target.right = -1;
  target.dsse = 0.0;
  std::sort(doomed.begin(), doomed.end());
  std::erase_if(tree.nodes, [&](const TreeNode& x) {
    return std::binary_search(doomed.begin(), doomed.end(), x.id);
  });
}

/// Bottom-up pruning: an internal node whose children are both leaves is
/// collapsed when its r2 >= r2_threshold or its dsse is below
/// dsse_fraction * root SSE. Repeats until nothing changes.
inline Tree prune(const Tree& grown, double r2_threshold, double dsse_fraction) {
  if (!(r2_threshold >= 0.0 && r2_threshold <= 1.0)) {
    throw ArgumentError("prune: r2 threshold must lie in [0, 1]");
  }
  if (!(dsse_fraction >= 0.0 && dsse_fraction <= 1.0)) {
    throw ArgumentError("prune: dsse fraction must lie in [0, 1]");
  }
  Tree tree = grown;
  const double dsse_floor = dsse_fraction * tree.root().model.sse;
  bool changed = true;
  while (changed) {
    changed = false;
    // Deepest first so a whole chain can fold in one sweep.
    std::vector<int> ids = tree.internal_ids();
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      const int da = tree.node(a).depth, db = tree.node(b).depth;
      return da != db ? da > db : a > b;
    });
    for (int id : ids) {
      const TreeNode& n = tree.node(id);
      if (!tree.node(n.left).is_leaf() || !tree.node(n.right).is_leaf()) continue;
      if (n.model.r2 >= r2_threshold || n.dsse < dsse_floor) {
        collapse_node(tree, id);
        changed = true;
      }
    }
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Prediction

/// Precomputed mapping from a dataset's columns to a tree's features.
class TreeEvaluator {
 public:
  TreeEvaluator(const Tree& tree, const SurrogateDataset& data)
      : tree_(&tree), data_(&data), map_(bind_columns(tree.spec, data)) {}

  FeatureValue value(std::size_t row, int feature) const {
    return detail::column_value(data_->features[static_cast<std::size_t>(map_[static_cast<std::size_t>(feature)])], row);
  }

  bool goes_left(const SplitRule& rule, std::size_t row) const {
    const auto& col = data_->features[static_cast<std::size_t>(map_[static_cast<std::size_t>(rule.feature)])];
    if (!rule.categorical) return col.numeric[row] <= rule.threshold;
    const auto& levels = tree_->spec.features[static_cast<std::size_t>(rule.feature)].levels;
    auto it = std::find(levels.begin(), levels.end(), col.labels[row]);
    return rule.goes_left_level(it == levels.end() ? -1 : static_cast<int>(it - levels.begin()));
  }

  /// Nodes visited from the root to the leaf, inclusive.
  std::vector<int> path(std::size_t row) const {
    std::vector<int> out;
    const TreeNode* n = &tree_->root();
    out.push_back(n->id);
    while (!n->is_leaf()) {
      n = &tree_->node(goes_left(*n->split, row) ? n->left : n->right);
      out.push_back(n->id);
    }
    return out;
  }

  int leaf(std::size_t row) const {
    const TreeNode* n = &tree_->root();
    while (!n->is_leaf()) n = &tree_->node(goes_left(*n->split, row) ? n->left : n->right);
    return n->id;
  }

  std::vector<FeatureValue> values(std::size_t row) const {
    std::vector<FeatureValue> v;
    v.reserve(map_.size());
    for (std::size_t j = 0; j < map_.size(); ++j) v.push_back(value(row, static_cast<int>(j)));
    return v;
  }

  /// Design row of one record in the tree's design.
  void sparse_row(std::size_t row, std::vector<int>& cols, std::vector<double>& vals) const {
    cols.assign(1, 0);
    vals.assign(1, 1.0);
    for (std::size_t j = 0; j < map_.size(); ++j) {
      detail::append_block(tree_->spec.features[j], tree_->spec.blocks[j],
                           value(row, static_cast<int>(j)), cols, vals, nullptr);
    }
  }

  double predict_with(const NodeModel& model, std::size_t row) const {
    std::vector<int> cols;
    std::vector<double> vals;
    sparse_row(row, cols, vals);
    double s = 0.0;
    for (std::size_t a = 0; a < cols.size(); ++a) s += model.coefficients[cols[a]] * vals[a];
    return s;
  }

  double predict(std::size_t row) const { return predict_with(tree_->node(leaf(row)).model, row); }

 private:
  const Tree* tree_;
  const SurrogateDataset* data_;
  std::vector<int> map_;
};

inline std::vector<double> predict(const Tree& tree, const SurrogateDataset& data) {
  TreeEvaluator ev(tree, data);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = ev.predict(i);
  return out;
}

/// Prediction for one record given by (name, value) pairs.
inline double predict(const Tree& tree, const Record& record) {
  SurrogateDataset one;
  for (std::size_t j = 0; j < record.names.size(); ++j) {
    FeatureColumn c;
    c.name = record.names[j];
    if (const double* x = std::get_if<double>(&record.values[j])) {
      c.kind = FeatureKind::continuous;
      c.numeric.push_back(*x);
    } else {
      c.kind = FeatureKind::categorical;
      c.labels.push_back(std::get<std::string>(record.values[j]));
    }
    one.features.push_back(std::move(c));
  }
  one.response.push_back(0.0);
  return TreeEvaluator(tree, one).predict(0);
}

}  // namespace slim
