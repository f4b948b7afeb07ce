#pragma once

// Optional final stage: replace each leaf's ridge coefficients by a lasso
// fit on the leaf's rows, leaving the tree structure untouched.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "slim/basis.hpp"
#include "slim/linalg.hpp"
#include "slim/tree.hpp"

namespace slim {

struct LassoResult {
  NodeModel model;
  bool converged = false;
  int passes = 0;
};

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Lasso on the standardized non-intercept columns of `g` by cyclic
/// coordinate descent on the covariance form. Minimizes
///   (1/2n) ||y - b0 - Z gamma||^2 + lambda1 ||gamma||_1
/// with the intercept unpenalized, then maps back to the original scale.
inline LassoResult lasso_from_gram(const GramStats& g, double lambda1, double tol = 1e-7,
                                   int max_passes = -1) {
  if (!(lambda1 >= 0.0)) throw ArgumentError("lasso: lambda1 must be >= 0");
  const StandardizedGram s = standardize(g);
  const Index q = static_cast<Index>(s.active.size());
  const double n = static_cast<double>(g.count);
  if (max_passes < 0) max_passes = 1000 * static_cast<int>(g.dim());
  const Matrix c = s.cross / n;
  const Vector r = s.rhs / n;

  Vector gamma = Vector::Zero(q);
  Vector cg = Vector::Zero(q);  // c * gamma, kept current
  LassoResult out;
  for (int pass = 0; pass < max_passes && q > 0; ++pass) {
    double max_change = 0.0;
    for (Index j = 0; j < q; ++j) {
      const double cjj = c(j, j);
      const double partial = r[j] - cg[j] + cjj * gamma[j];
      const double updated = soft_threshold(partial, lambda1) / cjj;
      const double delta = updated - gamma[j];
      if (delta != 0.0) {
        cg.noalias() += c.col(j) * delta;
        gamma[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    out.passes = pass + 1;
    if (max_change < tol) {
      out.converged = true;
      break;
    }
  }
  if (q == 0) out.converged = true;

  NodeModel& m = out.model;
  m.count = g.count;
  m.coefficients = Vector::Zero(g.dim());
  double intercept = s.y_mean;
  int nonzero = 0;
  for (Index a = 0; a < q; ++a) {
    const double beta = gamma[a] / s.scale[a];
    m.coefficients[s.active[a]] = beta;
    intercept -= beta * s.mean[a];
    nonzero += gamma[a] != 0.0 ? 1 : 0;
  }
  m.coefficients[0] = intercept;
  m.sse = sse_from_gram(g, m.coefficients);
  m.effective_df = 1.0 + nonzero;
  if (s.centered_yty <= 1e-14 * std::max(g.yty, 1e-300)) {
    m.r2 = 1.0;
  } else {
    const double cov = gamma.dot(s.rhs);
    const double var_fit = gamma.dot(s.cross * gamma);
    m.r2 = var_fit > 0.0 ? std::clamp(cov * cov / (var_fit * s.centered_yty), 0.0, 1.0) : 0.0;
  }
  return out;
}

/// Lasso refit of every leaf. Leaves whose coordinate descent does not
/// converge keep their ridge coefficients and get `l1_failed` set.
inline Tree refit_l1(const Tree& input, const SurrogateDataset& data, double lambda1) {
  if (!(lambda1 >= 0.0)) throw ArgumentError("refit_l1: lambda1 must be >= 0");
  Tree tree = input;
  TreeEvaluator ev(tree, data);
  std::vector<GramStats> grams;
  std::vector<int> leaves = tree.leaf_ids();
  grams.reserve(leaves.size());
  for (std::size_t k = 0; k < leaves.size(); ++k) grams.emplace_back(tree.spec.total_columns);
  std::vector<int> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int leaf = ev.leaf(i);
    const auto k = static_cast<std::size_t>(
        std::lower_bound(leaves.begin(), leaves.end(), leaf) - leaves.begin());
    ev.sparse_row(i, cols, vals);
    grams[k].add_row(SparseRowView{cols, vals}, data.response[i]);
  }
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    TreeNode& node = tree.node(leaves[k]);
    if (grams[k].count == 0) {
      node.l1_failed = true;
      continue;
    }
    LassoResult res = lasso_from_gram(grams[k], lambda1);
    if (!res.converged) {
      node.l1_failed = true;
      continue;
    }
    res.model.lambda = node.model.lambda;
    node.model = std::move(res.model);
    node.effect_means = detail::block_effect_means(tree.spec, grams[k], node.model.coefficients);
    node.l1_failed = false;
  }
  tree.l1_lambda = lambda1;
  return tree;
}

}  // namespace slim
