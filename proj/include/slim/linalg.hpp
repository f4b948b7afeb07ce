#pragma once

// Gram-statistic accumulation and penalized least squares.
//
// Every node model in the tree is fitted from a GramStats object: the
// sufficient statistics X'X, X'y, y'y and the row count of the node's design
// rows. Column 0 of every design is the intercept, so the first row of X'X
// carries the column sums and the count; that is what lets the ridge solver
// center and scale the remaining columns without touching raw rows.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slim/error.hpp"

namespace slim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Sparse view of one design row: parallel arrays of column indices and
/// values. Column indices must be distinct.
struct SparseRowView {
  std::span<const int> cols;
  std::span<const double> vals;
};

struct GramStats {
  Matrix xtx;
  Vector xty;
  double yty = 0.0;
  std::int64_t count = 0;

  GramStats() = default;
  explicit GramStats(Index m) : xtx(Matrix::Zero(m, m)), xty(Vector::Zero(m)) {}

  Index dim() const { return xty.size(); }

  void add_row(const Eigen::Ref<const Vector>& row, double y) {
    if (row.size() != dim()) {
      throw DimensionError("gram row has " + std::to_string(row.size()) +
                           " columns, expected " + std::to_string(dim()));
    }
    xtx.noalias() += row * row.transpose();
    xty.noalias() += row * y;
    yty += y * y;
    ++count;
  }

  // Hot path of the split search; callers guarantee cols < dim().
  void add_row(const SparseRowView& row, double y) {
    const std::size_t nnz = row.cols.size();
    for (std::size_t a = 0; a < nnz; ++a) {
      const int ca = row.cols[a];
      const double va = row.vals[a];
      xty[ca] += va * y;
      for (std::size_t b = 0; b < nnz; ++b) {
        xtx(row.cols[b], ca) += va * row.vals[b];
      }
    }
    yty += y * y;
    ++count;
  }

  void set_zero() {
    xtx.setZero();
    xty.setZero();
    yty = 0.0;
    count = 0;
  }
};

namespace detail {

inline void require_same_dim(const GramStats& a, const GramStats& b,
                             const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()) + ")");
  }
}

}  // namespace detail

/// Accumulates X'X, X'y, y'y over the rows of `rows` (n x m).
inline GramStats gram_accumulate(const Eigen::Ref<const Matrix>& rows,
                                 const Eigen::Ref<const Vector>& responses) {
  if (rows.rows() != responses.size()) {
    throw DimensionError("gram_accumulate: " + std::to_string(rows.rows()) +
                         " rows but " + std::to_string(responses.size()) +
                         " responses");
  }
  GramStats g(rows.cols());
  for (Index i = 0; i < rows.rows(); ++i) g.add_row(rows.row(i).transpose(), responses[i]);
  return g;
}

inline GramStats gram_merge(const GramStats& a, const GramStats& b) {
  detail::require_same_dim(a, b, "gram_merge");
  GramStats out;
  out.xtx = a.xtx + b.xtx;
  out.xty = a.xty + b.xty;
  out.yty = a.yty + b.yty;
  out.count = a.count + b.count;
  return out;
}

/// In-place variant used by the cumulative threshold sweep.
inline void gram_merge_into(GramStats& acc, const GramStats& b) {
  detail::require_same_dim(acc, b, "gram_merge");
  acc.xtx += b.xtx;
  acc.xty += b.xty;
  acc.yty += b.yty;
  acc.count += b.count;
}

/// parent - part. A diagonal entry that cancels to within 1e-9 of the
/// parent's diagonal marks a column that is identically zero on the
/// remaining rows; its row and column are set to exact zeros.
inline GramStats gram_subtract(const GramStats& parent, const GramStats& part) {
  detail::require_same_dim(parent, part, "gram_subtract");
  if (part.count > parent.count) {
    throw ArgumentError("gram_subtract: part count " + std::to_string(part.count) +
                        " exceeds parent count " + std::to_string(parent.count));
  }
  GramStats out;
  out.count = parent.count - part.count;
  if (out.count == 0) {
    out.xtx = Matrix::Zero(parent.dim(), parent.dim());
    out.xty = Vector::Zero(parent.dim());
    return out;
  }
  out.xtx = parent.xtx - part.xtx;
  out.xty = parent.xty - part.xty;
  out.yty = std::max(0.0, parent.yty - part.yty);
  constexpr double kCancelTol = 1e-9;
  for (Index j = 0; j < out.dim(); ++j) {
    if (out.xtx(j, j) <= kCancelTol * std::max(parent.xtx(j, j), 0.0)) {
      out.xtx.row(j).setZero();
      out.xtx.col(j).setZero();
      out.xty[j] = 0.0;
    }
  }
  return out;
}

/// Symmetric eigendecomposition A = U' diag(d) U with the eigenvectors stored
/// as the ROWS of `rotation` and the spectrum sorted in descending order.
struct EigenFactor {
  Matrix rotation;
  Vector spectrum;
  // Eigenvalues at or below this value are null directions.
  double null_threshold = 0.0;

  Index dim() const { return spectrum.size(); }
  bool is_null(Index i) const { return spectrum[i] <= null_threshold; }
  Index rank() const {
    Index r = 0;
    for (Index i = 0; i < dim(); ++i) r += is_null(i) ? 0 : 1;
    return r;
  }
};

inline constexpr double kNullSpaceRelTol = 1e-10;

inline EigenFactor sym_eig(const Eigen::Ref<const Matrix>& a,
                           double rel_tol = kNullSpaceRelTol) {
  if (a.rows() != a.cols()) throw DimensionError("sym_eig: matrix is not square");
  EigenFactor f;
  const Index m = a.rows();
  if (m == 0) {
    f.rotation.resize(0, 0);
    f.spectrum.resize(0);
    return f;
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    const double scale = sym.cwiseAbs().maxCoeff();
    throw NumericalError("sym_eig: eigensolver did not converge (m=" +
                         std::to_string(m) + ", max|a|=" + std::to_string(scale) +
                         ", finite=" + (sym.allFinite() ? "yes" : "no") + ")");
  }
  // Eigen returns ascending eigenvalues with eigenvectors in columns.
  f.spectrum = solver.eigenvalues().reverse();
  f.rotation = solver.eigenvectors().rowwise().reverse().transpose();
  const double top = f.spectrum[0];
  f.null_threshold = top > 0.0 ? rel_tol * top : 0.0;
  return f;
}

/// Centered and unit-variance-scaled view of the non-intercept columns of a
/// gram. Columns with (numerically) zero variance on the node are inactive:
/// they get a zero coefficient.
struct StandardizedGram {
  std::vector<Index> active;
  Vector mean;   // per active column
  Vector scale;  // population standard deviation per active column
  Matrix cross;  // Z'Z, |active| x |active|
  Vector rhs;    // Z'(y - ybar)
  double y_mean = 0.0;
  double centered_yty = 0.0;
};

inline constexpr double kConstantColumnRelTol = 1e-10;

inline StandardizedGram standardize(const GramStats& g) {
  if (g.count <= 0) throw NumericalError("cannot fit a model on an empty node");
  if (g.dim() < 1) throw DimensionError("design must contain the intercept column");
  if (!g.xtx.allFinite() || !g.xty.allFinite() || !std::isfinite(g.yty)) {
    throw NumericalError("sufficient statistics overflowed; rescale the response or features");
  }
  const double n = static_cast<double>(g.count);
  if (std::abs(g.xtx(0, 0) - n) > 1e-9 * n) {
    throw DimensionError("column 0 of the design is not an intercept");
  }
  StandardizedGram s;
  s.y_mean = g.xty[0] / n;
  s.centered_yty = std::max(0.0, g.yty - n * s.y_mean * s.y_mean);

  std::vector<double> means, scales;
  for (Index j = 1; j < g.dim(); ++j) {
    const double raw = g.xtx(j, j);
    if (!(raw > 0.0)) continue;
    const double mu = g.xtx(0, j) / n;
    const double centered = raw - n * mu * mu;
    if (centered <= kConstantColumnRelTol * raw) continue;
    s.active.push_back(j);
    means.push_back(mu);
    scales.push_back(std::sqrt(centered / n));
  }
  const Index q = static_cast<Index>(s.active.size());
  s.mean = Eigen::Map<const Vector>(means.data(), q);
  s.scale = Eigen::Map<const Vector>(scales.data(), q);
  s.cross.resize(q, q);
  s.rhs.resize(q);
  for (Index a = 0; a < q; ++a) {
    const Index ja = s.active[a];
    s.rhs[a] = (g.xty[ja] - n * s.mean[a] * s.y_mean) / s.scale[a];
    for (Index b = 0; b <= a; ++b) {
      const Index jb = s.active[b];
      const double c = (g.xtx(ja, jb) - n * s.mean[a] * s.mean[b]) /
                       (s.scale[a] * s.scale[b]);
      s.cross(a, b) = c;
      s.cross(b, a) = c;
    }
  }
  return s;
}

struct NodeModel {
  Vector coefficients;
  double sse = 0.0;
  double r2 = 0.0;
  double effective_df = 1.0;
  double lambda = 0.0;
  std::int64_t count = 0;
};

/// max(0, y'y - 2 b'X'y + b'X'Xb).
inline double sse_from_gram(const GramStats& g, const Eigen::Ref<const Vector>& beta) {
  if (beta.size() != g.dim()) {
    throw DimensionError("sse_from_gram: coefficient length " +
                         std::to_string(beta.size()) + " vs gram dimension " +
                         std::to_string(g.dim()));
  }
  const double v = g.yty - 2.0 * beta.dot(g.xty) + beta.dot(g.xtx * beta);
  return std::max(0.0, v);
}

/// sse / (n (1 - df/n)^2).
inline double gcv_loss(double sse, std::int64_t count, double effective_df) {
  const double n = static_cast<double>(count);
  if (!(effective_df < n)) {
    throw NumericalError("gcv_loss: effective df " + std::to_string(effective_df) +
                         " >= count " + std::to_string(count) + " (saturated model)");
  }
  const double shrink = 1.0 - effective_df / n;
  return sse / (n * shrink * shrink);
}

namespace detail {

inline NodeModel ridge_from_standardized(const GramStats& g, const StandardizedGram& s,
                                         const EigenFactor& f, double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("ridge_solve: lambda must be >= 0");
  const Index q = static_cast<Index>(s.active.size());
  if (f.dim() != q) {
    throw DimensionError("ridge_solve: factor has dimension " + std::to_string(f.dim()) +
                         " but the standardized block has " + std::to_string(q));
  }
  NodeModel model;
  model.lambda = lambda;
  model.count = g.count;
  model.coefficients = Vector::Zero(g.dim());

  Vector gamma = Vector::Zero(q);
  double df = 1.0;
  if (q > 0) {
    Vector proj = f.rotation * s.rhs;
    for (Index i = 0; i < q; ++i) {
      if (f.is_null(i)) {
        proj[i] = 0.0;
        continue;
      }
      const double d = f.spectrum[i];
      proj[i] /= d + lambda;
      df += d / (d + lambda);
    }
    gamma = f.rotation.transpose() * proj;
  }
  double intercept = s.y_mean;
  for (Index a = 0; a < q; ++a) {
    const double beta = gamma[a] / s.scale[a];
    model.coefficients[s.active[a]] = beta;
    intercept -= beta * s.mean[a];
  }
  model.coefficients[0] = intercept;
  model.effective_df = df;
  model.sse = sse_from_gram(g, model.coefficients);

  // Squared correlation between responses and fitted values.
  if (s.centered_yty <= 1e-14 * std::max(g.yty, 1e-300)) {
    model.r2 = 1.0;
  } else if (q == 0) {
    model.r2 = 0.0;
  } else {
    const double cov = gamma.dot(s.rhs);
    const double var_fit = gamma.dot(s.cross * gamma);
    model.r2 = var_fit > 0.0
                   ? std::clamp(cov * cov / (var_fit * s.centered_yty), 0.0, 1.0)
                   : 0.0;
  }
  return model;
}

}  // namespace detail

/// Ridge fit with an unpenalized intercept. `factor` must be the
/// decomposition of standardize(gram).cross; coefficients come back on the
/// original column scale.
inline NodeModel ridge_solve(const GramStats& gram, const EigenFactor& factor,
                             double lambda) {
  return detail::ridge_from_standardized(gram, standardize(gram), factor, lambda);
}

/// Standardizes once, decomposes once, and fits every lambda in `lambdas`,
/// keeping the one with the smallest GCV loss (first wins on ties). Lambdas
/// for which the model is saturated are skipped; if all are, the first fit
/// is returned with `saturated` set.
struct RidgeFit {
  NodeModel model;
  bool saturated = false;
};

inline RidgeFit fit_ridge(const GramStats& gram, std::span<const double> lambdas) {
  if (lambdas.empty()) throw ArgumentError("fit_ridge: empty lambda grid");
  const StandardizedGram s = standardize(gram);
  const EigenFactor f = sym_eig(s.cross);
  RidgeFit best;
  double best_loss = 0.0;
  bool have = false;
  for (double lambda : lambdas) {
    NodeModel m = detail::ridge_from_standardized(gram, s, f, lambda);
    if (!(m.effective_df < static_cast<double>(m.count))) {
      if (!have && !best.saturated) {
        best.model = std::move(m);
        best.saturated = true;
      }
      continue;
    }
    const double loss = gcv_loss(m.sse, m.count, m.effective_df);
    if (!have || loss < best_loss) {
      best.model = std::move(m);
      best.saturated = false;
      best_loss = loss;
      have = true;
    }
  }
  return best;
}

inline NodeModel fit_ridge(const GramStats& gram, double lambda) {
  const double grid[1] = {lambda};
  return fit_ridge(gram, grid).model;
}

}  // namespace slim
