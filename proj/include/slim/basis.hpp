#pragma once

// Main-effects design shared by every node of a tree: degree-1 B-splines on
// quantile knots for continuous features, reference-coded indicators for
// categorical features, optionally the raw value. Column 0 is the intercept.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slim/dataset.hpp"
#include "slim/error.hpp"
#include "slim/linalg.hpp"

namespace slim {

/// Midpoint quantile of sorted data at level num/den: the order statistic at
/// position num*(n-1)/den, or the average of the two neighbours when that
/// position is fractional. Positions are computed in integer arithmetic.
inline double midpoint_quantile_sorted(std::span<const double> sorted,
                                       std::int64_t num, std::int64_t den) {
  const auto n = static_cast<std::int64_t>(sorted.size());
  const std::int64_t scaled = num * (n - 1);
  const std::int64_t lo = scaled / den;
  const std::int64_t hi = lo + (scaled % den != 0 ? 1 : 0);
  return 0.5 * (sorted[static_cast<std::size_t>(lo)] + sorted[static_cast<std::size_t>(hi)]);
}

inline std::vector<double> sorted_finite_copy(std::span<const double> values,
                                              const char* who) {
  std::vector<double> v(values.begin(), values.end());
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(std::string(who) + ": non-finite value");
  }
  std::sort(v.begin(), v.end());
  return v;
}

struct KnotVector {
  int feature = -1;
  std::vector<double> knots;
};

/// Knots at the midpoint quantiles 0, 1/(K-1), ..., 1, exact duplicates
/// removed.
inline KnotVector quantile_knots(std::span<const double> values, int num_knots) {
  if (num_knots < 2) throw ArgumentError("quantile_knots: num_knots must be >= 2");
  if (values.empty()) throw DataError("quantile_knots: no values");
  const auto sorted = sorted_finite_copy(values, "quantile_knots");
  if (sorted.front() == sorted.back()) {
    throw ConstantFeatureError("quantile_knots: feature is constant");
  }
  KnotVector kv;
  kv.knots.reserve(static_cast<std::size_t>(num_knots));
  for (int k = 0; k < num_knots; ++k) {
    const double q = midpoint_quantile_sorted(sorted, k, num_knots - 1);
    if (kv.knots.empty() || q > kv.knots.back()) kv.knots.push_back(q);
  }
  return kv;
}

/// Index of the hat function interval containing x: returns k such that
/// knots[k] <= x < knots[k+1], clamped to the boundary.
namespace detail {
inline std::size_t knot_interval(std::span<const double> knots, double x) {
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  std::size_t k = static_cast<std::size_t>(it - knots.begin());
  return k == 0 ? 0 : k - 1;
}
}  // namespace detail

/// Degree-1 B-spline values, one per knot. Outside the knot range the
/// boundary basis value is held constant.
inline Vector spline_row(double x, const KnotVector& kv) {
  const auto& t = kv.knots;
  Vector out = Vector::Zero(static_cast<Index>(t.size()));
  if (t.empty()) return out;
  if (x <= t.front()) {
    out[0] = 1.0;
    return out;
  }
  if (x >= t.back()) {
    out[static_cast<Index>(t.size() - 1)] = 1.0;
    return out;
  }
  const std::size_t k = detail::knot_interval(t, x);
  const double w = (x - t[k]) / (t[k + 1] - t[k]);
  out[static_cast<Index>(k)] = 1.0 - w;
  out[static_cast<Index>(k + 1)] = w;
  return out;
}

/// Reference-coded indicator of `value` against `levels` (first level
/// dropped). An unseen value gives the all-zero row; `unseen` is set.
inline Vector onehot_row(const std::string& value, const std::vector<std::string>& levels,
                         bool* unseen = nullptr) {
  Vector out = Vector::Zero(levels.empty() ? 0 : static_cast<Index>(levels.size() - 1));
  if (unseen) *unseen = false;
  auto it = std::find(levels.begin(), levels.end(), value);
  if (it == levels.end()) {
    if (unseen) *unseen = true;
    return out;
  }
  const auto pos = it - levels.begin();
  if (pos > 0) out[static_cast<Index>(pos - 1)] = 1.0;
  return out;
}

enum class BasisKind { spline, onehot, linear };

inline const char* to_string(BasisKind k) {
  switch (k) {
    case BasisKind::spline: return "spline";
    case BasisKind::onehot: return "onehot";
    case BasisKind::linear: return "linear";
  }
  return "?";
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "spline") return BasisKind::spline;
  if (s == "onehot") return BasisKind::onehot;
  if (s == "linear") return BasisKind::linear;
  throw ArgumentError("unknown basis kind '" + s + "'");
}

struct BasisBlock {
  int feature = -1;
  BasisKind kind = BasisKind::spline;
  int first_column = 1;
  int width = 0;

  int end_column() const { return first_column + width; }
};

/// Everything needed to turn a raw record into a design row.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  KnotVector knots;                 // spline blocks
  std::vector<std::string> levels;  // onehot blocks; levels[0] is the reference
  double min = 0.0;                 // root training range (continuous)
  double max = 0.0;
};

struct DesignSpec {
  std::vector<FeatureSpec> features;  // index = feature id
  std::vector<BasisBlock> blocks;     // blocks[j] belongs to features[j]
  int total_columns = 1;
  std::vector<std::string> dropped;   // constant columns excluded from the model

  std::size_t num_features() const { return features.size(); }

  int find_feature(const std::string& name) const {
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j].name == name) return static_cast<int>(j);
    }
    return -1;
  }

  /// Checks the partition of columns 1..m-1 by blocks.
  void validate() const {
    if (blocks.size() != features.size()) {
      throw DataError("design spec: one block per feature required");
    }
    int next = 1;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      const auto& b = blocks[j];
      if (b.feature != static_cast<int>(j) || b.first_column != next || b.width <= 0) {
        throw DataError("design spec: blocks do not partition the design columns");
      }
      const auto& f = features[j];
      const bool ok = (b.kind == BasisKind::spline &&
                       b.width == static_cast<int>(f.knots.knots.size()) &&
                       f.kind == FeatureKind::continuous) ||
                      (b.kind == BasisKind::linear && b.width == 1 &&
                       f.kind == FeatureKind::continuous) ||
                      (b.kind == BasisKind::onehot &&
                       b.width + 1 == static_cast<int>(f.levels.size()) &&
                       f.kind == FeatureKind::categorical);
      if (!ok) throw DataError("design spec: block for '" + f.name + "' is inconsistent");
      next += b.width;
    }
    if (next != total_columns) throw DataError("design spec: total column count mismatch");
  }
};

/// Sorts category labels numerically when all parse as numbers, otherwise
/// lexicographically.
inline std::vector<std::string> sorted_levels(std::vector<std::string> levels) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto as_number = [](const std::string& s) -> std::optional<double> {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
  };
  bool numeric = !levels.empty();
  for (const auto& l : levels) numeric = numeric && as_number(l).has_value();
  if (numeric) {
    std::stable_sort(levels.begin(), levels.end(), [&](const auto& a, const auto& b) {
      return *as_number(a) < *as_number(b);
    });
  }
  return levels;
}

struct DesignOptions {
  int num_knots = 15;
  std::map<std::string, int> knots_per_feature;
  BasisKind continuous_basis = BasisKind::spline;
  std::vector<std::string> selected;  // empty = every dataset feature
};

/// Builds the design from ROOT training data. Constant features are dropped
/// (recorded in `dropped`) rather than failing the build.
inline DesignSpec make_design_spec(const SurrogateDataset& data, const DesignOptions& opt) {
  data.validate();
  std::vector<int> columns;
  if (opt.selected.empty()) {
    for (std::size_t j = 0; j < data.features.size(); ++j) columns.push_back(static_cast<int>(j));
  } else {
    for (const auto& name : opt.selected) {
      const int j = data.find_feature(name);
      if (j < 0) throw DataError("selected feature '" + name + "' is not in the dataset");
      columns.push_back(j);
    }
  }
  DesignSpec spec;
  int next = 1;
  for (int col : columns) {
    const auto& src = data.features[static_cast<std::size_t>(col)];
    FeatureSpec fs;
    fs.name = src.name;
    fs.kind = src.kind;
    BasisBlock block;
    block.feature = static_cast<int>(spec.features.size());
    block.first_column = next;
    if (src.kind == FeatureKind::continuous) {
      if (src.numeric.empty()) throw DataError("empty dataset");
      const auto [lo, hi] = std::minmax_element(src.numeric.begin(), src.numeric.end());
      if (*lo == *hi) {
        spec.dropped.push_back(src.name);
        continue;
      }
      fs.min = *lo;
      fs.max = *hi;
      if (opt.continuous_basis == BasisKind::linear) {
        block.kind = BasisKind::linear;
        block.width = 1;
      } else {
        auto it = opt.knots_per_feature.find(src.name);
        const int k = it == opt.knots_per_feature.end() ? opt.num_knots : it->second;
        fs.knots = quantile_knots(src.numeric, k);
        fs.knots.feature = block.feature;
        block.kind = BasisKind::spline;
        block.width = static_cast<int>(fs.knots.knots.size());
      }
    } else {
      fs.levels = sorted_levels(src.labels);
      if (fs.levels.size() < 2) {
        spec.dropped.push_back(src.name);
        continue;
      }
      block.kind = BasisKind::onehot;
      block.width = static_cast<int>(fs.levels.size()) - 1;
    }
    next += block.width;
    spec.features.push_back(std::move(fs));
    spec.blocks.push_back(block);
  }
  spec.total_columns = next;
  return spec;
}

/// Compressed sparse rows of a design matrix.
struct DesignMatrix {
  int columns = 0;
  std::vector<std::size_t> row_start{0};
  std::vector<int> cols;
  std::vector<double> vals;

  std::size_t rows() const { return row_start.size() - 1; }

  SparseRowView row(std::size_t i) const {
    const std::size_t b = row_start[i], e = row_start[i + 1];
    return {std::span<const int>(cols.data() + b, e - b),
            std::span<const double>(vals.data() + b, e - b)};
  }

  Vector dense_row(std::size_t i) const {
    Vector out = Vector::Zero(columns);
    auto r = row(i);
    for (std::size_t a = 0; a < r.cols.size(); ++a) out[r.cols[a]] = r.vals[a];
    return out;
  }

  Matrix to_dense() const {
    Matrix out = Matrix::Zero(static_cast<Index>(rows()), columns);
    for (std::size_t i = 0; i < rows(); ++i) out.row(static_cast<Index>(i)) = dense_row(i).transpose();
    return out;
  }
};

/// Maps each spec feature to a dataset column, checking names and kinds.
inline std::vector<int> bind_columns(const DesignSpec& spec, const SurrogateDataset& data) {
  std::vector<int> map;
  map.reserve(spec.features.size());
  for (const auto& f : spec.features) {
    const int j = data.find_feature(f.name);
    if (j < 0) throw DataError("dataset is missing model feature '" + f.name + "'");
    if (data.features[static_cast<std::size_t>(j)].kind != f.kind) {
      throw DataError("feature '" + f.name + "' is " +
                      to_string(data.features[static_cast<std::size_t>(j)].kind) +
                      " in the dataset but " + to_string(f.kind) + " in the model");
    }
    map.push_back(j);
  }
  return map;
}

namespace detail {

// Appends the nonzero entries of one feature's block.
inline void append_block(const FeatureSpec& f, const BasisBlock& b, const FeatureValue& v,
                         std::vector<int>& cols, std::vector<double>& vals, bool* unseen) {
  switch (b.kind) {
    case BasisKind::linear:
      cols.push_back(b.first_column);
      vals.push_back(std::get<double>(v));
      return;
    case BasisKind::spline: {
      const double x = std::get<double>(v);
      const auto& t = f.knots.knots;
      if (x <= t.front()) {
        cols.push_back(b.first_column);
        vals.push_back(1.0);
      } else if (x >= t.back()) {
        cols.push_back(b.end_column() - 1);
        vals.push_back(1.0);
      } else {
        const std::size_t k = knot_interval(t, x);
        const double w = (x - t[k]) / (t[k + 1] - t[k]);
        if (w < 1.0) {
          cols.push_back(b.first_column + static_cast<int>(k));
          vals.push_back(1.0 - w);
        }
        if (w > 0.0) {
          cols.push_back(b.first_column + static_cast<int>(k) + 1);
          vals.push_back(w);
        }
      }
      return;
    }
    case BasisKind::onehot: {
      const auto& s = std::get<std::string>(v);
      auto it = std::find(f.levels.begin(), f.levels.end(), s);
      if (it == f.levels.end()) {
        if (unseen) *unseen = true;
        return;
      }
      const auto pos = static_cast<int>(it - f.levels.begin());
      if (pos > 0) {
        cols.push_back(b.first_column + pos - 1);
        vals.push_back(1.0);
      }
      return;
    }
  }
}

inline FeatureValue column_value(const FeatureColumn& c, std::size_t row) {
  if (c.kind == FeatureKind::continuous) return c.numeric[row];
  return c.labels[row];
}

}  // namespace detail

/// Dense design row (length m) for one block-ordered set of feature values.
inline Vector design_row(const DesignSpec& spec, std::span<const FeatureValue> values,
                         bool* unseen = nullptr) {
  if (values.size() != spec.features.size()) {
    throw DataError("record has " + std::to_string(values.size()) + " model features, expected " +
                    std::to_string(spec.features.size()));
  }
  std::vector<int> cols{0};
  std::vector<double> vals{1.0};
  if (unseen) *unseen = false;
  for (std::size_t j = 0; j < spec.features.size(); ++j) {
    detail::append_block(spec.features[j], spec.blocks[j], values[j], cols, vals, unseen);
  }
  Vector out = Vector::Zero(spec.total_columns);
  for (std::size_t a = 0; a < cols.size(); ++a) out[cols[a]] = vals[a];
  return out;
}

/// Streams the design rows of `data` in dataset order. `unseen_rows`
/// receives the indices of rows carrying a category absent from the spec.
inline DesignMatrix build_design(const SurrogateDataset& data, const DesignSpec& spec,
                                 std::vector<std::size_t>* unseen_rows = nullptr) {
  const auto map = bind_columns(spec, data);
  DesignMatrix dm;
  dm.columns = spec.total_columns;
  const std::size_t n = data.size();
  dm.row_start.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    dm.cols.push_back(0);
    dm.vals.push_back(1.0);
    bool unseen = false;
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
      const auto& col = data.features[static_cast<std::size_t>(map[j])];
      detail::append_block(spec.features[j], spec.blocks[j], detail::column_value(col, i),
                           dm.cols, dm.vals, &unseen);
    }
    if (unseen && unseen_rows) unseen_rows->push_back(i);
    dm.row_start.push_back(dm.cols.size());
  }
  return dm;
}

}  // namespace slim
