#pragma once

// Run configuration shared by the CLI and the saved model. Every field has
// a flat key; the same keys are accepted in a config file (`key = value`,
// one per line, `#` comments) and, with dashes for underscores, as CLI flags.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "slim/basis.hpp"
#include "slim/dataset.hpp"
#include "slim/diagnostics.hpp"
#include "slim/error.hpp"
#include "slim/io/csv.hpp"
#include "slim/io/format.hpp"
#include "slim/tree.hpp"

namespace slim::io {

struct RunConfig {
  // data schema
  std::string response = "y_s";
  std::string original;
  std::string tag;
  std::vector<std::string> features;
  std::vector<std::string> categorical;
  ResponseTransform transform = ResponseTransform::identity;
  TaskKind task = TaskKind::continuous;

  // design
  int knots = 15;
  std::map<std::string, int> knots_per_feature;
  BasisKind basis = BasisKind::spline;

  // growth
  GrowConfig grow;

  // pruning; both unset means no pruning
  std::optional<double> prune_r2;
  std::optional<double> prune_dsse_fraction;

  double l1_lambda = 0.0;  // 0 disables the lasso refit

  // train/test split when no tag column is given
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 1;

  DesignOptions design_options() const {
    DesignOptions o;
    o.num_knots = knots;
    o.knots_per_feature = knots_per_feature;
    o.continuous_basis = basis;
    o.selected = features;
    return o;
  }

  CsvSchema schema() const {
    CsvSchema s;
    s.response = response;
    s.original = original;
    s.tag = tag;
    s.features = features;
    s.categorical = categorical;
    s.transform = transform;
    return s;
  }

  bool prunes() const { return prune_r2.has_value() || prune_dsse_fraction.has_value(); }

  void validate() const {
    if (response.empty()) throw ArgumentError("response column name must not be empty");
    if (knots < 2) throw ArgumentError("knots must be >= 2");
    for (const auto& [name, k] : knots_per_feature) {
      if (k < 2) throw ArgumentError("knots for '" + name + "' must be >= 2");
    }
    if (basis == BasisKind::onehot) throw ArgumentError("basis must be spline or linear");
    if (prune_r2 && !(*prune_r2 >= 0.0 && *prune_r2 <= 1.0)) {
      throw ArgumentError("prune_r2 must lie in [0, 1]");
    }
    if (prune_dsse_fraction && !(*prune_dsse_fraction >= 0.0 && *prune_dsse_fraction <= 1.0)) {
      throw ArgumentError("prune_dsse_fraction must lie in [0, 1]");
    }
    if (!(l1_lambda >= 0.0) || !std::isfinite(l1_lambda)) {
      throw ArgumentError("l1_lambda must be finite and >= 0");
    }
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
      throw ArgumentError("train_fraction must lie in (0, 1]");
    }
    if (grow.threads < 1) throw ArgumentError("threads must be >= 1");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

inline double to_number(const std::string& key, const std::string& value) {
  auto v = parse_double(value);
  if (!v || !std::isfinite(*v)) throw ArgumentError(key + ": '" + value + "' is not a number");
  return *v;
}

inline int to_int(const std::string& key, const std::string& value) {
  const double v = to_number(key, value);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ArgumentError(key + ": '" + value + "' is not an integer");
  }
  return static_cast<int>(v);
}

}  // namespace detail

/// Keys in the order they are documented and written.
inline const std::vector<std::pair<std::string, std::string>>& run_config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"response", "surrogate response column"},
      {"original", "original response column (enables accuracy metrics)"},
      {"tag", "train/test tag column (values train/test)"},
      {"features", "comma-separated feature columns (default: all others)"},
      {"categorical", "comma-separated categorical feature columns"},
      {"transform", "response transform: identity | logit"},
      {"task", "original response type: continuous | binary"},
      {"knots", "spline knots per continuous feature"},
      {"knots_per_feature", "per-feature knot counts, name:k,..."},
      {"basis", "continuous basis: spline | linear"},
      {"max_depth", "maximum tree depth"},
      {"min_samples_leaf", "minimum rows per child (0: max(2m, 30))"},
      {"lambda", "ridge penalty, or comma-separated grid chosen by GCV"},
      {"num_bins", "candidate split bins per continuous feature"},
      {"loss", "split loss: gcv | sse"},
      {"min_gain", "minimum loss reduction for a split"},
      {"exhaustive_category_limit", "largest level count searched exhaustively"},
      {"prune_r2", "prune when node R2 >= this"},
      {"prune_dsse_fraction", "prune when dsse < this fraction of root SSE"},
      {"l1_lambda", "lasso refit penalty for leaves (0: off)"},
      {"train_fraction", "training share when no tag column is given"},
      {"seed", "seed for the train/test permutation"},
      {"threads", "worker threads for split search"},
  };
  return keys;
}

/// Sets one field from its textual value.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string value = trim(raw);
  if (key == "response") {
    c.response = value;
  } else if (key == "original") {
    c.original = value;
  } else if (key == "tag") {
    c.tag = value;
  } else if (key == "features") {
    c.features = split_list(value);
  } else if (key == "categorical") {
    c.categorical = split_list(value);
  } else if (key == "transform") {
    c.transform = transform_from_string(value);
  } else if (key == "task") {
    if (value == "continuous") {
      c.task = TaskKind::continuous;
    } else if (value == "binary") {
      c.task = TaskKind::binary;
    } else {
      throw ArgumentError("task must be continuous or binary, got '" + value + "'");
    }
  } else if (key == "knots") {
    c.knots = to_int(key, value);
  } else if (key == "knots_per_feature") {
    c.knots_per_feature.clear();
    for (const auto& item : split_list(value)) {
      const auto colon = item.rfind(':');
      if (colon == std::string::npos) throw ArgumentError("knots_per_feature: expected name:k, got '" + item + "'");
      c.knots_per_feature[trim(item.substr(0, colon))] = to_int(key, item.substr(colon + 1));
    }
  } else if (key == "basis") {
    c.basis = basis_kind_from_string(value);
  } else if (key == "max_depth") {
    c.grow.max_depth = to_int(key, value);
  } else if (key == "min_samples_leaf") {
    c.grow.min_samples_leaf = to_int(key, value);
  } else if (key == "lambda") {
    c.grow.lambdas.clear();
    for (const auto& item : split_list(value)) c.grow.lambdas.push_back(to_number(key, item));
  } else if (key == "num_bins") {
    c.grow.num_bins = to_int(key, value);
  } else if (key == "loss") {
    c.grow.loss = loss_kind_from_string(value);
  } else if (key == "min_gain") {
    c.grow.min_gain = to_number(key, value);
  } else if (key == "exhaustive_category_limit") {
    c.grow.exhaustive_category_limit = to_int(key, value);
  } else if (key == "prune_r2") {
    c.prune_r2 = to_number(key, value);
  } else if (key == "prune_dsse_fraction") {
    c.prune_dsse_fraction = to_number(key, value);
  } else if (key == "l1_lambda") {
    c.l1_lambda = to_number(key, value);
  } else if (key == "train_fraction") {
    c.train_fraction = to_number(key, value);
  } else if (key == "seed") {
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size()) {
      throw ArgumentError("seed must be a non-negative integer, got '" + value + "'");
    }
    c.seed = v;
  } else if (key == "threads") {
    c.grow.threads = to_int(key, value);
  } else {
    throw ArgumentError("unknown setting '" + key + "'");
  }
}

/// Textual value of every key, as accepted back by apply_setting.
inline std::map<std::string, std::string> settings_of(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["response"] = c.response;
  m["original"] = c.original;
  m["tag"] = c.tag;
  m["features"] = detail::join(c.features);
  m["categorical"] = detail::join(c.categorical);
  m["transform"] = to_string(c.transform);
  m["task"] = c.task == TaskKind::continuous ? "continuous" : "binary";
  m["knots"] = std::to_string(c.knots);
  std::vector<std::string> kpf;
  for (const auto& [name, k] : c.knots_per_feature) kpf.push_back(name + ":" + std::to_string(k));
  m["knots_per_feature"] = detail::join(kpf);
  m["basis"] = to_string(c.basis);
  m["max_depth"] = std::to_string(c.grow.max_depth);
  m["min_samples_leaf"] = std::to_string(c.grow.min_samples_leaf);
  std::vector<std::string> lambdas;
  for (double l : c.grow.lambdas) lambdas.push_back(format_double(l));
  m["lambda"] = detail::join(lambdas);
  m["num_bins"] = std::to_string(c.grow.num_bins);
  m["loss"] = to_string(c.grow.loss);
  m["min_gain"] = format_double(c.grow.min_gain);
  m["exhaustive_category_limit"] = std::to_string(c.grow.exhaustive_category_limit);
  if (c.prune_r2) m["prune_r2"] = format_double(*c.prune_r2);
  if (c.prune_dsse_fraction) m["prune_dsse_fraction"] = format_double(*c.prune_dsse_fraction);
  m["l1_lambda"] = format_double(c.l1_lambda);
  m["train_fraction"] = format_double(c.train_fraction);
  m["seed"] = std::to_string(c.seed);
  m["threads"] = std::to_string(c.grow.threads);
  return m;
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_settings(std::istream& in,
                                                                       const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    out.emplace_back(key, detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file '" + path + "'");
  for (const auto& [key, value] : parse_settings(in, path)) {
    try {
      apply_setting(c, key, value);
    } catch (const ArgumentError& e) {
      throw ArgumentError(path + ": " + e.what());
    }
  }
}

/// Train and test row indices, both ascending.
struct RowSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Uses the dataset's tags when present; otherwise a seeded permutation puts
/// round(train_fraction * n) rows in training.
inline RowSplit split_rows(const SurrogateDataset& d, double train_fraction, std::uint64_t seed) {
  RowSplit out;
  const std::size_t n = d.size();
  if (d.tags) {
    for (std::size_t i = 0; i < n; ++i) {
      ((*d.tags)[i] == Partition::train ? out.train : out.test).push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const std::size_t n_test = n - std::min(n, n_train);
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace slim::io
