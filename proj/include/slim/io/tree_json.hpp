#pragma once

// Versioned JSON model file. It holds the design (knots, levels, ranges),
// every node with its split and coefficients, and the run configuration,
// so predictions can be reproduced from the file alone. Doubles are written
// in shortest round-trip form; non-finite values are stored as strings.

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slim/basis.hpp"
#include "slim/error.hpp"
#include "slim/io/run_config.hpp"
#include "slim/tree.hpp"

namespace slim::io {

inline constexpr const char* kTreeFormat = "slim-tree";
inline constexpr int kTreeFormatVersion = 1;

using Json = nlohmann::json;

struct SavedModel {
  Tree tree;
  RunConfig run;
};

namespace detail {

inline Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number(const Json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw DataError(std::string("model file: '") + what + "' is not a number");
}

inline const Json& field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(std::string("model file: missing field '") + key + "'");
  }
  return obj.at(key);
}

template <class T>
T get(const Json& obj, const char* key) {
  try {
    return field(obj, key).get<T>();
  } catch (const Json::exception&) {
    throw DataError(std::string("model file: field '") + key + "' has the wrong type");
  }
}

inline Json feature_to_json(const FeatureSpec& f, const BasisBlock& b) {
  Json j;
  j["name"] = f.name;
  j["kind"] = f.kind == FeatureKind::continuous ? "continuous" : "categorical";
  j["basis"] = to_string(b.kind);
  j["first_column"] = b.first_column;
  j["width"] = b.width;
  if (f.kind == FeatureKind::continuous) {
    j["min"] = f.min;
    j["max"] = f.max;
    j["knots"] = f.knots.knots;
  } else {
    j["levels"] = f.levels;
  }
  return j;
}

inline void feature_from_json(const Json& j, int id, FeatureSpec& f, BasisBlock& b) {
  f.name = get<std::string>(j, "name");
  const auto kind = get<std::string>(j, "kind");
  if (kind == "continuous") {
    f.kind = FeatureKind::continuous;
  } else if (kind == "categorical") {
    f.kind = FeatureKind::categorical;
  } else {
    throw DataError("model file: unknown feature kind '" + kind + "'");
  }
  try {
    b.kind = basis_kind_from_string(get<std::string>(j, "basis"));
  } catch (const ArgumentError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  b.feature = id;
  b.first_column = get<int>(j, "first_column");
  b.width = get<int>(j, "width");
  if (f.kind == FeatureKind::continuous) {
    f.min = number(field(j, "min"), "min");
    f.max = number(field(j, "max"), "max");
    f.knots.feature = id;
    f.knots.knots = get<std::vector<double>>(j, "knots");
  } else {
    f.levels = get<std::vector<std::string>>(j, "levels");
  }
}

inline Json node_to_json(const TreeNode& n) {
  Json j;
  j["id"] = n.id;
  j["depth"] = n.depth;
  j["count"] = n.count;
  if (n.split) {
    Json s;
    s["feature"] = n.split->feature;
    s["categorical"] = n.split->categorical;
    if (n.split->categorical) {
      s["left_levels"] = n.split->left_levels;
    } else {
      s["threshold"] = n.split->threshold;
    }
    j["split"] = s;
    j["left"] = n.left;
    j["right"] = n.right;
  } else {
    j["split"] = nullptr;
  }
  j["dsse"] = number(n.dsse);
  j["loss"] = number(n.loss);
  j["sse"] = number(n.model.sse);
  j["r2"] = number(n.model.r2);
  j["effective_df"] = number(n.model.effective_df);
  j["lambda"] = number(n.model.lambda);
  std::vector<double> beta(n.model.coefficients.data(),
                           n.model.coefficients.data() + n.model.coefficients.size());
  j["coefficients"] = beta;
  j["effect_means"] = n.effect_means;
  j["l1_failed"] = n.l1_failed;
  return j;
}

inline TreeNode node_from_json(const Json& j) {
  TreeNode n;
  n.id = get<int>(j, "id");
  n.depth = get<int>(j, "depth");
  n.count = get<std::int64_t>(j, "count");
  const Json& s = field(j, "split");
  if (!s.is_null()) {
    SplitRule r;
    r.feature = get<int>(s, "feature");
    r.categorical = get<bool>(s, "categorical");
    if (r.categorical) {
      r.left_levels = get<std::vector<int>>(s, "left_levels");
    } else {
      r.threshold = number(field(s, "threshold"), "threshold");
    }
    n.split = std::move(r);
    n.left = get<int>(j, "left");
    n.right = get<int>(j, "right");
  }
  n.dsse = number(field(j, "dsse"), "dsse");
  n.loss = number(field(j, "loss"), "loss");
  n.model.sse = number(field(j, "sse"), "sse");
  n.model.r2 = number(field(j, "r2"), "r2");
  n.model.effective_df = number(field(j, "effective_df"), "effective_df");
  n.model.lambda = number(field(j, "lambda"), "lambda");
  n.model.count = n.count;
  const auto beta = get<std::vector<double>>(j, "coefficients");
  n.model.coefficients = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  n.effect_means = get<std::vector<double>>(j, "effect_means");
  n.l1_failed = get<bool>(j, "l1_failed");
  return n;
}

/// Structural checks on a loaded tree: ids unique, children exist one level
/// deeper with counts summing to the parent's, every node reachable, and
/// coefficient vectors matching the design width.
inline void check_tree(const Tree& t) {
  if (t.nodes.empty()) throw DataError("model file: tree has no nodes");
  if (t.nodes.front().id != 0 || t.nodes.front().depth != 0) {
    throw DataError("model file: root must have id 0 and depth 0");
  }
  for (std::size_t k = 1; k < t.nodes.size(); ++k) {
    if (t.nodes[k].id <= t.nodes[k - 1].id) throw DataError("model file: duplicate node id");
  }
  const auto m = static_cast<Index>(t.spec.total_columns);
  const auto p = t.spec.features.size();
  std::vector<int> parents(t.nodes.size(), 0);
  for (const auto& n : t.nodes) {
    const std::string where = "model file: node " + std::to_string(n.id);
    if (n.model.coefficients.size() != m) throw DataError(where + ": coefficient count mismatch");
    if (n.effect_means.size() != p) throw DataError(where + ": effect mean count mismatch");
    if (n.count < 0) throw DataError(where + ": negative count");
    if (n.is_leaf()) continue;
    const auto& r = *n.split;
    if (r.feature < 0 || r.feature >= static_cast<int>(p)) throw DataError(where + ": bad split feature");
    const auto& f = t.spec.features[static_cast<std::size_t>(r.feature)];
    if (r.categorical != (f.kind == FeatureKind::categorical)) {
      throw DataError(where + ": split kind does not match the feature");
    }
    if (r.categorical) {
      const int levels = static_cast<int>(f.levels.size());
      if (!std::is_sorted(r.left_levels.begin(), r.left_levels.end())) {
        throw DataError(where + ": left levels must be sorted");
      }
      for (int l : r.left_levels) {
        if (l < 0 || l >= levels) throw DataError(where + ": left level out of range");
      }
    } else if (!std::isfinite(r.threshold)) {
      throw DataError(where + ": non-finite threshold");
    }
    const TreeNode* a = t.find(n.left);
    const TreeNode* b = t.find(n.right);
    if (!a || !b || n.left == n.right) throw DataError(where + ": missing child");
    if (a->depth != n.depth + 1 || b->depth != n.depth + 1) {
      throw DataError(where + ": child depth mismatch");
    }
    if (a->count + b->count != n.count) {
      throw DataError(where + ": child counts do not sum to the parent count");
    }
    ++parents[static_cast<std::size_t>(a - t.nodes.data())];
    ++parents[static_cast<std::size_t>(b - t.nodes.data())];
  }
  for (std::size_t k = 1; k < t.nodes.size(); ++k) {
    if (parents[k] != 1) {
      throw DataError("model file: node " + std::to_string(t.nodes[k].id) +
                      " does not have exactly one parent");
    }
  }
}

}  // namespace detail

inline Json save_tree(const Tree& tree, const RunConfig& run) {
  Json doc;
  doc["format"] = kTreeFormat;
  doc["version"] = kTreeFormatVersion;
  Json features = Json::array();
  for (std::size_t j = 0; j < tree.spec.features.size(); ++j) {
    features.push_back(detail::feature_to_json(tree.spec.features[j], tree.spec.blocks[j]));
  }
  doc["design"] = {{"total_columns", tree.spec.total_columns},
                   {"features", features},
                   {"dropped", tree.spec.dropped}};
  Json settings = Json::object();
  for (const auto& [k, v] : settings_of(run)) settings[k] = v;
  doc["config"] = settings;
  doc["l1_lambda"] = tree.l1_lambda;
  Json nodes = Json::array();
  for (const auto& n : tree.nodes) nodes.push_back(detail::node_to_json(n));
  doc["nodes"] = nodes;
  return doc;
}

inline SavedModel load_tree(const Json& doc) {
  using detail::get;
  if (!doc.is_object() || get<std::string>(doc, "format") != kTreeFormat) {
    throw DataError("model file: not a slim tree document");
  }
  const int version = get<int>(doc, "version");
  if (version != kTreeFormatVersion) {
    throw DataError("model file: format version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(kTreeFormatVersion) + ")");
  }
  SavedModel out;
  const Json& design = detail::field(doc, "design");
  out.tree.spec.total_columns = get<int>(design, "total_columns");
  out.tree.spec.dropped = get<std::vector<std::string>>(design, "dropped");
  const Json& features = detail::field(design, "features");
  if (!features.is_array()) throw DataError("model file: 'features' must be an array");
  for (std::size_t j = 0; j < features.size(); ++j) {
    FeatureSpec f;
    BasisBlock b;
    detail::feature_from_json(features[j], static_cast<int>(j), f, b);
    out.tree.spec.features.push_back(std::move(f));
    out.tree.spec.blocks.push_back(b);
  }
  out.tree.spec.validate();

  const Json& settings = detail::field(doc, "config");
  if (!settings.is_object()) throw DataError("model file: 'config' must be an object");
  try {
    for (const auto& [k, v] : settings.items()) {
      if (!v.is_string()) throw DataError("model file: config value '" + k + "' must be a string");
      apply_setting(out.run, k, v.get<std::string>());
    }
    out.run.validate();
  } catch (const ArgumentError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  out.tree.config = out.run.grow;
  out.tree.l1_lambda = detail::number(detail::field(doc, "l1_lambda"), "l1_lambda");

  const Json& nodes = detail::field(doc, "nodes");
  if (!nodes.is_array()) throw DataError("model file: 'nodes' must be an array");
  for (const auto& n : nodes) out.tree.nodes.push_back(detail::node_from_json(n));
  std::sort(out.tree.nodes.begin(), out.tree.nodes.end(),
            [](const TreeNode& a, const TreeNode& b) { return a.id < b.id; });
  detail::check_tree(out.tree);
  return out;
}

inline std::string tree_to_string(const Tree& tree, const RunConfig& run) {
  return save_tree(tree, run).dump(1) + "\n";
}

inline SavedModel tree_from_string(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("model file: invalid JSON: ") + e.what());
  }
  return load_tree(doc);
}

inline void write_tree_file(const std::string& path, const Tree& tree, const RunConfig& run) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << tree_to_string(tree, run);
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline SavedModel read_tree_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return tree_from_string(buf.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace slim::io
