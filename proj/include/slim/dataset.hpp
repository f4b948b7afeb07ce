#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slim/error.hpp"

namespace slim {

enum class FeatureKind { continuous, categorical };

inline const char* to_string(FeatureKind k) {
  return k == FeatureKind::continuous ? "continuous" : "categorical";
}

/// One predictor column. Continuous columns populate `numeric`,
/// categorical columns populate `labels`.
struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::vector<double> numeric;
  std::vector<std::string> labels;

  std::size_t size() const {
    return kind == FeatureKind::continuous ? numeric.size() : labels.size();
  }
};

/// A single record's value for one feature.
using FeatureValue = std::variant<double, std::string>;

/// Feature values keyed by the dataset's column order.
struct Record {
  std::vector<std::string> names;
  std::vector<FeatureValue> values;
};

enum class Partition { train, test };

/// Predictors plus the surrogate response y^S (the upstream model's
/// predictions), optionally the original response, and optionally a
/// per-row train/test tag.
struct SurrogateDataset {
  std::vector<FeatureColumn> features;
  std::vector<double> response;
  std::optional<std::vector<double>> original;
  std::optional<std::vector<Partition>> tags;

  std::size_t size() const { return response.size(); }

  int find_feature(const std::string& name) const {
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j].name == name) return static_cast<int>(j);
    }
    return -1;
  }

  void validate() const {
    const std::size_t n = size();
    for (const auto& f : features) {
      if (f.size() != n) {
        throw DataError("column '" + f.name + "' has " + std::to_string(f.size()) +
                        " values, expected " + std::to_string(n));
      }
    }
    if (original && original->size() != n) {
      throw DataError("original response length does not match the surrogate response");
    }
    if (tags && tags->size() != n) {
      throw DataError("train/test tag length does not match the surrogate response");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(response[i])) {
        throw DataError("surrogate response is not finite at row " + std::to_string(i));
      }
    }
  }

  Record record(std::size_t row) const {
    Record r;
    r.names.reserve(features.size());
    r.values.reserve(features.size());
    for (const auto& f : features) {
      r.names.push_back(f.name);
      if (f.kind == FeatureKind::continuous) {
        r.values.emplace_back(f.numeric[row]);
      } else {
        r.values.emplace_back(f.labels[row]);
      }
    }
    return r;
  }

  SurrogateDataset subset(const std::vector<std::size_t>& rows) const {
    SurrogateDataset out;
    out.features.reserve(features.size());
    for (const auto& f : features) {
      FeatureColumn c;
      c.name = f.name;
      c.kind = f.kind;
      if (f.kind == FeatureKind::continuous) {
        c.numeric.reserve(rows.size());
        for (auto i : rows) c.numeric.push_back(f.numeric[i]);
      } else {
        c.labels.reserve(rows.size());
        for (auto i : rows) c.labels.push_back(f.labels[i]);
      }
      out.features.push_back(std::move(c));
    }
    out.response.reserve(rows.size());
    for (auto i : rows) out.response.push_back(response[i]);
    if (original) {
      std::vector<double> o;
      o.reserve(rows.size());
      for (auto i : rows) o.push_back((*original)[i]);
      out.original = std::move(o);
    }
    if (tags) {
      std::vector<Partition> t;
      t.reserve(rows.size());
      for (auto i : rows) t.push_back((*tags)[i]);
      out.tags = std::move(t);
    }
    return out;
  }
};

}  // namespace slim
