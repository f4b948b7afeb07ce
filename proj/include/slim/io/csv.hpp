#pragma once

// Dataset CSV: a header row followed by one record per line. Continuous
// feature and response cells must parse as finite numbers; categorical
// cells are kept verbatim. Fields may be double-quoted.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slim/dataset.hpp"
#include "slim/error.hpp"
#include "slim/io/format.hpp"

namespace slim::io {

/// Splits one CSV line, honouring double quotes ("" escapes a quote).
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string quote_csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

enum class ResponseTransform { identity, logit };

inline ResponseTransform transform_from_string(const std::string& s) {
  if (s == "identity") return ResponseTransform::identity;
  if (s == "logit") return ResponseTransform::logit;
  throw ArgumentError("unknown response transform '" + s + "' (expected identity or logit)");
}

inline const char* to_string(ResponseTransform t) {
  return t == ResponseTransform::identity ? "identity" : "logit";
}

inline constexpr double kLogitClamp = 1e-12;

inline double logit(double p) {
  p = std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
  return std::log(p / (1.0 - p));
}

/// Which columns play which role.
struct CsvSchema {
  std::string response;               // surrogate response y^S (required)
  std::string original;               // original response, optional
  std::string tag;                    // train/test tag column, optional
  std::vector<std::string> features;  // empty: every remaining column
  std::vector<std::string> categorical;
  ResponseTransform transform = ResponseTransform::identity;
  // When set, a missing response column yields an all-zero response.
  bool response_optional = false;
};

namespace detail {

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline Partition parse_tag(const std::string& raw, std::size_t line_no) {
  std::string s;
  for (char ch : raw) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (s == "train" || s == "1") return Partition::train;
  if (s == "test" || s == "0") return Partition::test;
  throw DataError("line " + std::to_string(line_no) + ": tag '" + raw +
                  "' is neither train nor test");
}

}  // namespace detail

inline SurrogateDataset read_csv(std::istream& in, const CsvSchema& schema,
                                 const std::string& source = "<csv>") {
  if (schema.response.empty()) throw ArgumentError("a response column must be named");
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  detail::strip_cr(line);
  if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF && line.size() >= 3) {
    line.erase(0, 3);  // UTF-8 byte order mark
  }
  const auto header = split_csv_line(line);
  auto find = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  auto require = [&](const std::string& name, const char* role) {
    const int j = find(name);
    if (j < 0) throw DataError(source + ": missing " + role + " column '" + name + "'");
    return j;
  };
  const int resp_col = schema.response_optional && find(schema.response) < 0
                           ? -1
                           : require(schema.response, "response");
  const int orig_col = schema.original.empty() ? -1 : require(schema.original, "original response");
  const int tag_col = schema.tag.empty() ? -1 : require(schema.tag, "tag");

  std::vector<std::string> feature_names = schema.features;
  if (feature_names.empty()) {
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
      if (j != resp_col && j != orig_col && j != tag_col) feature_names.push_back(header[static_cast<std::size_t>(j)]);
    }
  }
  for (const auto& c : schema.categorical) {
    if (std::find(feature_names.begin(), feature_names.end(), c) == feature_names.end()) {
      throw DataError(source + ": categorical column '" + c + "' is not a feature");
    }
  }
  SurrogateDataset d;
  std::vector<int> feature_cols;
  for (const auto& name : feature_names) {
    feature_cols.push_back(require(name, "feature"));
    FeatureColumn fc;
    fc.name = name;
    fc.kind = std::find(schema.categorical.begin(), schema.categorical.end(), name) !=
                      schema.categorical.end()
                  ? FeatureKind::categorical
                  : FeatureKind::continuous;
    d.features.push_back(std::move(fc));
  }
  std::vector<double> original;
  std::vector<Partition> tags;

  std::vector<std::size_t> bad_rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(source + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    bool ok = true;
    auto number = [&](int col) {
      auto v = parse_double(cells[static_cast<std::size_t>(col)]);
      if (!v || !std::isfinite(*v)) {
        ok = false;
        return 0.0;
      }
      return *v;
    };
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      auto& fc = d.features[j];
      if (fc.kind == FeatureKind::continuous) {
        fc.numeric.push_back(number(feature_cols[j]));
      } else {
        fc.labels.push_back(cells[static_cast<std::size_t>(feature_cols[j])]);
      }
    }
    double r = resp_col >= 0 ? number(resp_col) : 0.0;
    if (resp_col >= 0 && schema.transform == ResponseTransform::logit) r = logit(r);
    d.response.push_back(r);
    if (orig_col >= 0) original.push_back(number(orig_col));
    if (tag_col >= 0) tags.push_back(detail::parse_tag(cells[static_cast<std::size_t>(tag_col)], line_no));
    if (!ok) bad_rows.push_back(line_no);
  }
  if (!bad_rows.empty()) {
    std::ostringstream msg;
    msg << source << ": non-numeric or non-finite values on line(s)";
    for (std::size_t k = 0; k < bad_rows.size() && k < 10; ++k) msg << ' ' << bad_rows[k];
    if (bad_rows.size() > 10) msg << " ... (" << bad_rows.size() << " lines)";
    throw DataError(msg.str());
  }
  if (d.response.empty()) throw DataError(source + ": no data rows");
  if (orig_col >= 0) d.original = std::move(original);
  if (tag_col >= 0) d.tags = std::move(tags);
  d.validate();
  return d;
}

inline SurrogateDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, schema, path);
}

/// Column names used when writing a dataset back out.
struct CsvNames {
  std::string response = "y_s";
  std::string original = "y";
  std::string tag = "split";
};

inline void write_csv(std::ostream& out, const SurrogateDataset& d, const CsvNames& names = {}) {
  bool first = true;
  auto field = [&](const std::string& s) {
    if (!first) out << ',';
    out << s;
    first = false;
  };
  for (const auto& f : d.features) field(quote_csv_field(f.name));
  field(quote_csv_field(names.response));
  if (d.original) field(quote_csv_field(names.original));
  if (d.tags) field(quote_csv_field(names.tag));
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    first = true;
    for (const auto& f : d.features) {
      field(f.kind == FeatureKind::continuous ? format_double(f.numeric[i]) : quote_csv_field(f.labels[i]));
    }
    field(format_double(d.response[i]));
    if (d.original) field(format_double((*d.original)[i]));
    if (d.tags) field((*d.tags)[i] == Partition::train ? "train" : "test");
    out << '\n';
  }
}

}  // namespace slim::io
