#pragma once

// Diagnostics tables as CSV:
//   importance.csv     leaf_id,feature,v
//   contributions.csv  node_id,feature,c,p
//   curves.csv         leaf_id,feature,grid_value_or_level,effect
// Rows are ordered by node id, then feature id, then grid position.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "slim/diagnostics.hpp"
#include "slim/error.hpp"
#include "slim/io/csv.hpp"
#include "slim/io/format.hpp"

namespace slim::io {

inline void write_importance_csv(std::ostream& out, const DesignSpec& spec,
                                 const ImportanceTable& table) {
  out << "leaf_id,feature,v\n";
  for (const auto& e : table.entries) {
    out << e.leaf << ',' << quote_csv_field(spec.features[static_cast<std::size_t>(e.feature)].name)
        << ',' << format_double(e.v) << '\n';
  }
}

inline void write_contributions_csv(std::ostream& out, const DesignSpec& spec,
                                    const std::vector<SplitContribution>& rows) {
  out << "node_id,feature,c,p\n";
  for (const auto& sc : rows) {
    for (std::size_t j = 0; j < sc.c.size(); ++j) {
      out << sc.node << ',' << quote_csv_field(spec.features[j].name) << ','
          << format_double(sc.c[j]) << ',' << format_double(sc.p[j]) << '\n';
    }
  }
}

inline void write_curves_csv(std::ostream& out, const DesignSpec& spec,
                             const std::vector<EffectCurve>& curves) {
  out << "leaf_id,feature,grid_value_or_level,effect\n";
  for (const auto& c : curves) {
    const std::string name = quote_csv_field(spec.features[static_cast<std::size_t>(c.feature)].name);
    for (std::size_t k = 0; k < c.values.size(); ++k) {
      const std::string at = c.grid.empty() ? quote_csv_field(c.levels[k]) : format_double(c.grid[k]);
      out << c.node << ',' << name << ',' << at << ',' << format_double(c.values[k]) << '\n';
    }
  }
}

struct DiagnosticsTables {
  ImportanceTable importance;
  std::vector<SplitContribution> contributions;
  std::vector<EffectCurve> curves;
};

inline DiagnosticsTables compute_diagnostics(const Tree& tree, const SurrogateDataset& data,
                                             int grid_points = 100) {
  DiagnosticsTables t;
  t.importance = leaf_importance(tree, data);
  t.contributions = all_split_contributions(tree, data);
  t.curves = leaf_effect_curves(tree, grid_points);
  return t;
}

/// Writes the three tables into `dir`, creating it if needed.
inline void export_diagnostics(const std::string& dir, const DesignSpec& spec,
                               const DiagnosticsTables& t) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
  auto open = [&](const char* name) {
    const auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
  };
  {
    auto out = open("importance.csv");
    write_importance_csv(out, spec, t.importance);
  }
  {
    auto out = open("contributions.csv");
    write_contributions_csv(out, spec, t.contributions);
  }
  {
    auto out = open("curves.csv");
    write_curves_csv(out, spec, t.curves);
  }
}

}  // namespace slim::io
