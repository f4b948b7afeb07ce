#pragma once

// Graphviz rendering of a tree. Each node shows its id, size, split rule
// (internal nodes), dsse and R2; edges carry the routing condition.

#include <cstdio>
#include <sstream>
#include <string>

#include "slim/tree.hpp"

namespace slim::io {

namespace detail {

// Escapes text for a double-quoted DOT string.
inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string level_set(const Tree& t, const SplitRule& r, bool left) {
  const auto& levels = t.spec.features[static_cast<std::size_t>(r.feature)].levels;
  std::string out = "{";
  bool first = true;
  for (int l = 0; l < static_cast<int>(levels.size()); ++l) {
    if (r.goes_left_level(l) != left) continue;
    if (!first) out += ",";
    out += dot_escape(levels[static_cast<std::size_t>(l)]);
    first = false;
  }
  return out + "}";
}

inline std::string edge_label(const Tree& t, const SplitRule& r, bool left) {
  if (r.categorical) return "in " + level_set(t, r, left);
  return (left ? "≤ " : "> ") + fixed(r.threshold, 6);
}

}  // namespace detail

inline std::string export_dot(const Tree& tree) {
  std::ostringstream out;
  out << "digraph slim {\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\"];\n";
  for (const auto& n : tree.nodes) {
    std::string label = "N" + std::to_string(n.id) + "\\nsize = " + std::to_string(n.count);
    if (n.split) {
      const auto& f = tree.spec.features[static_cast<std::size_t>(n.split->feature)];
      label += "\\n" + detail::dot_escape(f.name) +
               (n.split->categorical ? " in " + detail::level_set(tree, *n.split, true)
                                     : " ≤ " + detail::fixed(n.split->threshold, 6));
      label += "\\ndsse = " + detail::fixed(n.dsse, 6);
    }
    label += "\\nR2 = " + detail::fixed(n.model.r2, 4);
    out << "  n" << n.id << " [label=\"" << label << "\"];\n";
  }
  for (const auto& n : tree.nodes) {
    if (!n.split) continue;
    out << "  n" << n.id << " -> n" << n.left << " [label=\""
        << detail::edge_label(tree, *n.split, true) << "\"];\n";
    out << "  n" << n.id << " -> n" << n.right << " [label=\""
        << detail::edge_label(tree, *n.split, false) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace slim::io
