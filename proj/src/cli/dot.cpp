#include "termgnn/cli/dot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace termgnn::cli {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

std::string ramp_colour(double s) {
  s = std::clamp(s, 0.0, 1.0);
  auto r = static_cast<int>(std::lround(255.0 * s));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x00%02x", r, 255 - r);
  return buf;
}

std::string emit_dot(const lang::Program& p, const graph::FeatureGraph& g,
                     std::optional<std::span<const gnn::EdgeScore>> attention,
                     std::optional<std::span<const double>> confidence) {
  auto nodes = lang::flatten(p);
  if (static_cast<std::int32_t>(nodes.size()) != g.n_nodes) {
    throw std::invalid_argument("graph does not belong to the program");
  }
  if (confidence && static_cast<std::int32_t>(confidence->size()) != g.n_nodes) {
    throw std::invalid_argument("one confidence per node expected");
  }
  bool flat = false;
  if (attention && !attention->empty()) {
    auto [lo, hi] = std::minmax_element(attention->begin(), attention->end(),
                                        [](const auto& a, const auto& b) { return a.alpha_max < b.alpha_max; });
    flat = lo->alpha_max == hi->alpha_max;
  }

  std::ostringstream out;
  out << "digraph ast {\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::int32_t i = 0; i < g.n_nodes; ++i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    std::string label = std::string(lang::to_string(n.kind));
    if (!n.lexeme.empty()) label += " " + n.lexeme;
    label += "\nline " + std::to_string(g.node_line[i]);
    out << "  n" << i << " [label=" << quote(label);
    if (confidence) {
      double c = (*confidence)[static_cast<std::size_t>(i)];
      out << ", tooltip=" << quote("confidence " + fixed(c, 4));
      if (c >= 0.5) out << ", style=filled, fillcolor=\"#ff0000\"";
    }
    out << "];\n";
  }
  if (attention) {
    for (const auto& e : *attention) {
      double s = flat ? 0.5 : e.display;
      out << "  n" << e.u << " -> n" << e.v << " [color=\"" << ramp_colour(s) << "\", label=\"" << fixed(s, 3)
          << "\"];\n";
    }
  } else {
    for (auto [u, v] : g.edges) {
      if (u != v) out << "  n" << u << " -> n" << v << " [color=\"#000000\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace termgnn::cli
