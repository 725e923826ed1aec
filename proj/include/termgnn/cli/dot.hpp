#pragma once

#include <optional>
#include <span>
#include <string>

#include "termgnn/gnn/model.hpp"
#include "termgnn/graph/encoding.hpp"
#include "termgnn/lang/ast.hpp"

namespace termgnn::cli {

/// Graphviz rendering of a program's AST. Nodes show their token and source
/// line. With attention, tree edges are coloured from blue (low display score)
/// to red (high); if every edge carries the same attention they all get the
/// middle colour. With segmentation confidences, nodes at or above 0.5 are
/// filled red. Self-loops are not drawn.
std::string emit_dot(const lang::Program& p, const graph::FeatureGraph& g,
                     std::optional<std::span<const gnn::EdgeScore>> attention = std::nullopt,
                     std::optional<std::span<const double>> confidence = std::nullopt);

/// "#rrggbb" on the blue-to-red ramp, s clamped to [0, 1].
std::string ramp_colour(double s);

}  // namespace termgnn::cli
