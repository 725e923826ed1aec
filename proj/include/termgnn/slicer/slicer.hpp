#pragma once

#include <optional>
#include <stdexcept>

#include "termgnn/interp/fuzz.hpp"
#include "termgnn/lang/ast.hpp"

namespace termgnn::slicer {

class SliceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Slice {
  lang::Program program;        // fresh node ids, original source lines kept
  lang::NodeId loop = lang::kNoNode;  // id of the target loop inside program
};

/// Backward slice that keeps the target loop reachable and preserves every
/// value its guard reads, at entry and across its iterations. Statements are
/// kept in source order; loops and branches survive only if something inside
/// them is kept. Parameters whose entry value is never read are dropped.
/// Throws SliceError if loop is not a While node of p.
Slice slice_for_loop(const lang::Program& p, lang::NodeId loop);

/// Walks the input schedule of interp::sample_inputs and returns the first
/// input whose run exhausts the budget with `loop` among the implicated loops.
std::optional<interp::Inputs> find_witness(const lang::Program& p, lang::NodeId loop,
                                           const interp::FuzzOptions& opts);

}  // namespace termgnn::slicer
