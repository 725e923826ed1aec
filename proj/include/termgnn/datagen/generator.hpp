#pragma once

#include <cstdint>
#include <utility>

#include "termgnn/lang/ast.hpp"

namespace termgnn::datagen {

struct GeneratorConfig {
  int min_loops = 2;
  int max_loops = 5;
  int max_nesting = 3;
  int max_params = 4;
  std::pair<int, int> straight_line_stmt_range{0, 2};
  std::pair<std::int64_t, std::int64_t> constant_range{-10, 10};
  double nest_probability = 0.35;
  double faulty_probability = 0.5;   // chance that one loop's update cannot make progress
  double branch_probability = 0.1;   // chance that a filler statement sits under an `if`
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument for inconsistent bounds.
void validate(const GeneratorConfig& cfg);

/// Random program with loop count in [min_loops, max_loops] and nesting at
/// most max_nesting. Every loop body updates its guard variable toward the
/// bound. With faulty_probability one loop, picked uniformly, instead moves
/// away from the bound or resets to a constant. Pure in (cfg, seed).
lang::Program generate_program(const GeneratorConfig& cfg, std::uint64_t seed);

}  // namespace termgnn::datagen
