#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "termgnn/interp/interpreter.hpp"

namespace termgnn::interp {

struct FuzzOptions {
  std::size_t n_inputs = 100;
  std::uint64_t step_budget = kDefaultStepBudget;
  std::int64_t input_min = -1000;
  std::int64_t input_max = 1000;
  std::uint64_t seed = 0;
};

struct Terminating {};

struct Nonterminating {
  NodeId culprit_loop = lang::kNoNode;
  Inputs witness;
};

using Label = std::variant<Terminating, Nonterminating>;

/// A loop counts as implicated in a budget-exhausting run when its guard
/// visits reach this share of all steps, exceed kImplicatedVisits, or keep
/// growing when the budget is doubled.
inline constexpr double kImplicatedShare = 0.5;
inline constexpr std::uint64_t kImplicatedVisits = 10'000;
inline constexpr double kGrowthFactor = 1.5;

/// The k-th input vector of the schedule. Each parameter's value depends only
/// on (seed, k, parameter name), so programs sharing parameter names (such as
/// a program and its slice) see identical values.
Inputs sample_inputs(const lang::Program& p, std::size_t k, const FuzzOptions& opts);

/// Implicated loops of a run that exhausts the budget, ordered outermost
/// first (by nesting depth, then node id). Empty if the run terminates.
std::vector<NodeId> implicated_loops(const lang::Program& p, const Inputs& inputs, std::uint64_t step_budget);

/// Draws opts.n_inputs input vectors and stops at the first one that exhausts
/// the budget. The culprit is the outermost implicated loop of that run.
Label fuzz_label(const lang::Program& p, const FuzzOptions& opts);

inline bool is_nonterminating(const Label& l) { return std::holds_alternative<Nonterminating>(l); }

}  // namespace termgnn::interp
