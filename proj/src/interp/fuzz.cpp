#include "termgnn/interp/fuzz.hpp"

#include <algorithm>

#include "termgnn/util/random.hpp"

namespace termgnn::interp {

Inputs sample_inputs(const lang::Program& p, std::size_t k, const FuzzOptions& opts) {
  Inputs out;
  std::uint64_t base = derive_seed(opts.seed, k);
  for (const auto& name : p.params) {
    out[name] = bits_to_range(splitmix64(base ^ fnv1a(name)), opts.input_min, opts.input_max);
  }
  return out;
}

namespace {

std::vector<NodeId> implicated_from(const lang::Program& p, const CompiledProgram& prog, const Inputs& inputs,
                                    std::uint64_t budget, const BudgetExhausted& first) {
  Outcome longer = prog.run(inputs, 2 * budget);
  const auto* second = std::get_if<BudgetExhausted>(&longer);

  std::vector<NodeId> out;
  for (const auto& [id, visits] : first.loop_visits) {
    bool share = static_cast<double>(visits) >= kImplicatedShare * static_cast<double>(budget);
    bool many = visits > kImplicatedVisits;
    bool growing = second && visits > 0 &&
                   static_cast<double>(second->loop_visits.at(id)) >= kGrowthFactor * static_cast<double>(visits);
    if (share || many || growing) out.push_back(id);
  }
  if (out.empty()) {
    // Degenerate budgets; fall back to the most visited loop.
    auto best = std::max_element(first.loop_visits.begin(), first.loop_visits.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    if (best != first.loop_visits.end() && best->second > 0) out.push_back(best->first);
  }

  auto nodes = lang::flatten(p);
  std::sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
    if (nodes[a].loop_depth != nodes[b].loop_depth) return nodes[a].loop_depth < nodes[b].loop_depth;
    return a < b;
  });
  return out;
}

}  // namespace

std::vector<NodeId> implicated_loops(const lang::Program& p, const Inputs& inputs, std::uint64_t step_budget) {
  CompiledProgram prog(p);
  Outcome o = prog.run(inputs, step_budget);
  const auto* ex = std::get_if<BudgetExhausted>(&o);
  if (!ex) return {};
  return implicated_from(p, prog, inputs, step_budget, *ex);
}

Label fuzz_label(const lang::Program& p, const FuzzOptions& opts) {
  CompiledProgram prog(p);
  // Without parameters every draw is the same input.
  std::size_t n = p.params.empty() ? std::min<std::size_t>(opts.n_inputs, 1) : opts.n_inputs;
  for (std::size_t k = 0; k < n; ++k) {
    Inputs inputs = sample_inputs(p, k, opts);
    Outcome o = prog.run(inputs, opts.step_budget);
    if (const auto* ex = std::get_if<BudgetExhausted>(&o)) {
      auto loops = implicated_from(p, prog, inputs, opts.step_budget, *ex);
      return Nonterminating{loops.empty() ? lang::kNoNode : loops.front(), std::move(inputs)};
    }
  }
  return Terminating{};
}

}  // namespace termgnn::interp
