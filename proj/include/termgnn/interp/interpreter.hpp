#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "termgnn/lang/ast.hpp"

namespace termgnn::interp {

using lang::NodeId;
using Inputs = std::map<std::string, std::int64_t>;

inline constexpr std::uint64_t kDefaultStepBudget = 100'000;

struct Terminated {
  std::uint64_t steps = 0;
};

struct BudgetExhausted {
  std::map<NodeId, std::uint64_t> loop_visits;  // guard evaluations per While node
};

using Outcome = std::variant<Terminated, BudgetExhausted>;

class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A program lowered to flat bytecode with resolved variable slots. One step
/// is one assignment or one guard evaluation; arithmetic wraps on 64 bits.
class CompiledProgram {
 public:
  explicit CompiledProgram(const lang::Program& p);

  /// Runs with parameter values given in declaration order.
  Outcome run(std::span<const std::int64_t> args, std::uint64_t step_budget) const;
  Outcome run(const Inputs& inputs, std::uint64_t step_budget) const;

  const std::vector<std::string>& params() const { return params_; }

 private:
  enum class Op : std::uint8_t { Var, Const, Add, Sub, Mul, Gt, Lt, Ge, Le, Eq, Ne };
  struct ExprNode {
    Op op;
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
    std::int64_t value = 0;  // constant, or slot for Var
  };
  enum class Code : std::uint8_t { Assign, LoopGuard, IfGuard, Jump };
  struct Instr {
    Code code;
    lang::AssignOp assign_op = lang::AssignOp::Set;
    std::int32_t slot = -1;
    std::int32_t expr = -1;
    std::int32_t target = -1;
    std::int32_t loop = -1;
  };

  std::int32_t lower_expr(const lang::Expr& e);
  void lower_block(const lang::Block& b);
  std::int32_t slot_of(const std::string& name);
  std::int64_t eval(std::int32_t idx, const std::int64_t* env) const;

  std::vector<std::string> params_;
  std::vector<std::string> slots_;
  std::vector<ExprNode> exprs_;
  std::vector<Instr> code_;
  std::vector<NodeId> loop_ids_;
};

/// Runs a program on named inputs. Throws MissingInputError if a parameter
/// has no binding.
Outcome run(const lang::Program& p, const Inputs& inputs, std::uint64_t step_budget = kDefaultStepBudget);

}  // namespace termgnn::interp
