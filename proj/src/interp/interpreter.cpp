#include "termgnn/interp/interpreter.hpp"

#include <algorithm>

#include "termgnn/util/overloaded.hpp"

namespace termgnn::interp {

using lang::AssignOp;
using lang::BinOp;
using lang::Expr;
using lang::Stmt;

namespace {

inline std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
inline std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
inline std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

}  // namespace

CompiledProgram::CompiledProgram(const lang::Program& p) : params_(p.params) {
  for (const auto& name : params_) slot_of(name);
  lower_block(p.body);
}

std::int32_t CompiledProgram::slot_of(const std::string& name) {
  auto it = std::find(slots_.begin(), slots_.end(), name);
  if (it != slots_.end()) return static_cast<std::int32_t>(it - slots_.begin());
  slots_.push_back(name);
  return static_cast<std::int32_t>(slots_.size() - 1);
}

std::int32_t CompiledProgram::lower_expr(const Expr& e) {
  ExprNode node = std::visit(Overloaded{
                                 [&](const Expr::Var& v) { return ExprNode{Op::Var, -1, -1, slot_of(v.name)}; },
                                 [&](const Expr::Const& c) { return ExprNode{Op::Const, -1, -1, c.value}; },
                                 [&](const Expr::Binary& b) {
                                   Op op = Op::Add;
                                   switch (b.op) {
                                     case BinOp::Add: op = Op::Add; break;
                                     case BinOp::Sub: op = Op::Sub; break;
                                     case BinOp::Mul: op = Op::Mul; break;
                                     case BinOp::Gt: op = Op::Gt; break;
                                     case BinOp::Lt: op = Op::Lt; break;
                                     case BinOp::Ge: op = Op::Ge; break;
                                     case BinOp::Le: op = Op::Le; break;
                                     case BinOp::Eq: op = Op::Eq; break;
                                     case BinOp::Ne: op = Op::Ne; break;
                                   }
                                   std::int32_t l = lower_expr(*b.lhs);
                                   std::int32_t r = lower_expr(*b.rhs);
                                   return ExprNode{op, l, r, 0};
                                 },
                             },
                             e.node);
  exprs_.push_back(node);
  return static_cast<std::int32_t>(exprs_.size() - 1);
}

void CompiledProgram::lower_block(const lang::Block& block) {
  for (const auto& s : block) {
    std::visit(Overloaded{
                   [&](const Stmt::Assign& a) {
                     Instr in{Code::Assign};
                     in.assign_op = a.op;
                     in.expr = lower_expr(a.rhs);
                     in.slot = slot_of(a.target);
                     code_.push_back(in);
                   },
                   [&](const Stmt::While& w) {
                     Instr guard{Code::LoopGuard};
                     guard.expr = lower_expr(w.guard);
                     guard.loop = static_cast<std::int32_t>(loop_ids_.size());
                     loop_ids_.push_back(s.id);
                     std::size_t head = code_.size();
                     code_.push_back(guard);
                     lower_block(w.body);
                     Instr back{Code::Jump};
                     back.target = static_cast<std::int32_t>(head);
                     code_.push_back(back);
                     code_[head].target = static_cast<std::int32_t>(code_.size());
                   },
                   [&](const Stmt::If& i) {
                     Instr guard{Code::IfGuard};
                     guard.expr = lower_expr(i.guard);
                     std::size_t head = code_.size();
                     code_.push_back(guard);
                     lower_block(i.then_body);
                     std::size_t skip = code_.size();
                     code_.push_back(Instr{Code::Jump});
                     code_[head].target = static_cast<std::int32_t>(code_.size());
                     lower_block(i.else_body);
                     code_[skip].target = static_cast<std::int32_t>(code_.size());
                   },
               },
               s.node);
  }
}

std::int64_t CompiledProgram::eval(std::int32_t idx, const std::int64_t* env) const {
  const ExprNode& n = exprs_[idx];
  switch (n.op) {
    case Op::Var: return env[n.value];
    case Op::Const: return n.value;
    default: break;
  }
  std::int64_t a = eval(n.lhs, env);
  std::int64_t b = eval(n.rhs, env);
  switch (n.op) {
    case Op::Add: return wrap_add(a, b);
    case Op::Sub: return wrap_sub(a, b);
    case Op::Mul: return wrap_mul(a, b);
    case Op::Gt: return a > b;
    case Op::Lt: return a < b;
    case Op::Ge: return a >= b;
    case Op::Le: return a <= b;
    case Op::Eq: return a == b;
    case Op::Ne: return a != b;
    default: return 0;
  }
}

Outcome CompiledProgram::run(std::span<const std::int64_t> args, std::uint64_t step_budget) const {
  if (step_budget == 0) throw std::invalid_argument("step budget must be at least 1");
  if (args.size() != params_.size()) throw MissingInputError("argument count does not match parameters");
  std::vector<std::int64_t> env(slots_.size(), 0);
  std::copy(args.begin(), args.end(), env.begin());
  std::vector<std::uint64_t> visits(loop_ids_.size(), 0);

  std::uint64_t steps = 0;
  std::size_t pc = 0;
  const std::size_t end = code_.size();
  while (pc < end) {
    const Instr& in = code_[pc];
    if (in.code == Code::Jump) {
      pc = static_cast<std::size_t>(in.target);
      continue;
    }
    if (steps == step_budget) {
      BudgetExhausted out;
      for (std::size_t i = 0; i < loop_ids_.size(); ++i) out.loop_visits[loop_ids_[i]] = visits[i];
      return out;
    }
    ++steps;
    switch (in.code) {
      case Code::Assign: {
        std::int64_t v = eval(in.expr, env.data());
        std::int64_t& dst = env[in.slot];
        switch (in.assign_op) {
          case AssignOp::Set: dst = v; break;
          case AssignOp::Add: dst = wrap_add(dst, v); break;
          case AssignOp::Sub: dst = wrap_sub(dst, v); break;
          case AssignOp::Mul: dst = wrap_mul(dst, v); break;
        }
        ++pc;
        break;
      }
      case Code::LoopGuard:
        ++visits[in.loop];
        pc = eval(in.expr, env.data()) ? pc + 1 : static_cast<std::size_t>(in.target);
        break;
      case Code::IfGuard:
        pc = eval(in.expr, env.data()) ? pc + 1 : static_cast<std::size_t>(in.target);
        break;
      case Code::Jump: break;
    }
  }
  return Terminated{steps};
}

Outcome CompiledProgram::run(const Inputs& inputs, std::uint64_t step_budget) const {
  std::vector<std::int64_t> args;
  args.reserve(params_.size());
  for (const auto& name : params_) {
    auto it = inputs.find(name);
    if (it == inputs.end()) throw MissingInputError("no input bound for parameter '" + name + "'");
    args.push_back(it->second);
  }
  return run(args, step_budget);
}

Outcome run(const lang::Program& p, const Inputs& inputs, std::uint64_t step_budget) {
  return CompiledProgram(p).run(inputs, step_budget);
}

}  // namespace termgnn::interp
