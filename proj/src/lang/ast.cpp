#include "termgnn/lang/ast.hpp"

#include <algorithm>

#include "termgnn/util/overloaded.hpp"

namespace termgnn::lang {

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Gt: return ">";
    case BinOp::Lt: return "<";
    case BinOp::Ge: return ">=";
    case BinOp::Le: return "<=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
  }
  return "?";
}

std::string_view to_string(AssignOp op) {
  switch (op) {
    case AssignOp::Set: return "=";
    case AssignOp::Add: return "+=";
    case AssignOp::Sub: return "-=";
    case AssignOp::Mul: return "*=";
  }
  return "?";
}

bool is_comparison(BinOp op) {
  switch (op) {
    case BinOp::Gt:
    case BinOp::Lt:
    case BinOp::Ge:
    case BinOp::Le:
    case BinOp::Eq:
    case BinOp::Ne: return true;
    default: return false;
  }
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Program: return "Program";
    case NodeKind::Param: return "Param";
    case NodeKind::Assign: return "Assign";
    case NodeKind::While: return "While";
    case NodeKind::If: return "If";
    case NodeKind::Var: return "Var";
    case NodeKind::Const: return "IntConst";
    case NodeKind::BinOp: return "BinOp";
  }
  return "?";
}

namespace {

void number_expr(Expr& e, NodeId& next) {
  e.id = next++;
  if (auto* b = std::get_if<Expr::Binary>(&e.node)) {
    number_expr(*b->lhs, next);
    number_expr(*b->rhs, next);
  }
}

void number_block(Block& block, NodeId& next);

void number_stmt(Stmt& s, NodeId& next) {
  s.id = next++;
  std::visit(Overloaded{
                 [&](Stmt::Assign& a) {
                   a.target_id = next++;
                   number_expr(a.rhs, next);
                 },
                 [&](Stmt::While& w) {
                   number_expr(w.guard, next);
                   number_block(w.body, next);
                 },
                 [&](Stmt::If& i) {
                   number_expr(i.guard, next);
                   number_block(i.then_body, next);
                   number_block(i.else_body, next);
                 },
             },
             s.node);
}

void number_block(Block& block, NodeId& next) {
  for (auto& s : block) number_stmt(s, next);
}

bool equal_block(const Block& a, const Block& b);

bool equal_stmt(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto* x = std::get_if<Stmt::Assign>(&a.node)) {
    const auto& y = std::get<Stmt::Assign>(b.node);
    return x->target == y.target && x->op == y.op && structurally_equal(x->rhs, y.rhs);
  }
  if (auto* x = std::get_if<Stmt::While>(&a.node)) {
    const auto& y = std::get<Stmt::While>(b.node);
    return structurally_equal(x->guard, y.guard) && equal_block(x->body, y.body);
  }
  const auto& x = std::get<Stmt::If>(a.node);
  const auto& y = std::get<Stmt::If>(b.node);
  return structurally_equal(x.guard, y.guard) && equal_block(x.then_body, y.then_body) &&
         equal_block(x.else_body, y.else_body);
}

bool equal_block(const Block& a, const Block& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), equal_stmt);
}

struct Flattener {
  std::vector<AstNode> out;

  void emit(NodeId id, NodeKind kind, std::string lexeme, NodeId parent, int line, int depth) {
    if (static_cast<std::size_t>(id) >= out.size()) out.resize(id + 1);
    out[id] = AstNode{id, kind, std::move(lexeme), parent, line, depth};
  }

  void expr(const Expr& e, NodeId parent, int line, int depth) {
    std::visit(Overloaded{
                   [&](const Expr::Var& v) { emit(e.id, NodeKind::Var, v.name, parent, line, depth); },
                   [&](const Expr::Const& c) {
                     emit(e.id, NodeKind::Const, std::to_string(c.value), parent, line, depth);
                   },
                   [&](const Expr::Binary& b) {
                     emit(e.id, NodeKind::BinOp, std::string(to_string(b.op)), parent, line, depth);
                     expr(*b.lhs, e.id, line, depth);
                     expr(*b.rhs, e.id, line, depth);
                   },
               },
               e.node);
  }

  void block(const Block& b, NodeId parent, int depth) {
    for (const auto& s : b) stmt(s, parent, depth);
  }

  void stmt(const Stmt& s, NodeId parent, int depth) {
    std::visit(Overloaded{
                   [&](const Stmt::Assign& a) {
                     emit(s.id, NodeKind::Assign, std::string(to_string(a.op)), parent, s.line, depth);
                     emit(a.target_id, NodeKind::Var, a.target, s.id, s.line, depth);
                     expr(a.rhs, s.id, s.line, depth);
                   },
                   [&](const Stmt::While& w) {
                     emit(s.id, NodeKind::While, "", parent, s.line, depth + 1);
                     expr(w.guard, s.id, s.line, depth + 1);
                     block(w.body, s.id, depth + 1);
                   },
                   [&](const Stmt::If& i) {
                     emit(s.id, NodeKind::If, "", parent, s.line, depth);
                     expr(i.guard, s.id, s.line, depth);
                     block(i.then_body, s.id, depth);
                     block(i.else_body, s.id, depth);
                   },
               },
               s.node);
  }
};

const Stmt* find_in_block(const Block& block, NodeId id) {
  for (const auto& s : block) {
    if (s.id == id) return &s;
    const Stmt* found = nullptr;
    if (auto* w = std::get_if<Stmt::While>(&s.node)) {
      found = find_in_block(w->body, id);
    } else if (auto* i = std::get_if<Stmt::If>(&s.node)) {
      found = find_in_block(i->then_body, id);
      if (!found) found = find_in_block(i->else_body, id);
    }
    if (found) return found;
  }
  return nullptr;
}

void collect_whiles(const Block& block, std::vector<NodeId>& out) {
  for (const auto& s : block) {
    if (auto* w = std::get_if<Stmt::While>(&s.node)) {
      out.push_back(s.id);
      collect_whiles(w->body, out);
    } else if (auto* i = std::get_if<Stmt::If>(&s.node)) {
      collect_whiles(i->then_body, out);
      collect_whiles(i->else_body, out);
    }
  }
}

}  // namespace

void assign_node_ids(Program& p) {
  NodeId next = 0;
  p.root_id = next++;
  p.param_ids.clear();
  for (std::size_t i = 0; i < p.params.size(); ++i) p.param_ids.push_back(next++);
  number_block(p.body, next);
  p.node_count = next;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto* x = std::get_if<Expr::Var>(&a.node)) return x->name == std::get<Expr::Var>(b.node).name;
  if (auto* x = std::get_if<Expr::Const>(&a.node)) return x->value == std::get<Expr::Const>(b.node).value;
  const auto& x = std::get<Expr::Binary>(a.node);
  const auto& y = std::get<Expr::Binary>(b.node);
  return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
}

bool structurally_equal(const Program& a, const Program& b) {
  return a.name == b.name && a.params == b.params && equal_block(a.body, b.body);
}

std::vector<AstNode> flatten(const Program& p) {
  Flattener f;
  f.out.reserve(p.node_count);
  f.emit(p.root_id, NodeKind::Program, "", kNoNode, 1, 0);
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    f.emit(p.param_ids[i], NodeKind::Param, p.params[i], p.root_id, 1, 0);
  }
  f.block(p.body, p.root_id, 0);
  return std::move(f.out);
}

const Stmt* find_stmt(const Program& p, NodeId id) { return find_in_block(p.body, id); }

std::vector<NodeId> while_ids(const Program& p) {
  std::vector<NodeId> out;
  collect_whiles(p.body, out);
  return out;
}

void collect_reads(const Expr& e, std::vector<std::string>& out) {
  std::visit(Overloaded{
                 [&](const Expr::Var& v) {
                   if (std::find(out.begin(), out.end(), v.name) == out.end()) out.push_back(v.name);
                 },
                 [](const Expr::Const&) {},
                 [&](const Expr::Binary& b) {
                   collect_reads(*b.lhs, out);
                   collect_reads(*b.rhs, out);
                 },
             },
             e.node);
}

}  // namespace termgnn::lang
