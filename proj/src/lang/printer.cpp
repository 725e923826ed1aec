#include "termgnn/lang/printer.hpp"

#include <sstream>

#include "termgnn/util/overloaded.hpp"

namespace termgnn::lang {

namespace {

int precedence(const Expr& e) {
  const auto* b = std::get_if<Expr::Binary>(&e.node);
  if (!b) return 4;
  if (is_comparison(b->op)) return 1;
  if (b->op == BinOp::Mul) return 3;
  return 2;
}

void print_expr(const Expr& e, std::ostream& os) {
  std::visit(Overloaded{
                 [&](const Expr::Var& v) { os << v.name; },
                 [&](const Expr::Const& c) { os << c.value; },
                 [&](const Expr::Binary& b) {
                   int p = precedence(e);
                   bool lhs_parens = precedence(*b.lhs) < p;
                   bool rhs_parens = precedence(*b.rhs) <= p;
                   if (lhs_parens) os << '(';
                   print_expr(*b.lhs, os);
                   if (lhs_parens) os << ')';
                   os << ' ' << to_string(b.op) << ' ';
                   if (rhs_parens) os << '(';
                   print_expr(*b.rhs, os);
                   if (rhs_parens) os << ')';
                 },
             },
             e.node);
}

void print_block(const Block& block, int depth, std::ostream& os);

void print_suite(const Block& block, int depth, std::ostream& os) {
  if (block.empty()) {
    os << std::string(4 * depth, ' ') << "pass\n";
  } else {
    print_block(block, depth, os);
  }
}

void print_block(const Block& block, int depth, std::ostream& os) {
  const std::string pad(4 * depth, ' ');
  for (const auto& s : block) {
    os << pad << statement_text(s) << '\n';
    if (const auto* w = std::get_if<Stmt::While>(&s.node)) {
      print_suite(w->body, depth + 1, os);
    } else if (const auto* i = std::get_if<Stmt::If>(&s.node)) {
      print_suite(i->then_body, depth + 1, os);
      if (!i->else_body.empty()) {
        os << pad << "else:\n";
        print_block(i->else_body, depth + 1, os);
      }
    }
  }
}

}  // namespace

std::string to_source(const Expr& e) {
  std::ostringstream os;
  print_expr(e, os);
  return os.str();
}

std::string statement_text(const Stmt& s) {
  return std::visit(Overloaded{
                        [](const Stmt::Assign& a) {
                          return a.target + " " + std::string(to_string(a.op)) + " " + to_source(a.rhs);
                        },
                        [](const Stmt::While& w) { return "while " + to_source(w.guard) + ":"; },
                        [](const Stmt::If& i) { return "if " + to_source(i.guard) + ":"; },
                    },
                    s.node);
}

std::string pretty_print(const Program& p) {
  std::ostringstream os;
  os << "def " << p.name << '(';
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    if (i) os << ", ";
    os << p.params[i];
  }
  os << "):\n";
  print_block(p.body, 1, os);
  return os.str();
}

}  // namespace termgnn::lang
