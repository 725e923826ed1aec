#include "termgnn/datagen/generator.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "termgnn/util/random.hpp"

namespace termgnn::datagen {

using lang::AssignOp;
using lang::BinOp;
using lang::Block;
using lang::Expr;
using lang::Stmt;

void validate(const GeneratorConfig& cfg) {
  if (cfg.min_loops < 1 || cfg.min_loops > cfg.max_loops) throw std::invalid_argument("need 1 <= min_loops <= max_loops");
  if (cfg.max_nesting < 1) throw std::invalid_argument("max_nesting must be at least 1");
  if (cfg.max_params < 1 || cfg.max_params > 4) throw std::invalid_argument("max_params must be in [1, 4]");
  if (cfg.straight_line_stmt_range.first < 0 || cfg.straight_line_stmt_range.first > cfg.straight_line_stmt_range.second) {
    throw std::invalid_argument("bad straight-line statement range");
  }
  if (cfg.constant_range.first > cfg.constant_range.second) throw std::invalid_argument("bad constant range");
  for (double q : {cfg.nest_probability, cfg.faulty_probability, cfg.branch_probability}) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("probabilities must be in [0, 1]");
  }
}

namespace {

const char* const kParamNames[] = {"a", "b", "c", "d"};
const char* const kScratch[] = {"x", "y", "z"};
const char* const kCounters[] = {"i", "j", "k", "m", "n"};

struct LoopShape {
  std::vector<int> children;
};

class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  lang::Program run() {
    lang::Program p;
    int n_params = static_cast<int>(rng_.uniform_int(std::min(2, cfg_.max_params), cfg_.max_params));
    for (int i = 0; i < n_params; ++i) {
      p.params.emplace_back(kParamNames[i]);
      defined_.insert(kParamNames[i]);
    }
    params_ = p.params;

    int n_loops = static_cast<int>(rng_.uniform_int(cfg_.min_loops, cfg_.max_loops));
    std::vector<int> roots = shape(n_loops);
    faulty_loop_ = rng_.bernoulli(cfg_.faulty_probability) ? static_cast<int>(rng_.index(n_loops)) : -1;
    for (int r : roots) {
      fillers(p.body, range(cfg_.straight_line_stmt_range));
      emit_loop(p.body, r, 1, {});
    }
    if (rng_.bernoulli(0.3)) fillers(p.body, range(cfg_.straight_line_stmt_range));
    lang::assign_node_ids(p);
    return p;
  }

 private:
  int range(std::pair<int, int> r) { return static_cast<int>(rng_.uniform_int(r.first, r.second)); }

  // Random loop forest; returns root indices in order.
  std::vector<int> shape(int n_loops) {
    shapes_.assign(n_loops, {});
    std::vector<int> depth(n_loops, 1);
    std::vector<int> roots;
    for (int k = 0; k < n_loops; ++k) {
      std::vector<int> hosts;
      for (int h = 0; h < k; ++h) {
        if (depth[h] < cfg_.max_nesting) hosts.push_back(h);
      }
      if (!hosts.empty() && rng_.bernoulli(cfg_.nest_probability)) {
        int h = hosts[rng_.index(hosts.size())];
        shapes_[h].children.push_back(k);
        depth[k] = depth[h] + 1;
      } else {
        roots.push_back(k);
      }
    }
    return roots;
  }

  std::int64_t constant() { return rng_.uniform_int(cfg_.constant_range.first, cfg_.constant_range.second); }

  Expr operand() {
    std::vector<std::string> vars(defined_.begin(), defined_.end());
    if (rng_.bernoulli(0.7)) return Expr::var(vars[rng_.index(vars.size())]);
    return Expr::constant(constant());
  }

  Stmt filler() {
    std::string target = kScratch[rng_.index(3)];
    bool known = defined_.count(target) != 0;
    Stmt s = Stmt::assign(target, AssignOp::Set, Expr::constant(0));
    auto& a = std::get<Stmt::Assign>(s.node);
    if (known && rng_.bernoulli(0.4)) {
      static const AssignOp ops[] = {AssignOp::Add, AssignOp::Sub, AssignOp::Mul};
      a.op = ops[rng_.index(3)];
      a.rhs = Expr::constant(rng_.uniform_int(1, 3));
    } else if (rng_.bernoulli(0.5)) {
      static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul};
      a.rhs = Expr::binary(ops[rng_.index(3)], operand(), operand());
    } else {
      a.rhs = operand();
    }
    defined_.insert(target);
    return s;
  }

  void fillers(Block& out, int n) {
    for (int i = 0; i < n; ++i) {
      if (rng_.bernoulli(cfg_.branch_probability)) {
        std::vector<std::string> vars(defined_.begin(), defined_.end());
        static const BinOp cmps[] = {BinOp::Gt, BinOp::Lt, BinOp::Ge, BinOp::Le, BinOp::Eq, BinOp::Ne};
        Expr guard = Expr::binary(cmps[rng_.index(6)], Expr::var(vars[rng_.index(vars.size())]),
                                  Expr::constant(constant()));
        Block then_body{filler()};
        Block else_body;
        if (rng_.bernoulli(0.5)) else_body.push_back(filler());
        out.push_back(Stmt::branch(std::move(guard), std::move(then_body), std::move(else_body)));
      } else {
        out.push_back(filler());
      }
    }
  }

  static Stmt update(const std::string& v, AssignOp op, Expr rhs) { return Stmt::assign(v, op, std::move(rhs)); }

  // Guard `v cmp bound`; `down` means progress lowers v (cmp is > or >=).
  struct Guard {
    std::string v;
    BinOp cmp = BinOp::Gt;
    bool bound_is_var = false;
    std::string bound_var;
    std::int64_t bound_const = 0;

    bool down() const { return cmp == BinOp::Gt || cmp == BinOp::Ge; }
    bool strict() const { return cmp == BinOp::Gt || cmp == BinOp::Lt; }
    Expr bound() const { return bound_is_var ? Expr::var(bound_var) : Expr::constant(bound_const); }
    Expr expr() const { return Expr::binary(cmp, Expr::var(v), bound()); }
  };

  // Statements that update the guard variables of a parameter loop.
  Block param_updates(const Guard& g, bool faulty, std::int64_t step) {
    AssignOp toward = g.down() ? AssignOp::Sub : AssignOp::Add;
    AssignOp away = g.down() ? AssignOp::Add : AssignOp::Sub;
    Block out;
    double u = rng_.uniform();
    if (!faulty) {
      if (u < 0.8 || !g.bound_is_var) {
        out.push_back(update(g.v, toward, Expr::constant(step)));
      } else {
        // Reset onto the bound: the guard fails on the next check.
        out.push_back(update(g.v, AssignOp::Set, g.bound()));
      }
      return out;
    }
    if (u < 0.6 || !g.bound_is_var) {
      out.push_back(update(g.v, away, Expr::constant(step)));
    } else {
      // Reset to a constant; loops forever whenever the constant passes the guard.
      std::int64_t c = rng_.uniform_int(0, 10) * (g.down() ? 1 : -1);
      out.push_back(update(g.v, AssignOp::Set, Expr::constant(c)));
    }
    return out;
  }

  void emit_loop(Block& out, int index, int depth, std::set<std::string> reserved) {
    const LoopShape& shape = shapes_[index];
    bool has_children = !shape.children.empty();
    bool faulty = index == faulty_loop_;

    std::vector<std::string> free_params;
    for (const auto& p : params_) {
      if (!reserved.count(p)) free_params.push_back(p);
    }
    bool counter_loop = depth >= 2 && (free_params.empty() || rng_.bernoulli(0.6));
    if (depth == 1 && free_params.empty()) counter_loop = true;

    Expr guard;
    Block updates;
    if (counter_loop) {
      std::string c = kCounters[std::min<std::size_t>(static_cast<std::size_t>(depth) - 1, 4)];
      std::int64_t start = rng_.uniform_int(0, 1);
      std::int64_t limit = rng_.uniform_int(2, has_children ? 4 : 6);
      bool up = rng_.bernoulli(0.6);
      out.push_back(update(c, AssignOp::Set, Expr::constant(up ? start : -start)));
      defined_.insert(c);
      guard = up ? Expr::binary(BinOp::Lt, Expr::var(c), Expr::constant(limit))
                 : Expr::binary(BinOp::Gt, Expr::var(c), Expr::constant(-limit));
      std::int64_t step = rng_.uniform_int(1, 2);
      AssignOp toward = up ? AssignOp::Add : AssignOp::Sub;
      AssignOp away = up ? AssignOp::Sub : AssignOp::Add;
      if (!faulty) {
        updates.push_back(update(c, toward, Expr::constant(step)));
      } else if (rng_.bernoulli(0.5)) {
        updates.push_back(update(c, away, Expr::constant(step)));
      } else {
        updates.push_back(update(c, AssignOp::Set, Expr::constant(up ? start : -start)));
      }
      reserved.insert(c);
    } else {
      Guard g;
      g.v = free_params[rng_.index(free_params.size())];
      g.cmp = rng_.bernoulli(0.9) ? BinOp::Gt : BinOp::Lt;
      std::vector<std::string> bounds;
      for (const auto& p : free_params) {
        if (p != g.v) bounds.push_back(p);
      }
      g.bound_is_var = !bounds.empty() && rng_.bernoulli(0.65);
      if (g.bound_is_var) {
        g.bound_var = bounds[rng_.index(bounds.size())];
      } else {
        g.bound_const = constant();
      }
      static const std::int64_t outer_steps[] = {50, 100, 200};
      std::int64_t step = has_children ? outer_steps[rng_.index(3)] : rng_.uniform_int(1, 3);
      guard = g.expr();
      updates = param_updates(g, faulty, step);
      reserved.insert(g.v);
      if (g.bound_is_var) reserved.insert(g.bound_var);
    }

    // Body: fillers, nested loops, and the guard update placed first or last.
    Block body;
    bool update_first = rng_.bernoulli(0.3);
    if (update_first) body.insert(body.end(), updates.begin(), updates.end());
    int n_fill = static_cast<int>(rng_.uniform_int(0, std::max<int>(0, 3 - static_cast<int>(updates.size()))));
    int before_children = static_cast<int>(rng_.uniform_int(0, n_fill));
    fillers(body, before_children);
    for (int child : shape.children) emit_loop(body, child, depth + 1, reserved);
    fillers(body, n_fill - before_children);
    if (!update_first) body.insert(body.end(), updates.begin(), updates.end());
    out.push_back(Stmt::loop(std::move(guard), std::move(body)));
  }

  const GeneratorConfig& cfg_;
  Rng rng_;
  std::vector<std::string> params_;
  std::set<std::string> defined_;
  std::vector<LoopShape> shapes_;
  int faulty_loop_ = -1;
};

}  // namespace

lang::Program generate_program(const GeneratorConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  return Generator(cfg, seed).run();
}

}  // namespace termgnn::datagen
