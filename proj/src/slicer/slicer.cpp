#include "termgnn/slicer/slicer.hpp"

#include <algorithm>
#include <set>

#include "termgnn/util/overloaded.hpp"

namespace termgnn::slicer {

using lang::Block;
using lang::NodeId;
using lang::Stmt;
using VarSet = std::set<std::string>;

namespace {

VarSet reads(const lang::Expr& e) {
  std::vector<std::string> v;
  lang::collect_reads(e, v);
  return {v.begin(), v.end()};
}

void merge(VarSet& into, const VarSet& from) { into.insert(from.begin(), from.end()); }

// Backward relevance analysis over the structured AST. `relevant` holds the
// variables live for the criterion after the statement; on return it holds
// them before it. Kept statement ids go into `kept`.
class Analysis {
 public:
  explicit Analysis(NodeId target) : target_(target) {}

  std::set<NodeId> kept;

  void block(const Block& b, VarSet& relevant) {
    for (auto it = b.rbegin(); it != b.rend(); ++it) stmt(*it, relevant);
  }

 private:
  bool any_kept(const Block& b) const {
    return std::any_of(b.begin(), b.end(), [&](const Stmt& s) { return kept.count(s.id) != 0; });
  }

  void stmt(const Stmt& s, VarSet& relevant) {
    std::visit(Overloaded{
                   [&](const Stmt::Assign& a) {
                     if (!relevant.count(a.target)) return;
                     kept.insert(s.id);
                     if (a.op == lang::AssignOp::Set) relevant.erase(a.target);
                     merge(relevant, reads(a.rhs));
                   },
                   [&](const Stmt::If& i) {
                     VarSet then_in = relevant, else_in = relevant;
                     block(i.then_body, then_in);
                     block(i.else_body, else_in);
                     relevant = then_in;
                     merge(relevant, else_in);
                     if (any_kept(i.then_body) || any_kept(i.else_body)) {
                       kept.insert(s.id);
                       merge(relevant, reads(i.guard));
                     }
                   },
                   [&](const Stmt::While& w) {
                     // Iterate to a fixpoint: the head sees what is live after
                     // the loop and whatever the body needs on the next pass.
                     VarSet head = relevant;
                     bool keep = s.id == target_;
                     if (keep) merge(head, reads(w.guard));
                     for (;;) {
                       VarSet body_in = head;
                       block(w.body, body_in);
                       VarSet next = relevant;
                       merge(next, body_in);
                       keep = keep || any_kept(w.body);
                       if (keep) merge(next, reads(w.guard));
                       if (next == head) break;
                       head = std::move(next);
                     }
                     if (keep) kept.insert(s.id);
                     relevant = std::move(head);
                   },
               },
               s.node);
  }

  NodeId target_;
};

Block rebuild(const Block& b, const std::set<NodeId>& kept) {
  Block out;
  for (const auto& s : b) {
    if (!kept.count(s.id)) continue;
    Stmt copy = s;
    std::visit(Overloaded{
                   [](Stmt::Assign&) {},
                   [&](Stmt::While& w) { w.body = rebuild(w.body, kept); },
                   [&](Stmt::If& i) {
                     i.then_body = rebuild(i.then_body, kept);
                     i.else_body = rebuild(i.else_body, kept);
                   },
               },
               copy.node);
    out.push_back(std::move(copy));
  }
  return out;
}

// Index path from the program body down to the statement with id `target`.
bool path_to(const Block& b, NodeId target, std::vector<std::size_t>& path) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    path.push_back(i);
    if (b[i].id == target) return true;
    bool found = std::visit(Overloaded{
                                [](const Stmt::Assign&) { return false; },
                                [&](const Stmt::While& w) { return path_to(w.body, target, path); },
                                [&](const Stmt::If& s) {
                                  path.push_back(0);
                                  if (path_to(s.then_body, target, path)) return true;
                                  path.back() = 1;
                                  if (path_to(s.else_body, target, path)) return true;
                                  path.pop_back();
                                  return false;
                                },
                            },
                            b[i].node);
    if (found) return true;
    path.pop_back();
  }
  return false;
}

const Stmt& follow(const Block& b, const std::vector<std::size_t>& path) {
  const Block* cur = &b;
  const Stmt* s = nullptr;
  for (std::size_t k = 0; k < path.size(); ++k) {
    s = &(*cur)[path[k]];
    if (const auto* w = std::get_if<Stmt::While>(&s->node)) {
      cur = &w->body;
    } else if (const auto* i = std::get_if<Stmt::If>(&s->node)) {
      cur = path[++k] == 0 ? &i->then_body : &i->else_body;
    }
  }
  return *s;
}

}  // namespace

Slice slice_for_loop(const lang::Program& p, NodeId loop) {
  const Stmt* target = lang::find_stmt(p, loop);
  if (!target || !std::holds_alternative<Stmt::While>(target->node)) {
    throw SliceError("node " + std::to_string(loop) + " is not a while loop");
  }
  Analysis a(loop);
  VarSet relevant;
  a.block(p.body, relevant);

  Slice out;
  out.program.name = p.name;
  out.program.body = rebuild(p.body, a.kept);
  // `relevant` now holds the variables whose entry values the slice reads.
  for (const auto& name : p.params) {
    if (relevant.count(name)) out.program.params.push_back(name);
  }
  std::vector<std::size_t> path;
  path_to(out.program.body, loop, path);
  lang::assign_node_ids(out.program);
  out.loop = follow(out.program.body, path).id;
  return out;
}

std::optional<interp::Inputs> find_witness(const lang::Program& p, NodeId loop, const interp::FuzzOptions& opts) {
  interp::CompiledProgram prog(p);
  std::size_t n = p.params.empty() ? std::min<std::size_t>(opts.n_inputs, 1) : opts.n_inputs;
  for (std::size_t k = 0; k < n; ++k) {
    interp::Inputs inputs = interp::sample_inputs(p, k, opts);
    if (std::holds_alternative<interp::Terminated>(prog.run(inputs, opts.step_budget))) continue;
    auto loops = interp::implicated_loops(p, inputs, opts.step_budget);
    if (std::find(loops.begin(), loops.end(), loop) != loops.end()) return inputs;
  }
  return std::nullopt;
}

}  // namespace termgnn::slicer
