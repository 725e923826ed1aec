#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace termgnn::lang {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

enum class BinOp { Add, Sub, Mul, Gt, Lt, Ge, Le, Eq, Ne };
enum class AssignOp { Set, Add, Sub, Mul };

std::string_view to_string(BinOp op);
std::string_view to_string(AssignOp op);
bool is_comparison(BinOp op);

// Owning pointer with value semantics, so recursive AST nodes stay copyable.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

 private:
  std::unique_ptr<T> ptr_;
};

struct Expr {
  struct Var {
    std::string name;
  };
  struct Const {
    std::int64_t value = 0;
  };
  struct Binary {
    BinOp op = BinOp::Add;
    Box<Expr> lhs;
    Box<Expr> rhs;
  };

  std::variant<Var, Const, Binary> node;
  NodeId id = kNoNode;

  static Expr var(std::string name) { return Expr{Var{std::move(name)}}; }
  static Expr constant(std::int64_t v) { return Expr{Const{v}}; }
  static Expr binary(BinOp op, Expr lhs, Expr rhs) {
    return Expr{Binary{op, Box<Expr>(std::move(lhs)), Box<Expr>(std::move(rhs))}};
  }
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Stmt {
  struct Assign {
    std::string target;
    AssignOp op = AssignOp::Set;
    Expr rhs;
    NodeId target_id = kNoNode;  // graph node for the assigned variable
  };
  struct While {
    Expr guard;
    Block body;
  };
  struct If {
    Expr guard;
    Block then_body;
    Block else_body;
  };

  std::variant<Assign, While, If> node;
  NodeId id = kNoNode;
  int line = 0;
  int column = 0;

  static Stmt assign(std::string target, AssignOp op, Expr rhs) {
    return Stmt{Assign{std::move(target), op, std::move(rhs)}};
  }
  static Stmt loop(Expr guard, Block body) { return Stmt{While{std::move(guard), std::move(body)}}; }
  static Stmt branch(Expr guard, Block then_body, Block else_body = {}) {
    return Stmt{If{std::move(guard), std::move(then_body), std::move(else_body)}};
  }
};

struct Program {
  std::string name = "main";
  std::vector<std::string> params;
  Block body;

  NodeId root_id = kNoNode;
  std::vector<NodeId> param_ids;
  int node_count = 0;
};

/// Assigns node ids in pre-order starting at 0: the program root, then one
/// node per parameter, then statements. An assignment is followed by its
/// target variable node and its right-hand side; loops and branches are
/// followed by their guard expression and then their bodies.
void assign_node_ids(Program& p);

/// Structural equality ignoring node ids and source positions.
bool structurally_equal(const Program& a, const Program& b);
bool structurally_equal(const Expr& a, const Expr& b);

enum class NodeKind { Program, Param, Assign, While, If, Var, Const, BinOp };

std::string_view to_string(NodeKind kind);

/// One entry per AST node, indexed by node id.
struct AstNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::Program;
  std::string lexeme;
  NodeId parent = kNoNode;
  int line = 0;
  int loop_depth = 0;  // number of enclosing While statements (a While counts itself)
};

/// Flattens a program with assigned ids into a node table in id order.
std::vector<AstNode> flatten(const Program& p);

/// Finds a statement by node id, or nullptr.
const Stmt* find_stmt(const Program& p, NodeId id);

/// Node ids of all While statements in pre-order.
std::vector<NodeId> while_ids(const Program& p);

/// Variables read by an expression, in first-occurrence order.
void collect_reads(const Expr& e, std::vector<std::string>& out);

}  // namespace termgnn::lang
