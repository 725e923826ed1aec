#pragma once

#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace termgnn::ad {

/// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1 matrices.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t index = -1;

  const Tensor& value() const;
  const Tensor& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode tape. Operations append nodes in evaluation order; backward()
/// walks them in reverse and accumulates gradients into nodes that need them.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = false);

  /// Seeds d(out)/d(out) = 1 for a 1 x 1 output and runs the backward pass.
  void backward(Var out);

  const Tensor& value(std::int32_t i) const { return nodes_[i].value; }
  const Tensor& grad(std::int32_t i) const { return nodes_[i].grad; }
  bool requires_grad(std::int32_t i) const { return nodes_[i].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds g to the gradient of node i if it participates in differentiation.
  template <class Expr>
  void accumulate(std::int32_t i, const Expr& g) {
    Node& n = nodes_[i];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Backward rule of a recorded op: receives the tape, the gradient of the
  /// op's result and the result's own node index.
  using Backward = std::function<void(Tape&, const Tensor&, std::int32_t)>;

  /// Records an op result. The rule is dropped when no input needs gradients.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  /// Smallest |x| fed to relu or leaky_relu so far. Finite differences with
  /// a step above this may straddle a kink.
  double kink_margin() const { return kink_margin_; }
  void note_kink_distance(double d) { kink_margin_ = std::min(kink_margin_, d); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

inline const Tensor& Var::value() const { return tape->value(index); }
inline const Tensor& Var::grad() const { return tape->grad(index); }

// Linear algebra and elementwise ops.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_bias(Var a, Var bias);  // bias is 1 x cols, added to every row
Var scale(Var a, double s);
Var affine(Var a, double s, double shift);  // s * a + shift
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var tanh(Var a);

// Structural ops.
Var concat_cols(Var a, Var b);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var select_column(Var a, Eigen::Index col);
Var gather_rows(Var a, std::span<const std::int32_t> index);
Var scatter_add_rows(Var a, std::span<const std::int32_t> index, Eigen::Index n_rows);
Var scale_rows(Var a, std::span<const double> coeff);
Var mul_rows(Var a, Var s);  // row i of a times scalar s(i, 0)
Var sum_all(Var a);

// Normalizations and reductions.
Var softmax_rows(Var a);
/// Softmax of a column vector within segments; segment[i] names the group of
/// row i. Rows of one segment need not be contiguous.
Var softmax_over_segments(Var a, std::span<const std::int32_t> segment, Eigen::Index n_segments);
Var mean_rows_by_group(Var a, std::span<const std::int32_t> group, Eigen::Index n_groups);

// Losses over a column of probabilities, averaged over rows. Probabilities
// are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;
Var binary_cross_entropy(Var p, std::span<const double> y);
Var focal_loss(Var p, std::span<const double> y, double gamma, double alpha);

// Scalar reference forms.
double cross_entropy(double y, double y_hat);
double focal_loss(double y, double p, double gamma, double alpha);

}  // namespace termgnn::ad
