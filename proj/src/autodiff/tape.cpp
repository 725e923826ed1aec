#include "termgnn/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace termgnn::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

std::vector<std::int32_t> copy_index(std::span<const std::int32_t> s) { return {s.begin(), s.end()}; }

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, requires_grad});
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 Backward backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_[v.index].requires_grad;
  nodes_.push_back(Node{std::move(value), Tensor(), needs ? std::move(backward) : nullptr, needs});
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var out) {
  require(out.rows() == 1 && out.cols() == 1, "backward: output must be 1x1");
  if (!nodes_[out.index].requires_grad) return;
  nodes_[out.index].grad = Tensor::Ones(1, 1);
  for (std::int32_t i = out.index; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) {
      Tensor g = n.grad;
      n.backward(*this, g, i);
    }
  }
}

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tensor out = a.value() * b.value();
  std::int32_t ia = a.index, ib = b.index;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g, std::int32_t) {
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  std::int32_t ia = a.index, ib = b.index;
  return a.tape->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  std::int32_t ia = a.index, ib = b.index;
  return a.tape->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  std::int32_t ia = a.index, ib = b.index;
  return a.tape->record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, const Tensor& g, std::int32_t) {
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var add_bias(Var a, Var bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias: bias must be 1 x cols");
  Tensor out = a.value().rowwise() + bias.value().row(0);
  std::int32_t ia = a.index, ib = bias.index;
  return a.tape->record(std::move(out), {a, bias}, [ia, ib](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double s, double shift) {
  Tensor out = (a.value().array() * s + shift).matrix();
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia, s](Tape& t, const Tensor& g, std::int32_t) { t.accumulate(ia, g * s); });
}

Var relu(Var a) {
  if (a.value().size()) a.tape->note_kink_distance(a.value().cwiseAbs().minCoeff());
  Tensor out = a.value().cwiseMax(0.0);
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, (t.value(ia).array() > 0.0).select(g, 0.0).matrix());
  });
}

Var leaky_relu(Var a, double slope) {
  if (a.value().size()) a.tape->note_kink_distance(a.value().cwiseAbs().minCoeff());
  Tensor out = (a.value().array() > 0.0).select(a.value(), a.value() * slope);
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia, slope](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, (t.value(ia).array() > 0.0).select(g, g * slope).matrix());
  });
}

Var sigmoid(Var a) {
  Tensor out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, const Tensor& g, std::int32_t self) {
    const auto y = t.value(self).array();
    t.accumulate(ia, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a) {
  Tensor out = a.value().array().tanh().matrix();
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, const Tensor& g, std::int32_t self) {
    const auto y = t.value(self).array();
    t.accumulate(ia, (g.array() * (1.0 - y * y)).matrix());
  });
}

Var concat_cols(Var a, Var b) {
  require(a.rows() == b.rows(), "concat_cols: row counts differ");
  Tensor out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  std::int32_t ia = a.index, ib = b.index;
  Eigen::Index ca = a.cols(), cb = b.cols();
  return a.tape->record(std::move(out), {a, b}, [ia, ib, ca, cb](Tape& t, const Tensor& g, std::int32_t) {
    if (t.requires_grad(ia)) t.accumulate(ia, g.leftCols(ca));
    if (t.requires_grad(ib)) t.accumulate(ib, g.rightCols(cb));
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: range out of bounds");
  Tensor out = a.value().middleRows(start, count);
  std::int32_t ia = a.index;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape->record(std::move(out), {a}, [ia, start, count, rows, cols](Tape& t, const Tensor& g, std::int32_t) {
    Tensor full = Tensor::Zero(rows, cols);
    full.middleRows(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var select_column(Var a, Eigen::Index col) {
  require(col >= 0 && col < a.cols(), "select_column: column out of range");
  Tensor out = a.value().col(col);
  std::int32_t ia = a.index;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape->record(std::move(out), {a}, [ia, col, rows, cols](Tape& t, const Tensor& g, std::int32_t) {
    Tensor full = Tensor::Zero(rows, cols);
    full.col(col) = g.col(0);
    t.accumulate(ia, full);
  });
}

Var gather_rows(Var a, std::span<const std::int32_t> index) {
  Tensor out(static_cast<Eigen::Index>(index.size()), a.cols());
  const Tensor& v = a.value();
  for (std::size_t r = 0; r < index.size(); ++r) {
    require(index[r] >= 0 && index[r] < v.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = v.row(index[r]);
  }
  std::int32_t ia = a.index;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape->record(std::move(out), {a}, [ia, idx = copy_index(index), rows, cols](Tape& t, const Tensor& g, std::int32_t) {
    Tensor full = Tensor::Zero(rows, cols);
    for (std::size_t r = 0; r < idx.size(); ++r) full.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
    t.accumulate(ia, full);
  });
}

Var scatter_add_rows(Var a, std::span<const std::int32_t> index, Eigen::Index n_rows) {
  require(static_cast<Eigen::Index>(index.size()) == a.rows(), "scatter_add_rows: one index per row required");
  Tensor out = Tensor::Zero(n_rows, a.cols());
  const Tensor& v = a.value();
  for (std::size_t r = 0; r < index.size(); ++r) {
    require(index[r] >= 0 && index[r] < n_rows, "scatter_add_rows: index out of range");
    out.row(index[r]) += v.row(static_cast<Eigen::Index>(r));
  }
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia, idx = copy_index(index)](Tape& t, const Tensor& g, std::int32_t) {
    Tensor back(static_cast<Eigen::Index>(idx.size()), g.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) back.row(static_cast<Eigen::Index>(r)) = g.row(idx[r]);
    t.accumulate(ia, back);
  });
}

Var scale_rows(Var a, std::span<const double> coeff) {
  require(static_cast<Eigen::Index>(coeff.size()) == a.rows(), "scale_rows: one coefficient per row required");
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(coeff.data(), static_cast<Eigen::Index>(coeff.size()));
  Tensor out = c.asDiagonal() * a.value();
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia, c](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, c.asDiagonal() * g);
  });
}

Var mul_rows(Var a, Var s) {
  require(s.cols() == 1 && s.rows() == a.rows(), "mul_rows: scale must be rows x 1");
  Tensor out = s.value().col(0).asDiagonal() * a.value();
  std::int32_t ia = a.index, is = s.index;
  return a.tape->record(std::move(out), {a, s}, [ia, is](Tape& t, const Tensor& g, std::int32_t) {
    if (t.requires_grad(ia)) t.accumulate(ia, t.value(is).col(0).asDiagonal() * g);
    if (t.requires_grad(is)) t.accumulate(is, g.cwiseProduct(t.value(ia)).rowwise().sum());
  });
}

Var sum_all(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  std::int32_t ia = a.index;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape->record(std::move(out), {a}, [ia, rows, cols](Tape& t, const Tensor& g, std::int32_t) {
    t.accumulate(ia, Tensor::Constant(rows, cols, g(0, 0)));
  });
}

Var softmax_rows(Var a) {
  Tensor out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, const Tensor& g, std::int32_t self) {
    const Tensor& p = t.value(self);
    Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
    Tensor back = p.cwiseProduct(g.colwise() - dot);
    t.accumulate(ia, back);
  });
}

Var softmax_over_segments(Var a, std::span<const std::int32_t> segment, Eigen::Index n_segments) {
  require(a.cols() == 1, "softmax_over_segments: input must be a column");
  require(static_cast<Eigen::Index>(segment.size()) == a.rows(), "softmax_over_segments: one segment id per row");
  const Tensor& v = a.value();
  std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < segment.size(); ++r) {
    require(segment[r] >= 0 && segment[r] < n_segments, "softmax_over_segments: segment out of range");
    mx[segment[r]] = std::max(mx[segment[r]], v(static_cast<Eigen::Index>(r), 0));
  }
  Tensor out(v.rows(), 1);
  std::vector<double> total(n_segments, 0.0);
  for (std::size_t r = 0; r < segment.size(); ++r) {
    double e = std::exp(v(static_cast<Eigen::Index>(r), 0) - mx[segment[r]]);
    out(static_cast<Eigen::Index>(r), 0) = e;
    total[segment[r]] += e;
  }
  for (std::size_t r = 0; r < segment.size(); ++r) out(static_cast<Eigen::Index>(r), 0) /= total[segment[r]];

  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a},
                        [ia, seg = copy_index(segment), n_segments](Tape& t, const Tensor& g, std::int32_t self) {
                          const Tensor& p = t.value(self);
                          std::vector<double> dot(n_segments, 0.0);
                          for (std::size_t r = 0; r < seg.size(); ++r) {
                            auto i = static_cast<Eigen::Index>(r);
                            dot[seg[r]] += g(i, 0) * p(i, 0);
                          }
                          Tensor back(p.rows(), 1);
                          for (std::size_t r = 0; r < seg.size(); ++r) {
                            auto i = static_cast<Eigen::Index>(r);
                            back(i, 0) = p(i, 0) * (g(i, 0) - dot[seg[r]]);
                          }
                          t.accumulate(ia, back);
                        });
}

Var mean_rows_by_group(Var a, std::span<const std::int32_t> group, Eigen::Index n_groups) {
  require(static_cast<Eigen::Index>(group.size()) == a.rows(), "mean_rows_by_group: one group id per row");
  std::vector<double> count(n_groups, 0.0);
  for (auto gid : group) {
    require(gid >= 0 && gid < n_groups, "mean_rows_by_group: group out of range");
    count[gid] += 1.0;
  }
  for (double c : count) require(c > 0.0, "mean_rows_by_group: empty group");
  Tensor out = Tensor::Zero(n_groups, a.cols());
  const Tensor& v = a.value();
  for (std::size_t r = 0; r < group.size(); ++r) out.row(group[r]) += v.row(static_cast<Eigen::Index>(r));
  for (Eigen::Index k = 0; k < n_groups; ++k) out.row(k) /= count[k];
  std::int32_t ia = a.index;
  return a.tape->record(std::move(out), {a}, [ia, grp = copy_index(group), count](Tape& t, const Tensor& g, std::int32_t) {
    Tensor back(static_cast<Eigen::Index>(grp.size()), g.cols());
    for (std::size_t r = 0; r < grp.size(); ++r) {
      back.row(static_cast<Eigen::Index>(r)) = g.row(grp[r]) / count[grp[r]];
    }
    t.accumulate(ia, back);
  });
}

Var binary_cross_entropy(Var p, std::span<const double> y) {
  require(p.cols() == 1 && static_cast<Eigen::Index>(y.size()) == p.rows(), "binary_cross_entropy: shape mismatch");
  const Tensor& v = p.value();
  double n = static_cast<double>(y.size());
  Tensor out = Tensor::Zero(1, 1);
  for (std::size_t r = 0; r < y.size(); ++r) out(0, 0) += cross_entropy(y[r], v(static_cast<Eigen::Index>(r), 0));
  out(0, 0) /= n;
  std::int32_t ip = p.index;
  return p.tape->record(std::move(out), {p}, [ip, yy = std::vector<double>(y.begin(), y.end()), n](Tape& t, const Tensor& g, std::int32_t) {
    const Tensor& v = t.value(ip);
    Tensor back(v.rows(), 1);
    for (std::size_t r = 0; r < yy.size(); ++r) {
      auto i = static_cast<Eigen::Index>(r);
      double raw = v(i, 0);
      double q = clamp_prob(raw);
      // Clamping makes the loss flat outside the bounds.
      double d = (raw != q) ? 0.0 : -(yy[r] / q) + (1.0 - yy[r]) / (1.0 - q);
      back(i, 0) = g(0, 0) * d / n;
    }
    t.accumulate(ip, back);
  });
}

Var focal_loss(Var p, std::span<const double> y, double gamma, double alpha) {
  require(p.cols() == 1 && static_cast<Eigen::Index>(y.size()) == p.rows(), "focal_loss: shape mismatch");
  const Tensor& v = p.value();
  double n = static_cast<double>(y.size());
  Tensor out = Tensor::Zero(1, 1);
  for (std::size_t r = 0; r < y.size(); ++r) out(0, 0) += focal_loss(y[r], v(static_cast<Eigen::Index>(r), 0), gamma, alpha);
  out(0, 0) /= n;
  std::int32_t ip = p.index;
  return p.tape->record(
      std::move(out), {p}, [ip, yy = std::vector<double>(y.begin(), y.end()), n, gamma, alpha](Tape& t, const Tensor& g, std::int32_t) {
        const Tensor& v = t.value(ip);
        Tensor back(v.rows(), 1);
        for (std::size_t r = 0; r < yy.size(); ++r) {
          auto i = static_cast<Eigen::Index>(r);
          double raw = v(i, 0);
          double q = clamp_prob(raw);
          double d = 0.0;
          if (raw == q) {
            bool pos = yy[r] > 0.5;
            double pt = pos ? q : 1.0 - q;
            double at = pos ? alpha : 1.0 - alpha;
            // d/dpt of -at (1-pt)^gamma log pt
            double dpt = at * (gamma * std::pow(1.0 - pt, gamma - 1.0) * std::log(pt) - std::pow(1.0 - pt, gamma) / pt);
            if (gamma == 0.0) dpt = -at / pt;
            d = pos ? dpt : -dpt;
          }
          back(i, 0) = g(0, 0) * d / n;
        }
        t.accumulate(ip, back);
      });
}

double cross_entropy(double y, double y_hat) {
  double q = clamp_prob(y_hat);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double focal_loss(double y, double p, double gamma, double alpha) {
  double q = clamp_prob(p);
  bool pos = y > 0.5;
  double pt = pos ? q : 1.0 - q;
  double at = pos ? alpha : 1.0 - alpha;
  return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

}  // namespace termgnn::ad
