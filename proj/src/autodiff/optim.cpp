#include "termgnn/autodiff/optim.hpp"

#include <algorithm>
#include <cmath>

#include "termgnn/util/random.hpp"

namespace termgnn::ad {

Tensor glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  Tensor out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(-limit, limit);
  return out;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.push_back(Tensor::Zero(p->rows(), p->cols()));
      state.v.push_back(Tensor::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameters");
  ++state.step;
  double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    if (state.m[k].rows() != p.rows() || state.m[k].cols() != p.cols()) {
      throw ShapeError("adam_step: moment shape does not match parameter");
    }
    if (g.size() == 0) {
      state.m[k] *= state.beta1;
      state.v[k] *= state.beta2;
    } else {
      if (g.rows() != p.rows() || g.cols() != p.cols()) throw ShapeError("adam_step: gradient shape mismatch");
      state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
      state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g.cwiseProduct(g);
    }
    p.array() -= state.learning_rate * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + state.eps);
  }
}

GradCheckResult grad_check(const LossFn& f, std::vector<Tensor> params, double eps, double abs_floor) {
  auto evaluate = [&](bool grads, std::vector<Tensor>* out_grads) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(tape.leaf(p, grads));
    Var loss = f(tape, vars);
    if (grads) {
      tape.backward(loss);
      for (std::size_t k = 0; k < vars.size(); ++k) {
        const Tensor& g = vars[k].grad();
        out_grads->push_back(g.size() ? g : Tensor::Zero(params[k].rows(), params[k].cols()));
      }
    }
    return loss.value()(0, 0);
  };

  std::vector<Tensor> analytic;
  evaluate(true, &analytic);

  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      double orig = params[k].data()[i];
      params[k].data()[i] = orig + eps;
      double up = evaluate(false, nullptr);
      params[k].data()[i] = orig - eps;
      double down = evaluate(false, nullptr);
      params[k].data()[i] = orig;
      double numeric = (up - down) / (2.0 * eps);
      double ga = analytic[k].data()[i];
      double denom = std::max({std::abs(ga), std::abs(numeric), abs_floor});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(ga - numeric) / denom);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace termgnn::ad
