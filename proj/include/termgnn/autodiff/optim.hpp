#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "termgnn/autodiff/tape.hpp"

namespace termgnn::ad {

/// Uniform on +-sqrt(6 / (fan_in + fan_out)) with fan_in = rows, fan_out = cols.
Tensor glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One bias-corrected Adam update. Empty gradients count as zero.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

/// Builds a scalar loss from leaves holding the parameters.
using LossFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients with central differences for every entry
/// of every parameter. The relative error of an entry is
/// |g_a - g_n| / max(|g_a|, |g_n|, abs_floor).
GradCheckResult grad_check(const LossFn& f, std::vector<Tensor> params, double eps = 1e-5, double abs_floor = 1e-6);

}  // namespace termgnn::ad
