#pragma once

#include <functional>
#include <span>

#include "sgas/tensor.hpp"

namespace sgas {

struct GradCheckReport {
  double max_rel_err = 0.0;
  int worst_param = -1;          // index into the flattened parameter list
  Eigen::Index worst_entry = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares analytic gradients against central finite differences.
//
// build_loss must construct a fresh scalar-loss graph from the current values
// of `params` on every call. Relative error uses max(|analytic|, |numeric|, 1e-6)
// as denominator; all arithmetic is in float64.
GradCheckReport grad_check(const std::function<Tensor(std::span<const Tensor>)>& build_loss,
                           std::span<Tensor> params, double step = 1e-4);

}  // namespace sgas
