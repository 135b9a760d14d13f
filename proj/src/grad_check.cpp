#include "sgas/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace sgas {

GradCheckReport grad_check(const std::function<Tensor(std::span<const Tensor>)>& build_loss,
                           std::span<Tensor> params, double step) {
  for (Tensor& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  Tensor loss = build_loss(params);
  if (!loss.is_scalar()) throw Error("grad_check: loss must be scalar");
  check_finite(loss, "grad_check");
  backward(loss);

  std::vector<Vec> analytic;
  analytic.reserve(params.size());
  for (Tensor& p : params) {
    if (!all_finite(p.grad())) throw Error("grad_check: non-finite analytic gradient");
    analytic.push_back(p.grad());
  }

  auto eval = [&]() {
    Tensor l = build_loss(params);
    check_finite(l, "grad_check");
    return l.item();
  };

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    for (Eigen::Index i = 0; i < p.numel(); ++i) {
      const double saved = p.value()[i];
      p.value()[i] = saved + step;
      const double up = eval();
      p.value()[i] = saved - step;
      const double down = eval();
      p.value()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = static_cast<int>(pi);
        report.worst_entry = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace sgas
