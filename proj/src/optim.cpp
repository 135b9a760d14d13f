#include "sgas/optim.hpp"

#include <cmath>

namespace sgas {

Optimizer Optimizer::sgd_momentum(const SgdConfig& cfg) {
  return Optimizer(Kind::SgdMomentum, cfg, {});
}

Optimizer Optimizer::adam(const AdamConfig& cfg) { return Optimizer(Kind::Adam, {}, cfg); }

void Optimizer::step(std::span<const Tensor> params) {
  ++step_count_;
  const double clip = kind_ == Kind::SgdMomentum ? sgd_.clip_norm : adam_.clip_norm;
  double scale = 1.0;
  if (clip > 0.0) {
    double total_sq = 0.0;
    for (const Tensor& p : params) {
      Tensor t = p;
      total_sq += t.grad().squaredNorm();
    }
    const double norm = std::sqrt(total_sq);
    if (norm > clip) scale = clip / norm;
  }
  for (const Tensor& p : params) {
    Tensor t = p;
    Slot& slot = slots_[t.id()];
    if (slot.m.size() != t.numel()) {
      slot.m = Vec::Zero(t.numel());
      if (kind_ == Kind::Adam) slot.v = Vec::Zero(t.numel());
    }
    const Vec g0 = scale * t.grad();
    if (kind_ == Kind::SgdMomentum) {
      Vec g = g0 + sgd_.weight_decay * t.value();
      if (sgd_.momentum != 0.0) {
        slot.m = sgd_.momentum * slot.m + g;
        t.value() -= sgd_.lr * slot.m;
      } else {
        t.value() -= sgd_.lr * g;
      }
    } else {
      Vec g = g0 + adam_.weight_decay * t.value();
      slot.m = adam_.beta1 * slot.m + (1.0 - adam_.beta1) * g;
      slot.v = adam_.beta2 * slot.v + (1.0 - adam_.beta2) * g.cwiseProduct(g);
      const double bc1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(step_count_));
      const double bc2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(step_count_));
      t.value().array() -= adam_.lr * (slot.m.array() / bc1) /
                           ((slot.v.array() / bc2).sqrt() + adam_.eps);
    }
    if (!all_finite(t.value())) {
      throw Error("optimizer: non-finite parameter after step " + std::to_string(step_count_));
    }
  }
}

}  // namespace sgas
