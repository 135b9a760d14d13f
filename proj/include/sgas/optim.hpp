#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include "sgas/tensor.hpp"

namespace sgas {

struct SgdConfig {
  double lr = 0.025;
  double momentum = 0.9;
  double weight_decay = 3e-4;
  double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double weight_decay = 1e-3;
  double eps = 1e-8;
  double clip_norm = 0.0;
};

// SGD-with-momentum or bias-corrected Adam. Gradient clipping rescales the
// joint gradient norm of the parameter list before weight decay is folded in
// as L2. Auxiliary buffers are keyed by tensor id, so parameters may be
// dropped (pruned) between steps. step() reads grads and updates values; it
// never touches the stored grads.
class Optimizer {
 public:
  static Optimizer sgd_momentum(const SgdConfig& cfg);
  static Optimizer adam(const AdamConfig& cfg);

  void step(std::span<const Tensor> params);
  std::int64_t steps_taken() const { return step_count_; }

 private:
  enum class Kind { SgdMomentum, Adam };
  Optimizer(Kind k, SgdConfig s, AdamConfig a) : kind_(k), sgd_(s), adam_(a) {}

  struct Slot {
    Vec m;  // momentum / first moment
    Vec v;  // second moment (Adam)
  };

  Kind kind_;
  SgdConfig sgd_;
  AdamConfig adam_;
  std::int64_t step_count_ = 0;
  std::unordered_map<std::uint64_t, Slot> slots_;
};

}  // namespace sgas
