#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sgas/tensor.hpp"

namespace sgas {

// One candidate operation on an edge: name, the shapes of its per-instance
// parameters, and a graph-building forward.
struct OpSpec {
  std::string name;
  std::vector<Shape> param_shapes;
  std::function<Tensor(const Tensor& x, std::span<const Tensor> params)> apply;
  bool is_zero = false;
};

// Ordered candidate set; alpha rows index into it positionally, so the order
// is fixed for the lifetime of a run. Contains exactly one zero operation.
class OperationSet {
 public:
  OperationSet(int width, std::vector<OpSpec> ops);

  int size() const { return static_cast<int>(ops_.size()); }
  int zero_index() const { return zero_; }
  int width() const { return width_; }
  const OpSpec& op(int i) const { return ops_.at(i); }
  int index_of(const std::string& name) const;  // throws on unknown name
  Eigen::Index param_count(int op) const;

 private:
  std::vector<OpSpec> ops_;
  int zero_ = -1;
  int width_ = 0;
};

// Default 6-op set on width-d feature vectors:
//   zero, identity, linear, relu_linear, gated_linear, bottleneck_linear.
// bottleneck_linear maps d -> d/2 -> d and needs width >= 2.
OperationSet toy_operation_set(int width);

}  // namespace sgas
