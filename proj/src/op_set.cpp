#include "sgas/op_set.hpp"

namespace sgas {

OperationSet::OperationSet(int width, std::vector<OpSpec> ops)
    : ops_(std::move(ops)), width_(width) {
  if (width < 1) throw Error("operation set: width must be >= 1");
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    if (ops_[i].is_zero) {
      if (zero_ >= 0) throw Error("operation set: more than one zero operation");
      zero_ = static_cast<int>(i);
    }
  }
  if (zero_ < 0) throw Error("operation set: missing zero operation");
  if (ops_.size() < 2) throw Error("operation set: needs at least one non-zero operation");
}

int OperationSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    if (ops_[i].name == name) return static_cast<int>(i);
  }
  throw Error("operation set: unknown operation '" + name + "'");
}

Eigen::Index OperationSet::param_count(int op) const {
  Eigen::Index n = 0;
  for (const Shape& s : ops_.at(op).param_shapes) n += shape_numel(s);
  return n;
}

OperationSet toy_operation_set(int width) {
  if (width < 2) throw Error("toy operation set: width must be >= 2 for bottleneck_linear");
  const Eigen::Index d = width;
  const Eigen::Index h = width / 2;

  std::vector<OpSpec> ops;
  ops.push_back({"zero",
                 {},
                 [](const Tensor& x, std::span<const Tensor>) {
                   return Tensor::zeros(x.shape());
                 },
                 true});
  ops.push_back({"identity", {}, [](const Tensor& x, std::span<const Tensor>) { return x; }});
  ops.push_back({"linear",
                 {{d, d}},
                 [](const Tensor& x, std::span<const Tensor> p) { return matmul(x, p[0]); }});
  ops.push_back({"relu_linear",
                 {{d, d}},
                 [](const Tensor& x, std::span<const Tensor> p) {
                   return relu(matmul(x, p[0]));
                 }});
  ops.push_back({"gated_linear",
                 {{d, d}},
                 [](const Tensor& x, std::span<const Tensor> p) {
                   return mul(x, sigmoid(matmul(x, p[0])));
                 }});
  ops.push_back({"bottleneck_linear",
                 {{d, h}, {h, d}},
                 [](const Tensor& x, std::span<const Tensor> p) {
                   return matmul(matmul(x, p[0]), p[1]);
                 }});
  return OperationSet(width, std::move(ops));
}

}  // namespace sgas
