#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sgas/common.hpp"

namespace sgas {

using Vec = Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<Eigen::Index>;

Eigen::Index shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

// One node of the define-by-run computation graph. Ids increase monotonically
// per thread, so every node's id is larger than all of its parents' ids and
// sorting reachable nodes by descending id yields a reverse topological order.
struct Node {
  Shape shape;
  Vec value;
  Vec grad;  // empty until first touched; then same length as value
  bool requires_grad = false;
  bool needs_grad = false;
  std::uint64_t id = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads

  Vec& ensure_grad() {
    if (grad.size() != value.size()) grad = Vec::Zero(value.size());
    return grad;
  }
};

std::shared_ptr<Node> make_node(Shape shape, Vec value);

}  // namespace detail

// Value-semantic handle to a graph node. Copies share the node. The graph is
// rebuilt on every forward pass; leaf tensors (parameters, inputs) persist
// across passes while interior nodes are freed when their handles drop.
//
// A graph and its tensors are confined to one thread; independent graphs may
// live on different threads.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Vec values, Shape shape, bool requires_grad = false);
  static Tensor from(std::initializer_list<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(node_->shape.size()); }
  Eigen::Index numel() const { return node_->value.size(); }
  Eigen::Index rows() const;
  Eigen::Index cols() const;
  bool is_scalar() const { return numel() == 1 && rank() <= 1; }
  double item() const;

  const Vec& value() const { return node_->value; }
  Vec& value() { return node_->value; }
  const Vec& grad() const;
  Vec& grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.setZero(); node_->ensure_grad(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b);
  std::uint64_t id() const { return node_->id; }

  detail::Node* node() const { return node_.get(); }
  std::shared_ptr<detail::Node> shared_node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Graph-building operations. Inputs of rank 1 are vectors, rank 2 are
// row-major matrices; a rank-0 tensor is a scalar.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& b);  // (m,n) + (n,) per row
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise; scalar-broadcast if one side has numel 1
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax(const Tensor& a, int axis = -1);
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor scale(const Tensor& a, double c);
Tensor mean(const Tensor& a);
Tensor index(const Tensor& a, Eigen::Index i);  // rank-1 pick -> scalar
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// Reverse pass from a scalar loss. Visits each reachable node exactly once in
// reverse topological order; gradients accumulate additively, so tensors used
// in several branches receive the sum of branch gradients. Grads are not
// cleared here; callers zero them between steps.
void backward(const Tensor& loss);

bool all_finite(const Vec& v);
void check_finite(const Tensor& t, const char* where);

}  // namespace sgas
