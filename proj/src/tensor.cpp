#include "sgas/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace sgas {

namespace {

thread_local std::uint64_t g_next_id = 1;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw Error(std::string(op) + ": " + detail);
}

void require(bool cond, const char* op, const std::string& detail) {
  if (!cond) shape_fail(op, detail);
}

Eigen::Map<const RowMat> as_matrix(const Node& n) {
  return {n.value.data(), n.shape[0], n.shape[1]};
}

Eigen::Map<RowMat> grad_matrix(Node& n) {
  n.ensure_grad();
  return {n.grad.data(), n.shape[0], n.shape[1]};
}

// Builds an interior node; needs_grad is inherited from parents.
Tensor make_op(const char* op, Shape shape, Vec value, std::vector<Tensor> inputs,
               std::function<void(Node&)> backprop) {
  auto n = detail::make_node(std::move(shape), std::move(value));
  n->op = op;
  n->parents.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    n->parents.push_back(t.shared_node());
    if (t.node()->needs_grad) n->needs_grad = true;
  }
  if (n->needs_grad) n->backprop = std::move(backprop);
  return Tensor(std::move(n));
}

// Rows/cols treating rank-1 as a single row.
std::pair<Eigen::Index, Eigen::Index> mat_dims(const Tensor& t) {
  if (t.rank() == 1) return {1, t.shape()[0]};
  return {t.shape()[0], t.shape()[1]};
}

}  // namespace

namespace detail {
std::shared_ptr<Node> make_node(Shape shape, Vec value) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->id = g_next_id++;
  return n;
}
}  // namespace detail

Eigen::Index shape_numel(const Shape& s) {
  Eigen::Index n = 1;
  for (Eigen::Index e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

Tensor Tensor::from(Vec values, Shape shape, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw Error("tensor: " + std::to_string(values.size()) + " values do not fill shape " +
                shape_str(shape));
  }
  for (Eigen::Index e : shape) {
    if (e <= 0) throw Error("tensor: non-positive extent in shape " + shape_str(shape));
  }
  Tensor t(detail::make_node(std::move(shape), std::move(values)));
  t.set_requires_grad(requires_grad);
  return t;
}

Tensor Tensor::from(std::initializer_list<double> values, bool requires_grad) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return from(std::move(v), {static_cast<Eigen::Index>(values.size())}, requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const Eigen::Index n = shape_numel(shape);
  return from(Vec::Zero(n), std::move(shape), requires_grad);
}

Tensor Tensor::scalar(double v) {
  Tensor t(detail::make_node({}, Vec::Constant(1, v)));
  return t;
}

Eigen::Index Tensor::rows() const {
  return rank() == 2 ? shape()[0] : (rank() == 1 ? shape()[0] : 1);
}

Eigen::Index Tensor::cols() const { return rank() == 2 ? shape()[1] : 1; }

double Tensor::item() const {
  if (numel() != 1) throw Error("item: tensor of shape " + shape_str(shape()) + " is not scalar");
  return node_->value[0];
}

const Vec& Tensor::grad() const { return node_->ensure_grad(); }

void Tensor::set_requires_grad(bool b) {
  node_->requires_grad = b;
  node_->needs_grad = b || node_->needs_grad;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

void check_finite(const Tensor& t, const char* where) {
  if (!all_finite(t.value())) {
    throw Error(std::string(where) + ": non-finite values in tensor of shape " +
                shape_str(t.shape()));
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(b.rank() == 2, "matmul", "rhs must be rank 2, got " + shape_str(b.shape()));
  require(a.rank() == 1 || a.rank() == 2, "matmul",
          "lhs must be rank 1 or 2, got " + shape_str(a.shape()));
  auto [m, k] = mat_dims(a);
  require(k == b.shape()[0], "matmul",
          "inner extents differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const Eigen::Index n = b.shape()[1];

  Eigen::Map<const RowMat> A(a.value().data(), m, k);
  Eigen::Map<const RowMat> B(b.value().data(), k, n);
  Vec out(m * n);
  Eigen::Map<RowMat>(out.data(), m, n).noalias() = A * B;

  Shape out_shape = a.rank() == 1 ? Shape{n} : Shape{m, n};
  return make_op("matmul", std::move(out_shape), std::move(out), {a, b},
                 [m, k, n](Node& self) {
                   Eigen::Map<const RowMat> G(self.grad.data(), m, n);
                   Node& pa = *self.parents[0];
                   Node& pb = *self.parents[1];
                   if (pa.needs_grad) {
                     pa.ensure_grad();
                     Eigen::Map<const RowMat> B(pb.value.data(), k, n);
                     Eigen::Map<RowMat>(pa.grad.data(), m, k).noalias() += G * B.transpose();
                   }
                   if (pb.needs_grad) {
                     pb.ensure_grad();
                     Eigen::Map<const RowMat> A(pa.value.data(), m, k);
                     Eigen::Map<RowMat>(pb.grad.data(), k, n).noalias() += A.transpose() * G;
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add",
          "shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return make_op("add", a.shape(), a.value() + b.value(), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (p->needs_grad) p->ensure_grad() += self.grad;
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  require(x.rank() == 2 && b.rank() == 1 && x.shape()[1] == b.shape()[0], "add_bias",
          "need (m,n) + (n,), got " + shape_str(x.shape()) + " + " + shape_str(b.shape()));
  const Eigen::Index m = x.shape()[0];
  const Eigen::Index n = x.shape()[1];
  Vec out(m * n);
  Eigen::Map<RowMat>(out.data(), m, n) =
      as_matrix(*x.node()).rowwise() + b.value().transpose();
  return make_op("add_bias", x.shape(), std::move(out), {x, b}, [m, n](Node& self) {
    Node& px = *self.parents[0];
    Node& pb = *self.parents[1];
    Eigen::Map<const RowMat> G(self.grad.data(), m, n);
    if (px.needs_grad) grad_matrix(px) += G;
    if (pb.needs_grad) pb.ensure_grad() += G.colwise().sum().transpose();
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.numel() == 1 || b.numel() == 1) {
    const Tensor& s = a.numel() == 1 ? a : b;
    const Tensor& t = a.numel() == 1 ? b : a;
    const bool scalar_first = a.numel() == 1;
    Vec out = s.value()[0] * t.value();
    return make_op("mul", t.shape(), std::move(out), {a, b}, [scalar_first](Node& self) {
      Node& ps = *self.parents[scalar_first ? 0 : 1];
      Node& pt = *self.parents[scalar_first ? 1 : 0];
      if (ps.needs_grad) ps.ensure_grad()[0] += self.grad.dot(pt.value);
      if (pt.needs_grad) pt.ensure_grad() += ps.value[0] * self.grad;
    });
  }
  require(a.shape() == b.shape(), "mul",
          "shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return make_op("mul", a.shape(), (a.value().array() * b.value().array()).matrix(), {a, b},
                 [](Node& self) {
                   Node& pa = *self.parents[0];
                   Node& pb = *self.parents[1];
                   if (pa.needs_grad)
                     pa.ensure_grad().array() += self.grad.array() * pb.value.array();
                   if (pb.needs_grad)
                     pb.ensure_grad().array() += self.grad.array() * pa.value.array();
                 });
}

Tensor relu(const Tensor& a) {
  return make_op("relu", a.shape(), a.value().cwiseMax(0.0), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.needs_grad) return;
    p.ensure_grad().array() +=
        (p.value.array() > 0.0).select(self.grad.array(), 0.0);
  });
}

Tensor sigmoid(const Tensor& a) {
  Vec out = a.value().unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return make_op("sigmoid", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.needs_grad) return;
    p.ensure_grad().array() +=
        self.grad.array() * self.value.array() * (1.0 - self.value.array());
  });
}

namespace {

// Stable softmax of one contiguous-strided slice.
void softmax_slice(const double* x, double* y, Eigen::Index n, Eigen::Index stride) {
  double mx = x[0];
  for (Eigen::Index i = 1; i < n; ++i) mx = std::max(mx, x[i * stride]);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::exp(x[i * stride] - mx);
    y[i * stride] = e;
    sum += e;
  }
  for (Eigen::Index i = 0; i < n; ++i) y[i * stride] /= sum;
}

void softmax_backward_slice(const double* y, const double* g, double* out, Eigen::Index n,
                            Eigen::Index stride) {
  double dot = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) dot += y[i * stride] * g[i * stride];
  for (Eigen::Index i = 0; i < n; ++i)
    out[i * stride] += y[i * stride] * (g[i * stride] - dot);
}

struct AxisSlices {
  Eigen::Index count;   // number of slices
  Eigen::Index length;  // elements per slice
  Eigen::Index stride;  // stride between slice elements
  Eigen::Index step;    // offset between consecutive slices
};

AxisSlices slices_for(const Shape& shape, int axis, const char* op) {
  const int rank = static_cast<int>(shape.size());
  require(rank == 1 || rank == 2, op, "rank must be 1 or 2, got " + shape_str(shape));
  int ax = axis < 0 ? rank + axis : axis;
  require(ax >= 0 && ax < rank, op,
          "axis " + std::to_string(axis) + " invalid for shape " + shape_str(shape));
  if (rank == 1) return {1, shape[0], 1, 0};
  if (ax == 1) return {shape[0], shape[1], 1, shape[1]};  // along each row
  return {shape[1], shape[0], shape[1], 1};               // along each column
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
  const AxisSlices sl = slices_for(a.shape(), axis, "softmax");
  Vec out(a.numel());
  for (Eigen::Index s = 0; s < sl.count; ++s)
    softmax_slice(a.value().data() + s * sl.step, out.data() + s * sl.step, sl.length, sl.stride);
  return make_op("softmax", a.shape(), std::move(out), {a}, [sl](Node& self) {
    Node& p = *self.parents[0];
    if (!p.needs_grad) return;
    p.ensure_grad();
    for (Eigen::Index s = 0; s < sl.count; ++s)
      softmax_backward_slice(self.value.data() + s * sl.step, self.grad.data() + s * sl.step,
                             p.grad.data() + s * sl.step, sl.length, sl.stride);
  });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  require(!parts.empty(), "concat", "no inputs");
  const Eigen::Index rank = parts[0].rank();
  require(rank == 1 || rank == 2, "concat", "rank must be 1 or 2");
  int ax = axis < 0 ? static_cast<int>(rank) + axis : axis;
  require(ax >= 0 && ax < rank, "concat", "axis " + std::to_string(axis) + " invalid");

  for (const Tensor& t : parts) {
    require(t.rank() == rank, "concat", "mixed ranks");
    for (int d = 0; d < rank; ++d) {
      if (d != ax) {
        require(t.shape()[d] == parts[0].shape()[d], "concat",
                "shapes differ off-axis: " + shape_str(parts[0].shape()) + " vs " +
                    shape_str(t.shape()));
      }
    }
  }

  Shape out_shape = parts[0].shape();
  out_shape[ax] = 0;
  for (const Tensor& t : parts) out_shape[ax] += t.shape()[ax];

  Vec out(shape_numel(out_shape));
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  std::vector<Eigen::Index> widths;

  if (rank == 1 || ax == 0) {
    // contiguous blocks
    Eigen::Index off = 0;
    for (const Tensor& t : parts) {
      out.segment(off, t.numel()) = t.value();
      widths.push_back(t.numel());
      off += t.numel();
    }
    return make_op("concat", std::move(out_shape), std::move(out), std::move(inputs),
                   [widths](Node& self) {
                     Eigen::Index off = 0;
                     for (std::size_t i = 0; i < self.parents.size(); ++i) {
                       Node& p = *self.parents[i];
                       if (p.needs_grad) p.ensure_grad() += self.grad.segment(off, widths[i]);
                       off += widths[i];
                     }
                   });
  }

  // rank 2, axis 1: interleave columns per row
  const Eigen::Index rows = out_shape[0];
  const Eigen::Index out_cols = out_shape[1];
  Eigen::Map<RowMat> O(out.data(), rows, out_cols);
  Eigen::Index col = 0;
  for (const Tensor& t : parts) {
    const Eigen::Index w = t.shape()[1];
    O.middleCols(col, w) = as_matrix(*t.node());
    widths.push_back(w);
    col += w;
  }
  return make_op("concat", std::move(out_shape), std::move(out), std::move(inputs),
                 [widths, rows, out_cols](Node& self) {
                   Eigen::Map<const RowMat> G(self.grad.data(), rows, out_cols);
                   Eigen::Index col = 0;
                   for (std::size_t i = 0; i < self.parents.size(); ++i) {
                     Node& p = *self.parents[i];
                     if (p.needs_grad) grad_matrix(p) += G.middleCols(col, widths[i]);
                     col += widths[i];
                   }
                 });
}

Tensor scale(const Tensor& a, double c) {
  return make_op("scale", a.shape(), c * a.value(), {a}, [c](Node& self) {
    Node& p = *self.parents[0];
    if (p.needs_grad) p.ensure_grad() += c * self.grad;
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.numel());
  return make_op("mean", {}, Vec::Constant(1, a.value().sum() / n), {a}, [n](Node& self) {
    Node& p = *self.parents[0];
    if (p.needs_grad) p.ensure_grad().array() += self.grad[0] / n;
  });
}

Tensor index(const Tensor& a, Eigen::Index i) {
  require(a.rank() == 1, "index", "rank-1 input required, got " + shape_str(a.shape()));
  require(i >= 0 && i < a.numel(), "index",
          "index " + std::to_string(i) + " out of range for " + shape_str(a.shape()));
  return make_op("index", {}, Vec::Constant(1, a.value()[i]), {a}, [i](Node& self) {
    Node& p = *self.parents[0];
    if (p.needs_grad) p.ensure_grad()[i] += self.grad[0];
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require(logits.rank() == 1 || logits.rank() == 2, "cross_entropy",
          "logits must be rank 1 or 2, got " + shape_str(logits.shape()));
  const Eigen::Index batch = logits.rank() == 2 ? logits.shape()[0] : 1;
  const Eigen::Index classes = logits.rank() == 2 ? logits.shape()[1] : logits.shape()[0];
  require(static_cast<Eigen::Index>(labels.size()) == batch, "cross_entropy",
          std::to_string(labels.size()) + " labels for batch of " + std::to_string(batch));
  for (int y : labels) {
    require(y >= 0 && y < classes, "cross_entropy",
            "label " + std::to_string(y) + " outside [0," + std::to_string(classes) + ")");
  }

  // loss = (1/B) sum_b [logsumexp(row_b) - row_b[y_b]]
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double* row = logits.value().data() + b * classes;
    double mx = row[0];
    for (Eigen::Index c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (Eigen::Index c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
    total += mx + std::log(sum) - row[labels[b]];
  }
  std::vector<int> ys(labels.begin(), labels.end());
  Tensor out = make_op(
      "cross_entropy", {}, Vec::Constant(1, total / static_cast<double>(batch)), {logits},
      [ys, batch, classes](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        const double g = self.grad[0] / static_cast<double>(batch);
        for (Eigen::Index b = 0; b < batch; ++b) {
          const double* row = p.value.data() + b * classes;
          double* grow = p.grad.data() + b * classes;
          double mx = row[0];
          for (Eigen::Index c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
          double sum = 0.0;
          for (Eigen::Index c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
          for (Eigen::Index c = 0; c < classes; ++c)
            grow[c] += g * std::exp(row[c] - mx) / sum;
          grow[ys[b]] -= g;
        }
      });
  check_finite(out, "cross_entropy");
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.is_scalar()) {
    throw Error("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  detail::Node* root = loss.node();
  if (!root->needs_grad) return;

  // Collect reachable grad-needing nodes; descending id is reverse topo order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{root};
  seen.insert(root);
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->needs_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->id > b->id; });

  root->ensure_grad()[0] += 1.0;
  for (detail::Node* n : order) {
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace sgas
