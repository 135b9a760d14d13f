#include "sgas/cell.hpp"

#include <algorithm>

namespace sgas {

CellTopology::CellTopology(int intermediate_nodes) : m_(intermediate_nodes) {
  if (m_ < 1) throw Error("cell: need at least one intermediate node");
  for (int src = 0; src < kInputNodes + m_ - 1; ++src) {
    for (int dst = std::max(src + 1, kInputNodes); dst < kInputNodes + m_; ++dst) {
      edges_.push_back({src, dst});
    }
  }
  incoming_.resize(m_);
  for (int e = 0; e < num_edges(); ++e) incoming_[edges_[e].dst - kInputNodes].push_back(e);
}

int CellTopology::edge_index(int src, int dst) const {
  for (int e = 0; e < num_edges(); ++e) {
    if (edges_[e].src == src && edges_[e].dst == dst) return e;
  }
  return -1;
}

std::span<const int> CellTopology::incoming(int dst) const {
  return incoming_.at(dst - kInputNodes);
}

AlphaTable::AlphaTable(const CellTopology& topo, const OperationSet& ops)
    : num_ops_(ops.size()) {
  state_.assign(topo.num_edges(), EdgeState::Undetermined);
  chosen_.assign(topo.num_edges(), -1);
  alpha_.reserve(topo.num_edges());
  for (int e = 0; e < topo.num_edges(); ++e) {
    alpha_.push_back(Tensor::zeros({static_cast<Eigen::Index>(num_ops_)}, true));
  }
}

const Tensor& AlphaTable::alpha(int e) const {
  if (state_.at(e) != EdgeState::Undetermined) {
    throw Error("alpha table: edge " + std::to_string(e) + " has no alpha row");
  }
  return alpha_[e];
}

int AlphaTable::chosen_op(int e) const {
  if (state_.at(e) != EdgeState::Determined) {
    throw Error("alpha table: edge " + std::to_string(e) + " is not determined");
  }
  return chosen_[e];
}

std::vector<int> AlphaTable::undetermined_edges() const {
  std::vector<int> out;
  for (int e = 0; e < num_edges(); ++e) {
    if (state_[e] == EdgeState::Undetermined) out.push_back(e);
  }
  return out;
}

std::vector<Tensor> AlphaTable::alpha_params() const {
  std::vector<Tensor> out;
  for (int e = 0; e < num_edges(); ++e) {
    if (state_[e] == EdgeState::Undetermined) out.push_back(alpha_[e]);
  }
  return out;
}

Eigen::Index AlphaTable::alpha_param_count() const {
  return static_cast<Eigen::Index>(undetermined_edges().size()) * num_ops_;
}

int AlphaTable::count(EdgeState s) const {
  int n = 0;
  for (EdgeState st : state_) n += (st == s);
  return n;
}

void AlphaTable::determine(int e, int op) {
  if (state_.at(e) != EdgeState::Undetermined) {
    throw Error("alpha table: cannot determine edge " + std::to_string(e) + " twice");
  }
  if (op < 0 || op >= num_ops_) throw Error("alpha table: op index out of range");
  state_[e] = EdgeState::Determined;
  chosen_[e] = op;
  alpha_[e] = Tensor();
}

void AlphaTable::prune(int e) {
  if (state_.at(e) == EdgeState::Determined) {
    throw Error("alpha table: cannot prune determined edge " + std::to_string(e));
  }
  state_[e] = EdgeState::Pruned;
  alpha_[e] = Tensor();
}

Tensor mixed_edge_forward(const OperationSet& ops,
                          std::span<const std::vector<Tensor>> edge_params, const Tensor& x,
                          const Tensor& alpha_row) {
  if (alpha_row.numel() != ops.size()) {
    throw Error("mixed edge: alpha row length " + std::to_string(alpha_row.numel()) +
                " does not match " + std::to_string(ops.size()) + " operations");
  }
  check_finite(alpha_row, "mixed edge");
  Tensor w = softmax(alpha_row, 0);
  Tensor out;
  for (int o = 0; o < ops.size(); ++o) {
    if (o == ops.zero_index()) continue;  // zero op contributes nothing
    Tensor term = mul(index(w, o), ops.op(o).apply(x, edge_params[o]));
    out = out.defined() ? add(out, term) : term;
  }
  return out;
}

Tensor determined_edge_forward(const OperationSet& ops, std::span<const Tensor> op_params,
                               const Tensor& x, int op) {
  return ops.op(op).apply(x, op_params);
}

}  // namespace sgas
