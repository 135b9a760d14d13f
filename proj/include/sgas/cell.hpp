#pragma once

#include <span>
#include <vector>

#include "sgas/op_set.hpp"
#include "sgas/tensor.hpp"

namespace sgas {

// Directed edge (src, dst) of the cell DAG; dst is an intermediate node.
struct Edge {
  int src = 0;
  int dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Cell DAG: nodes 0 and 1 are the cell inputs, 2 .. M+1 the intermediate
// nodes, and the output node concatenates all intermediates. Every
// intermediate node j starts with an edge from each node i < j; edges are
// stored in lexicographic (src, dst) order so ascending edge id doubles as
// the deterministic tie-break order.
class CellTopology {
 public:
  static constexpr int kInputNodes = 2;
  static constexpr int kEdgesPerNode = 2;

  explicit CellTopology(int intermediate_nodes);

  int intermediate_nodes() const { return m_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_.at(e); }
  int edge_index(int src, int dst) const;  // -1 if absent
  std::span<const int> incoming(int dst) const;

 private:
  int m_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incoming_;  // by intermediate node index (dst - 2)
};

enum class EdgeState { Undetermined, Determined, Pruned };

// Per-edge architectural parameters and decision status. Alpha rows start at
// zero (uniform softmax weights) and are dropped the moment their edge is
// determined or pruned; a determined edge keeps only its chosen op index.
class AlphaTable {
 public:
  AlphaTable(const CellTopology& topo, const OperationSet& ops);

  int num_edges() const { return static_cast<int>(state_.size()); }
  EdgeState state(int e) const { return state_.at(e); }
  const Tensor& alpha(int e) const;
  int chosen_op(int e) const;

  std::vector<int> undetermined_edges() const;
  std::vector<Tensor> alpha_params() const;  // trainable rows, ascending edge id
  Eigen::Index alpha_param_count() const;
  int count(EdgeState s) const;
  bool all_resolved() const { return count(EdgeState::Undetermined) == 0; }

  void determine(int e, int op);
  void prune(int e);

 private:
  std::vector<EdgeState> state_;
  std::vector<Tensor> alpha_;   // empty handle once resolved
  std::vector<int> chosen_;     // -1 until determined
  int num_ops_;
};

// Softmax mixture over all candidate operations of one undetermined edge:
// out = sum_o softmax(alpha)_o * op_o(x). The zero operation contributes the
// zero vector; gradients flow to alpha through the softmax coupling.
Tensor mixed_edge_forward(const OperationSet& ops,
                          std::span<const std::vector<Tensor>> edge_params, const Tensor& x,
                          const Tensor& alpha_row);

// Forward of a determined edge: only the chosen operation is applied.
Tensor determined_edge_forward(const OperationSet& ops, std::span<const Tensor> op_params,
                               const Tensor& x, int op);

}  // namespace sgas
