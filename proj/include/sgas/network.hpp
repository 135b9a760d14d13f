#pragma once

#include <vector>

#include "sgas/cell.hpp"
#include "sgas/genotype.hpp"
#include "sgas/op_set.hpp"
#include "sgas/rng.hpp"

namespace sgas {

// Per-cell weights: one parameter list per (edge, op) plus the output
// projection applied to the concatenated intermediate features. Entries are
// cleared as decisions prune them.
struct CellWeights {
  std::vector<std::vector<std::vector<Tensor>>> edge_op_params;  // [edge][op][param]
  Tensor proj;
  Tensor proj_bias;
};

// Stack of cells sharing one topology and one alpha table but not weights.
// In search mode every edge carries every candidate operation; a network built
// from a genotype is the stand-alone architecture (every edge determined, no
// trainable alpha rows).
class SuperNetwork {
 public:
  SuperNetwork(OperationSet ops, CellTopology topo, int num_cells, int input_dim, int classes,
               Rng init_rng);

  static SuperNetwork standalone(OperationSet ops, const Genotype& g, int num_cells,
                                 int input_dim, int classes, Rng init_rng);

  // x is (batch, input_dim); returns logits (batch, classes).
  Tensor forward(const Tensor& x) const;

  std::vector<Tensor> weight_params() const;  // alive weights, fixed structural order
  Eigen::Index weight_param_count() const;
  Eigen::Index alpha_param_count() const { return alpha_.alpha_param_count(); }

  AlphaTable& alpha_table() { return alpha_; }
  const AlphaTable& alpha_table() const { return alpha_; }
  const CellTopology& topology() const { return topo_; }
  const OperationSet& ops() const { return ops_; }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int input_dim() const { return input_dim_; }
  int classes() const { return classes_; }
  int width() const { return ops_.width(); }

  const Tensor& stem() const { return stem_; }
  const Tensor& stem_bias() const { return stem_bias_; }
  const Tensor& head() const { return head_; }
  const Tensor& head_bias() const { return head_bias_; }
  const Tensor& proj(int cell) const { return cells_.at(cell).proj; }
  const Tensor& proj_bias(int cell) const { return cells_.at(cell).proj_bias; }
  std::span<const Tensor> edge_op_params(int cell, int edge, int op) const {
    return cells_.at(cell).edge_op_params.at(edge).at(op);
  }

  // Drops every operation except `op` from `edge` in all cells; returns the
  // number of weight scalars freed.
  Eigen::Index keep_only_op(int edge, int op);
  // Drops all operations of `edge` in all cells.
  Eigen::Index drop_edge(int edge);

  // Copies parameter values from a structurally identical network.
  void copy_weights_from(const SuperNetwork& other);

 private:
  SuperNetwork(OperationSet ops, CellTopology topo, int input_dim, int classes);
  void init_weights(int num_cells, Rng& rng, const std::vector<std::vector<int>>& edge_ops);
  Tensor cell_forward(const CellWeights& cw, const Tensor& prev_prev,
                      const Tensor& prev) const;

  OperationSet ops_;
  CellTopology topo_;
  AlphaTable alpha_;
  Tensor stem_;
  Tensor stem_bias_;
  std::vector<CellWeights> cells_;
  Tensor head_;
  Tensor head_bias_;
  int input_dim_ = 0;
  int classes_ = 0;
};

// Weight count of the stand-alone network a genotype describes, by direct
// enumeration of its operations and glue (stem, projections, head).
Eigen::Index standalone_param_count(const Genotype& g, const OperationSet& ops, int num_cells,
                                    int input_dim, int classes);

}  // namespace sgas
