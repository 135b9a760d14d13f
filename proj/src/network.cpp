#include "sgas/network.hpp"

#include <cmath>

namespace sgas {

namespace {

// fan-in Kaiming-uniform with linear gain: keeps per-map variance at 1
Tensor kaiming_uniform(const Shape& shape, Rng& rng) {
  const double fan_in = static_cast<double>(shape.at(0));
  const double bound = std::sqrt(3.0 / fan_in);
  Vec v(shape_numel(shape));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
  return Tensor::from(std::move(v), shape, true);
}

}  // namespace

SuperNetwork::SuperNetwork(OperationSet ops, CellTopology topo, int input_dim, int classes)
    : ops_(std::move(ops)), topo_(std::move(topo)), alpha_(topo_, ops_),
      input_dim_(input_dim), classes_(classes) {
  if (input_dim_ < 1 || classes_ < 2) throw Error("network: invalid input_dim or classes");
}

SuperNetwork::SuperNetwork(OperationSet ops, CellTopology topo, int num_cells, int input_dim,
                           int classes, Rng init_rng)
    : SuperNetwork(std::move(ops), std::move(topo), input_dim, classes) {
  if (num_cells < 1) throw Error("network: need at least one cell");
  std::vector<std::vector<int>> edge_ops(topo_.num_edges());
  for (int e = 0; e < topo_.num_edges(); ++e) {
    for (int o = 0; o < ops_.size(); ++o) edge_ops[e].push_back(o);
  }
  init_weights(num_cells, init_rng, edge_ops);
}

SuperNetwork SuperNetwork::standalone(OperationSet ops, const Genotype& g, int num_cells,
                                      int input_dim, int classes, Rng init_rng) {
  validate_genotype(g, ops);
  CellTopology topo(g.intermediate_nodes());
  SuperNetwork net(std::move(ops), std::move(topo), input_dim, classes);

  std::vector<std::vector<int>> edge_ops(net.topo_.num_edges());
  for (int k = 0; k < g.intermediate_nodes(); ++k) {
    const int dst = k + CellTopology::kInputNodes;
    for (const GenotypePair& p : g.nodes[k]) {
      const int e = net.topo_.edge_index(p.from, dst);
      const int op = net.ops_.index_of(p.op);
      net.alpha_.determine(e, op);
      edge_ops[e].push_back(op);
    }
  }
  for (int e = 0; e < net.topo_.num_edges(); ++e) {
    if (net.alpha_.state(e) == EdgeState::Undetermined) net.alpha_.prune(e);
  }
  net.init_weights(num_cells, init_rng, edge_ops);
  return net;
}

void SuperNetwork::init_weights(int num_cells, Rng& rng,
                                const std::vector<std::vector<int>>& edge_ops) {
  const Eigen::Index d = ops_.width();
  const Eigen::Index m = topo_.intermediate_nodes();
  stem_ = kaiming_uniform({input_dim_, d}, rng);
  stem_bias_ = Tensor::zeros({d}, true);
  cells_.resize(num_cells);
  for (CellWeights& cw : cells_) {
    cw.edge_op_params.assign(topo_.num_edges(), std::vector<std::vector<Tensor>>(ops_.size()));
    for (int e = 0; e < topo_.num_edges(); ++e) {
      for (int o : edge_ops[e]) {
        for (const Shape& s : ops_.op(o).param_shapes) {
          cw.edge_op_params[e][o].push_back(kaiming_uniform(s, rng));
        }
      }
    }
    cw.proj = kaiming_uniform({m * d, d}, rng);
    cw.proj_bias = Tensor::zeros({d}, true);
  }
  head_ = kaiming_uniform({d, static_cast<Eigen::Index>(classes_)}, rng);
  head_bias_ = Tensor::zeros({static_cast<Eigen::Index>(classes_)}, true);
}

Tensor SuperNetwork::cell_forward(const CellWeights& cw, const Tensor& prev_prev,
                                  const Tensor& prev) const {
  const Eigen::Index d = ops_.width();
  if (prev_prev.rank() != 2 || prev_prev.shape()[1] != d || prev.rank() != 2 ||
      prev.shape()[1] != d) {
    throw Error("cell: input width mismatch, expected (batch," + std::to_string(d) + ")");
  }
  const Eigen::Index batch = prev.shape()[0];

  std::vector<Tensor> states = {prev_prev, prev};
  for (int j = CellTopology::kInputNodes;
       j < CellTopology::kInputNodes + topo_.intermediate_nodes(); ++j) {
    Tensor acc;
    for (int e : topo_.incoming(j)) {
      const Tensor& x = states[topo_.edge(e).src];
      Tensor contribution;
      switch (alpha_.state(e)) {
        case EdgeState::Pruned:
          continue;
        case EdgeState::Undetermined:
          contribution = mixed_edge_forward(ops_, cw.edge_op_params[e], x, alpha_.alpha(e));
          break;
        case EdgeState::Determined: {
          const int op = alpha_.chosen_op(e);
          contribution = determined_edge_forward(ops_, cw.edge_op_params[e][op], x, op);
          break;
        }
      }
      acc = acc.defined() ? add(acc, contribution) : contribution;
    }
    if (!acc.defined()) acc = Tensor::zeros({batch, d});
    states.push_back(std::move(acc));
  }
  std::span<const Tensor> inter(states.data() + CellTopology::kInputNodes,
                                static_cast<std::size_t>(topo_.intermediate_nodes()));
  return add_bias(matmul(concat(inter, 1), cw.proj), cw.proj_bias);
}

Tensor SuperNetwork::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.shape()[1] != input_dim_) {
    throw Error("network: input must be (batch," + std::to_string(input_dim_) + "), got " +
                shape_str(x.shape()));
  }
  Tensor s = add_bias(matmul(x, stem_), stem_bias_);
  Tensor prev_prev = s;
  Tensor prev = s;
  for (const CellWeights& cw : cells_) {
    Tensor out = cell_forward(cw, prev_prev, prev);
    prev_prev = prev;
    prev = std::move(out);
  }
  return add_bias(matmul(prev, head_), head_bias_);
}

std::vector<Tensor> SuperNetwork::weight_params() const {
  std::vector<Tensor> out;
  out.push_back(stem_);
  out.push_back(stem_bias_);
  for (const CellWeights& cw : cells_) {
    for (const auto& per_op : cw.edge_op_params) {
      for (const auto& params : per_op) {
        for (const Tensor& t : params) out.push_back(t);
      }
    }
    out.push_back(cw.proj);
    out.push_back(cw.proj_bias);
  }
  out.push_back(head_);
  out.push_back(head_bias_);
  return out;
}

Eigen::Index SuperNetwork::weight_param_count() const {
  Eigen::Index n = 0;
  for (const Tensor& t : weight_params()) n += t.numel();
  return n;
}

Eigen::Index SuperNetwork::keep_only_op(int edge, int op) {
  Eigen::Index freed = 0;
  for (CellWeights& cw : cells_) {
    auto& per_op = cw.edge_op_params.at(edge);
    for (int o = 0; o < static_cast<int>(per_op.size()); ++o) {
      if (o == op) continue;
      for (const Tensor& t : per_op[o]) freed += t.numel();
      per_op[o].clear();
    }
  }
  return freed;
}

Eigen::Index SuperNetwork::drop_edge(int edge) {
  Eigen::Index freed = 0;
  for (CellWeights& cw : cells_) {
    auto& per_op = cw.edge_op_params.at(edge);
    for (auto& params : per_op) {
      for (const Tensor& t : params) freed += t.numel();
      params.clear();
    }
  }
  return freed;
}

void SuperNetwork::copy_weights_from(const SuperNetwork& other) {
  const std::vector<Tensor> src = other.weight_params();
  const std::vector<Tensor> dst = weight_params();
  if (src.size() != dst.size()) {
    throw Error("network: cannot copy weights, structures differ (" +
                std::to_string(src.size()) + " vs " + std::to_string(dst.size()) +
                " tensors)");
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].shape() != dst[i].shape()) {
      throw Error("network: weight shape mismatch at tensor " + std::to_string(i));
    }
    Tensor t = dst[i];
    t.value() = src[i].value();
  }
}

Eigen::Index standalone_param_count(const Genotype& g, const OperationSet& ops, int num_cells,
                                    int input_dim, int classes) {
  Eigen::Index per_cell = 0;
  for (const auto& pairs : g.nodes) {
    for (const GenotypePair& p : pairs) per_cell += ops.param_count(ops.index_of(p.op));
  }
  const Eigen::Index d = ops.width();
  per_cell += g.intermediate_nodes() * d * d + d;  // projection and its bias
  return (input_dim * d + d) + num_cells * per_cell + (d * classes + classes);
}

}  // namespace sgas
