#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgas/cell.hpp"

namespace sgas {

struct GenotypePair {
  int from = 0;
  std::string op;
  friend bool operator==(const GenotypePair&, const GenotypePair&) = default;
};

// The discrete architecture: per intermediate node exactly two
// (source node, operation) pairs, ordered by source. The zero operation never
// appears. meta carries seed / criterion / config digest.
struct Genotype {
  std::vector<std::array<GenotypePair, 2>> nodes;
  int width = 0;
  int cells = 0;
  nlohmann::json meta = nlohmann::json::object();

  int intermediate_nodes() const { return static_cast<int>(nodes.size()); }
};

// Throws unless the genotype satisfies its structural invariants against the
// given operation set.
void validate_genotype(const Genotype& g, const OperationSet& ops);

// Deterministic serialization; identical genotypes produce identical bytes.
std::string genotype_to_json(const Genotype& g);
Genotype genotype_from_json(const std::string& text);

// DOT digraph with inputs c_{k-2} / c_{k-1}, intermediate nodes 0..M-1 and
// the concatenation node c_k; one labeled edge per genotype pair.
std::string genotype_to_dot(const Genotype& g);

// Discrete architecture from an alpha table. Determined edges are taken as
// is; undetermined edges go through the relaxed derivation: per node keep the
// two incoming edges with the highest best non-zero softmax weight, choosing
// each edge's best non-zero operation. Zero is excluded from every argmax.
Genotype derive_genotype(const AlphaTable& table, const CellTopology& topo,
                         const OperationSet& ops, int width, int cells);

// Best non-zero operation of one alpha row; ties break to the lowest index.
int argmax_nonzero_op(const Vec& alpha, int zero_index);

// Plain (non-graph) stable softmax used by derivation and the criteria.
Vec softmax_vec(const Vec& v);

}  // namespace sgas
