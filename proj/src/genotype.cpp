#include "sgas/genotype.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sgas {

using nlohmann::json;

Vec softmax_vec(const Vec& v) {
  Vec out = (v.array() - v.maxCoeff()).exp();
  return out / out.sum();
}

int argmax_nonzero_op(const Vec& alpha, int zero_index) {
  int best = -1;
  for (Eigen::Index o = 0; o < alpha.size(); ++o) {
    if (static_cast<int>(o) == zero_index) continue;
    if (best < 0 || alpha[o] > alpha[best]) best = static_cast<int>(o);
  }
  if (best < 0) throw Error("genotype: no non-zero operation to choose");
  return best;
}

void validate_genotype(const Genotype& g, const OperationSet& ops) {
  if (g.nodes.empty()) throw Error("genotype: no intermediate nodes");
  if (g.width < 1 || g.cells < 1) throw Error("genotype: width and cells must be >= 1");
  for (int k = 0; k < g.intermediate_nodes(); ++k) {
    const int target = k + CellTopology::kInputNodes;
    const auto& [a, b] = g.nodes[k];
    if (a.from == b.from) {
      throw Error("genotype: node " + std::to_string(k) + " uses source " +
                  std::to_string(a.from) + " twice");
    }
    for (const GenotypePair& p : g.nodes[k]) {
      if (p.from < 0 || p.from >= target) {
        throw Error("genotype: node " + std::to_string(k) + " has invalid source " +
                    std::to_string(p.from));
      }
      const int op = ops.index_of(p.op);
      if (op == ops.zero_index()) {
        throw Error("genotype: node " + std::to_string(k) + " uses the zero operation");
      }
    }
    if (!(a.from < b.from)) {
      throw Error("genotype: node " + std::to_string(k) + " pairs not ordered by source");
    }
  }
}

std::string genotype_to_json(const Genotype& g) {
  json nodes = json::array();
  for (const auto& pairs : g.nodes) {
    json node = json::array();
    for (const GenotypePair& p : pairs) node.push_back({{"from", p.from}, {"op", p.op}});
    nodes.push_back(std::move(node));
  }
  const json out = {{"nodes", std::move(nodes)},
                    {"width", g.width},
                    {"cells", g.cells},
                    {"meta", g.meta}};
  return out.dump(2) + "\n";
}

Genotype genotype_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("genotype: invalid JSON: ") + e.what());
  }
  Genotype g;
  try {
    for (const json& node : j.at("nodes")) {
      if (node.size() != 2) throw Error("genotype: each node needs exactly 2 pairs");
      std::array<GenotypePair, 2> pairs;
      for (int i = 0; i < 2; ++i) {
        pairs[i].from = node.at(i).at("from").get<int>();
        pairs[i].op = node.at(i).at("op").get<std::string>();
      }
      g.nodes.push_back(std::move(pairs));
    }
    g.width = j.at("width").get<int>();
    g.cells = j.at("cells").get<int>();
    if (j.contains("meta")) g.meta = j.at("meta");
  } catch (const json::exception& e) {
    throw Error(std::string("genotype: malformed document: ") + e.what());
  }
  return g;
}

std::string genotype_to_dot(const Genotype& g) {
  const int m = g.intermediate_nodes();
  auto node_name = [&](int id) -> std::string {
    if (id == 0) return "c_{k-2}";
    if (id == 1) return "c_{k-1}";
    return std::to_string(id - CellTopology::kInputNodes);
  };
  std::ostringstream out;
  out << "digraph cell {\n";
  out << "  rankdir=LR;\n";
  out << "  \"c_{k-2}\" [shape=box];\n";
  out << "  \"c_{k-1}\" [shape=box];\n";
  out << "  \"c_k\" [shape=box];\n";
  for (int k = 0; k < m; ++k) {
    for (const GenotypePair& p : g.nodes[k]) {
      out << "  \"" << node_name(p.from) << "\" -> \"" << k << "\" [label=\"" << p.op
          << "\"];\n";
    }
  }
  for (int k = 0; k < m; ++k) out << "  \"" << k << "\" -> \"c_k\";\n";
  out << "}\n";
  return out.str();
}

Genotype derive_genotype(const AlphaTable& table, const CellTopology& topo,
                         const OperationSet& ops, int width, int cells) {
  Genotype g;
  g.width = width;
  g.cells = cells;
  const int m = topo.intermediate_nodes();
  for (int k = 0; k < m; ++k) {
    const int dst = k + CellTopology::kInputNodes;
    struct Candidate {
      int edge;
      int op;
      double strength;
      bool determined;
    };
    std::vector<Candidate> cands;
    for (int e : topo.incoming(dst)) {
      switch (table.state(e)) {
        case EdgeState::Pruned:
          break;
        case EdgeState::Determined:
          cands.push_back({e, table.chosen_op(e), 0.0, true});
          break;
        case EdgeState::Undetermined: {
          const Vec w = softmax_vec(table.alpha(e).value());
          const int op = argmax_nonzero_op(w, ops.zero_index());
          cands.push_back({e, op, w[op], false});
          break;
        }
      }
    }
    // determined edges always make the cut; remaining slots go to the
    // strongest undetermined edges (ties to the lower edge id)
    std::vector<Candidate> keep;
    for (const Candidate& c : cands) {
      if (c.determined) keep.push_back(c);
    }
    if (static_cast<int>(keep.size()) > CellTopology::kEdgesPerNode) {
      throw Error("genotype: node " + std::to_string(k) + " has more than 2 determined edges");
    }
    std::vector<Candidate> rest;
    for (const Candidate& c : cands) {
      if (!c.determined) rest.push_back(c);
    }
    std::stable_sort(rest.begin(), rest.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.strength > b.strength;
                     });
    for (const Candidate& c : rest) {
      if (static_cast<int>(keep.size()) < CellTopology::kEdgesPerNode) keep.push_back(c);
    }
    if (static_cast<int>(keep.size()) < CellTopology::kEdgesPerNode) {
      throw Error("genotype: node " + std::to_string(k) + " has fewer than 2 usable edges");
    }
    std::sort(keep.begin(), keep.end(),
              [&](const Candidate& a, const Candidate& b) {
                return topo.edge(a.edge).src < topo.edge(b.edge).src;
              });
    g.nodes.push_back({GenotypePair{topo.edge(keep[0].edge).src, ops.op(keep[0].op).name},
                       GenotypePair{topo.edge(keep[1].edge).src, ops.op(keep[1].op).name}});
  }
  validate_genotype(g, ops);
  return g;
}

}  // namespace sgas
