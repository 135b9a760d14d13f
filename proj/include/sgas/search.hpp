#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgas/criteria.hpp"
#include "sgas/dataset.hpp"
#include "sgas/network.hpp"
#include "sgas/optim.hpp"

namespace sgas {

enum class Method { Cri1, Cri2, Darts1, Random };

std::string method_name(Method m);
Method method_from_string(const std::string& s);

struct SearchConfig {
  int epochs = 50;
  int warm_up_epochs = 9;
  int decision_interval = 5;  // T
  int history_window = 4;     // K
  Method criterion = Method::Cri2;
  int batch_size = 64;
  int batch_growth = 8;
  SgdConfig w_optim{0.025, 0.9, 3e-4};
  AdamConfig alpha_optim{3e-4, 0.5, 0.999, 1e-3};
  std::uint64_t seed = 1;
  int cells = 3;
  int width = 32;
  int intermediate_nodes = 4;

  int decisions_needed() const { return 2 * intermediate_nodes; }
};

// Epochs at which greedy decisions fire: warm_up + 1, then every T.
std::vector<int> decision_epochs(const SearchConfig& cfg);

// Throws ConfigError when the schedule cannot fit all decisions or the
// dataset cannot feed one batch.
void validate_search_config(const SearchConfig& cfg, const Dataset& ds);

struct DecisionRecord {
  int epoch = 0;
  int edge = -1;
  Edge edge_nodes;
  std::string op;
  std::vector<EdgeScore> scores;          // all candidates at decision time
  std::vector<int> pruned_edges;          // siblings removed by the quota rule
  Eigen::Index weights_freed = 0;
  Eigen::Index alpha_freed = 0;
  Eigen::Index weight_params_after = 0;
  Eigen::Index alpha_params_after = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_acc = 0;
  int batch_size = 0;
  int undetermined = 0;
};

struct SearchResult {
  Genotype genotype;
  std::vector<EpochStats> epochs;
  std::vector<DecisionRecord> decisions;
  double final_val_acc = 0.0;
  double final_val_err = 1.0;
  double best_val_err = 1.0;
  std::string method;
  double wall_seconds = 0.0;  // surfaced through the manifest, never result.json
};

using EventSink = std::function<void(const nlohmann::json&)>;

// Sequential greedy search: alternating alpha/weight updates with one edge
// determined per decision epoch and pruning as in the quota rule. Terminates
// once all 2M decisions are made or epochs run out. final_net, when given,
// receives the post-search supernet.
SearchResult run_sgas(const SearchConfig& cfg, const Dataset& ds, const EventSink& sink = {},
                      std::unique_ptr<SuperNetwork>* final_net = nullptr);

// Same alternating updates with no decisions; the genotype is derived from
// the full alpha table at the end.
SearchResult run_darts_first_order(const SearchConfig& cfg, const Dataset& ds,
                                   const EventSink& sink = {},
                                   std::unique_ptr<SuperNetwork>* final_net = nullptr);

// Uniform legal genotype; no supernet training. The reported validation
// error is that of the freshly initialized stand-alone network.
SearchResult run_random_search(const SearchConfig& cfg, const Dataset& ds,
                               const EventSink& sink = {});

// Dispatch on cfg.criterion.
SearchResult run_search(const SearchConfig& cfg, const Dataset& ds, const EventSink& sink = {},
                        std::unique_ptr<SuperNetwork>* final_net = nullptr);

struct PruneSummary {
  std::vector<int> pruned_edges;
  Eigen::Index weights_freed = 0;
  Eigen::Index alpha_freed = 0;
};

// Applies one greedy decision: fixes `op` on `edge`, drops the losing
// operations' weights and the edge's alpha row, and prunes sibling edges of
// any node that reaches two determined incoming edges. Deciding an already
// resolved edge is an error.
PruneSummary prune_after_decision(SuperNetwork& net, DecisionHistory* history, int edge,
                                  int op);

// Mean loss and accuracy of the network over the given rows.
std::pair<double, double> evaluate_network(const SuperNetwork& net, const Dataset& ds,
                                           std::span<const int> idx);

}  // namespace sgas
