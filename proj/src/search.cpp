#include "sgas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sgas/io.hpp"

namespace sgas {

std::string method_name(Method m) {
  switch (m) {
    case Method::Cri1: return "cri1";
    case Method::Cri2: return "cri2";
    case Method::Darts1: return "darts1";
    case Method::Random: return "random";
  }
  throw Error("unknown method");
}

Method method_from_string(const std::string& s) {
  if (s == "cri1") return Method::Cri1;
  if (s == "cri2") return Method::Cri2;
  if (s == "darts1") return Method::Darts1;
  if (s == "random") return Method::Random;
  throw ConfigError("criterion must be one of cri1|cri2|darts1|random, got '" + s + "'");
}

std::vector<int> decision_epochs(const SearchConfig& cfg) {
  std::vector<int> out;
  for (int k = 0; k < cfg.decisions_needed(); ++k) {
    out.push_back(cfg.warm_up_epochs + 1 + k * cfg.decision_interval);
  }
  return out;
}

void validate_search_config(const SearchConfig& cfg, const Dataset& ds) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.warm_up_epochs < 0) throw ConfigError("warm_up_epochs must be >= 0");
  if (cfg.decision_interval < 1) throw ConfigError("decision_interval must be >= 1");
  if (cfg.history_window < 1) throw ConfigError("history_window must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.batch_growth < 0) throw ConfigError("batch_growth must be >= 0");
  if (cfg.cells < 1) throw ConfigError("cells must be >= 1");
  if (cfg.width < 2) throw ConfigError("width must be >= 2");
  if (cfg.intermediate_nodes < 1) throw ConfigError("intermediate_nodes must be >= 1");
  if (ds.classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (cfg.criterion == Method::Cri1 || cfg.criterion == Method::Cri2) {
    const int last = cfg.warm_up_epochs + 1 +
                     cfg.decision_interval * (cfg.decisions_needed() - 1);
    if (last > cfg.epochs) {
      throw ConfigError("schedule cannot fit " + std::to_string(cfg.decisions_needed()) +
                        " decisions: last decision epoch " + std::to_string(last) +
                        " exceeds epochs " + std::to_string(cfg.epochs));
    }
  }
  if (cfg.criterion != Method::Random) {
    if (ds.w_train.empty() || ds.alpha_val.empty()) {
      throw ConfigError("dataset too small: w_train and alpha_val splits must be non-empty");
    }
  }
}

std::pair<double, double> evaluate_network(const SuperNetwork& net, const Dataset& ds,
                                           std::span<const int> idx) {
  const Tensor x = gather_features(ds, idx);
  const std::vector<int> y = gather_labels(ds, idx);
  Tensor logits = net.forward(x);
  const double loss = cross_entropy(logits, y).item();
  int hits = 0;
  const Eigen::Index classes = logits.shape()[1];
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* row = logits.value().data() + static_cast<Eigen::Index>(r) * classes;
    int arg = 0;
    for (Eigen::Index c = 1; c < classes; ++c) {
      if (row[c] > row[arg]) arg = static_cast<int>(c);
    }
    hits += (arg == y[r]);
  }
  return {loss, static_cast<double>(hits) / static_cast<double>(idx.size())};
}

PruneSummary prune_after_decision(SuperNetwork& net, DecisionHistory* history, int edge,
                                  int op) {
  AlphaTable& table = net.alpha_table();
  const CellTopology& topo = net.topology();
  PruneSummary out;

  out.alpha_freed += net.ops().size();
  table.determine(edge, op);  // throws on an already resolved edge
  out.weights_freed += net.keep_only_op(edge, op);
  if (history) history->drop(edge);

  const int dst = topo.edge(edge).dst;
  int determined = 0;
  for (int e : topo.incoming(dst)) determined += (table.state(e) == EdgeState::Determined);
  if (determined == CellTopology::kEdgesPerNode) {
    for (int e : topo.incoming(dst)) {
      if (table.state(e) == EdgeState::Undetermined) {
        table.prune(e);
        out.alpha_freed += net.ops().size();
        out.weights_freed += net.drop_edge(e);
        if (history) history->drop(e);
        out.pruned_edges.push_back(e);
      }
    }
  }
  return out;
}

namespace {

// Cycles shuffled rows of one split, reshuffling at each wrap.
class BatchCycle {
 public:
  BatchCycle(std::vector<int> rows, Rng rng) : rows_(std::move(rows)), rng_(rng) {
    rng_.shuffle(rows_);
  }

  std::vector<int> next(int n) {
    std::vector<int> out;
    out.reserve(n);
    while (static_cast<int>(out.size()) < n) {
      if (pos_ == rows_.size()) {
        rng_.shuffle(rows_);
        pos_ = 0;
      }
      out.push_back(rows_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<int> rows_;
  std::size_t pos_ = 0;
  Rng rng_;
};

void zero_grads(std::span<const Tensor> params) {
  for (const Tensor& p : params) {
    Tensor t = p;
    t.zero_grad();
  }
}

SearchResult run_supernet_search(const SearchConfig& cfg, const Dataset& ds, bool greedy,
                                 const EventSink& sink,
                                 std::unique_ptr<SuperNetwork>* final_net) {
  validate_search_config(cfg, ds);
  const auto t0 = std::chrono::steady_clock::now();

  const Rng root(cfg.seed);
  auto net = std::make_unique<SuperNetwork>(
      toy_operation_set(cfg.width), CellTopology(cfg.intermediate_nodes), cfg.cells,
      static_cast<int>(ds.dim()), ds.classes, root.stream("weight-init"));
  AlphaTable& table = net->alpha_table();
  const OperationSet& ops = net->ops();
  const int num_edges = net->topology().num_edges();

  Optimizer w_opt = Optimizer::sgd_momentum(cfg.w_optim);
  Optimizer a_opt = Optimizer::adam(cfg.alpha_optim);
  DecisionHistory history(num_edges, cfg.history_window);

  Rng wtrain_rng = root.stream("wtrain-shuffle");
  BatchCycle val_cycle(ds.alpha_val, root.stream("alphaval-shuffle"));

  const std::vector<int> schedule = decision_epochs(cfg);
  int batch = cfg.batch_size;

  SearchResult result;
  result.method = method_name(cfg.criterion);

  auto snapshot_distributions = [&](int epoch) {
    for (int e : table.undetermined_edges()) {
      history.record(e, nonzero_distribution(table.alpha(e).value(), ops.zero_index()), epoch);
    }
  };

  auto make_decision = [&](int epoch) {
    const std::vector<EdgeScore> scores = score_edges(table, history, ops.zero_index());
    const Criterion cri =
        cfg.criterion == Method::Cri1 ? Criterion::Cri1 : Criterion::Cri2;
    const int edge = select_edge(scores, cri);
    const int op = argmax_nonzero_op(table.alpha(edge).value(), ops.zero_index());

    DecisionRecord rec;
    rec.epoch = epoch;
    rec.edge = edge;
    rec.edge_nodes = net->topology().edge(edge);
    rec.op = ops.op(op).name;
    rec.scores = scores;
    PruneSummary summary = prune_after_decision(*net, &history, edge, op);
    rec.pruned_edges = std::move(summary.pruned_edges);
    rec.weights_freed = summary.weights_freed;
    rec.alpha_freed = summary.alpha_freed;
    rec.weight_params_after = net->weight_param_count();
    rec.alpha_params_after = net->alpha_param_count();
    batch += cfg.batch_growth;
    if (sink) sink(decision_to_json(rec));
    result.decisions.push_back(std::move(rec));
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order = ds.w_train;
    wtrain_rng.shuffle(order);
    const int steps =
        static_cast<int>((order.size() + static_cast<std::size_t>(batch) - 1) / batch);

    double train_loss = 0.0;
    for (int s = 0; s < steps; ++s) {
      const std::size_t lo = static_cast<std::size_t>(s) * batch;
      const std::size_t hi = std::min(order.size(), lo + batch);
      std::span<const int> wrows(order.data() + lo, hi - lo);

      if (!table.all_resolved()) {
        const std::vector<int> vrows = val_cycle.next(batch);
        const std::vector<Tensor> alphas = table.alpha_params();
        zero_grads(alphas);
        Tensor val_loss = cross_entropy(net->forward(gather_features(ds, vrows)),
                                        gather_labels(ds, vrows));
        backward(val_loss);
        a_opt.step(alphas);
      }

      const std::vector<Tensor> weights = net->weight_params();
      zero_grads(weights);
      Tensor loss = cross_entropy(net->forward(gather_features(ds, wrows)),
                                  gather_labels(ds, wrows));
      backward(loss);
      w_opt.step(weights);
      train_loss += loss.item() * static_cast<double>(wrows.size());
    }
    train_loss /= static_cast<double>(order.size());

    if (greedy) {
      snapshot_distributions(epoch);
      if (!table.all_resolved() &&
          std::find(schedule.begin(), schedule.end(), epoch) != schedule.end()) {
        make_decision(epoch);
      }
    }

    // invariant: every edge is accounted for exactly once
    if (table.count(EdgeState::Undetermined) + table.count(EdgeState::Determined) +
            table.count(EdgeState::Pruned) != num_edges) {
      throw Error("search: edge state conservation violated");
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_loss;
    std::tie(stats.val_loss, stats.val_acc) = evaluate_network(*net, ds, ds.alpha_val);
    stats.batch_size = batch;
    stats.undetermined = table.count(EdgeState::Undetermined);
    if (sink) sink(epoch_to_json(stats));
    result.epochs.push_back(stats);
  }

  // Fallback when epochs ran out first: resolve the remaining edges in one
  // burst of criterion-ranked decisions.
  while (greedy && !table.all_resolved()) {
    snapshot_distributions(cfg.epochs);
    make_decision(cfg.epochs);
  }

  result.genotype = derive_genotype(table, net->topology(), ops, cfg.width, cfg.cells);
  result.genotype.meta = {{"seed", cfg.seed},
                          {"criterion", method_name(cfg.criterion)},
                          {"config_digest", config_digest(search_config_to_json(cfg))}};

  const EpochStats& last = result.epochs.back();
  result.final_val_acc = last.val_acc;
  result.final_val_err = 1.0 - last.val_acc;
  result.best_val_err = 1.0;
  for (const EpochStats& s : result.epochs) {
    result.best_val_err = std::min(result.best_val_err, 1.0 - s.val_acc);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (final_net) *final_net = std::move(net);
  return result;
}

}  // namespace

SearchResult run_sgas(const SearchConfig& cfg, const Dataset& ds, const EventSink& sink,
                      std::unique_ptr<SuperNetwork>* final_net) {
  if (cfg.criterion != Method::Cri1 && cfg.criterion != Method::Cri2) {
    throw ConfigError("run_sgas requires criterion cri1 or cri2");
  }
  return run_supernet_search(cfg, ds, true, sink, final_net);
}

SearchResult run_darts_first_order(const SearchConfig& cfg, const Dataset& ds,
                                   const EventSink& sink,
                                   std::unique_ptr<SuperNetwork>* final_net) {
  SearchConfig c = cfg;
  c.criterion = Method::Darts1;
  // epochs = 0 is a legal degenerate run: derive from the uniform table
  if (c.epochs == 0) {
    validate_search_config(SearchConfig{.epochs = 1,
                                        .criterion = Method::Darts1,
                                        .cells = c.cells,
                                        .width = c.width,
                                        .intermediate_nodes = c.intermediate_nodes},
                           ds);
    const Rng root(c.seed);
    SuperNetwork net(toy_operation_set(c.width), CellTopology(c.intermediate_nodes), c.cells,
                     static_cast<int>(ds.dim()), ds.classes, root.stream("weight-init"));
    SearchResult result;
    result.method = method_name(Method::Darts1);
    result.genotype =
        derive_genotype(net.alpha_table(), net.topology(), net.ops(), c.width, c.cells);
    result.genotype.meta = {{"seed", c.seed},
                            {"criterion", result.method},
                            {"config_digest", config_digest(search_config_to_json(c))}};
    std::tie(std::ignore, result.final_val_acc) = evaluate_network(net, ds, ds.alpha_val);
    result.final_val_err = 1.0 - result.final_val_acc;
    result.best_val_err = result.final_val_err;
    return result;
  }
  return run_supernet_search(c, ds, false, sink, final_net);
}

SearchResult run_random_search(const SearchConfig& cfg, const Dataset& ds,
                               const EventSink& sink) {
  SearchConfig c = cfg;
  c.criterion = Method::Random;
  validate_search_config(c, ds);
  const auto t0 = std::chrono::steady_clock::now();
  const Rng root(c.seed);
  Rng pick = root.stream("random-genotype");
  const OperationSet ops = toy_operation_set(c.width);

  Genotype g;
  g.width = c.width;
  g.cells = c.cells;
  for (int k = 0; k < c.intermediate_nodes; ++k) {
    const int sources = k + CellTopology::kInputNodes;
    int a = static_cast<int>(pick.below(sources));
    int b = static_cast<int>(pick.below(sources - 1));
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    auto pick_op = [&]() {
      int o = static_cast<int>(pick.below(ops.size() - 1));
      if (o >= ops.zero_index()) ++o;
      return ops.op(o).name;
    };
    g.nodes.push_back({GenotypePair{a, pick_op()}, GenotypePair{b, pick_op()}});
  }
  validate_genotype(g, ops);
  g.meta = {{"seed", c.seed},
            {"criterion", "random"},
            {"config_digest", config_digest(search_config_to_json(c))}};

  SearchResult result;
  result.method = "random";
  result.genotype = std::move(g);
  if (!ds.alpha_val.empty()) {
    SuperNetwork net = SuperNetwork::standalone(ops, result.genotype, c.cells,
                                                static_cast<int>(ds.dim()), ds.classes,
                                                root.stream("weight-init"));
    std::tie(std::ignore, result.final_val_acc) = evaluate_network(net, ds, ds.alpha_val);
  }
  result.final_val_err = 1.0 - result.final_val_acc;
  result.best_val_err = result.final_val_err;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (sink) sink({{"type", "genotype_sampled"}, {"seed", c.seed}});
  return result;
}

SearchResult run_search(const SearchConfig& cfg, const Dataset& ds, const EventSink& sink,
                        std::unique_ptr<SuperNetwork>* final_net) {
  switch (cfg.criterion) {
    case Method::Cri1:
    case Method::Cri2:
      return run_sgas(cfg, ds, sink, final_net);
    case Method::Darts1:
      return run_darts_first_order(cfg, ds, sink, final_net);
    case Method::Random:
      return run_random_search(cfg, ds, sink);
  }
  throw Error("unknown search method");
}

}  // namespace sgas
