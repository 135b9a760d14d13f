#include "sgas/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace sgas {

namespace {

void check_permutation(std::span<const int> r, const char* which) {
  std::vector<int> sorted(r.begin(), r.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i) + 1) {
      throw Error(std::string("kendall_tau: ") + which + " is not a permutation of 1..n");
    }
  }
}

// two-pass sample mean / standard deviation
std::pair<double, double> mean_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::uint64_t run_seed(std::uint64_t base, int run_id) {
  return Rng(base).stream("run-" + std::to_string(run_id)).next_u64();
}

}  // namespace

double kendall_tau(std::span<const int> ranking_a, std::span<const int> ranking_b) {
  const std::size_t n = ranking_a.size();
  if (n != ranking_b.size()) throw Error("kendall_tau: ranking lengths differ");
  if (n < 2) throw Error("kendall_tau: need at least 2 entries");
  check_permutation(ranking_a, "first ranking");
  check_permutation(ranking_b, "second ranking");

  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int da = ranking_a[i] - ranking_a[j];
      const int db = ranking_b[i] - ranking_b[j];
      if ((da < 0) == (db < 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

std::vector<int> rank_ascending(std::span<const double> values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  std::vector<int> rank(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    rank[order[pos]] = static_cast<int>(pos) + 1;
  }
  return rank;
}

RetrainOutcome retrain(const Genotype& g, const EvalConfig& cfg, const Dataset& ds,
                       std::uint64_t seed) {
  if (ds.test.empty()) throw Error("retrain: empty test split");
  std::vector<int> train = ds.w_train;
  train.insert(train.end(), ds.alpha_val.begin(), ds.alpha_val.end());
  std::sort(train.begin(), train.end());
  if (train.empty()) throw Error("retrain: empty training split");

  const Rng root(seed);
  const OperationSet ops = toy_operation_set(cfg.width);
  SuperNetwork net = SuperNetwork::standalone(ops, g, cfg.cells, static_cast<int>(ds.dim()),
                                              ds.classes, root.stream("retrain-weight-init"));
  Optimizer opt = Optimizer::sgd_momentum(cfg.optim);
  Rng shuffle_rng = root.stream("retrain-shuffle");

  const std::vector<Tensor> weights = net.weight_params();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order = train;
    shuffle_rng.shuffle(order);
    const std::size_t b = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t lo = 0; lo < order.size(); lo += b) {
      const std::size_t hi = std::min(order.size(), lo + b);
      std::span<const int> rows(order.data() + lo, hi - lo);
      for (const Tensor& w : weights) {
        Tensor t = w;
        t.zero_grad();
      }
      Tensor loss =
          cross_entropy(net.forward(gather_features(ds, rows)), gather_labels(ds, rows));
      backward(loss);
      opt.step(weights);
    }
  }

  RetrainOutcome out;
  const auto [loss, acc] = evaluate_network(net, ds, ds.test);
  (void)loss;
  out.test_acc = acc;
  out.test_err = 1.0 - acc;
  out.params = net.weight_param_count();
  return out;
}

ExperimentReport run_experiment(Method method, int n_runs, const SearchConfig& base,
                                const EvalConfig& eval_cfg, const Dataset& ds, int jobs) {
  if (n_runs < 2) throw ConfigError("experiment: n_runs must be >= 2");
  if (jobs < 1) jobs = 1;

  struct Slot {
    bool done = false;
    RunOutcome outcome;
    std::string error;
  };
  std::vector<Slot> slots(n_runs);
  std::atomic<int> next{0};

  // one retrain seed for the whole experiment, so the evaluation ranking
  // reflects architecture differences rather than retraining luck
  const std::uint64_t retrain_seed = Rng(base.seed).stream("retrain").next_u64();

  auto worker = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= n_runs) return;
      try {
        SearchConfig cfg = base;
        cfg.criterion = method;
        cfg.seed = run_seed(base.seed, r);
        const SearchResult sr = run_search(cfg, ds);
        const RetrainOutcome ro = retrain(sr.genotype, eval_cfg, ds, retrain_seed);
        RunOutcome out;
        out.run_id = r;
        out.seed = cfg.seed;
        out.search_val_err =
            eval_cfg.rank_by_best_epoch ? sr.best_val_err : sr.final_val_err;
        out.test_err = ro.test_err;
        out.params = ro.params;
        slots[r].outcome = out;
        slots[r].done = true;
      } catch (const std::exception& e) {
        slots[r].error = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(jobs, n_runs); ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  ExperimentReport report;
  report.method = method_name(method);
  std::string failure;
  for (const Slot& s : slots) {
    if (s.done) {
      report.runs.push_back(s.outcome);
    } else if (failure.empty()) {
      failure = s.error.empty() ? "run did not complete" : s.error;
    }
  }
  if (!failure.empty()) {
    throw ExperimentFailure("experiment: run failed: " + failure, std::move(report));
  }

  std::vector<double> val_err, test_err, params;
  for (const RunOutcome& r : report.runs) {
    val_err.push_back(r.search_val_err);
    test_err.push_back(r.test_err);
    params.push_back(static_cast<double>(r.params));
  }
  report.rank_search = rank_ascending(val_err);
  report.rank_eval = rank_ascending(test_err);
  report.tau = kendall_tau(report.rank_search, report.rank_eval);
  std::tie(report.test_err_mean, report.test_err_std) = mean_std(test_err);
  std::tie(report.params_mean, report.params_std) = mean_std(params);
  return report;
}

std::vector<AblationRow> run_ablation(const SearchConfig& base, const EvalConfig& eval_cfg,
                                      const Dataset& ds, std::span<const int> intervals,
                                      std::span<const int> windows, int n_runs, int jobs) {
  std::vector<AblationRow> rows;
  for (int t : intervals) {
    for (int k : windows) {
      SearchConfig cfg = base;
      cfg.criterion = Method::Cri2;
      cfg.decision_interval = t;
      cfg.history_window = k;
      const int needed =
          cfg.warm_up_epochs + 1 + cfg.decision_interval * (cfg.decisions_needed() - 1);
      cfg.epochs = std::max(base.epochs, needed + 1);

      const ExperimentReport report =
          run_experiment(Method::Cri2, n_runs, cfg, eval_cfg, ds, jobs);
      AblationRow row;
      row.interval = t;
      row.window = k;
      row.epochs = cfg.epochs;
      row.test_err_mean = report.test_err_mean;
      row.test_err_std = report.test_err_std;
      row.params_mean = report.params_mean;
      row.tau = report.tau;
      row.best_test_err = 1.0;
      for (const RunOutcome& r : report.runs) {
        row.best_test_err = std::min(row.best_test_err, r.test_err);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sgas
