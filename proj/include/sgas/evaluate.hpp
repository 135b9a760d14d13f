#pragma once

#include <span>
#include <string>
#include <vector>

#include "sgas/search.hpp"

namespace sgas {

struct EvalConfig {
  int epochs = 100;
  int batch_size = 64;
  SgdConfig optim{0.025, 0.9, 3e-4};
  int cells = 3;
  int width = 32;
  bool rank_by_best_epoch = false;  // rank search runs by best-epoch val error
};

struct RetrainOutcome {
  double test_acc = 0.0;
  double test_err = 1.0;
  Eigen::Index params = 0;
};

// Trains a fresh stand-alone network for the genotype on w_train + alpha_val
// and reports accuracy on the test split. Deterministic in (genotype, config,
// seed).
RetrainOutcome retrain(const Genotype& g, const EvalConfig& cfg, const Dataset& ds,
                       std::uint64_t seed);

// Kendall rank correlation between two strict rankings (permutations of
// 1..n): (concordant - discordant) / (n(n-1)/2).
double kendall_tau(std::span<const int> ranking_a, std::span<const int> ranking_b);

// 1-based ranks by ascending value; ties break to the lower index.
std::vector<int> rank_ascending(std::span<const double> values);

struct RunOutcome {
  int run_id = 0;
  std::uint64_t seed = 0;
  double search_val_err = 1.0;
  double test_err = 1.0;
  Eigen::Index params = 0;
};

struct ExperimentReport {
  std::string method;
  std::vector<RunOutcome> runs;
  std::vector<int> rank_search;  // by search validation error, ascending
  std::vector<int> rank_eval;    // by retrained test error, ascending
  double tau = 0.0;
  double test_err_mean = 0.0, test_err_std = 0.0;
  double params_mean = 0.0, params_std = 0.0;
};

// Thrown when a run fails; carries whatever completed so the caller can
// persist partial results.
struct ExperimentFailure : Error {
  ExperimentFailure(const std::string& msg, ExperimentReport partial_report)
      : Error(msg), partial(std::move(partial_report)) {}
  ExperimentReport partial;
};

// n_runs independent seeded searches followed by retraining; ranks both
// phases and computes their Kendall tau. Runs execute on up to `jobs`
// threads; the report does not depend on the schedule.
ExperimentReport run_experiment(Method method, int n_runs, const SearchConfig& base,
                                const EvalConfig& eval_cfg, const Dataset& ds, int jobs = 1);

struct AblationRow {
  int interval = 0;  // T
  int window = 0;    // K
  int epochs = 0;
  double test_err_mean = 0.0, test_err_std = 0.0, best_test_err = 1.0;
  double params_mean = 0.0;
  double tau = 0.0;
};

// Grid over decision interval T and history window K with Criterion 2;
// epochs stretch as needed so every schedule fits.
std::vector<AblationRow> run_ablation(const SearchConfig& base, const EvalConfig& eval_cfg,
                                      const Dataset& ds, std::span<const int> intervals,
                                      std::span<const int> windows, int n_runs, int jobs = 1);

}  // namespace sgas
