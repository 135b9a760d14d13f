#pragma once

#include <deque>
#include <span>
#include <vector>

#include "sgas/cell.hpp"

namespace sgas {

// Probability vector over the non-zero operations of one edge at one epoch.
struct EdgeDistribution {
  int edge = -1;
  Vec p;  // length |O|-1, entries in [0,1], sums to 1
  int epoch = 0;
};

// Sliding window of the last K+1 per-edge distributions (K past snapshots
// plus the current one). Entries for resolved edges are dropped; they can
// never be selected again.
class DecisionHistory {
 public:
  DecisionHistory(int num_edges, int window);

  int window() const { return window_; }
  void record(int edge, Vec p, int epoch);
  void drop(int edge);
  std::span<const EdgeDistribution> snapshots(int edge) const;

 private:
  int window_;
  std::vector<std::vector<EdgeDistribution>> per_edge_;
};

// Share of softmax weight on non-zero operations; the complement of the zero
// operation's softmax weight.
double edge_importance(const Vec& alpha, int zero_index);

// Softmax weights of the non-zero operations renormalized to sum to 1.
Vec nonzero_distribution(const Vec& alpha, int zero_index);

// Complement of the normalized entropy of p; 0 for uniform, 1 for one-hot.
// 0*log 0 counts as 0; a single-operation distribution is fully certain.
double selection_certainty(const Vec& p);

// Mean histogram intersection between each past snapshot and the latest one.
// A single snapshot gives 1 (no evidence of movement); fewer than `window`
// past snapshots average over what exists.
double selection_stability(std::span<const EdgeDistribution> snapshots);

// (v - min) / (max - min); all 1.0 when max == min so the factor is neutral
// in criterion products. Empty input is an error.
std::vector<double> min_max_normalize(const std::vector<double>& values);

struct EdgeScore {
  int edge = -1;
  double ei = 0, sc = 0, ss = 0;        // raw
  double ei_n = 0, sc_n = 0, ss_n = 0;  // min-max normalized over candidates
  double s1 = 0, s2 = 0;
};

// Min-max normalizes the raw ei/sc/ss columns over the candidate set and
// fills s1 = ei_n * sc_n and s2 = s1 * ss_n.
void normalize_and_combine(std::vector<EdgeScore>& scores);

// Scores for every undetermined edge at the current epoch, normalized over
// the candidate set only. Snapshots must already include the current epoch.
std::vector<EdgeScore> score_edges(const AlphaTable& table, const DecisionHistory& history,
                                   int zero_index);

enum class Criterion { Cri1, Cri2 };

// Argmax of s1 or s2; ties break to the lowest (src, dst) edge id, which is
// ascending edge index.
int select_edge(std::span<const EdgeScore> scores, Criterion criterion);

}  // namespace sgas
