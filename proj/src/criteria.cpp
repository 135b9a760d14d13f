#include "sgas/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "sgas/genotype.hpp"

namespace sgas {

DecisionHistory::DecisionHistory(int num_edges, int window) : window_(window) {
  if (window_ < 1) throw Error("history: window must be >= 1");
  per_edge_.resize(num_edges);
}

void DecisionHistory::record(int edge, Vec p, int epoch) {
  auto& buf = per_edge_.at(edge);
  buf.push_back({edge, std::move(p), epoch});
  if (static_cast<int>(buf.size()) > window_ + 1) buf.erase(buf.begin());
}

void DecisionHistory::drop(int edge) { per_edge_.at(edge).clear(); }

std::span<const EdgeDistribution> DecisionHistory::snapshots(int edge) const {
  return per_edge_.at(edge);
}

double edge_importance(const Vec& alpha, int zero_index) {
  const Vec w = softmax_vec(alpha);
  double s = 0.0;
  for (Eigen::Index o = 0; o < w.size(); ++o) {
    if (static_cast<int>(o) != zero_index) s += w[o];
  }
  return s;
}

Vec nonzero_distribution(const Vec& alpha, int zero_index) {
  const Vec w = softmax_vec(alpha);
  Vec p(w.size() - 1);
  Eigen::Index k = 0;
  double sum = 0.0;
  for (Eigen::Index o = 0; o < w.size(); ++o) {
    if (static_cast<int>(o) == zero_index) continue;
    p[k++] = w[o];
    sum += w[o];
  }
  return p / sum;
}

double selection_certainty(const Vec& p) {
  if (p.size() < 1) throw Error("certainty: empty distribution");
  if (p.size() == 1) return 1.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return 1.0 - h / std::log(static_cast<double>(p.size()));
}

double selection_stability(std::span<const EdgeDistribution> snapshots) {
  if (snapshots.empty()) throw Error("stability: no snapshots");
  if (snapshots.size() == 1) return 1.0;
  const Vec& current = snapshots.back().p;
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < snapshots.size(); ++t) {
    total += snapshots[t].p.cwiseMin(current).sum();
  }
  return total / static_cast<double>(snapshots.size() - 1);
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
  if (values.empty()) throw Error("normalize: empty input");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 1.0);
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

void normalize_and_combine(std::vector<EdgeScore>& scores) {
  if (scores.empty()) return;
  std::vector<double> ei, sc, ss;
  for (const EdgeScore& s : scores) {
    ei.push_back(s.ei);
    sc.push_back(s.sc);
    ss.push_back(s.ss);
  }
  const std::vector<double> ei_n = min_max_normalize(ei);
  const std::vector<double> sc_n = min_max_normalize(sc);
  const std::vector<double> ss_n = min_max_normalize(ss);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i].ei_n = ei_n[i];
    scores[i].sc_n = sc_n[i];
    scores[i].ss_n = ss_n[i];
    scores[i].s1 = ei_n[i] * sc_n[i];
    scores[i].s2 = scores[i].s1 * ss_n[i];
  }
}

std::vector<EdgeScore> score_edges(const AlphaTable& table, const DecisionHistory& history,
                                   int zero_index) {
  std::vector<EdgeScore> scores;
  for (int e : table.undetermined_edges()) {
    EdgeScore s;
    s.edge = e;
    const Vec& alpha = table.alpha(e).value();
    s.ei = edge_importance(alpha, zero_index);
    s.sc = selection_certainty(nonzero_distribution(alpha, zero_index));
    s.ss = selection_stability(history.snapshots(e));
    scores.push_back(std::move(s));
  }
  normalize_and_combine(scores);
  return scores;
}

int select_edge(std::span<const EdgeScore> scores, Criterion criterion) {
  if (scores.empty()) throw Error("select: no candidate edges");
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
    const double a = criterion == Criterion::Cri1 ? scores[i].s1 : scores[i].s2;
    const double b = criterion == Criterion::Cri1 ? scores[best].s1 : scores[best].s2;
    if (a > b) best = i;
  }
  return scores[best].edge;
}

}  // namespace sgas
