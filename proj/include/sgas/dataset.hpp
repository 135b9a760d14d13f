#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgas/rng.hpp"
#include "sgas/tensor.hpp"

namespace sgas {

// Classification data plus the three named index splits the search loop
// needs. Splits are disjoint; rows are immutable after construction.
struct Dataset {
  RowMat features;  // n x d
  std::vector<int> labels;
  int classes = 0;
  std::vector<int> w_train;
  std::vector<int> alpha_val;
  std::vector<int> test;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

// Interleaved 2-D spirals, zero-padded to `width` and passed through a fixed
// seeded rotation. Rows are class-major; labels exactly balanced.
Dataset make_spirals(int n_per_class, int classes, double noise, std::uint64_t seed,
                     int width = 32);

// Gaussian clusters centred on scaled one-hot vertices, embedded the same way.
Dataset make_blobs(int n_per_class, int classes, double spread, std::uint64_t seed,
                   int width = 32);

// Numeric CSV with a header row; the label column is categorical and indexed
// by first appearance. Features are standardized to zero mean / unit variance
// per column. Errors carry 1-based line numbers.
Dataset load_csv(const std::string& path, const std::string& label_column = "label");

void save_csv(const Dataset& ds, const std::string& path);

// Stratified shuffle split into w_train / alpha_val / test.
Dataset split(Dataset ds, const std::array<double, 3>& fractions, std::uint64_t seed);

Tensor gather_features(const Dataset& ds, std::span<const int> idx);
std::vector<int> gather_labels(const Dataset& ds, std::span<const int> idx);

}  // namespace sgas
