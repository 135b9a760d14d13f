#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sgas/dataset.hpp"
#include "sgas/io.hpp"

using namespace sgas;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

// leave-one-out 1-nearest-neighbour accuracy
double one_nn_accuracy(const Dataset& ds) {
  int hits = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    double best = 1e300;
    int best_label = -1;
    for (Eigen::Index j = 0; j < ds.size(); ++j) {
      if (i == j) continue;
      const double d = (ds.features.row(i) - ds.features.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        best_label = ds.labels[j];
      }
    }
    hits += (best_label == ds.labels[i]);
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("noise-free 2-class spirals are 1-NN separable") {
  const Dataset ds = make_spirals(80, 2, 0.0, 3);
  CHECK(one_nn_accuracy(ds) == 1.0);
}

TEST_CASE("spiral labels are exactly balanced and rows deterministic") {
  const Dataset a = make_spirals(50, 3, 0.1, 9);
  const Dataset b = make_spirals(50, 3, 0.1, 9);
  REQUIRE(a.size() == 150);
  std::vector<int> counts(3, 0);
  for (int y : a.labels) counts[y]++;
  for (int c : counts) CHECK(c == 50);
  CHECK(a.features == b.features);
  const Dataset c = make_spirals(50, 3, 0.1, 10);
  CHECK(a.features != c.features);
}

TEST_CASE("tight blobs are linearly separable by a centroid rule") {
  const Dataset ds = make_blobs(40, 3, 0.01, 5);
  // nearest class centroid (a linear rule) classifies every sample
  std::vector<Eigen::RowVectorXd> mean(3, Eigen::RowVectorXd::Zero(ds.dim()));
  std::vector<int> n(3, 0);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    mean[ds.labels[i]] += ds.features.row(i);
    n[ds.labels[i]]++;
  }
  for (int c = 0; c < 3; ++c) mean[c] /= n[c];
  for (int c = 0; c < 3; ++c) {
    for (int d = c + 1; d < 3; ++d) CHECK((mean[c] - mean[d]).norm() > 1.0);
  }
  int hits = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    int arg = 0;
    for (int c = 1; c < 3; ++c) {
      if ((ds.features.row(i) - mean[c]).squaredNorm() <
          (ds.features.row(i) - mean[arg]).squaredNorm()) {
        arg = c;
      }
    }
    hits += (arg == ds.labels[i]);
  }
  CHECK(hits == ds.size());
}

TEST_CASE("csv round trip and standardization") {
  Dataset ds = make_blobs(20, 2, 0.3, 11, 6);
  const auto path = tmp_file("sgas_test_roundtrip.csv");
  save_csv(ds, path.string());

  const Dataset loaded = load_csv(path.string());
  REQUIRE(loaded.size() == ds.size());
  REQUIRE(loaded.dim() == ds.dim());
  CHECK(loaded.classes == 2);
  for (Eigen::Index c = 0; c < loaded.dim(); ++c) {
    CHECK(std::abs(loaded.features.col(c).mean()) < 1e-9);
  }

  // a second save/load is the identity (standardization is idempotent)
  const auto path2 = tmp_file("sgas_test_roundtrip2.csv");
  save_csv(loaded, path2.string());
  const Dataset again = load_csv(path2.string());
  CHECK((again.features - loaded.features).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(again.labels == loaded.labels);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("csv loader reports structured errors with line numbers") {
  const auto path = tmp_file("sgas_test_bad.csv");

  SUBCASE("ragged row") {
    write_file(path.string(), "f0,f1,label\n1,2,0\n3,1\n");
    CHECK_THROWS_WITH_AS(load_csv(path.string()), doctest::Contains(":3"), Error);
  }
  SUBCASE("non-numeric feature") {
    write_file(path.string(), "f0,f1,label\n1,x,0\n");
    CHECK_THROWS_WITH_AS(load_csv(path.string()), doctest::Contains("non-numeric"), Error);
  }
  SUBCASE("unknown label column") {
    write_file(path.string(), "f0,f1,label\n1,2,0\n");
    CHECK_THROWS_WITH_AS(load_csv(path.string(), "target"),
                         doctest::Contains("unknown label column"), Error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("small csv is shaped and remapped") {
  const auto path = tmp_file("sgas_test_small.csv");
  write_file(path.string(), "f0,f1,label\n1,2,b\n3,4,a\n5,6,b\n7,8,c\n");
  const Dataset ds = load_csv(path.string());
  REQUIRE(ds.size() == 4);
  REQUIRE(ds.dim() == 2);
  CHECK(ds.classes == 3);
  CHECK(ds.labels == std::vector<int>{0, 1, 0, 2});  // by first appearance
  std::filesystem::remove(path);
}

TEST_CASE("stratified split is disjoint, covers classes and is deterministic") {
  Dataset base = make_spirals(50, 3, 0.1, 21);
  const Dataset ds = split(base, {0.4, 0.4, 0.2}, 99);
  CHECK(ds.w_train.size() == 60);
  CHECK(ds.alpha_val.size() == 60);
  CHECK(ds.test.size() == 30);

  std::vector<int> seen(ds.size(), 0);
  for (const auto* s : {&ds.w_train, &ds.alpha_val, &ds.test}) {
    for (int i : *s) seen[i]++;
  }
  for (int c : seen) CHECK(c == 1);

  for (const auto* s : {&ds.w_train, &ds.alpha_val, &ds.test}) {
    std::vector<int> counts(3, 0);
    for (int i : *s) counts[ds.labels[i]]++;
    // proportions within one sample of the global third
    for (int c : counts) {
      CHECK(c >= static_cast<int>(s->size()) / 3 - 1);
      CHECK(c <= static_cast<int>(s->size()) / 3 + 1);
    }
  }

  const Dataset again = split(base, {0.4, 0.4, 0.2}, 99);
  CHECK(again.w_train == ds.w_train);
  CHECK(again.test == ds.test);
}

TEST_CASE("degenerate split fraction routes everything to w_train") {
  const Dataset ds = split(make_blobs(10, 2, 0.2, 2), {1.0, 0.0, 0.0}, 7);
  CHECK(ds.w_train.size() == 20);
  CHECK(ds.alpha_val.empty());
  CHECK(ds.test.empty());
}

TEST_CASE("split errors") {
  Dataset tiny = make_blobs(1, 2, 0.1, 3);
  CHECK_THROWS_AS(split(tiny, {0.4, 0.4, 0.2}, 1), Error);  // 1 sample, 3 splits
  Dataset ok = make_blobs(10, 2, 0.1, 3);
  CHECK_THROWS_AS(split(ok, {0.5, 0.2, 0.2}, 1), Error);  // does not sum to 1
}

TEST_CASE("gather produces row-major batches") {
  const Dataset ds = make_blobs(5, 2, 0.1, 4, 3);
  const std::vector<int> idx = {1, 3};
  const Tensor x = gather_features(ds, idx);
  REQUIRE(x.shape() == Shape{2, 3});
  CHECK(x.value()[0] == ds.features(1, 0));
  CHECK(x.value()[3] == ds.features(3, 0));
  CHECK(gather_labels(ds, idx) == std::vector<int>{ds.labels[1], ds.labels[3]});
}
