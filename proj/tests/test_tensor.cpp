#include <doctest.h>

#include <cmath>

#include "sgas/rng.hpp"
#include "sgas/tensor.hpp"

using namespace sgas;

TEST_CASE("softmax of uniform logits is uniform") {
  Tensor x = Tensor::from({0, 0, 0, 0});
  Tensor y = softmax(x, 0);
  for (int i = 0; i < 4; ++i) CHECK(y.value()[i] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y.value().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relu clamps negatives") {
  Tensor y = relu(Tensor::from({-1, 2}));
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == 2.0);
}

TEST_CASE("cross entropy of uniform 2-class logits is ln 2") {
  Tensor logits = Tensor::from({0, 0});
  const std::vector<int> label = {0};
  CHECK(cross_entropy(logits, label).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy gradient is softmax minus one-hot") {
  Tensor logits = Tensor::from({0, 0}, true);
  const std::vector<int> label = {0};
  Tensor loss = cross_entropy(logits, label);
  backward(loss);
  CHECK(logits.grad()[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(logits.grad()[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mean of squares backward") {
  Tensor x = Tensor::from({1, 2}, true);
  Tensor loss = mean(mul(x, x));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gradients accumulate across branches") {
  Tensor x = Tensor::from({3}, true);
  // f = x*x + 2x -> df/dx = 2x + 2 = 8
  Tensor loss = mean(add(mul(x, x), scale(x, 2.0)));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("matmul forward and backward") {
  Tensor a = Tensor::from(Vec{{1, 2, 3, 4}}, {2, 2}, true);
  Tensor b = Tensor::from(Vec{{5, 6, 7, 8}}, {2, 2}, true);
  Tensor c = matmul(a, b);
  CHECK(c.value()[0] == 19);  // [1 2;3 4][5 6;7 8] = [19 22;43 50]
  CHECK(c.value()[1] == 22);
  CHECK(c.value()[2] == 43);
  CHECK(c.value()[3] == 50);
  backward(mean(c));
  // dA = G B^T with G = 1/4
  CHECK(a.grad()[0] == doctest::Approx((5 + 6) / 4.0));
  CHECK(b.grad()[0] == doctest::Approx((1 + 3) / 4.0));
}

TEST_CASE("matmul rejects mismatched shapes") {
  Tensor a = Tensor::from(Vec{{1, 2, 3}}, {1, 3});
  Tensor b = Tensor::from(Vec{{1, 2, 3, 4}}, {2, 2});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), Error);
}

TEST_CASE("non-scalar loss rejected") {
  Tensor x = Tensor::from({1, 2}, true);
  CHECK_THROWS_AS(backward(mul(x, x)), Error);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Rng rng(7);
  for (int it = 0; it < 200; ++it) {
    Vec v(5);
    for (int i = 0; i < 5; ++i) v[i] = rng.uniform(-8, 8);
    Tensor x = Tensor::from(v, {5});
    Tensor y = softmax(x, 0);
    CHECK(std::abs(y.value().sum() - 1.0) < 1e-12);
    Tensor shifted = softmax(Tensor::from(v.array() + rng.uniform(-5, 5), {5}), 0);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(y.value()[i] - shifted.value()[i]) < 1e-9);
  }
}

TEST_CASE("softmax along matrix axes") {
  Tensor x = Tensor::from(Vec{{0, 1, 2, 3, 4, 5}}, {2, 3});
  Tensor rows = softmax(x, 1);
  for (int r = 0; r < 2; ++r) {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += rows.value()[r * 3 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor cols = softmax(x, 0);
  for (int c = 0; c < 3; ++c) {
    CHECK(cols.value()[c] + cols.value()[3 + c] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("concat axis 1 splits gradients per part") {
  Tensor a = Tensor::from(Vec{{1, 2}}, {2, 1}, true);
  Tensor b = Tensor::from(Vec{{3, 4, 5, 6}}, {2, 2}, true);
  const Tensor parts[] = {a, b};
  Tensor c = concat(parts, 1);
  REQUIRE(c.shape() == Shape{2, 3});
  CHECK(c.value()[0] == 1);
  CHECK(c.value()[1] == 3);
  CHECK(c.value()[2] == 4);
  CHECK(c.value()[3] == 2);
  backward(mean(mul(c, c)));
  CHECK(a.grad()[0] == doctest::Approx(2.0 * 1 / 6.0));
  CHECK(b.grad()[3] == doctest::Approx(2.0 * 6 / 6.0));
}

TEST_CASE("index picks one entry and routes gradient to it") {
  Tensor x = Tensor::from({1, 2, 3}, true);
  Tensor y = index(x, 1);
  CHECK(y.item() == 2.0);
  backward(y);
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("labels outside range rejected") {
  Tensor logits = Tensor::from({0, 0});
  const std::vector<int> bad = {2};
  CHECK_THROWS_AS(cross_entropy(logits, bad), Error);
}
