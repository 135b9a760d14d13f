#include <doctest.h>

#include "oracles.hpp"
#include "sgas/grad_check.hpp"

using namespace sgas;

TEST_CASE("identity loss has exact gradient") {
  Tensor x = Tensor::from({1.5}, true);
  auto build = [](std::span<const Tensor> p) { return mean(p[0]); };
  std::vector<Tensor> params = {x};
  const GradCheckReport r = grad_check(build, params);
  CHECK(r.max_rel_err < 1e-10);
}

TEST_CASE("linear-relu-cross-entropy network passes the finite-difference check") {
  Rng rng(0);
  const int batch = 4, in = 5, hidden = 6, classes = 3;
  auto leaf = [&](Shape s) {
    Vec v(shape_numel(s));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
    return Tensor::from(std::move(v), std::move(s), true);
  };
  std::vector<Tensor> params = {leaf({batch, in}), leaf({in, hidden}),
                                leaf({hidden, classes})};
  std::vector<int> labels;
  for (int b = 0; b < batch; ++b) labels.push_back(static_cast<int>(rng.below(classes)));
  auto build = [labels](std::span<const Tensor> p) {
    return cross_entropy(matmul(relu(matmul(p[0], p[1])), p[2]), labels);
  };
  const GradCheckReport r = grad_check(build, params);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("mixed-edge forward passes the finite-difference check") {
  const OperationSet ops = toy_operation_set(4);
  Rng rng(0);
  const Rng init(0);
  SuperNetwork net(ops, CellTopology(2), 1, 4, 2, init.stream("weight-init"));

  // randomize alpha rows so the softmax mixing is non-trivial
  for (int e : net.alpha_table().undetermined_edges()) {
    Tensor a = net.alpha_table().alpha(e);
    for (Eigen::Index i = 0; i < a.numel(); ++i) a.value()[i] = rng.uniform(-1.0, 1.0);
  }

  Vec xv(2 * 4);
  for (Eigen::Index i = 0; i < xv.size(); ++i) xv[i] = rng.uniform(-1.0, 1.0);
  const Tensor x = Tensor::from(xv, {2, 4});
  const std::vector<int> labels = {0, 1};

  std::vector<Tensor> params = net.weight_params();
  const std::vector<Tensor> alphas = net.alpha_table().alpha_params();
  params.insert(params.end(), alphas.begin(), alphas.end());

  auto build = [&](std::span<const Tensor>) {
    return cross_entropy(net.forward(x), labels);
  };
  const GradCheckReport r = grad_check(build, params);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("100 seeded random graphs over the full op set pass") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    oracle::RandomGraphCase c = oracle::make_random_graph(seed);
    const GradCheckReport r = grad_check(c.build_loss, c.params);
    CHECK(r.max_rel_err < 1e-4);
  }
}
