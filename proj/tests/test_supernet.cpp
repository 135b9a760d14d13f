#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "sgas/genotype.hpp"
#include "sgas/network.hpp"

using namespace sgas;

namespace {

OperationSet zero_identity_set() {
  std::vector<OpSpec> ops;
  ops.push_back({"zero",
                 {},
                 [](const Tensor& x, std::span<const Tensor>) {
                   return Tensor::zeros(x.shape());
                 },
                 true});
  ops.push_back({"identity", {}, [](const Tensor& x, std::span<const Tensor>) { return x; }});
  return OperationSet(1, std::move(ops));
}

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1, double hi = 1) {
  Vec v(shape_numel(shape));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo, hi);
  return Tensor::from(std::move(v), std::move(shape));
}

void randomize_alphas(SuperNetwork& net, Rng& rng) {
  for (int e : net.alpha_table().undetermined_edges()) {
    Tensor a = net.alpha_table().alpha(e);
    for (Eigen::Index i = 0; i < a.numel(); ++i) a.value()[i] = rng.uniform(-1.5, 1.5);
  }
}

Genotype sample_genotype(int m, int width, int cells, Rng& rng, const OperationSet& ops) {
  Genotype g;
  g.width = width;
  g.cells = cells;
  for (int k = 0; k < m; ++k) {
    int a = static_cast<int>(rng.below(k + 2));
    int b = static_cast<int>(rng.below(k + 1));
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    auto pick = [&]() {
      int o = static_cast<int>(rng.below(ops.size() - 1));
      if (o >= ops.zero_index()) ++o;
      return ops.op(o).name;
    };
    g.nodes.push_back({GenotypePair{a, pick()}, GenotypePair{b, pick()}});
  }
  return g;
}

}  // namespace

TEST_CASE("mixed edge with uniform alpha over {zero, identity} halves the input") {
  const OperationSet ops = zero_identity_set();
  const std::vector<std::vector<Tensor>> params(2);
  const Tensor x = Tensor::from({2.0});
  const Tensor alpha = Tensor::zeros({2});
  const Tensor out = mixed_edge_forward(ops, params, x, alpha);
  CHECK(out.value()[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mixed edge approaches the dominant operation in the alpha limit") {
  const OperationSet ops = zero_identity_set();
  const std::vector<std::vector<Tensor>> params(2);
  const Tensor x = Tensor::from({2.0, -3.0});
  Tensor alpha = Tensor::zeros({2});
  alpha.value()[1] = 1000.0;
  const Tensor out = mixed_edge_forward(ops, params, x, alpha);
  CHECK(out.value()[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out.value()[1] == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("mixed edge matches direct per-op summation") {
  const int width = 5;
  const OperationSet ops = toy_operation_set(width);
  Rng rng(0);

  std::vector<std::vector<Tensor>> params(ops.size());
  for (int o = 0; o < ops.size(); ++o) {
    for (const Shape& s : ops.op(o).param_shapes) params[o].push_back(rand_tensor(s, rng));
  }
  const Tensor x = rand_tensor({3, width}, rng);
  Vec av(ops.size());
  for (int o = 0; o < ops.size(); ++o) av[o] = rng.uniform(-2, 2);
  const Tensor alpha = Tensor::from(Vec(av), {static_cast<Eigen::Index>(ops.size())});

  const Tensor out = mixed_edge_forward(ops, params, x, alpha);

  // direct summation with plain matrices
  const Vec w = oracle::softmax_plain(av);
  RowMat expect = RowMat::Zero(3, width);
  const RowMat xm = oracle::as_mat(x);
  for (int o = 0; o < ops.size(); ++o) {
    std::vector<RowMat> pm;
    for (const Tensor& t : params[o]) {
      pm.push_back(Eigen::Map<const RowMat>(t.value().data(), t.shape()[0], t.shape()[1]));
    }
    expect += w[o] * oracle::apply_op_plain(ops.op(o).name, xm, pm);
  }
  CHECK((oracle::as_mat(out) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("determined edge applies only the chosen op") {
  const OperationSet ops = toy_operation_set(2);
  const Tensor x = Tensor::from(Vec{{3, 4}}, {1, 2});
  CHECK(determined_edge_forward(ops, {}, x, ops.index_of("identity")).value() == x.value());

  Tensor w = Tensor::from(Vec{{2, 0, 0, 2}}, {2, 2});
  const std::vector<Tensor> params = {w};
  const Tensor y = determined_edge_forward(ops, params, x, ops.index_of("linear"));
  CHECK(y.value()[0] == doctest::Approx(6.0));
  CHECK(y.value()[1] == doctest::Approx(8.0));
}

TEST_CASE("a decision reproduces the mixed forward at the alpha limit") {
  const int width = 4;
  Rng rng(1);
  SuperNetwork net(toy_operation_set(width), CellTopology(2), 1, width, 2,
                   Rng(1).stream("weight-init"));
  randomize_alphas(net, rng);
  const int edge = 0;
  const int chosen = net.ops().index_of("relu_linear");
  Tensor a = net.alpha_table().alpha(edge);
  a.value().setZero();
  a.value()[chosen] = 1000.0;

  const Tensor x = rand_tensor({3, width}, rng);
  const Vec before = net.forward(x).value();

  net.alpha_table().determine(edge, chosen);
  net.keep_only_op(edge, chosen);
  const Vec after = net.forward(x).value();
  CHECK((before - after).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("all edges pushed to the zero op give zero logits") {
  const int width = 3;
  SuperNetwork net(toy_operation_set(width), CellTopology(2), 1, width, 2,
                   Rng(3).stream("weight-init"));
  for (int e : net.alpha_table().undetermined_edges()) {
    Tensor a = net.alpha_table().alpha(e);
    a.value().setZero();
    a.value()[net.ops().zero_index()] = 1000.0;
  }
  Rng rng(4);
  const Tensor x = rand_tensor({2, width}, rng);
  CHECK(net.forward(x).value().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single identity edge from input 0 projects the stem output") {
  const int width = 3;
  SuperNetwork net(toy_operation_set(width), CellTopology(1), 1, width, 2,
                   Rng(5).stream("weight-init"));
  net.alpha_table().determine(0, net.ops().index_of("identity"));  // edge (0,2)
  net.alpha_table().prune(1);                                      // edge (1,2)

  Rng rng(6);
  const Tensor x = rand_tensor({4, width}, rng);
  const RowMat expect = oracle::with_bias(
      oracle::with_bias(
          oracle::with_bias(oracle::as_mat(x) * oracle::as_mat(net.stem()), net.stem_bias()) *
              oracle::as_mat(net.proj(0)),
          net.proj_bias(0)) *
          oracle::as_mat(net.head()),
      net.head_bias());
  CHECK((oracle::as_mat(net.forward(x)) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("supernet forward matches the independent topological oracle") {
  const int width = 6;
  SuperNetwork net(toy_operation_set(width), CellTopology(4), 2, 5, 3,
                   Rng(0).stream("weight-init"));
  Rng rng(0);
  randomize_alphas(net, rng);
  const Tensor x = rand_tensor({7, 5}, rng);
  const RowMat expect = oracle::network_forward_plain(net, oracle::as_mat(x));
  CHECK((oracle::as_mat(net.forward(x)) - expect).cwiseAbs().maxCoeff() < 1e-12);

  // and stays in agreement after decisions and pruning
  net.alpha_table().determine(0, 2);
  net.keep_only_op(0, 2);
  net.alpha_table().prune(4);
  net.drop_edge(4);
  const RowMat expect2 = oracle::network_forward_plain(net, oracle::as_mat(x));
  CHECK((oracle::as_mat(net.forward(x)) - expect2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identically seeded supernets are bit-identical") {
  const Tensor x = rand_tensor({3, 4}, *std::make_unique<Rng>(9));
  auto make = [&] {
    return SuperNetwork(toy_operation_set(4), CellTopology(3), 2, 4, 2,
                        Rng(77).stream("weight-init"));
  };
  SuperNetwork a = make();
  SuperNetwork b = make();
  CHECK(a.forward(x).value() == b.forward(x).value());
}

TEST_CASE("pruning is local to the pruned edge across cells") {
  // nets sharing the init stream prefix have identical first-cell weights
  const int width = 4;
  auto make = [&](int cells) {
    SuperNetwork net(toy_operation_set(width), CellTopology(2), cells, width, 2,
                     Rng(31).stream("weight-init"));
    Rng rng(32);
    randomize_alphas(net, rng);
    return net;
  };
  SuperNetwork one = make(1);
  SuperNetwork two = make(2);
  Rng rng(33);
  const Tensor x = rand_tensor({3, width}, rng);
  const RowMat xm = oracle::as_mat(x);

  one.alpha_table().prune(2);
  one.drop_edge(2);
  two.alpha_table().prune(2);
  two.drop_edge(2);

  const RowMat cell0_one = oracle::cell_outputs_plain(one, xm).at(0);
  const RowMat cell0_two = oracle::cell_outputs_plain(two, xm).at(0);
  CHECK(cell0_one == cell0_two);
}

TEST_CASE("derive keeps determined edges as the genotype") {
  const int m = 4;
  const OperationSet ops = toy_operation_set(4);
  const CellTopology topo(m);
  AlphaTable table(topo, ops);

  const std::map<std::pair<int, int>, std::string> want = {
      {{0, 2}, "linear"},  {{1, 2}, "identity"},        {{0, 3}, "relu_linear"},
      {{2, 3}, "linear"},  {{1, 4}, "gated_linear"},    {{3, 4}, "identity"},
      {{0, 5}, "linear"},  {{4, 5}, "bottleneck_linear"}};
  for (const auto& [edge, op] : want) {
    table.determine(topo.edge_index(edge.first, edge.second), ops.index_of(op));
  }
  for (int e = 0; e < topo.num_edges(); ++e) {
    if (table.state(e) == EdgeState::Undetermined) table.prune(e);
  }
  const Genotype g = derive_genotype(table, topo, ops, 4, 1);
  REQUIRE(g.intermediate_nodes() == m);
  for (int k = 0; k < m; ++k) {
    for (const GenotypePair& p : g.nodes[k]) {
      CHECK(want.at({p.from, k + 2}) == p.op);
    }
  }
}

TEST_CASE("relaxed derivation excludes the zero op") {
  const OperationSet ops = toy_operation_set(4);
  const CellTopology topo(1);
  AlphaTable table(topo, ops);
  for (int e = 0; e < 2; ++e) {
    Tensor a = table.alpha(e);
    a.value().setZero();
    a.value()[ops.zero_index()] = 10.0;          // zero dominates
    a.value()[ops.index_of("linear")] = 1.0 + e;  // best non-zero
  }
  const Genotype g = derive_genotype(table, topo, ops, 4, 1);
  CHECK(g.nodes[0][0].op == "linear");
  CHECK(g.nodes[0][1].op == "linear");
}

TEST_CASE("relaxed derivation matches the exhaustive top-2 oracle") {
  const OperationSet ops = toy_operation_set(4);
  const CellTopology topo(4);
  AlphaTable table(topo, ops);
  Rng rng(0);
  for (int e = 0; e < topo.num_edges(); ++e) {
    Tensor a = table.alpha(e);
    for (Eigen::Index i = 0; i < a.numel(); ++i) a.value()[i] = rng.uniform(-2, 2);
  }
  const Genotype g = derive_genotype(table, topo, ops, 4, 2);

  for (int k = 0; k < 4; ++k) {
    const int dst = k + 2;
    // brute force: strongest non-zero weight per incoming edge
    std::vector<std::pair<double, int>> strength;  // (weight, edge)
    for (int e : topo.incoming(dst)) {
      const Vec w = oracle::softmax_plain(table.alpha(e).value());
      double best = -1;
      for (int o = 0; o < ops.size(); ++o) {
        if (o != ops.zero_index() && w[o] > best) best = w[o];
      }
      strength.push_back({best, e});
    }
    std::sort(strength.begin(), strength.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<int> expect_edges = {strength[0].second, strength[1].second};
    std::sort(expect_edges.begin(), expect_edges.end());
    for (int i = 0; i < 2; ++i) {
      const Edge& e = topo.edge(expect_edges[i]);
      CHECK(g.nodes[k][i].from == e.src);
      const int op = oracle::argmax_nonzero_plain(table.alpha(expect_edges[i]).value(),
                                                  ops.zero_index());
      CHECK(g.nodes[k][i].op == ops.op(op).name);
    }
  }
}

TEST_CASE("standalone network param count and shape") {
  const OperationSet ops = toy_operation_set(8);
  Rng rng(12);
  const Genotype g = sample_genotype(4, 8, 3, rng, ops);
  SuperNetwork net =
      SuperNetwork::standalone(ops, g, 3, 5, 4, Rng(13).stream("weight-init"));

  const Tensor x = rand_tensor({6, 5}, rng);
  const Tensor logits = net.forward(x);
  CHECK(logits.shape() == Shape{6, 4});

  // count-by-enumeration oracle: params per op name at width 8
  const std::map<std::string, Eigen::Index> cost = {
      {"identity", 0},     {"linear", 64},           {"relu_linear", 64},
      {"gated_linear", 64}, {"bottleneck_linear", 64}};
  Eigen::Index expect = 5 * 8 + 8;  // stem and bias
  for (const auto& pairs : g.nodes) {
    for (const GenotypePair& p : pairs) expect += 3 * cost.at(p.op);
  }
  expect += 3 * ((4 * 8) * 8 + 8);  // projections and biases
  expect += 8 * 4 + 4;              // head and bias
  CHECK(net.weight_param_count() == expect);
  CHECK(standalone_param_count(g, ops, 3, 5, 4) == expect);
  CHECK(net.alpha_param_count() == 0);
}

TEST_CASE("all-identity genotype carries only glue parameters") {
  const OperationSet ops = toy_operation_set(4);
  Genotype g;
  g.width = 4;
  g.cells = 2;
  g.nodes = {{GenotypePair{0, "identity"}, GenotypePair{1, "identity"}},
             {GenotypePair{0, "identity"}, GenotypePair{2, "identity"}}};
  SuperNetwork net =
      SuperNetwork::standalone(ops, g, 2, 3, 2, Rng(1).stream("weight-init"));
  CHECK(net.weight_param_count() == (3 * 4 + 4) + 2 * ((2 * 4) * 4 + 4) + (4 * 2 + 2));
}

TEST_CASE("genotype json round trip preserves structure and forwards") {
  const OperationSet ops = toy_operation_set(6);
  Rng rng(21);
  Genotype g = sample_genotype(3, 6, 2, rng, ops);
  g.meta = {{"seed", 21}, {"criterion", "cri2"}};

  const std::string text = genotype_to_json(g);
  const Genotype back = genotype_from_json(text);
  CHECK(back.nodes == g.nodes);
  CHECK(back.width == g.width);
  CHECK(back.cells == g.cells);
  CHECK(genotype_to_json(back) == text);  // byte-stable

  SuperNetwork a = SuperNetwork::standalone(ops, g, 2, 4, 3, Rng(8).stream("weight-init"));
  SuperNetwork b =
      SuperNetwork::standalone(ops, back, 2, 4, 3, Rng(8).stream("weight-init"));
  CHECK(a.weight_param_count() == b.weight_param_count());
  const Tensor x = rand_tensor({5, 4}, rng);
  CHECK(a.forward(x).value() == b.forward(x).value());
}

TEST_CASE("genotype validation rejects malformed architectures") {
  const OperationSet ops = toy_operation_set(4);
  Genotype g;
  g.width = 4;
  g.cells = 1;
  g.nodes = {{GenotypePair{0, "linear"}, GenotypePair{1, "linear"}}};
  validate_genotype(g, ops);

  SUBCASE("zero op") {
    g.nodes[0][0].op = "zero";
    CHECK_THROWS_AS(validate_genotype(g, ops), Error);
  }
  SUBCASE("repeated source") {
    g.nodes[0][1].from = 0;
    CHECK_THROWS_AS(validate_genotype(g, ops), Error);
  }
  SUBCASE("source not before target") {
    g.nodes[0][1].from = 2;
    CHECK_THROWS_AS(validate_genotype(g, ops), Error);
  }
  SUBCASE("unknown op") {
    g.nodes[0][0].op = "conv";
    CHECK_THROWS_AS(validate_genotype(g, ops), Error);
  }
}

TEST_CASE("toy operation set contract") {
  const int width = 6;
  const OperationSet ops = toy_operation_set(width);
  CHECK(ops.size() == 6);
  CHECK(ops.op(ops.zero_index()).name == "zero");
  CHECK_THROWS_AS(toy_operation_set(1), Error);

  Rng rng(2);
  const Tensor x = rand_tensor({3, width}, rng);
  for (int o = 0; o < ops.size(); ++o) {
    std::vector<Tensor> params;
    for (const Shape& s : ops.op(o).param_shapes) params.push_back(rand_tensor(s, rng));
    const Tensor y = ops.op(o).apply(x, params);
    CHECK(y.shape() == x.shape());  // every op maps width d to width d
    if (ops.op(o).name == "identity") CHECK(y.value() == x.value());
    if (ops.op(o).name == "zero") CHECK(y.value().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("mixed edge on a resolved edge is rejected") {
  SuperNetwork net(toy_operation_set(4), CellTopology(1), 1, 4, 2,
                   Rng(50).stream("weight-init"));
  net.alpha_table().prune(0);
  CHECK_THROWS_AS(net.alpha_table().alpha(0), Error);
  CHECK_THROWS_AS(net.alpha_table().determine(0, 1), Error);
}
