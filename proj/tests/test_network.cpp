#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "boml/network.hpp"

using namespace boml;

TEST_CASE("forward identity: single identity layer with W = I passes input through") {
  Network net;
  net.layers.push_back({3, 3, Activation::kIdentity});
  ParamSet p;
  DenseMatrix w(3, 4);  // bias column zero
  for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
  p.layers.push_back(w);
  const DenseMatrix x = gaussian_matrix(5, 3, 1.0, 3);
  CHECK(max_abs_diff(forward(net, p, x), x) == 0.0);
}

TEST_CASE("forward with zero weights gives zero logits and uniform softmax nll") {
  const Network net = Network::mlp(4, {6}, 5);
  ParamSet p;
  for (const auto& [r, c] : net.weight_shapes()) p.layers.emplace_back(r, c);
  const DenseMatrix x = gaussian_matrix(7, 4, 1.0, 4);
  const DenseMatrix logits = forward(net, p, x);
  CHECK(max_abs(logits) == 0.0);
  CHECK(nll(logits, {0, 1, 2, 3, 4, 0, 1}) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("forward matches a straight-line matrix-arithmetic oracle") {
  const Network net = Network::mlp(4, {6}, 3, Activation::kTanh);
  const ParamSet p = net.init_params(42);
  const DenseMatrix x = gaussian_matrix(8, 4, 1.0, 43);
  const DenseMatrix logits = forward(net, p, x);
  // Oracle: explicit per-example loops.
  for (int i = 0; i < 8; ++i) {
    std::vector<double> a(4);
    for (int j = 0; j < 4; ++j) a[j] = x.at(i, j);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      std::vector<double> h(net.layers[l].out_dim, 0.0);
      for (int o = 0; o < net.layers[l].out_dim; ++o) {
        for (std::size_t j = 0; j < a.size(); ++j) h[o] += p.layers[l].at(o, j) * a[j];
        h[o] += p.layers[l].at(o, static_cast<int>(a.size()));  // bias
        if (net.layers[l].act == Activation::kTanh) h[o] = std::tanh(h[o]);
      }
      a = h;
    }
    for (int c = 0; c < 3; ++c) CHECK(std::abs(logits.at(i, c) - a[c]) <= 1e-12);
  }
}

TEST_CASE("forward rejects wrong input width") {
  const Network net = Network::mlp(4, {6}, 3);
  CHECK_THROWS_AS(forward(net, net.init_params(1), DenseMatrix(2, 5)), DimensionError);
}

TEST_CASE("network validation rejects broken dimension chains") {
  Network net;
  net.layers.push_back({4, 6, Activation::kRelu});
  net.layers.push_back({5, 3, Activation::kIdentity});
  CHECK_THROWS_AS(net.validate(), DimensionError);
}

TEST_CASE("nll saturation: a +50 logit at the true class is ~zero loss") {
  DenseMatrix logits(2, 4);
  logits.at(0, 1) = 50.0;
  logits.at(1, 3) = 50.0;
  CHECK(nll(logits, {1, 3}) <= 1e-9);
}

TEST_CASE("nll matches a log-sum-exp oracle on a random batch") {
  const DenseMatrix logits = gaussian_matrix(9, 3, 2.0, 55);
  const std::vector<int> y = {0, 1, 2, 0, 1, 2, 0, 1, 2};
  double expect = 0.0;
  for (int i = 0; i < 9; ++i) {
    double lse = 0.0;
    for (int j = 0; j < 3; ++j) lse += std::exp(logits.at(i, j));
    expect += std::log(lse) - logits.at(i, y[i]);
  }
  expect /= 9.0;
  CHECK(nll(logits, y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("flatten/unflatten round-trips exactly") {
  const Network net = Network::mlp(5, {7, 6}, 4);
  const ParamSet p = net.init_params(77);
  const ParamSet q = ParamSet::unflatten(p.flatten(), net.weight_shapes());
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    CHECK(max_abs_diff(p.layers[l], q.layers[l]) == 0.0);
  CHECK(p.total_dim() == 7 * 6 + 6 * 8 + 4 * 7);
}

TEST_CASE("capture_factors single example, single linear layer: A = a a^T exactly") {
  Network net;
  net.layers.push_back({3, 2, Activation::kIdentity});
  ParamSet p;
  p.layers.push_back(gaussian_matrix(2, 4, 1.0, 60));
  DenseMatrix x(1, 3);
  x.at(0, 0) = 1.5;
  x.at(0, 1) = -2.0;
  x.at(0, 2) = 0.5;
  const auto f = capture_factors(net, p, x, {1});
  const double a[4] = {1.5, -2.0, 0.5, 1.0};  // augmented activation
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(f[0].a_outer.at(i, j) == doctest::Approx(a[i] * a[j]).epsilon(1e-15));
}

TEST_CASE("capture_factors with saturated logits gives ~zero G") {
  // One output dominates by +200 and carries the true label: the
  // per-example softmax gradient vanishes.
  Network net;
  net.layers.push_back({2, 2, Activation::kIdentity});
  ParamSet p;
  DenseMatrix w(2, 3);
  w.at(0, 2) = 200.0;  // bias drives class 0
  p.layers.push_back(w);
  const DenseMatrix x = gaussian_matrix(4, 2, 1.0, 61);
  const auto f = capture_factors(net, p, x, {0, 0, 0, 0});
  CHECK(max_abs(f[0].g_outer) <= 1e-60);
}

TEST_CASE("capture_factors matches the per-example outer-product oracle") {
  const Network net = Network::mlp(4, {5}, 3, Activation::kRelu);
  const ParamSet p = net.init_params(70);
  const DenseMatrix x = gaussian_matrix(6, 4, 1.0, 71);
  const std::vector<int> y = {0, 1, 2, 0, 1, 2};
  const auto f = capture_factors(net, p, x, y);

  // Oracle: loop single-example captures and average the outer products.
  std::vector<DenseMatrix> a_acc, g_acc;
  for (int i = 0; i < 6; ++i) {
    DenseMatrix xi(1, 4);
    for (int j = 0; j < 4; ++j) xi.at(0, j) = x.at(i, j);
    const auto fi = capture_factors(net, p, xi, {y[i]});
    if (i == 0) {
      for (const auto& lf : fi) {
        a_acc.push_back(lf.a_outer);
        g_acc.push_back(lf.g_outer);
      }
    } else {
      for (std::size_t l = 0; l < fi.size(); ++l) {
        add_in_place(a_acc[l], fi[l].a_outer);
        add_in_place(g_acc[l], fi[l].g_outer);
      }
    }
  }
  for (std::size_t l = 0; l < f.size(); ++l) {
    CHECK(max_abs_diff(f[l].a_outer, scale(a_acc[l], 1.0 / 6)) <= 1e-12);
    CHECK(max_abs_diff(f[l].g_outer, scale(g_acc[l], 1.0 / 6)) <= 1e-12);
  }
}

TEST_CASE("capture_factors outputs are symmetric PSD") {
  const Network net = Network::mlp(5, {6}, 4, Activation::kTanh);
  const ParamSet p = net.init_params(80);
  const DenseMatrix x = gaussian_matrix(12, 5, 1.0, 81);
  const std::vector<int> y = {0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3};
  for (const auto& lf : capture_factors(net, p, x, y)) {
    CHECK(max_abs_diff(lf.a_outer, transpose(lf.a_outer)) <= 1e-12);
    CHECK(max_abs_diff(lf.g_outer, transpose(lf.g_outer)) <= 1e-12);
    CHECK(min_eigenvalue_sym(lf.a_outer) >= -1e-10);
    CHECK(min_eigenvalue_sym(lf.g_outer) >= -1e-10);
  }
}

TEST_CASE("capture_factors rejects an empty batch") {
  const Network net = Network::mlp(3, {4}, 2);
  CHECK_THROWS_AS(capture_factors(net, net.init_params(1), DenseMatrix(0, 3), {}), InputError);
}
