#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "boml/network.hpp"
#include "boml/tape.hpp"

using namespace boml;

namespace {

// Central finite differences over every parameter entry.
double fd_worst_rel(const std::function<double(const ParamSet&)>& f, const ParamSet& at,
                    const ParamSet& analytic, double h, double floor) {
  double worst = 0.0;
  for (std::size_t l = 0; l < at.layers.size(); ++l)
    for (int r = 0; r < at.layers[l].rows(); ++r)
      for (int c = 0; c < at.layers[l].cols(); ++c) {
        ParamSet p = at;
        p.layers[l].at(r, c) += h;
        const double up = f(p);
        p.layers[l].at(r, c) -= 2 * h;
        const double dn = f(p);
        const double fd = (up - dn) / (2 * h);
        const double rel =
            std::abs(fd - analytic.layers[l].at(r, c)) / std::max(std::abs(fd), floor);
        worst = std::max(worst, rel);
      }
  return worst;
}

ParamSet quad_params() {
  ParamSet p;
  p.layers.push_back(gaussian_matrix(3, 4, 1.0, 17));
  p.layers.push_back(gaussian_matrix(2, 3, 1.0, 18));
  return p;
}

int quad_loss(Tape& t, const std::vector<int>& w) {
  // 0.5 * ||theta||^2
  int acc = -1;
  for (int id : w) {
    const int s = t.sum_all(t.mul(id, id));
    acc = acc < 0 ? s : t.add(acc, s);
  }
  return t.scale(acc, 0.5);
}

}  // namespace

TEST_CASE("grad of 0.5*||theta||^2 is theta") {
  const ParamSet p = quad_params();
  const ParamSet g = grad(quad_loss, p);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    CHECK(max_abs_diff(g.layers[l], p.layers[l]) == 0.0);
}

TEST_CASE("grad of a loss constant in theta is zero") {
  const ParamSet p = quad_params();
  const auto constant_loss = [](Tape& t, const std::vector<int>&) {
    return t.constant(DenseMatrix(1, 1, 3.25));
  };
  double loss = 0.0;
  const ParamSet g = grad(constant_loss, p, &loss);
  CHECK(loss == 3.25);
  for (std::size_t l = 0; l < p.layers.size(); ++l) CHECK(max_abs(g.layers[l]) == 0.0);
}

TEST_CASE("grad of a random MLP NLL matches central finite differences") {
  const Network net = Network::mlp(6, {8}, 3, Activation::kTanh);
  const ParamSet p = net.init_params(5);
  const DenseMatrix x = gaussian_matrix(10, 6, 1.0, 6);
  const std::vector<int> y = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  const LossBuilder loss = [&](Tape& t, const std::vector<int>& w) {
    return tape_nll(t, net, w, t.constant(x), y);
  };
  const ParamSet g = grad(loss, p);
  const auto eval = [&](const ParamSet& q) { return nll(forward(net, q, x), y); };
  CHECK(fd_worst_rel(eval, p, g, 1e-5, 1e-4) <= 1e-5);
}

TEST_CASE("grad_through_inner with k=0 equals the plain gradient") {
  const Network net = Network::mlp(4, {5}, 2);
  const ParamSet p = net.init_params(9);
  const DenseMatrix x = gaussian_matrix(6, 4, 1.0, 10);
  const std::vector<int> y = {0, 1, 0, 1, 0, 1};
  const LossBuilder outer = [&](Tape& t, const std::vector<int>& w) {
    return tape_nll(t, net, w, t.constant(x), y);
  };
  const InnerStepBuilder identity = [&](Tape& t, const std::vector<int>& w) {
    return tape_sgd_adapt(t, net, w, x, y, 0, 0.5);
  };
  const ParamSet g0 = grad(outer, p);
  const ParamSet g1 = grad_through_inner(outer, identity, p);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    CHECK(max_abs_diff(g0.layers[l], g1.layers[l]) == 0.0);
}

TEST_CASE("grad_through_inner closed-form scalar chain rule") {
  // Inner loss (theta-1)^2/2 with alpha=0.5: theta~ = 0.5*theta + 0.5.
  // Outer loss theta~^2: d/dtheta = 2*theta~*0.5 = theta~; at theta=0
  // the total derivative is 0.5.
  ParamSet p;
  p.layers.push_back(DenseMatrix(1, 1, 0.0));
  const InnerStepBuilder inner = [](Tape& t, std::vector<int> w) {
    const int one = t.constant(DenseMatrix(1, 1, 1.0));
    const int d = t.sub(w[0], one);
    const int loss = t.scale(t.sum_all(t.mul(d, d)), 0.5);
    const auto g = t.backward(loss, w);
    w[0] = t.add(w[0], t.scale(g[0], -0.5));
    return w;
  };
  const LossBuilder outer = [](Tape& t, const std::vector<int>& w) {
    return t.sum_all(t.mul(w[0], w[0]));
  };
  double loss = 0.0;
  const ParamSet g = grad_through_inner(outer, inner, p, &loss);
  CHECK(loss == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.layers[0].at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("grad_through_inner k=2 meta-gradient matches finite differences") {
  const Network net = Network::mlp(5, {7}, 3, Activation::kRelu);
  const ParamSet p = net.init_params(21);
  const DenseMatrix xs = gaussian_matrix(6, 5, 1.0, 22);
  const std::vector<int> ys = {0, 1, 2, 0, 1, 2};
  const DenseMatrix xq = gaussian_matrix(9, 5, 1.0, 23);
  const std::vector<int> yq = {2, 1, 0, 2, 1, 0, 2, 1, 0};
  const InnerStepBuilder inner = [&](Tape& t, const std::vector<int>& w) {
    return tape_sgd_adapt(t, net, w, xs, ys, 2, 0.1);
  };
  const LossBuilder outer = [&](Tape& t, const std::vector<int>& w) {
    return tape_nll(t, net, w, t.constant(xq), yq);
  };
  const ParamSet g = grad_through_inner(outer, inner, p);
  const auto eval = [&](const ParamSet& q) {
    Tape t;
    const auto leaves = param_leaves(t, q);
    return t.scalar_value(outer(t, inner(t, leaves)));
  };
  CHECK(fd_worst_rel(eval, p, g, 1e-5, 1e-3) <= 1e-4);
}

TEST_CASE("first-order switch drops the second-order terms") {
  const Network net = Network::mlp(4, {5}, 2);
  const ParamSet p = net.init_params(31);
  const DenseMatrix xs = gaussian_matrix(4, 4, 1.0, 32);
  const std::vector<int> ys = {0, 1, 0, 1};
  const DenseMatrix xq = gaussian_matrix(4, 4, 1.0, 33);
  const std::vector<int> yq = {1, 0, 1, 0};
  const auto run = [&](bool first_order) {
    Tape t;
    const auto leaves = param_leaves(t, p);
    const auto ad = tape_sgd_adapt(t, net, leaves, xs, ys, 1, 0.4, first_order);
    const int loss = tape_nll(t, net, ad, t.constant(xq), yq);
    ParamSet g;
    g.layers = t.gradients(loss, leaves);
    return g;
  };
  const ParamSet gfull = run(false);
  const ParamSet gfo = run(true);
  double diff = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    diff = std::max(diff, max_abs_diff(gfull.layers[l], gfo.layers[l]));
  CHECK(diff > 1e-6);  // the curvature term is present only in the full version
}

TEST_CASE("softmax_xent rejects out-of-range labels") {
  Tape t;
  const int logits = t.constant(gaussian_matrix(2, 3, 1.0, 40));
  CHECK_THROWS_AS(t.softmax_xent(logits, {0, 3}), InputError);
  CHECK_THROWS_AS(t.softmax_xent(logits, {-1, 0}), InputError);
}

TEST_CASE("tape values are deterministic") {
  const Network net = Network::mlp(4, {6}, 3);
  const ParamSet p = net.init_params(50);
  const DenseMatrix x = gaussian_matrix(5, 4, 1.0, 51);
  const DenseMatrix l1 = forward(net, p, x);
  const DenseMatrix l2 = forward(net, p, x);
  CHECK(max_abs_diff(l1, l2) == 0.0);
}
