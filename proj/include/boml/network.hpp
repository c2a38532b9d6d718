#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "boml/matrix.hpp"
#include "boml/tape.hpp"

namespace boml {

enum class Activation { kRelu, kTanh, kIdentity };

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation act = Activation::kRelu;
};

// Per-layer weight matrices, each out_dim x (in_dim + 1) with the bias
// vector stored as the last column. Flatten order is column-stacked per
// layer, matching the vec convention the Kronecker blocks act on.
struct ParamSet {
  std::vector<DenseMatrix> layers;

  std::size_t total_dim() const;
  std::vector<double> flatten() const;
  static ParamSet unflatten(const std::vector<double>& v,
                            const std::vector<std::pair<int, int>>& shapes);
};

ParamSet operator+(const ParamSet& a, const ParamSet& b);
ParamSet operator-(const ParamSet& a, const ParamSet& b);
ParamSet scaled(const ParamSet& a, double c);

// Fully-connected classifier; the last layer's outputs are the logits of
// a softmax over classes.
struct Network {
  std::vector<LayerSpec> layers;

  static Network mlp(int input_dim, const std::vector<int>& hidden, int classes,
                     Activation hidden_act = Activation::kRelu);

  int input_dim() const { return layers.front().in_dim; }
  int n_classes() const { return layers.back().out_dim; }

  void validate() const;
  std::vector<std::pair<int, int>> weight_shapes() const;
  ParamSet init_params(std::uint64_t seed) const;
  void check_params(const ParamSet& p) const;
};

// ---- value-level operations ----

DenseMatrix forward(const Network& net, const ParamSet& params, const DenseMatrix& inputs);
double nll(const DenseMatrix& logits, const std::vector<int>& labels);
std::vector<int> predict(const DenseMatrix& logits);

// Kronecker factor capture: one forward/backward over the batch.
// a_outer is the batch mean of augmented-activation outer products
// (bias row/column included); g_outer the mean of per-example
// pre-activation-gradient outer products of that example's own loss.
struct LayerFactors {
  DenseMatrix a_outer;
  DenseMatrix g_outer;
};
std::vector<LayerFactors> capture_factors(const Network& net, const ParamSet& params,
                                          const DenseMatrix& inputs,
                                          const std::vector<int>& labels);

// ---- tape builders ----

std::vector<int> param_leaves(Tape& tape, const ParamSet& params);
int tape_forward(Tape& tape, const Network& net, const std::vector<int>& weights, int x);
int tape_nll(Tape& tape, const Network& net, const std::vector<int>& weights, int x,
             const std::vector<int>& labels);
// k full-batch SGD steps on the support NLL. Differentiable w.r.t. the
// incoming weight nodes; first_order cuts gradient flow through the
// inner gradients.
std::vector<int> tape_sgd_adapt(Tape& tape, const Network& net, std::vector<int> weights,
                                const DenseMatrix& x, const std::vector<int>& labels, int k,
                                double alpha, bool first_order = false);

// ---- generic differentiation entry points ----

// Builders compose only tape primitives; the returned node must be 1x1.
using LossBuilder = std::function<int(Tape&, const std::vector<int>&)>;
using InnerStepBuilder = std::function<std::vector<int>(Tape&, const std::vector<int>&)>;

ParamSet grad(const LossBuilder& loss, const ParamSet& params, double* loss_value = nullptr);
// Exact total derivative of outer(inner(params)) including the terms
// through the recorded inner gradient steps.
ParamSet grad_through_inner(const LossBuilder& outer, const InnerStepBuilder& inner,
                            const ParamSet& params, double* loss_value = nullptr);

}  // namespace boml
