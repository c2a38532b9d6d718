#pragma once

#include <cstdint>
#include <vector>

#include "boml/network.hpp"

namespace boml {

// One weighted Kronecker term of a per-layer precision block. `left`
// acts on the (bias-augmented) input side, `right` on the output side;
// the block is weight * (left (x) right) under column-stacked vec, so
// (left (x) right) vec(X) = vec(right * X * left^T).
struct KroneckerPair {
  double weight = 1.0;
  DenseMatrix left;
  DenseMatrix right;
};

struct LayerPrecision {
  double prior_diag = 0.0;  // scalar multiple of the identity
  std::vector<KroneckerPair> pairs;
};

// Per-layer precision over the meta-parameters: diagonal prior plus an
// ordered list of weighted Kronecker pairs. The list grows by at most
// four pairs per completed dataset.
struct KroneckerPrecision {
  std::vector<LayerPrecision> layers;

  static KroneckerPrecision zero(const Network& net);
  // Diagonal prior drawn uniformly per layer from [lo, hi], seeded.
  static KroneckerPrecision diagonal_init(const Network& net, double lo, double hi,
                                          std::uint64_t seed);

  void check_shapes(const Network& net) const;
  std::size_t pair_count() const;
  // Dense block acting on vec_col of the layer's weight matrix.
  DenseMatrix densify_layer(int layer, const Network& net) const;
};

// 1/2 sum over layers of [prior*|dW|^2 + sum_pairs w * <dW, R dW L^T>]
// with dW = params - mean; evaluated without expanding any Kronecker
// product.
double quad_penalty(const ParamSet& params, const ParamSet& mean,
                    const KroneckerPrecision& prec);
// Tape form, differentiable w.r.t. the weight nodes.
int tape_quad_penalty(Tape& tape, const std::vector<int>& weights, const ParamSet& mean,
                      const KroneckerPrecision& prec);

}  // namespace boml
