#include "boml/kronecker.hpp"

#include <random>
#include <string>

#include "boml/errors.hpp"
#include "boml/rng.hpp"

namespace boml {

KroneckerPrecision KroneckerPrecision::zero(const Network& net) {
  KroneckerPrecision p;
  p.layers.resize(net.layers.size());
  return p;
}

KroneckerPrecision KroneckerPrecision::diagonal_init(const Network& net, double lo, double hi,
                                                     std::uint64_t seed) {
  if (lo < 0.0 || hi < lo) throw InputError("precision init: need 0 <= lo <= hi");
  KroneckerPrecision p;
  auto eng = make_engine(seed_mix(seed, kTagPrec));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    LayerPrecision layer;
    layer.prior_diag = dist(eng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void KroneckerPrecision::check_shapes(const Network& net) const {
  if (layers.size() != net.layers.size())
    throw DimensionError("precision: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const int in_aug = net.layers[l].in_dim + 1;
    const int out = net.layers[l].out_dim;
    for (const auto& pair : layers[l].pairs) {
      if (pair.left.rows() != in_aug || pair.left.cols() != in_aug)
        throw DimensionError("precision: left factor shape mismatch at layer " +
                             std::to_string(l));
      if (pair.right.rows() != out || pair.right.cols() != out)
        throw DimensionError("precision: right factor shape mismatch at layer " +
                             std::to_string(l));
    }
  }
}

std::size_t KroneckerPrecision::pair_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.pairs.size();
  return n;
}

DenseMatrix KroneckerPrecision::densify_layer(int layer, const Network& net) const {
  const int in_aug = net.layers[layer].in_dim + 1;
  const int out = net.layers[layer].out_dim;
  const int dim = in_aug * out;
  DenseMatrix block(dim, dim);
  for (int i = 0; i < dim; ++i) block.at(i, i) = layers[layer].prior_diag;
  for (const auto& pair : layers[layer].pairs) {
    const DenseMatrix k = kron(pair.left, pair.right);
    axpy_in_place(block, pair.weight, k);
  }
  return block;
}

double quad_penalty(const ParamSet& params, const ParamSet& mean,
                    const KroneckerPrecision& prec) {
  if (params.layers.size() != mean.layers.size() || params.layers.size() != prec.layers.size())
    throw DimensionError("quad_penalty: layer count mismatch");
  double total = 0.0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (!params.layers[l].same_shape(mean.layers[l]))
      throw DimensionError("quad_penalty: mean shape mismatch at layer " + std::to_string(l));
    const DenseMatrix dw = sub(params.layers[l], mean.layers[l]);
    double layer_term = prec.layers[l].prior_diag * dot(dw, dw);
    for (const auto& pair : prec.layers[l].pairs) {
      if (pair.right.rows() != dw.rows() || pair.left.rows() != dw.cols())
        throw DimensionError("quad_penalty: factor shape mismatch at layer " +
                             std::to_string(l));
      // <dW, R dW L^T> = vec(dW)^T (L (x) R) vec(dW)
      layer_term += pair.weight * dot(dw, matmul(matmul(pair.right, dw), transpose(pair.left)));
    }
    total += layer_term;
  }
  return 0.5 * total;
}

int tape_quad_penalty(Tape& tape, const std::vector<int>& weights, const ParamSet& mean,
                      const KroneckerPrecision& prec) {
  if (weights.size() != mean.layers.size() || weights.size() != prec.layers.size())
    throw DimensionError("tape_quad_penalty: layer count mismatch");
  int acc = -1;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int dw = tape.sub(weights[l], tape.constant(mean.layers[l]));
    int layer_term = tape.scale(tape.sum_all(tape.mul(dw, dw)), prec.layers[l].prior_diag);
    for (const auto& pair : prec.layers[l].pairs) {
      const int rdwlt = tape.matmul(tape.matmul(tape.constant(pair.right), dw),
                                    tape.transpose(tape.constant(pair.left)));
      layer_term = tape.add(layer_term, tape.scale(tape.sum_all(tape.mul(dw, rdwlt)), pair.weight));
    }
    acc = acc < 0 ? layer_term : tape.add(acc, layer_term);
  }
  return tape.scale(acc, 0.5);
}

}  // namespace boml
