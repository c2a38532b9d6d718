#include "boml/optimizer.hpp"

#include <cmath>

#include "boml/errors.hpp"

namespace boml {

AdamState::AdamState(const ParamSet& shape) {
  for (const auto& w : shape.layers) {
    m_.layers.emplace_back(w.rows(), w.cols());
    v_.layers.emplace_back(w.rows(), w.cols());
  }
}

void AdamState::step(ParamSet& params, const ParamSet& grad, const AdamConfig& cfg, double lr) {
  if (params.layers.size() != m_.layers.size())
    throw DimensionError("adam: state does not match parameter shapes");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (!params.layers[l].same_shape(grad.layers[l]))
      throw DimensionError("adam: gradient shape mismatch");
    auto& m = m_.layers[l].raw();
    auto& v = v_.layers[l].raw();
    auto& p = params.layers[l].raw();
    const auto& g = grad.layers[l].raw();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
  }
}

}  // namespace boml
