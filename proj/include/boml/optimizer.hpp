#pragma once

#include "boml/network.hpp"

namespace boml {

// Outer-loop Adam. The learning-rate schedule is applied by the caller
// (pass the current rate to step).
struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const ParamSet& shape);

  void step(ParamSet& params, const ParamSet& grad, const AdamConfig& cfg, double lr);
  long iterations() const { return t_; }

 private:
  ParamSet m_;
  ParamSet v_;
  long t_ = 0;
};

}  // namespace boml
