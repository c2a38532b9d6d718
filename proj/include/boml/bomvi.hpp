#pragma once

#include <cstdint>
#include <vector>

#include "boml/maml.hpp"

namespace boml {

// Fully factorized Gaussian over the meta-parameters; the standard
// deviation is carried as its logarithm so positivity is unconstrained.
struct MeanFieldPosterior {
  ParamSet mu;
  ParamSet log_sigma;

  void validate() const;
  static MeanFieldPosterior init(const ParamSet& mean, double log_sigma_init);
  // Zero-mean unit-variance prior matching the given shapes.
  static MeanFieldPosterior standard(const ParamSet& shape);
};

struct BomviConfig {
  int mc_samples = 5;  // R
  double log_sigma_init = -5.0;
  // Weight on the KL term relative to the per-example-mean NLL terms;
  // 0 selects 1 / (support + query example count per task).
  double kl_weight = 0.0;
  // Draw fresh noise for the pre-adaptation term instead of reusing the
  // stream shared with the query-term samples.
  bool independent_support_noise = false;

  void validate() const;
};

// Closed-form KL(q || p) for mean-field Gaussians; never estimated.
double kl_mean_field(const MeanFieldPosterior& q, const MeanFieldPosterior& p);

// Inner loop with gradients taken at the posterior-mean trajectory: the
// sample keeps its deviation from the mean while the mean adapts, so the
// adapted sample is Gaussian around the adapted mean.
ParamSet modified_inner_adapt(const Network& net, const ParamSet& theta_sample,
                              const ParamSet& mu, const DenseMatrix& support_x,
                              const std::vector<int>& support_y, const InnerLoopConfig& cfg);

// Pre-activation sampling instead of weight sampling; deterministic
// given the seed.
DenseMatrix lrt_forward(const Network& net, const MeanFieldPosterior& phi,
                        const DenseMatrix& inputs, std::uint64_t seed);

// Monte Carlo estimate (R samples, shared noise stream per task) of the
// expected query NLL after mean-trajectory adaptation plus the expected
// pre-adaptation support NLL via pre-activation sampling, plus the exact
// weighted KL to the previous posterior.
double bomvi_loss(const Network& net, const MeanFieldPosterior& phi,
                  const MeanFieldPosterior& phi_prev, const MetaBatch& batch,
                  const InnerLoopConfig& inner, const BomviConfig& cfg, std::uint64_t seed,
                  int workers = 1);

struct ViLossGrad {
  double loss = 0.0;
  ParamSet grad_mu;
  ParamSet grad_log_sigma;
};

ViLossGrad bomvi_grad(const Network& net, const MeanFieldPosterior& phi,
                      const MeanFieldPosterior& phi_prev, const MetaBatch& batch,
                      const InnerLoopConfig& inner, const BomviConfig& cfg, std::uint64_t seed,
                      int workers = 1);

// Per-layer mean/min/max of sigma^2, for the covariance-statistics
// export.
struct SigmaStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};
std::vector<SigmaStats> sigma_squared_stats(const MeanFieldPosterior& phi);

}  // namespace boml
