#pragma once

#include <cstdint>
#include <vector>

#include "boml/kronecker.hpp"
#include "boml/maml.hpp"

namespace boml {

// Gaussian posterior over meta-parameters carried across datasets:
// mean plus Kronecker-structured precision.
struct LaplacePosterior {
  ParamSet mean;
  KroneckerPrecision precision;
  int step = 0;  // completed datasets
};

struct BomlaConfig {
  double lambda = 100.0;
  double precision_init_lo = 1e-4;
  double precision_init_hi = 1e-2;
  int fisher_task_count = 200;
  int fisher_mc_labels = 1;
  double tau = 1e-3;
  // Scale the inner-curvature factors by the inner learning rate so the
  // adaptation Jacobian is I - alpha * H rather than the literal I - H.
  bool jacobian_alpha = true;
  // Use true labels for the G factors instead of sampling the model
  // predictive (ablation variant).
  bool empirical_fisher = false;

  void validate() const;
};

LaplacePosterior init_posterior(const Network& net, const ParamSet& mean,
                                const BomlaConfig& cfg, std::uint64_t seed);

double quad_penalty(const ParamSet& params, const LaplacePosterior& post);

// Regularized objective: query NLL at the adapted parameters plus the
// pre-adaptation support NLL, averaged over the meta-batch, plus the
// posterior quadratic penalty.
double bomla_loss(const Network& net, const ParamSet& params, const MetaBatch& batch,
                  const LaplacePosterior& post, const InnerLoopConfig& inner, int workers = 1);
LossGrad bomla_grad(const Network& net, const ParamSet& params, const MetaBatch& batch,
                    const LaplacePosterior& post, const InnerLoopConfig& inner, int workers = 1);

// Labels drawn from the model predictive softmax, mc_labels draws per
// example; out[d][i] is draw d for row i.
std::vector<std::vector<int>> fisher_label_sampler(const Network& net, const ParamSet& params,
                                                   const DenseMatrix& inputs, int mc_labels,
                                                   std::uint64_t seed);

// Per-layer dense adjusted-Fisher block for one task: the inner-loop
// Jacobian sandwich (I - A (x) G) (At (x) Gt) (I - A (x) G)^T with A, G
// captured on the support set at `params` and At, Gt on the query set at
// the k-step adapted parameters.
std::vector<DenseMatrix> task_adjusted_fisher(const Network& net, const ParamSet& params,
                                              const EpisodicTask& task,
                                              const InnerLoopConfig& inner,
                                              const BomlaConfig& cfg, std::uint64_t seed);

// Factor-averaged four-term Kronecker form of the adjusted Fisher, signs
// (+,-,-,+), each composite factor averaged over tasks before pairing.
struct LayerFisher {
  std::vector<KroneckerPair> pairs;  // four signed pairs
  double psd_shift = 0.0;  // diagonal shift making the densified block PSD
  double min_eig = 0.0;    // measured before shifting
  double residual = 0.0;   // Frobenius gap to the mean of per-task sandwiches (when requested)
};

std::vector<LayerFisher> averaged_adjusted_fisher(const Network& net, const ParamSet& params,
                                                  const std::vector<EpisodicTask>& tasks,
                                                  const InnerLoopConfig& inner,
                                                  const BomlaConfig& cfg, std::uint64_t seed,
                                                  int workers = 1,
                                                  bool compute_residual = false);

// Lambda-scaled pair append plus (lambda * psd_shift + tau) added to the
// diagonal prior; the mean is untouched.
void update_precision(LaplacePosterior& post, const std::vector<LayerFisher>& fisher,
                      const BomlaConfig& cfg);

void set_mean(LaplacePosterior& post, const ParamSet& params);

}  // namespace boml
