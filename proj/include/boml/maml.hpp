#pragma once

#include <cstdint>
#include <vector>

#include "boml/episodic.hpp"
#include "boml/network.hpp"
#include "boml/optimizer.hpp"

namespace boml {

struct InnerLoopConfig {
  int k = 1;
  double alpha = 0.4;
  bool first_order = false;

  void validate() const;
};

struct MetaBatch {
  std::vector<EpisodicTask> tasks;
};

struct LossGrad {
  double loss = 0.0;
  ParamSet grad;
};

// Deterministic pairwise reduction over per-task results; the order is
// fixed by task index so worker count never changes the sum.
double tree_mean(const std::vector<double>& values);
ParamSet tree_mean_params(const std::vector<ParamSet>& parts);

// k full-batch SGD steps on the support NLL (k = 0 returns the input).
ParamSet inner_adapt(const Network& net, const ParamSet& params, const DenseMatrix& support_x,
                     const std::vector<int>& support_y, const InnerLoopConfig& cfg);

// (1/M) sum over tasks of query NLL at the task-adapted parameters.
double maml_loss(const Network& net, const ParamSet& params, const MetaBatch& batch,
                 const InnerLoopConfig& cfg, int workers = 1);
LossGrad maml_grad(const Network& net, const ParamSet& params, const MetaBatch& batch,
                   const InnerLoopConfig& cfg, int workers = 1);

// One Adam outer update on the MAML objective; returns the loss.
double meta_step(const Network& net, ParamSet& params, const MetaBatch& batch,
                 const InnerLoopConfig& cfg, AdamState& state, const AdamConfig& adam,
                 double lr, int workers = 1);

struct EvalConfig {
  int n_tasks = 50;
  int n_way = 5;
  int k_shot = 1;
  int q_per_class = 15;
  InnerLoopConfig inner{3, 0.4, false};
};

struct EvalResult {
  double acc_mean = 0.0;
  double ci_half = 0.0;  // 95% normal-approximation half-width over tasks
};

EvalResult evaluate(const Network& net, const ParamSet& params, const DatasetSource& src,
                    const EvalConfig& cfg, std::uint64_t seed, int workers = 1);
EvalResult evaluate_stream(const Network& net, const ParamSet& params, const TaskStream& stream,
                           int eval_set, const EvalConfig& cfg, std::uint64_t seed,
                           int workers = 1);

}  // namespace boml
