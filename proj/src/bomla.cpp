#include "boml/bomla.hpp"

#include <cmath>
#include <string>

#include "boml/errors.hpp"
#include "boml/parallel.hpp"
#include "boml/rng.hpp"

namespace boml {

void BomlaConfig::validate() const {
  if (lambda < 0.0) throw InputError("bomla: lambda must be >= 0");
  if (tau < 0.0) throw InputError("bomla: tau must be >= 0");
  if (fisher_task_count < 1) throw InputError("bomla: fisher_task_count must be >= 1");
  if (fisher_mc_labels < 1) throw InputError("bomla: fisher_mc_labels must be >= 1");
  if (precision_init_lo < 0.0 || precision_init_hi < precision_init_lo)
    throw InputError("bomla: invalid precision init range");
}

LaplacePosterior init_posterior(const Network& net, const ParamSet& mean, const BomlaConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  LaplacePosterior post;
  post.mean = mean;
  post.precision = KroneckerPrecision::diagonal_init(net, cfg.precision_init_lo,
                                                     cfg.precision_init_hi, seed);
  post.step = 0;
  return post;
}

double quad_penalty(const ParamSet& params, const LaplacePosterior& post) {
  return quad_penalty(params, post.mean, post.precision);
}

namespace {

struct TaskResult {
  double loss = 0.0;
  ParamSet grad;
};

TaskResult bomla_task_term(const Network& net, const ParamSet& params, const EpisodicTask& task,
                           const InnerLoopConfig& inner) {
  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const auto adapted = tape_sgd_adapt(tape, net, leaves, task.support_x, task.support_y, inner.k,
                                      inner.alpha, inner.first_order);
  const int query_nll =
      tape_nll(tape, net, adapted, tape.constant(task.query_x), task.query_y);
  const int support_nll =
      tape_nll(tape, net, leaves, tape.constant(task.support_x), task.support_y);
  const int loss = tape.add(query_nll, support_nll);
  TaskResult out;
  out.loss = tape.scalar_value(loss);
  out.grad.layers = tape.gradients(loss, leaves);
  return out;
}

}  // namespace

double bomla_loss(const Network& net, const ParamSet& params, const MetaBatch& batch,
                  const LaplacePosterior& post, const InnerLoopConfig& inner, int workers) {
  inner.validate();
  if (batch.tasks.empty()) throw InputError("bomla_loss: empty meta-batch");
  std::vector<double> losses(batch.tasks.size());
  task_map(static_cast<int>(batch.tasks.size()), workers, [&](int m) {
    Tape tape;
    const auto leaves = param_leaves(tape, params);
    const auto adapted = tape_sgd_adapt(tape, net, leaves, batch.tasks[m].support_x,
                                        batch.tasks[m].support_y, inner.k, inner.alpha,
                                        inner.first_order);
    const double q = tape.scalar_value(
        tape_nll(tape, net, adapted, tape.constant(batch.tasks[m].query_x), batch.tasks[m].query_y));
    const double s = tape.scalar_value(tape_nll(tape, net, leaves,
                                                tape.constant(batch.tasks[m].support_x),
                                                batch.tasks[m].support_y));
    losses[m] = q + s;
  });
  return tree_mean(losses) + quad_penalty(params, post);
}

LossGrad bomla_grad(const Network& net, const ParamSet& params, const MetaBatch& batch,
                    const LaplacePosterior& post, const InnerLoopConfig& inner, int workers) {
  inner.validate();
  if (batch.tasks.empty()) throw InputError("bomla_grad: empty meta-batch");
  std::vector<double> losses(batch.tasks.size());
  std::vector<ParamSet> grads(batch.tasks.size());
  task_map(static_cast<int>(batch.tasks.size()), workers, [&](int m) {
    const TaskResult r = bomla_task_term(net, params, batch.tasks[m], inner);
    losses[m] = r.loss;
    grads[m] = r.grad;
  });

  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const int penalty = tape_quad_penalty(tape, leaves, post.mean, post.precision);

  LossGrad out;
  out.loss = tree_mean(losses) + tape.scalar_value(penalty);
  out.grad = tree_mean_params(grads);
  ParamSet pgrad;
  pgrad.layers = tape.gradients(penalty, leaves);
  for (std::size_t l = 0; l < out.grad.layers.size(); ++l)
    add_in_place(out.grad.layers[l], pgrad.layers[l]);
  return out;
}

std::vector<std::vector<int>> fisher_label_sampler(const Network& net, const ParamSet& params,
                                                   const DenseMatrix& inputs, int mc_labels,
                                                   std::uint64_t seed) {
  if (mc_labels < 1) throw InputError("fisher_label_sampler: mc_labels must be >= 1");
  const DenseMatrix logits = forward(net, params, inputs);
  const int n = logits.rows();
  const int c = logits.cols();
  auto eng = make_engine(seed_mix(seed, kTagFisher));
  std::vector<std::vector<int>> draws(mc_labels, std::vector<int>(n));
  for (int d = 0; d < mc_labels; ++d) {
    for (int i = 0; i < n; ++i) {
      double mx = logits.at(i, 0);
      for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
      double z = 0.0;
      for (int j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - mx);
      const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53 * z;
      double acc = 0.0;
      int pick = c - 1;
      for (int j = 0; j < c; ++j) {
        acc += std::exp(logits.at(i, j) - mx);
        if (u < acc) {
          pick = j;
          break;
        }
      }
      draws[d][i] = pick;
    }
  }
  return draws;
}

namespace {

// Factor capture with the configured label policy: model-predictive
// sampling (true Fisher) or the task's own labels (empirical variant).
// G factors are averaged over the mc draws; A factors do not depend on
// the labels.
std::vector<LayerFactors> capture_sampled(const Network& net, const ParamSet& params,
                                          const DenseMatrix& inputs,
                                          const std::vector<int>& true_labels,
                                          const BomlaConfig& cfg, std::uint64_t seed) {
  if (cfg.empirical_fisher) return capture_factors(net, params, inputs, true_labels);
  const auto draws = fisher_label_sampler(net, params, inputs, cfg.fisher_mc_labels, seed);
  std::vector<LayerFactors> acc = capture_factors(net, params, inputs, draws[0]);
  for (int d = 1; d < cfg.fisher_mc_labels; ++d) {
    const auto f = capture_factors(net, params, inputs, draws[d]);
    for (std::size_t l = 0; l < acc.size(); ++l) add_in_place(acc[l].g_outer, f[l].g_outer);
  }
  if (cfg.fisher_mc_labels > 1)
    for (auto& f : acc) scale_in_place(f.g_outer, 1.0 / cfg.fisher_mc_labels);
  return acc;
}

struct TaskFactors {
  std::vector<LayerFactors> support;  // A, G at pre-adaptation parameters
  std::vector<LayerFactors> query;    // At, Gt at the adapted parameters
};

TaskFactors capture_task_factors(const Network& net, const ParamSet& params,
                                 const EpisodicTask& task, const InnerLoopConfig& inner,
                                 const BomlaConfig& cfg, std::uint64_t seed) {
  TaskFactors f;
  f.support = capture_sampled(net, params, task.support_x, task.support_y, cfg,
                              seed_mix(seed, 1));
  const ParamSet adapted = inner_adapt(net, params, task.support_x, task.support_y, inner);
  f.query = capture_sampled(net, adapted, task.query_x, task.query_y, cfg, seed_mix(seed, 2));
  // The one-step SGD Jacobian is I - alpha * (A (x) G); fold alpha into
  // the G side once here so every downstream product sees it.
  if (cfg.jacobian_alpha)
    for (auto& lf : f.support) scale_in_place(lf.g_outer, inner.alpha);
  return f;
}

}  // namespace

std::vector<DenseMatrix> task_adjusted_fisher(const Network& net, const ParamSet& params,
                                              const EpisodicTask& task,
                                              const InnerLoopConfig& inner,
                                              const BomlaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const TaskFactors f = capture_task_factors(net, params, task, inner, cfg, seed);
  std::vector<DenseMatrix> blocks;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int dim = (net.layers[l].in_dim + 1) * net.layers[l].out_dim;
    if (dim > 64 * 64)
      throw CapacityError("task_adjusted_fisher: layer " + std::to_string(l) + " block is " +
                          std::to_string(dim) + "^2; use the factorized path");
    DenseMatrix jac = scale(kron(f.support[l].a_outer, f.support[l].g_outer), -1.0);
    for (int i = 0; i < dim; ++i) jac.at(i, i) += 1.0;
    const DenseMatrix inner_block = kron(f.query[l].a_outer, f.query[l].g_outer);
    blocks.push_back(matmul(matmul(jac, inner_block), transpose(jac)));
  }
  return blocks;
}

std::vector<LayerFisher> averaged_adjusted_fisher(const Network& net, const ParamSet& params,
                                                  const std::vector<EpisodicTask>& tasks,
                                                  const InnerLoopConfig& inner,
                                                  const BomlaConfig& cfg, std::uint64_t seed,
                                                  int workers, bool compute_residual) {
  cfg.validate();
  if (tasks.empty()) throw InputError("averaged_adjusted_fisher: no tasks");
  const std::size_t L = net.layers.size();
  const int M = static_cast<int>(tasks.size());

  // Composite per-task factor products; the meta-batch averaging moves
  // into each factor before the terms are paired.
  struct Composits {
    std::vector<DenseMatrix> at, gt, a_at, g_gt, at_a, gt_g, a_at_a, g_gt_g;
  };
  std::vector<Composits> per_task(M);
  task_map(M, workers, [&](int m) {
    const TaskFactors f =
        capture_task_factors(net, params, tasks[m], inner, cfg, seed_mix(seed, kTagFisher, m));
    Composits c;
    for (std::size_t l = 0; l < L; ++l) {
      const DenseMatrix& a = f.support[l].a_outer;
      const DenseMatrix& g = f.support[l].g_outer;
      const DenseMatrix& at = f.query[l].a_outer;
      const DenseMatrix& gt = f.query[l].g_outer;
      c.at.push_back(at);
      c.gt.push_back(gt);
      c.a_at.push_back(matmul(a, at));
      c.g_gt.push_back(matmul(g, gt));
      c.at_a.push_back(matmul(at, transpose(a)));
      c.gt_g.push_back(matmul(gt, transpose(g)));
      c.a_at_a.push_back(matmul(matmul(a, at), transpose(a)));
      c.g_gt_g.push_back(matmul(matmul(g, gt), transpose(g)));
    }
    per_task[m] = std::move(c);
  });

  auto mean_of = [&](std::vector<DenseMatrix> Composits::* field, std::size_t l) {
    std::vector<DenseMatrix> parts(M);
    for (int m = 0; m < M; ++m) parts[m] = (per_task[m].*field)[l];
    // Pairwise tree reduction in task order.
    std::vector<DenseMatrix> cur = std::move(parts);
    while (cur.size() > 1) {
      std::vector<DenseMatrix> next;
      next.reserve((cur.size() + 1) / 2);
      for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(add(cur[i], cur[i + 1]));
      if (cur.size() % 2 == 1) next.push_back(cur.back());
      cur = std::move(next);
    }
    scale_in_place(cur[0], 1.0 / M);
    return cur[0];
  };

  std::vector<LayerFisher> out(L);
  for (std::size_t l = 0; l < L; ++l) {
    LayerFisher& lf = out[l];
    lf.pairs.push_back({+1.0, mean_of(&Composits::at, l), mean_of(&Composits::gt, l)});
    lf.pairs.push_back({-1.0, mean_of(&Composits::a_at, l), mean_of(&Composits::g_gt, l)});
    lf.pairs.push_back({-1.0, mean_of(&Composits::at_a, l), mean_of(&Composits::gt_g, l)});
    lf.pairs.push_back({+1.0, mean_of(&Composits::a_at_a, l), mean_of(&Composits::g_gt_g, l)});

    // Densify to measure the smallest eigenvalue; the factor-averaged
    // form is not guaranteed PSD, so record the shift that restores it.
    DenseMatrix dense(lf.pairs[0].left.rows() * lf.pairs[0].right.rows(),
                      lf.pairs[0].left.rows() * lf.pairs[0].right.rows());
    for (const auto& pair : lf.pairs)
      axpy_in_place(dense, pair.weight, kron(pair.left, pair.right));
    lf.min_eig = min_eigenvalue_sym(symmetrize(dense));
    lf.psd_shift = std::max(0.0, -lf.min_eig);

    if (compute_residual) {
      DenseMatrix mean_sandwich;
      for (int m = 0; m < M; ++m) {
        const auto blocks = task_adjusted_fisher(net, params, tasks[m], inner, cfg,
                                                 seed_mix(seed, kTagFisher, m));
        if (m == 0)
          mean_sandwich = blocks[l];
        else
          add_in_place(mean_sandwich, blocks[l]);
      }
      scale_in_place(mean_sandwich, 1.0 / M);
      lf.residual = frobenius_norm(sub(dense, mean_sandwich));
    }
  }
  return out;
}

void update_precision(LaplacePosterior& post, const std::vector<LayerFisher>& fisher,
                      const BomlaConfig& cfg) {
  cfg.validate();
  if (fisher.size() != post.precision.layers.size())
    throw DimensionError("update_precision: layer count mismatch");
  for (std::size_t l = 0; l < fisher.size(); ++l) {
    auto& layer = post.precision.layers[l];
    if (cfg.lambda > 0.0) {
      for (const auto& pair : fisher[l].pairs)
        layer.pairs.push_back({pair.weight * cfg.lambda, pair.left, pair.right});
      layer.prior_diag += cfg.lambda * fisher[l].psd_shift;
    }
    layer.prior_diag += cfg.tau;
  }
  post.step += 1;
}

void set_mean(LaplacePosterior& post, const ParamSet& params) { post.mean = params; }

}  // namespace boml
