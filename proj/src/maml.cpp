#include "boml/maml.hpp"

#include <cmath>

#include "boml/errors.hpp"
#include "boml/parallel.hpp"
#include "boml/rng.hpp"

namespace boml {

void InnerLoopConfig::validate() const {
  if (k < 0) throw InputError("inner loop: k must be >= 0");
  if (alpha <= 0.0) throw InputError("inner loop: alpha must be > 0");
}

double tree_mean(const std::vector<double>& values) {
  if (values.empty()) throw InputError("tree_mean: empty input");
  return tree_sum(values) / static_cast<double>(values.size());
}

ParamSet tree_mean_params(const std::vector<ParamSet>& parts) {
  if (parts.empty()) throw InputError("tree_mean_params: empty input");
  std::vector<ParamSet> cur = parts;
  while (cur.size() > 1) {
    std::vector<ParamSet> next;
    next.reserve((cur.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(cur[i] + cur[i + 1]);
    if (cur.size() % 2 == 1) next.push_back(cur.back());
    cur = std::move(next);
  }
  return scaled(cur[0], 1.0 / static_cast<double>(parts.size()));
}

ParamSet inner_adapt(const Network& net, const ParamSet& params, const DenseMatrix& support_x,
                     const std::vector<int>& support_y, const InnerLoopConfig& cfg) {
  cfg.validate();
  if (cfg.k == 0) return params;
  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const auto adapted =
      tape_sgd_adapt(tape, net, leaves, support_x, support_y, cfg.k, cfg.alpha, cfg.first_order);
  ParamSet out;
  for (int id : adapted) out.layers.push_back(tape.value(id));
  return out;
}

namespace {

LossGrad task_loss_grad(const Network& net, const ParamSet& params, const EpisodicTask& task,
                        const InnerLoopConfig& cfg) {
  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const auto adapted = tape_sgd_adapt(tape, net, leaves, task.support_x, task.support_y, cfg.k,
                                      cfg.alpha, cfg.first_order);
  const int loss =
      tape_nll(tape, net, adapted, tape.constant(task.query_x), task.query_y);
  LossGrad out;
  out.loss = tape.scalar_value(loss);
  out.grad.layers = tape.gradients(loss, leaves);
  return out;
}

double task_loss_only(const Network& net, const ParamSet& params, const EpisodicTask& task,
                      const InnerLoopConfig& cfg) {
  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const auto adapted = tape_sgd_adapt(tape, net, leaves, task.support_x, task.support_y, cfg.k,
                                      cfg.alpha, cfg.first_order);
  return tape.scalar_value(
      tape_nll(tape, net, adapted, tape.constant(task.query_x), task.query_y));
}

}  // namespace

double maml_loss(const Network& net, const ParamSet& params, const MetaBatch& batch,
                 const InnerLoopConfig& cfg, int workers) {
  cfg.validate();
  if (batch.tasks.empty()) throw InputError("maml_loss: empty meta-batch");
  std::vector<double> losses(batch.tasks.size());
  task_map(static_cast<int>(batch.tasks.size()), workers,
           [&](int m) { losses[m] = task_loss_only(net, params, batch.tasks[m], cfg); });
  return tree_mean(losses);
}

LossGrad maml_grad(const Network& net, const ParamSet& params, const MetaBatch& batch,
                   const InnerLoopConfig& cfg, int workers) {
  cfg.validate();
  if (batch.tasks.empty()) throw InputError("maml_grad: empty meta-batch");
  std::vector<double> losses(batch.tasks.size());
  std::vector<ParamSet> grads(batch.tasks.size());
  task_map(static_cast<int>(batch.tasks.size()), workers, [&](int m) {
    const LossGrad lg = task_loss_grad(net, params, batch.tasks[m], cfg);
    losses[m] = lg.loss;
    grads[m] = lg.grad;
  });
  return {tree_mean(losses), tree_mean_params(grads)};
}

double meta_step(const Network& net, ParamSet& params, const MetaBatch& batch,
                 const InnerLoopConfig& cfg, AdamState& state, const AdamConfig& adam, double lr,
                 int workers) {
  const LossGrad lg = maml_grad(net, params, batch, cfg, workers);
  state.step(params, lg.grad, adam, lr);
  return lg.loss;
}

namespace {

double task_accuracy(const Network& net, const ParamSet& params, const EpisodicTask& task,
                     const InnerLoopConfig& inner) {
  const ParamSet adapted = inner_adapt(net, params, task.support_x, task.support_y, inner);
  const auto pred = predict(forward(net, adapted, task.query_x));
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == task.query_y[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

EvalResult summarize(const std::vector<double>& accs) {
  const double mean = tree_mean(accs);
  double ss = 0.0;
  for (double a : accs) ss += (a - mean) * (a - mean);
  const int n = static_cast<int>(accs.size());
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(n))};
}

}  // namespace

EvalResult evaluate(const Network& net, const ParamSet& params, const DatasetSource& src,
                    const EvalConfig& cfg, std::uint64_t seed, int workers) {
  if (src.novel_classes.empty()) throw CapacityError("evaluate: novel split is empty");
  std::vector<double> accs(cfg.n_tasks);
  task_map(cfg.n_tasks, workers, [&](int i) {
    const EpisodicTask task = sample_task(src, Split::kNovel, cfg.n_way, cfg.k_shot,
                                          cfg.q_per_class, seed_mix(seed, kTagEval, i));
    accs[i] = task_accuracy(net, params, task, cfg.inner);
  });
  return summarize(accs);
}

EvalResult evaluate_stream(const Network& net, const ParamSet& params, const TaskStream& stream,
                           int eval_set, const EvalConfig& cfg, std::uint64_t seed, int workers) {
  std::vector<double> accs(cfg.n_tasks);
  task_map(cfg.n_tasks, workers, [&](int i) {
    const EpisodicTask task = stream.sample_eval(eval_set, cfg.n_way, cfg.k_shot, cfg.q_per_class,
                                                 seed_mix(seed, kTagEval, eval_set, i));
    accs[i] = task_accuracy(net, params, task, cfg.inner);
  });
  return summarize(accs);
}

}  // namespace boml
