#include "boml/bomvi.hpp"

#include <cmath>
#include <random>

#include "boml/errors.hpp"
#include "boml/parallel.hpp"
#include "boml/rng.hpp"

namespace boml {

void MeanFieldPosterior::validate() const {
  if (mu.layers.size() != log_sigma.layers.size())
    throw DimensionError("mean-field posterior: layer count mismatch");
  for (std::size_t l = 0; l < mu.layers.size(); ++l) {
    if (!mu.layers[l].same_shape(log_sigma.layers[l]))
      throw DimensionError("mean-field posterior: shape mismatch at layer " + std::to_string(l));
    if (!all_finite(log_sigma.layers[l]) || !all_finite(mu.layers[l]))
      throw DomainError("mean-field posterior: non-finite parameter");
  }
}

MeanFieldPosterior MeanFieldPosterior::init(const ParamSet& mean, double log_sigma_init) {
  MeanFieldPosterior phi;
  phi.mu = mean;
  for (const auto& w : mean.layers)
    phi.log_sigma.layers.emplace_back(w.rows(), w.cols(), log_sigma_init);
  phi.validate();
  return phi;
}

MeanFieldPosterior MeanFieldPosterior::standard(const ParamSet& shape) {
  MeanFieldPosterior phi;
  for (const auto& w : shape.layers) {
    phi.mu.layers.emplace_back(w.rows(), w.cols(), 0.0);
    phi.log_sigma.layers.emplace_back(w.rows(), w.cols(), 0.0);
  }
  return phi;
}

void BomviConfig::validate() const {
  if (mc_samples < 1) throw InputError("bomvi: mc_samples must be >= 1");
  if (kl_weight < 0.0) throw InputError("bomvi: kl_weight must be >= 0");
  if (!std::isfinite(log_sigma_init)) throw InputError("bomvi: log_sigma_init must be finite");
}

double kl_mean_field(const MeanFieldPosterior& q, const MeanFieldPosterior& p) {
  q.validate();
  p.validate();
  if (q.mu.layers.size() != p.mu.layers.size())
    throw DimensionError("kl_mean_field: layer count mismatch");
  double kl = 0.0;
  for (std::size_t l = 0; l < q.mu.layers.size(); ++l) {
    if (!q.mu.layers[l].same_shape(p.mu.layers[l]))
      throw DimensionError("kl_mean_field: shape mismatch at layer " + std::to_string(l));
    for (std::size_t i = 0; i < q.mu.layers[l].size(); ++i) {
      const double lsq = q.log_sigma.layers[l].raw()[i];
      const double lsp = p.log_sigma.layers[l].raw()[i];
      const double dmu = q.mu.layers[l].raw()[i] - p.mu.layers[l].raw()[i];
      kl += (lsp - lsq) + (std::exp(2.0 * lsq) + dmu * dmu) / (2.0 * std::exp(2.0 * lsp)) - 0.5;
    }
  }
  return kl;
}

ParamSet modified_inner_adapt(const Network& net, const ParamSet& theta_sample,
                              const ParamSet& mu, const DenseMatrix& support_x,
                              const std::vector<int>& support_y, const InnerLoopConfig& cfg) {
  cfg.validate();
  if (support_x.rows() == 0) throw InputError("modified_inner_adapt: empty support set");
  const ParamSet adapted_mu = inner_adapt(net, mu, support_x, support_y, cfg);
  // The sample keeps its deviation: theta~ = mu~ + (theta - mu).
  return adapted_mu + (theta_sample - mu);
}

namespace {

DenseMatrix draw_gaussian(std::mt19937_64& eng, int rows, int cols) {
  DenseMatrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : m.raw()) v = dist(eng);
  return m;
}

struct TaskNoise {
  std::vector<std::vector<DenseMatrix>> weight_eps;  // [r][layer], out x (in+1)
  std::vector<std::vector<DenseMatrix>> lrt_eps;     // [r][layer], n_support x out
};

// One engine per (iteration, task) drives every sample's noise, so the
// loss is a deterministic function of (phi, seed). The weight samples
// for the query term are drawn first, then the pre-activation noise for
// the support term from the same stream (or a forked one when
// configured).
TaskNoise draw_task_noise(const Network& net, int n_support, const BomviConfig& cfg,
                          std::uint64_t task_seed) {
  TaskNoise noise;
  auto eng = make_engine(task_seed);
  noise.weight_eps.resize(cfg.mc_samples);
  for (int r = 0; r < cfg.mc_samples; ++r)
    for (const auto& spec : net.layers)
      noise.weight_eps[r].push_back(draw_gaussian(eng, spec.out_dim, spec.in_dim + 1));
  auto support_eng = cfg.independent_support_noise ? make_engine(seed_mix(task_seed, 0x5eed))
                                                   : std::move(eng);
  noise.lrt_eps.resize(cfg.mc_samples);
  for (int r = 0; r < cfg.mc_samples; ++r)
    for (const auto& spec : net.layers)
      noise.lrt_eps[r].push_back(draw_gaussian(support_eng, n_support, spec.out_dim));
  return noise;
}

int tape_lrt_forward(Tape& tape, const Network& net, const std::vector<int>& mu,
                     const std::vector<int>& log_sigma, int x,
                     const std::vector<DenseMatrix>& eps) {
  int a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int aug = tape.append_ones_col(a);
    const int mean_h = tape.matmul(aug, tape.transpose(mu[l]));
    const int var_h = tape.matmul(tape.mul(aug, aug),
                                  tape.transpose(tape.exp(tape.scale(log_sigma[l], 2.0))));
    const int h = tape.add(mean_h, tape.mul(tape.sqrt(var_h), tape.constant(eps[l])));
    switch (net.layers[l].act) {
      case Activation::kRelu:
        a = tape.relu(h);
        break;
      case Activation::kTanh:
        a = tape.tanh(h);
        break;
      case Activation::kIdentity:
        a = h;
        break;
    }
  }
  return a;
}

int tape_kl_mean_field(Tape& tape, const std::vector<int>& q_mu, const std::vector<int>& q_ls,
                       const MeanFieldPosterior& p) {
  int acc = -1;
  for (std::size_t l = 0; l < q_mu.size(); ++l) {
    const auto& pls = p.log_sigma.layers[l];
    DenseMatrix inv_two_var_p(pls.rows(), pls.cols());
    for (std::size_t i = 0; i < pls.size(); ++i)
      inv_two_var_p.raw()[i] = 0.5 * std::exp(-2.0 * pls.raw()[i]);
    const int dls = tape.sub(tape.constant(pls), q_ls[l]);
    const int var_q = tape.exp(tape.scale(q_ls[l], 2.0));
    const int dmu = tape.sub(q_mu[l], tape.constant(p.mu.layers[l]));
    const int quad = tape.mul(tape.add(var_q, tape.mul(dmu, dmu)), tape.constant(inv_two_var_p));
    const int half = tape.constant(DenseMatrix(pls.rows(), pls.cols(), 0.5));
    const int term = tape.sum_all(tape.sub(tape.add(dls, quad), half));
    acc = acc < 0 ? term : tape.add(acc, term);
  }
  return acc;
}

struct TaskVi {
  double loss = 0.0;
  ParamSet grad_mu;
  ParamSet grad_ls;
};

TaskVi bomvi_task_term(const Network& net, const MeanFieldPosterior& phi,
                       const EpisodicTask& task, const InnerLoopConfig& inner,
                       const BomviConfig& cfg, std::uint64_t task_seed, bool want_grad) {
  const TaskNoise noise = draw_task_noise(net, task.support_x.rows(), cfg, task_seed);
  Tape tape;
  const auto mu = param_leaves(tape, phi.mu);
  const auto ls = param_leaves(tape, phi.log_sigma);
  std::vector<int> sigma(mu.size());
  for (std::size_t l = 0; l < mu.size(); ++l) sigma[l] = tape.exp(ls[l]);

  // Query term: explicit weight samples around the mean trajectory. The
  // mean adapts with its own gradients; each sample keeps its deviation.
  const auto adapted_mu = tape_sgd_adapt(tape, net, mu, task.support_x, task.support_y, inner.k,
                                         inner.alpha, inner.first_order);
  const int query_x = tape.constant(task.query_x);
  int f1 = -1;
  for (int r = 0; r < cfg.mc_samples; ++r) {
    std::vector<int> theta(mu.size());
    for (std::size_t l = 0; l < mu.size(); ++l)
      theta[l] = tape.add(adapted_mu[l], tape.mul(sigma[l], tape.constant(noise.weight_eps[r][l])));
    const int term = tape_nll(tape, net, theta, query_x, task.query_y);
    f1 = f1 < 0 ? term : tape.add(f1, term);
  }
  f1 = tape.scale(f1, 1.0 / cfg.mc_samples);

  // Pre-adaptation support term via pre-activation sampling.
  const int support_x = tape.constant(task.support_x);
  int f2 = -1;
  for (int r = 0; r < cfg.mc_samples; ++r) {
    const int logits = tape_lrt_forward(tape, net, mu, ls, support_x, noise.lrt_eps[r]);
    const int term = tape.softmax_xent(logits, task.support_y);
    f2 = f2 < 0 ? term : tape.add(f2, term);
  }
  f2 = tape.scale(f2, 1.0 / cfg.mc_samples);

  const int loss = tape.add(f1, f2);
  TaskVi out;
  out.loss = tape.scalar_value(loss);
  if (want_grad) {
    std::vector<int> wrt = mu;
    wrt.insert(wrt.end(), ls.begin(), ls.end());
    auto grads = tape.gradients(loss, wrt);
    out.grad_mu.layers.assign(grads.begin(), grads.begin() + mu.size());
    out.grad_ls.layers.assign(grads.begin() + mu.size(), grads.end());
  }
  return out;
}

double effective_kl_weight(const BomviConfig& cfg, const MetaBatch& batch) {
  if (cfg.kl_weight > 0.0) return cfg.kl_weight;
  const auto& t = batch.tasks.front();
  return 1.0 / static_cast<double>(t.support_x.rows() + t.query_x.rows());
}

}  // namespace

DenseMatrix lrt_forward(const Network& net, const MeanFieldPosterior& phi,
                        const DenseMatrix& inputs, std::uint64_t seed) {
  phi.validate();
  net.check_params(phi.mu);
  auto eng = make_engine(seed_mix(seed, kTagVi));
  DenseMatrix a = inputs;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    DenseMatrix aug(a.rows(), a.cols() + 1, 1.0);
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j) aug.at(i, j) = a.at(i, j);
    DenseMatrix h = matmul(aug, transpose(phi.mu.layers[l]));
    DenseMatrix var_w(phi.log_sigma.layers[l].rows(), phi.log_sigma.layers[l].cols());
    for (std::size_t i = 0; i < var_w.size(); ++i)
      var_w.raw()[i] = std::exp(2.0 * phi.log_sigma.layers[l].raw()[i]);
    const DenseMatrix var_h = matmul(hadamard(aug, aug), transpose(var_w));
    const DenseMatrix eps = draw_gaussian(eng, h.rows(), h.cols());
    for (std::size_t i = 0; i < h.size(); ++i)
      h.raw()[i] += std::sqrt(var_h.raw()[i]) * eps.raw()[i];
    switch (net.layers[l].act) {
      case Activation::kRelu:
        for (double& v : h.raw()) v = v > 0.0 ? v : 0.0;
        break;
      case Activation::kTanh:
        for (double& v : h.raw()) v = std::tanh(v);
        break;
      case Activation::kIdentity:
        break;
    }
    a = std::move(h);
  }
  return a;
}

double bomvi_loss(const Network& net, const MeanFieldPosterior& phi,
                  const MeanFieldPosterior& phi_prev, const MetaBatch& batch,
                  const InnerLoopConfig& inner, const BomviConfig& cfg, std::uint64_t seed,
                  int workers) {
  cfg.validate();
  inner.validate();
  phi.validate();
  if (batch.tasks.empty()) throw InputError("bomvi_loss: empty meta-batch");
  std::vector<double> losses(batch.tasks.size());
  task_map(static_cast<int>(batch.tasks.size()), workers, [&](int m) {
    losses[m] = bomvi_task_term(net, phi, batch.tasks[m], inner, cfg,
                                seed_mix(seed, kTagVi, m), /*want_grad=*/false)
                    .loss;
  });
  return tree_mean(losses) + effective_kl_weight(cfg, batch) * kl_mean_field(phi, phi_prev);
}

ViLossGrad bomvi_grad(const Network& net, const MeanFieldPosterior& phi,
                      const MeanFieldPosterior& phi_prev, const MetaBatch& batch,
                      const InnerLoopConfig& inner, const BomviConfig& cfg, std::uint64_t seed,
                      int workers) {
  cfg.validate();
  inner.validate();
  phi.validate();
  if (batch.tasks.empty()) throw InputError("bomvi_grad: empty meta-batch");
  std::vector<TaskVi> results(batch.tasks.size());
  task_map(static_cast<int>(batch.tasks.size()), workers, [&](int m) {
    results[m] = bomvi_task_term(net, phi, batch.tasks[m], inner, cfg,
                                 seed_mix(seed, kTagVi, m), /*want_grad=*/true);
  });
  std::vector<double> losses(results.size());
  std::vector<ParamSet> gmu(results.size()), gls(results.size());
  for (std::size_t m = 0; m < results.size(); ++m) {
    losses[m] = results[m].loss;
    gmu[m] = std::move(results[m].grad_mu);
    gls[m] = std::move(results[m].grad_ls);
  }

  const double w = effective_kl_weight(cfg, batch);
  Tape tape;
  const auto mu = param_leaves(tape, phi.mu);
  const auto ls = param_leaves(tape, phi.log_sigma);
  const int kl = tape.scale(tape_kl_mean_field(tape, mu, ls, phi_prev), w);

  ViLossGrad out;
  out.loss = tree_mean(losses) + tape.scalar_value(kl);
  out.grad_mu = tree_mean_params(gmu);
  out.grad_log_sigma = tree_mean_params(gls);
  std::vector<int> wrt = mu;
  wrt.insert(wrt.end(), ls.begin(), ls.end());
  const auto kl_grads = tape.gradients(kl, wrt);
  for (std::size_t l = 0; l < mu.size(); ++l) {
    add_in_place(out.grad_mu.layers[l], kl_grads[l]);
    add_in_place(out.grad_log_sigma.layers[l], kl_grads[mu.size() + l]);
  }
  return out;
}

std::vector<SigmaStats> sigma_squared_stats(const MeanFieldPosterior& phi) {
  std::vector<SigmaStats> stats;
  for (const auto& ls : phi.log_sigma.layers) {
    SigmaStats s;
    double total = 0.0;
    s.min = std::exp(2.0 * ls.raw()[0]);
    s.max = s.min;
    for (double v : ls.raw()) {
      const double s2 = std::exp(2.0 * v);
      total += s2;
      s.min = std::min(s.min, s2);
      s.max = std::max(s.max, s2);
    }
    s.mean = total / static_cast<double>(ls.size());
    stats.push_back(s);
  }
  return stats;
}

}  // namespace boml
