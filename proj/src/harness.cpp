#include "boml/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "boml/checkpoint.hpp"
#include "boml/errors.hpp"
#include "boml/parallel.hpp"
#include "boml/rng.hpp"
#include "boml/svg.hpp"

namespace boml {

namespace fs = std::filesystem;

Method parse_method(const std::string& name) {
  if (name == "bomla") return Method::kBomla;
  if (name == "bomvi") return Method::kBomvi;
  if (name == "maml_seq") return Method::kMamlSeq;
  if (name == "toe") return Method::kToe;
  if (name == "ftml") return Method::kFtml;
  throw InputError("config: unknown method '" + name +
                   "' (expected bomla|bomvi|maml_seq|toe|ftml)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kBomla:
      return "bomla";
    case Method::kBomvi:
      return "bomvi";
    case Method::kMamlSeq:
      return "maml_seq";
    case Method::kToe:
      return "toe";
    case Method::kFtml:
      return "ftml";
  }
  return "?";
}

namespace {

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw InputError("config: unknown activation '" + s + "'");
}

std::vector<int> parse_int_list(const Config& cfg, const std::string& key,
                                const std::vector<int>& fallback) {
  if (!cfg.has(key)) return fallback;
  std::vector<int> out;
  std::istringstream in(cfg.get_string(key, ""));
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  if (out.empty()) throw InputError("config: key '" + key + "' is an empty list");
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  ExperimentConfig e;
  const std::string preset = cfg.get_string("preset", "desk");
  if (preset == "paper") {
    e.iters_per_phase = 5000;
    e.eval_every = 250;
    e.eval_tasks = 100;
    e.meta_batch = 32;
    e.bomla.fisher_task_count = 5000;
    e.bomvi.mc_samples = 20;
  } else if (preset != "desk") {
    throw InputError("config: unknown preset '" + preset + "' (expected desk|paper)");
  }

  e.method = parse_method(cfg.get_string("method", "bomla"));
  e.seeds = cfg.get_u64_list("seeds", e.seeds);
  e.iters_per_phase = cfg.get_int("iters_per_phase", e.iters_per_phase);
  e.eval_every = cfg.get_int("eval_every", e.eval_every);
  e.eval_tasks = cfg.get_int("eval_tasks", e.eval_tasks);
  e.out_dir = cfg.get_string("out_dir", e.out_dir);
  e.workers = cfg.get_int("workers", e.workers);
  const std::string timing = cfg.get_string("timing", "none");
  if (timing == "real")
    e.timing_real = true;
  else if (timing != "none")
    throw InputError("config: timing must be none|real");
  if (e.iters_per_phase < 1 || e.eval_every < 1 || e.eval_tasks < 1)
    throw InputError("config: iters_per_phase, eval_every, eval_tasks must be >= 1");

  e.hidden = parse_int_list(cfg, "net.hidden", e.hidden);
  e.activation = parse_activation(cfg.get_string("net.activation", "relu"));

  e.n_way = cfg.get_int("task.n_way", e.n_way);
  e.k_shot = cfg.get_int("task.k_shot", e.k_shot);
  e.q_per_class = cfg.get_int("task.q_per_class", e.q_per_class);
  e.meta_batch = cfg.get_int("task.meta_batch", e.meta_batch);
  e.inner.k = cfg.get_int("task.k_inner", e.inner.k);
  e.inner.alpha = cfg.get_double("task.alpha", e.inner.alpha);
  e.inner.first_order = cfg.get_bool("task.first_order", false);
  e.eval_inner.k = cfg.get_int("task.k_eval", 3);
  e.eval_inner.alpha = cfg.get_double("task.alpha_eval", e.inner.alpha);
  e.inner.validate();
  e.eval_inner.validate();
  if (e.meta_batch < 1) throw InputError("config: task.meta_batch must be >= 1");

  e.adam.lr = cfg.get_double("outer.lr", e.adam.lr);
  e.decay_factor = cfg.get_double("outer.decay_factor", e.decay_factor);
  e.decay_every = cfg.get_int("outer.decay_every", e.decay_every);
  e.decay_halfway = cfg.get_bool("outer.decay_halfway", e.decay_halfway);

  const std::string mode = cfg.get_string("stream.mode", "datasets");
  if (mode == "datasets")
    e.stream_mode = StreamMode::kSequentialDatasets;
  else if (mode == "tasks")
    e.stream_mode = StreamMode::kSequentialTasks;
  else
    throw InputError("config: stream.mode must be datasets|tasks");
  e.stream_seed = cfg.get_u64_list("stream.seed", {e.stream_seed})[0];
  e.synth.domains = cfg.get_int("stream.domains", e.synth.domains);
  e.synth.classes_per_domain = cfg.get_int("stream.classes_per_domain", e.synth.classes_per_domain);
  e.synth.base_classes = cfg.get_int("stream.base_classes", e.synth.base_classes);
  e.synth.examples_per_class = cfg.get_int("stream.examples_per_class", e.synth.examples_per_class);
  e.synth.feature_dim = cfg.get_int("stream.feature_dim", e.synth.feature_dim);
  e.synth.subspace_dim = cfg.get_int("stream.subspace_dim", e.synth.subspace_dim);
  e.synth.prototype_dispersion = cfg.get_double("stream.dispersion", e.synth.prototype_dispersion);
  e.synth.noise_scale = cfg.get_double("stream.noise", e.synth.noise_scale);
  e.synth.distractor_scale = cfg.get_double("stream.distractor", e.synth.distractor_scale);
  e.synth.rotation_seed = cfg.get_u64_list("stream.rotation_seed", {e.synth.rotation_seed})[0];
  e.group_size = cfg.get_int("stream.group_size", e.group_size);
  e.image_root = cfg.get_string("stream.image_root", "");
  e.image_side = cfg.get_int("stream.image_side", e.image_side);
  e.image_base_classes = cfg.get_int("stream.image_base_classes", 0);

  e.bomla.lambda = cfg.get_double("bomla.lambda", e.bomla.lambda);
  e.bomla.tau = cfg.get_double("bomla.tau", e.bomla.tau);
  e.bomla.precision_init_lo = cfg.get_double("bomla.precision_init_lo", e.bomla.precision_init_lo);
  e.bomla.precision_init_hi = cfg.get_double("bomla.precision_init_hi", e.bomla.precision_init_hi);
  e.bomla.fisher_task_count = cfg.get_int("bomla.fisher_tasks", e.bomla.fisher_task_count);
  e.bomla.fisher_mc_labels = cfg.get_int("bomla.fisher_mc_labels", e.bomla.fisher_mc_labels);
  e.bomla.jacobian_alpha = cfg.get_bool("bomla.jacobian_alpha", e.bomla.jacobian_alpha);
  e.bomla.empirical_fisher = cfg.get_bool("bomla.empirical_fisher", e.bomla.empirical_fisher);
  e.bomla.validate();

  e.bomvi.mc_samples = cfg.get_int("bomvi.mc_samples", e.bomvi.mc_samples);
  e.bomvi.log_sigma_init = cfg.get_double("bomvi.log_sigma_init", e.bomvi.log_sigma_init);
  e.bomvi.kl_weight = cfg.get_double("bomvi.kl_weight", e.bomvi.kl_weight);
  e.bomvi.independent_support_noise =
      cfg.get_bool("bomvi.independent_support_noise", e.bomvi.independent_support_noise);
  e.bomvi_prior_log_sigma = cfg.get_double("bomvi.prior_log_sigma", e.bomvi_prior_log_sigma);
  e.bomvi.validate();
  return e;
}

Network ExperimentConfig::make_network(int input_dim) const {
  return Network::mlp(input_dim, hidden, n_way, activation);
}

double ExperimentConfig::lr_at(int iter) const {
  double lr = adam.lr;
  if (decay_every > 0)
    for (int k = decay_every; k <= iter; k += decay_every) lr *= decay_factor;
  if (decay_halfway && iter > iters_per_phase / 2) lr *= decay_factor;
  return lr;
}

TaskStream build_stream(const ExperimentConfig& cfg) {
  if (!cfg.image_root.empty()) {
    DatasetSource src = load_image_dir(cfg.image_root, cfg.image_side, cfg.image_base_classes);
    if (cfg.stream_mode == StreamMode::kSequentialTasks)
      return split_sequential_tasks(src, cfg.group_size, cfg.stream_seed);
    TaskStream stream;
    stream.mode = StreamMode::kSequentialDatasets;
    stream.sources.push_back(std::move(src));
    return stream;
  }
  if (cfg.stream_mode == StreamMode::kSequentialTasks) {
    SyntheticShiftConfig scfg = cfg.synth;
    scfg.domains = 1;
    const TaskStream base = make_synthetic_stream(scfg, cfg.stream_seed);
    return split_sequential_tasks(base.sources[0], cfg.group_size, cfg.stream_seed);
  }
  return make_synthetic_stream(cfg.synth, cfg.stream_seed);
}

namespace {

std::uint64_t shared_config_hash(const ExperimentConfig& cfg) {
  // The pieces every method must share: inner loop, evaluation protocol,
  // outer optimizer, model, and episode shape.
  std::ostringstream os;
  os << cfg.n_way << '|' << cfg.k_shot << '|' << cfg.q_per_class << '|' << cfg.meta_batch << '|'
     << cfg.inner.k << '|' << format_double(cfg.inner.alpha) << '|' << cfg.inner.first_order
     << '|' << cfg.eval_inner.k << '|' << format_double(cfg.eval_inner.alpha) << '|'
     << cfg.eval_tasks << '|' << format_double(cfg.adam.lr) << '|'
     << format_double(cfg.decay_factor) << '|' << cfg.decay_every << '|' << cfg.decay_halfway
     << '|' << cfg.iters_per_phase << '|' << cfg.eval_every;
  for (int h : cfg.hidden) os << '|' << h;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct SeedContext {
  const ExperimentConfig& cfg;
  const TaskStream& stream;
  const Network& net;
  std::uint64_t seed;
  int workers;
  std::string out_dir;
  bool timing_real;

  std::vector<MetricRecord>* records;
  std::vector<ForgettingCell>* cells;
  std::vector<std::string>* cov_rows;
  std::vector<std::string>* acct_rows;
  std::ofstream* log;

  std::chrono::steady_clock::time_point phase_start;

  EvalConfig eval_config() const {
    EvalConfig ec;
    ec.n_tasks = cfg.eval_tasks;
    ec.n_way = cfg.n_way;
    ec.k_shot = cfg.k_shot;
    ec.q_per_class = cfg.q_per_class;
    ec.inner = cfg.eval_inner;
    return ec;
  }

  bool is_eval_iter(int iter) const {
    return iter % cfg.eval_every == 0 || iter == cfg.iters_per_phase;
  }

  void eval_all_sets(int phase1, int iter, double loss, const ParamSet& params) {
    if (!is_eval_iter(iter)) return;
    double wall_ms = 0.0;
    if (timing_real)
      wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          phase_start)
                    .count();
    const int step = (phase1 - 1) * cfg.iters_per_phase + iter;
    const EvalConfig ec = eval_config();
    for (int e = 0; e < stream.eval_sets(); ++e) {
      // Fixed per-seed evaluation pool: retention is measured on the
      // same novel tasks at every checkpoint.
      const EvalResult r =
          evaluate_stream(net, params, stream, e, ec, seed_mix(seed, kTagEval), workers);
      records->push_back({seed, method_name(cfg.method), phase1, step, e + 1, r.acc_mean,
                          r.ci_half, loss, wall_ms});
      if (iter == cfg.iters_per_phase)
        cells->push_back({seed, phase1, e + 1, r.acc_mean, r.ci_half});
    }
  }

  [[noreturn]] void abort_with_dump(int phase1, int iter, double loss, const ParamSet& params,
                                    const std::string& what) {
    const std::string path = out_dir + "/diagnostic_dump.txt";
    std::ofstream dump(path, std::ios::trunc);
    dump << "non-finite loss\n";
    dump << "seed=" << seed << " phase=" << phase1 << " iter=" << iter << "\n";
    dump << "loss=" << format_double(loss) << "\n";
    dump << "lr=" << format_double(cfg.lr_at(iter)) << "\n";
    for (std::size_t l = 0; l < params.layers.size(); ++l)
      dump << "layer" << l << "_frobenius=" << format_double(frobenius_norm(params.layers[l]))
           << "\n";
    dump << what << "\n";
    throw DomainError("aborted: " + what + " (diagnostic dump: " + path + ")");
  }

  EpisodicTask draw_train(int phase0, int iter, int m) const {
    return stream.sample_train(phase0, cfg.n_way, cfg.k_shot, cfg.q_per_class,
                               seed_mix(seed, kTagTask, phase0 + 1, iter, m));
  }

  MetaBatch draw_batch(int phase0, int iter) const {
    MetaBatch batch;
    batch.tasks.reserve(cfg.meta_batch);
    for (int m = 0; m < cfg.meta_batch; ++m) batch.tasks.push_back(draw_train(phase0, iter, m));
    return batch;
  }

  std::string ckpt_path(int phase1) const {
    return out_dir + "/checkpoints/seed" + std::to_string(seed) + "_phase" +
           std::to_string(phase1) + ".ckpt";
  }

  void account(int phase1, std::size_t state_bytes, std::size_t buffer_items,
               std::size_t buffer_bytes) {
    std::ostringstream row;
    row << seed << ',' << phase1 << ',' << method_name(cfg.method) << ',' << state_bytes << ','
        << buffer_items << ',' << buffer_bytes;
    acct_rows->push_back(row.str());
  }

  std::size_t save_and_size(int phase1, const Checkpoint& ckpt) {
    const std::string path = ckpt_path(phase1);
    save_checkpoint(path, ckpt);
    return static_cast<std::size_t>(fs::file_size(path));
  }

  RoundConfig round_config() const {
    RoundConfig rc;
    rc.inner = cfg.inner;
    rc.adam = cfg.adam;
    rc.iters = cfg.iters_per_phase;
    rc.n_way = cfg.n_way;
    rc.k_shot = cfg.k_shot;
    rc.q_per_class = cfg.q_per_class;
    rc.meta_batch = cfg.meta_batch;
    rc.workers = workers;
    rc.lr_at = [this](int it) { return cfg.lr_at(it); };
    return rc;
  }
};

void run_bomla_seed(SeedContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  ParamSet params = ctx.net.init_params(seed_mix(ctx.seed, 1));
  AdamState adam(params);
  LaplacePosterior post = init_posterior(ctx.net, params, cfg.bomla, ctx.seed);
  for (int t = 0; t < ctx.stream.phases(); ++t) {
    ctx.stream.set_train_phase(t);
    ctx.phase_start = std::chrono::steady_clock::now();
    for (int iter = 1; iter <= cfg.iters_per_phase; ++iter) {
      const MetaBatch batch = ctx.draw_batch(t, iter);
      const LossGrad lg = bomla_grad(ctx.net, params, batch, post, cfg.inner, ctx.workers);
      if (!std::isfinite(lg.loss))
        ctx.abort_with_dump(t + 1, iter, lg.loss, params, "bomla loss is not finite");
      adam.step(params, lg.grad, cfg.adam, cfg.lr_at(iter));
      ctx.eval_all_sets(t + 1, iter, lg.loss, params);
    }
    set_mean(post, params);
    std::vector<EpisodicTask> fisher_tasks;
    fisher_tasks.reserve(cfg.bomla.fisher_task_count);
    for (int i = 0; i < cfg.bomla.fisher_task_count; ++i)
      fisher_tasks.push_back(ctx.stream.sample_train(
          t, cfg.n_way, cfg.k_shot, cfg.q_per_class, seed_mix(ctx.seed, kTagFisher, t + 1, i)));
    const auto fishers = averaged_adjusted_fisher(ctx.net, params, fisher_tasks, cfg.inner,
                                                  cfg.bomla, seed_mix(ctx.seed, kTagFisher, t + 1),
                                                  ctx.workers);
    update_precision(post, fishers, cfg.bomla);
    for (std::size_t l = 0; l < fishers.size(); ++l)
      *ctx.log << "fisher seed=" << ctx.seed << " phase=" << t + 1 << " layer=" << l
               << " min_eig=" << format_double(fishers[l].min_eig)
               << " psd_shift=" << format_double(fishers[l].psd_shift) << "\n";
    const std::size_t bytes = ctx.save_and_size(t + 1, Checkpoint::from_bomla(post));
    ctx.account(t + 1, bytes, 0, 0);
  }
}

void run_bomvi_seed(SeedContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  MeanFieldPosterior phi =
      MeanFieldPosterior::init(ctx.net.init_params(seed_mix(ctx.seed, 1)), cfg.bomvi.log_sigma_init);
  MeanFieldPosterior prior = MeanFieldPosterior::standard(phi.mu);
  for (auto& ls : prior.log_sigma.layers)
    for (double& v : ls.raw()) v = ctx.cfg.bomvi_prior_log_sigma;
  MeanFieldPosterior phi_prev = prior;

  ParamSet combined;
  combined.layers = phi.mu.layers;
  combined.layers.insert(combined.layers.end(), phi.log_sigma.layers.begin(),
                         phi.log_sigma.layers.end());
  AdamState adam(combined);
  const std::size_t L = phi.mu.layers.size();

  for (int t = 0; t < ctx.stream.phases(); ++t) {
    ctx.stream.set_train_phase(t);
    ctx.phase_start = std::chrono::steady_clock::now();
    for (int iter = 1; iter <= cfg.iters_per_phase; ++iter) {
      const MetaBatch batch = ctx.draw_batch(t, iter);
      const ViLossGrad vg = bomvi_grad(ctx.net, phi, phi_prev, batch, cfg.inner, cfg.bomvi,
                                       seed_mix(ctx.seed, kTagVi, t + 1, iter), ctx.workers);
      if (!std::isfinite(vg.loss))
        ctx.abort_with_dump(t + 1, iter, vg.loss, phi.mu, "bomvi loss is not finite");
      ParamSet cparams, cgrad;
      cparams.layers = phi.mu.layers;
      cparams.layers.insert(cparams.layers.end(), phi.log_sigma.layers.begin(),
                            phi.log_sigma.layers.end());
      cgrad.layers = vg.grad_mu.layers;
      cgrad.layers.insert(cgrad.layers.end(), vg.grad_log_sigma.layers.begin(),
                          vg.grad_log_sigma.layers.end());
      adam.step(cparams, cgrad, cfg.adam, cfg.lr_at(iter));
      phi.mu.layers.assign(cparams.layers.begin(), cparams.layers.begin() + L);
      phi.log_sigma.layers.assign(cparams.layers.begin() + L, cparams.layers.end());
      ctx.eval_all_sets(t + 1, iter, vg.loss, phi.mu);
    }
    phi_prev = phi;
    const auto stats = sigma_squared_stats(phi);
    for (std::size_t l = 0; l < stats.size(); ++l) {
      std::ostringstream row;
      row << ctx.seed << ',' << t + 1 << ',' << l << ',' << format_double(stats[l].mean) << ','
          << format_double(stats[l].min) << ',' << format_double(stats[l].max);
      ctx.cov_rows->push_back(row.str());
    }
    const std::size_t bytes =
        ctx.save_and_size(t + 1, Checkpoint::from_bomvi(phi, static_cast<std::uint32_t>(t + 1)));
    ctx.account(t + 1, bytes, 0, 0);
  }
}

void run_baseline_seed(SeedContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  ParamSet params = ctx.net.init_params(seed_mix(ctx.seed, 1));
  AdamState adam(params);
  TaskBuffer buffer;
  const RoundConfig rc = ctx.round_config();

  for (int t = 0; t < ctx.stream.phases(); ++t) {
    ctx.stream.set_train_phase(t);
    ctx.phase_start = std::chrono::steady_clock::now();
    const int phase1 = t + 1;
    const IterHook hook = [&](int iter, double loss, const ParamSet& p) {
      ctx.eval_all_sets(phase1, iter, loss, p);
    };
    try {
      switch (cfg.method) {
        case Method::kMamlSeq:
          seq_maml_round(ctx.net, params, adam, ctx.stream, t, rc, ctx.seed, hook);
          break;
        case Method::kToe:
          params = toe_round(ctx.net, ctx.stream, phase1, rc, ctx.seed, hook);
          break;
        case Method::kFtml:
          ftml_round(ctx.net, params, adam, buffer, ctx.stream, t, rc, ctx.seed, hook);
          break;
        default:
          throw InputError("run_baseline_seed: not a baseline method");
      }
    } catch (const DomainError& e) {
      ctx.abort_with_dump(phase1, -1, std::nan(""), params, e.what());
    }

    const std::size_t state_bytes =
        ctx.save_and_size(phase1, Checkpoint::from_params(params, phase1));
    std::size_t buffer_items = 0, buffer_bytes = 0;
    if (cfg.method == Method::kToe) {
      TaskBuffer all;
      for (int i = 0; i <= t; ++i) all.push(i);
      buffer_items = all.size();
      buffer_bytes = all.payload_bytes(ctx.stream);
    } else if (cfg.method == Method::kFtml) {
      buffer_items = buffer.size();
      buffer_bytes = buffer.payload_bytes(ctx.stream);
    }
    ctx.account(phase1, state_bytes, buffer_items, buffer_bytes);
  }
}

void write_charts(const ExperimentConfig& cfg, const TaskStream& stream,
                  const std::vector<MetricRecord>& records, const std::string& out_dir) {
  for (int e = 1; e <= stream.eval_sets(); ++e) {
    std::vector<SvgSeries> series;
    for (std::uint64_t seed : cfg.seeds) {
      SvgSeries s;
      s.label = "seed " + std::to_string(seed);
      for (const auto& r : records)
        if (r.eval_dataset == e && r.seed == seed)
          s.points.emplace_back(static_cast<double>(r.step), r.acc_mean);
      series.push_back(std::move(s));
    }
    write_line_chart(out_dir + "/eval_dataset_" + std::to_string(e) + ".svg",
                     method_name(cfg.method) + ": meta-eval accuracy, dataset " +
                         std::to_string(e),
                     "outer iteration", "accuracy", series, 0.0, 1.0);
  }
}

}  // namespace

RunSummary run_experiment(const Config& raw, const std::string& out_dir_override) {
  ExperimentConfig cfg = ExperimentConfig::from_config(raw);
  if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
  const int workers = worker_count(cfg.workers);

  fs::create_directories(cfg.out_dir + "/checkpoints");
  std::ofstream log(cfg.out_dir + "/run.log", std::ios::trunc);
  if (!log) throw IngestionError("cannot write run log under " + cfg.out_dir);

  const TaskStream stream = build_stream(cfg);
  stream.enable_access_log();
  const Network net = cfg.make_network(stream.train_source(0).feature_dim);

  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(shared_config_hash(cfg)));
  log << "config_origin=" << raw.origin() << "\n";
  log << "method=" << method_name(cfg.method) << "\n";
  log << "shared_config_hash=" << hash_buf << "\n";
  log << "phases=" << stream.phases() << " eval_sets=" << stream.eval_sets()
      << " workers=" << workers << "\n";

  RunSummary summary;
  summary.out_dir = cfg.out_dir;
  std::vector<std::string> cov_rows, acct_rows;

  for (std::uint64_t seed : cfg.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedContext ctx{cfg,    stream,   net,
                    seed,   workers,  cfg.out_dir,
                    cfg.timing_real,  &summary.records,
                    &summary.forgetting, &cov_rows,
                    &acct_rows,       &log,
                    {}};
    switch (cfg.method) {
      case Method::kBomla:
        run_bomla_seed(ctx);
        break;
      case Method::kBomvi:
        run_bomvi_seed(ctx);
        break;
      default:
        run_baseline_seed(ctx);
        break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "seed=" << seed << " wall_s=" << format_double(secs) << "\n";
  }

  emit_metrics(summary.records, cfg.out_dir + "/metrics.csv");
  emit_forgetting(summary.forgetting, cfg.out_dir + "/forgetting.csv");
  {
    std::ofstream acct(cfg.out_dir + "/accounting.csv", std::ios::trunc);
    acct << "seed,phase,method,state_bytes,buffer_items,buffer_bytes\n";
    for (const auto& row : acct_rows) acct << row << '\n';
  }
  if (cfg.method == Method::kBomvi) {
    std::ofstream cov(cfg.out_dir + "/covariance_stats.csv", std::ios::trunc);
    cov << "seed,phase,layer,sigma2_mean,sigma2_min,sigma2_max\n";
    for (const auto& row : cov_rows) cov << row << '\n';
  }
  write_charts(cfg, stream, summary.records, cfg.out_dir);

  // Online-access audit: bomla/bomvi/maml_seq must never read a
  // dataset's training split outside its own phase.
  const StreamAccessLog* alog = stream.access_log();
  bool online_method = cfg.method == Method::kBomla || cfg.method == Method::kBomvi ||
                       cfg.method == Method::kMamlSeq;
  bool ok = true;
  for (int t = 0; t < stream.phases(); ++t)
    for (int d = 0; d < stream.phases(); ++d) {
      const long n = alog->train_reads(t, d);
      if (d != t && n > 0) {
        ok = false;
        log << "access seed=all train_phase=" << t + 1 << " data_phase=" << d + 1
            << " reads=" << n << "\n";
      }
    }
  if (online_method) {
    log << "access_audit=" << (ok ? "ok" : "VIOLATION") << "\n";
    if (!ok)
      throw DomainError("online method read a dataset outside its phase (see run.log)");
  } else {
    log << "access_audit=replay_method (earlier-phase reads are by design)\n";
  }
  return summary;
}

std::vector<RunSummary> run_sweep(const Config& raw, const std::string& param,
                                  const std::vector<double>& values) {
  if (values.empty()) throw InputError("sweep: no values given");
  const std::string key = param.find('.') != std::string::npos
                              ? param
                              : (param == "lambda" ? "bomla.lambda" : param);
  const std::string base_dir =
      raw.get_string("out_dir", ExperimentConfig{}.out_dir);
  const std::string tail = key.substr(key.find('.') + 1);
  std::vector<RunSummary> out;
  for (double v : values) {
    Config cfg = raw;
    char vbuf[32];
    std::snprintf(vbuf, sizeof(vbuf), "%g", v);
    cfg.set(key, vbuf);
    out.push_back(run_experiment(cfg, base_dir + "/" + tail + "_" + vbuf));
  }
  return out;
}

std::string inspect_checkpoint(const std::string& path) {
  const Checkpoint c = load_checkpoint(path);
  std::ostringstream os;
  os << "checkpoint: " << path << "\n";
  os << "kind: "
     << (c.kind == CheckpointKind::kParams ? "params"
                                           : c.kind == CheckpointKind::kBomla ? "bomla" : "bomvi")
     << "\n";
  os << "step: " << c.step << "\n";
  std::size_t total = 0;
  for (std::size_t l = 0; l < c.shapes.size(); ++l) {
    os << "layer " << l << ": " << c.shapes[l].first << " x " << c.shapes[l].second;
    total += static_cast<std::size_t>(c.shapes[l].first) * c.shapes[l].second;
    if (c.kind == CheckpointKind::kBomla)
      os << "  prior_diag=" << format_double(c.precision.layers[l].prior_diag)
         << " pairs=" << c.precision.layers[l].pairs.size();
    if (c.kind == CheckpointKind::kBomvi) {
      MeanFieldPosterior phi{c.mean, c.log_sigma};
      const auto stats = sigma_squared_stats(phi);
      os << "  sigma2_mean=" << format_double(stats[l].mean);
    }
    os << "\n";
  }
  os << "total parameters: " << total << "\n";
  return os.str();
}

std::string eval_checkpoint(const std::string& ckpt_path, const Config& stream_cfg) {
  const Checkpoint c = load_checkpoint(ckpt_path);
  const ExperimentConfig cfg = ExperimentConfig::from_config(stream_cfg);
  const TaskStream stream = build_stream(cfg);
  const Network net = cfg.make_network(stream.train_source(0).feature_dim);
  net.check_params(c.mean);
  const int workers = worker_count(cfg.workers);
  EvalConfig ec;
  ec.n_tasks = cfg.eval_tasks;
  ec.n_way = cfg.n_way;
  ec.k_shot = cfg.k_shot;
  ec.q_per_class = cfg.q_per_class;
  ec.inner = cfg.eval_inner;
  std::ostringstream os;
  os << "eval_dataset,acc_mean,acc_ci\n";
  for (int e = 0; e < stream.eval_sets(); ++e) {
    const EvalResult r = evaluate_stream(net, c.mean, stream, e, ec,
                                         seed_mix(cfg.seeds.front(), kTagEval), workers);
    os << e + 1 << ',' << format_double(r.acc_mean) << ',' << format_double(r.ci_half) << "\n";
  }
  return os.str();
}

}  // namespace boml
