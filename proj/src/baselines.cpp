#include "boml/baselines.hpp"

#include <cmath>

#include "boml/errors.hpp"
#include "boml/rng.hpp"

namespace boml {

int TaskBuffer::pick(std::uint64_t seed) const {
  if (items.empty()) throw CapacityError("task buffer is empty");
  auto eng = make_engine(seed);
  return items[eng() % items.size()];
}

std::size_t TaskBuffer::payload_bytes(const TaskStream& stream) const {
  std::size_t bytes = 0;
  for (int phase : items) {
    const DatasetSource& src = stream.train_source(phase);
    if (stream.mode == StreamMode::kSequentialDatasets) {
      for (int c : src.base_classes)
        bytes += src.examples[c].size() * src.feature_dim * sizeof(double);
    } else {
      for (int c : stream.task_groups[phase])
        bytes += src.examples[c].size() * src.feature_dim * sizeof(double);
    }
  }
  return bytes;
}

double RoundConfig::lr(int iter) const { return lr_at ? lr_at(iter) : adam.lr; }

void train_maml_iters(const Network& net, ParamSet& params, AdamState& state,
                      const TaskSampler& sample_fn, const RoundConfig& cfg,
                      const IterHook& hook) {
  for (int iter = 1; iter <= cfg.iters; ++iter) {
    MetaBatch batch;
    batch.tasks.reserve(cfg.meta_batch);
    for (int m = 0; m < cfg.meta_batch; ++m) batch.tasks.push_back(sample_fn(iter, m));
    const double loss =
        meta_step(net, params, batch, cfg.inner, state, cfg.adam, cfg.lr(iter), cfg.workers);
    if (!std::isfinite(loss))
      throw DomainError("train_maml_iters: non-finite loss at iteration " + std::to_string(iter));
    if (hook) hook(iter, loss, params);
  }
}

namespace {

// Task seeds are keyed by the dataset actually sampled from, so a round
// whose data policy degenerates to a single phase reproduces the plain
// sequential run bit for bit.
EpisodicTask draw_from_phase(const TaskStream& stream, int phase, int iter, int m,
                             const RoundConfig& cfg, std::uint64_t seed) {
  return stream.sample_train(phase, cfg.n_way, cfg.k_shot, cfg.q_per_class,
                             seed_mix(seed, kTagTask, phase + 1, iter, m));
}

}  // namespace

ParamSet toe_round(const Network& net, const TaskStream& stream, int round,
                   const RoundConfig& cfg, std::uint64_t seed, const IterHook& hook) {
  if (round < 1 || round > stream.phases()) throw InputError("toe_round: round out of range");
  ParamSet params = net.init_params(seed_mix(seed, round));
  AdamState state(params);
  // The dataset pick consumes its own stream so the per-phase task
  // sampling stays aligned with the other methods.
  const TaskSampler sampler = [&](int iter, int m) {
    const int phase =
        static_cast<int>(make_engine(seed_mix(seed, kTagPick, round, iter))() % round);
    return draw_from_phase(stream, phase, iter, m, cfg, seed);
  };
  train_maml_iters(net, params, state, sampler, cfg, hook);
  return params;
}

void seq_maml_round(const Network& net, ParamSet& params, AdamState& state,
                    const TaskStream& stream, int phase, const RoundConfig& cfg,
                    std::uint64_t seed, const IterHook& hook) {
  const TaskSampler sampler = [&](int iter, int m) {
    return draw_from_phase(stream, phase, iter, m, cfg, seed);
  };
  train_maml_iters(net, params, state, sampler, cfg, hook);
}

void ftml_round(const Network& net, ParamSet& params, AdamState& state, TaskBuffer& buffer,
                const TaskStream& stream, int new_phase, const RoundConfig& cfg,
                std::uint64_t seed, const IterHook& hook) {
  buffer.push(new_phase);
  const int round = static_cast<int>(buffer.size());
  const TaskSampler sampler = [&](int iter, int m) {
    const int phase = buffer.pick(seed_mix(seed, kTagPick, round, iter));
    return draw_from_phase(stream, phase, iter, m, cfg, seed);
  };
  train_maml_iters(net, params, state, sampler, cfg, hook);
}

}  // namespace boml
