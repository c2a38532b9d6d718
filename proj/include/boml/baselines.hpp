#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "boml/episodic.hpp"
#include "boml/maml.hpp"

namespace boml {

// Append-only record of encountered stream phases (datasets or task
// groups), with uniform sampling for replay-style baselines.
struct TaskBuffer {
  std::vector<int> items;

  void push(int phase) { items.push_back(phase); }
  std::size_t size() const { return items.size(); }
  int pick(std::uint64_t seed) const;
  // Feature bytes retained by keeping these phases' training data.
  std::size_t payload_bytes(const TaskStream& stream) const;
};

struct RoundConfig {
  InnerLoopConfig inner;
  AdamConfig adam;
  int iters = 300;
  int n_way = 5;
  int k_shot = 1;
  int q_per_class = 15;
  int meta_batch = 8;
  int workers = 1;
  // Learning rate for a given 1-based iteration (schedules applied by
  // the harness).
  std::function<double(int)> lr_at;

  double lr(int iter) const;
};

// Called once per outer iteration with the in-progress parameters.
using IterHook = std::function<void(int iter, double loss, const ParamSet& params)>;

// Shared MAML training loop: every baseline differs only in where
// sample_fn draws its tasks from.
using TaskSampler = std::function<EpisodicTask(int iter, int m)>;
void train_maml_iters(const Network& net, ParamSet& params, AdamState& state,
                      const TaskSampler& sample_fn, const RoundConfig& cfg,
                      const IterHook& hook = nullptr);

// Train-On-Everything: fresh random initialization, then MAML where each
// meta-batch draws all its tasks from one uniformly chosen encountered
// dataset. Round indices are 1-based; round 1 matches a plain MAML run
// on phase 1 under the same seed.
ParamSet toe_round(const Network& net, const TaskStream& stream, int round,
                   const RoundConfig& cfg, std::uint64_t seed, const IterHook& hook = nullptr);

// Warm-started MAML on the newly arrived phase only.
void seq_maml_round(const Network& net, ParamSet& params, AdamState& state,
                    const TaskStream& stream, int phase, const RoundConfig& cfg,
                    std::uint64_t seed, const IterHook& hook = nullptr);

// Modified follow-the-meta-leader: appends the new phase to the buffer,
// then each meta-iteration samples a buffer item uniformly for the outer
// update. Evaluation follows the shared unseen-task protocol.
void ftml_round(const Network& net, ParamSet& params, AdamState& state, TaskBuffer& buffer,
                const TaskStream& stream, int new_phase, const RoundConfig& cfg,
                std::uint64_t seed, const IterHook& hook = nullptr);

}  // namespace boml
