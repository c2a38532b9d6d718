#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boml/baselines.hpp"
#include "boml/bomla.hpp"
#include "boml/bomvi.hpp"
#include "boml/config.hpp"
#include "boml/metrics.hpp"

namespace boml {

enum class Method { kBomla, kBomvi, kMamlSeq, kToe, kFtml };

Method parse_method(const std::string& name);
std::string method_name(Method m);

// Full experiment settings resolved from a Config (with the desk-scale
// defaults, or the paper-scale preset).
struct ExperimentConfig {
  Method method = Method::kBomla;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int iters_per_phase = 300;
  int eval_every = 25;
  int eval_tasks = 50;
  std::string out_dir = "runs/out";
  int workers = 0;  // 0 = BOML_WORKERS env var or OpenMP default
  bool timing_real = false;

  std::vector<int> hidden{32};
  Activation activation = Activation::kRelu;

  int n_way = 5;
  int k_shot = 1;
  int q_per_class = 15;
  int meta_batch = 8;
  InnerLoopConfig inner{1, 0.4, false};
  InnerLoopConfig eval_inner{3, 0.4, false};

  AdamConfig adam;
  double decay_factor = 1.0;
  int decay_every = 0;
  bool decay_halfway = false;

  StreamMode stream_mode = StreamMode::kSequentialDatasets;
  std::uint64_t stream_seed = 1234;
  SyntheticShiftConfig synth;
  int group_size = 5;
  std::string image_root;
  int image_side = 16;
  int image_base_classes = 0;

  BomlaConfig bomla;
  BomviConfig bomvi;
  double bomvi_prior_log_sigma = 0.0;

  static ExperimentConfig from_config(const Config& cfg);
  Network make_network(int input_dim) const;
  double lr_at(int iter) const;
};

TaskStream build_stream(const ExperimentConfig& cfg);

struct RunSummary {
  std::string out_dir;
  std::vector<MetricRecord> records;
  std::vector<ForgettingCell> forgetting;
};

// Executes the full sequential loop for every seed and writes
// metrics.csv, forgetting.csv, covariance_stats.csv (bomvi),
// accounting.csv, per-phase posterior checkpoints, per-eval-set SVG
// charts, and run.log under the output directory.
RunSummary run_experiment(const Config& raw, const std::string& out_dir_override = "");

// One run per value of the swept parameter, each in its own
// subdirectory ("<key tail>_<value>"). Bare "lambda" means
// "bomla.lambda".
std::vector<RunSummary> run_sweep(const Config& raw, const std::string& param,
                                  const std::vector<double>& values);

// CLI helpers.
std::string inspect_checkpoint(const std::string& path);
std::string eval_checkpoint(const std::string& ckpt_path, const Config& stream_cfg);

}  // namespace boml
