#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "boml/matrix.hpp"

namespace boml {

// One N-way K-shot episode. Labels are episode-local (0..n_way-1);
// support and query rows are grouped by class in label order.
struct EpisodicTask {
  DenseMatrix support_x;
  std::vector<int> support_y;
  DenseMatrix query_x;
  std::vector<int> query_y;
  int n_way = 0;
  int k_shot = 0;
  int q_per_class = 0;
};

// Immutable labeled example store with disjoint base/novel class pools.
struct DatasetSource {
  std::string name;
  int feature_dim = 0;
  std::vector<std::vector<std::vector<double>>> examples;  // [class][idx][dim]
  std::vector<int> base_classes;
  std::vector<int> novel_classes;

  int class_count() const { return static_cast<int>(examples.size()); }
  std::size_t payload_bytes() const;
  void validate() const;
};

enum class Split { kBase, kNovel };

EpisodicTask sample_task(const DatasetSource& src, Split split, int n_way, int k_shot,
                         int q_per_class, std::uint64_t seed);
// Same protocol restricted to an explicit class pool (sequential-task
// phases draw from their own disjoint group).
EpisodicTask sample_task_from_classes(const DatasetSource& src, const std::vector<int>& classes,
                                      int n_way, int k_shot, int q_per_class, std::uint64_t seed);

// Synthetic stand-in for a sequence of few-shot datasets: Gaussian
// class-prototype mixtures pushed through a per-domain random orthogonal
// rotation. Prototypes live in a low-dimensional subspace with
// distractor noise filling the remaining coordinates; the rotation moves
// that informative subspace, so each domain rewards domain-specific
// features and the shift between domains is genuine.
struct SyntheticShiftConfig {
  int domains = 2;
  int classes_per_domain = 20;
  int base_classes = 12;  // remaining classes form the novel pool
  int examples_per_class = 40;
  int feature_dim = 20;
  int subspace_dim = 4;  // informative coordinates before rotation
  double prototype_dispersion = 1.0;
  double noise_scale = 0.3;        // within-class, informative coordinates
  double distractor_scale = 1.0;   // isotropic noise on the remaining coordinates
  std::uint64_t rotation_seed = 7;

  void validate() const;
};

enum class StreamMode { kSequentialDatasets, kSequentialTasks };

// Records which phases' training data were read while which phase was
// being trained; the harness asserts that online methods never touch an
// earlier dataset after its phase completes.
struct StreamAccessLog {
  int phases = 0;
  int current_train_phase = -1;
  std::vector<long> counts;  // [train_phase * phases + data_phase]

  long train_reads(int train_phase, int data_phase) const {
    return counts[static_cast<std::size_t>(train_phase) * phases + data_phase];
  }
};

// Ordered source of meta-training phases. In dataset mode each phase is
// its own DatasetSource; in task mode the phases are disjoint class
// groups carved out of a single source's base pool.
struct TaskStream {
  StreamMode mode = StreamMode::kSequentialDatasets;
  std::vector<DatasetSource> sources;
  std::vector<std::vector<int>> task_groups;  // task mode only

  int phases() const;
  // Number of distinct meta-evaluation pools (columns of the forgetting
  // matrix): one per dataset, or one total in task mode.
  int eval_sets() const;

  EpisodicTask sample_train(int phase, int n_way, int k_shot, int q_per_class,
                            std::uint64_t seed) const;
  EpisodicTask sample_eval(int eval_set, int n_way, int k_shot, int q_per_class,
                           std::uint64_t seed) const;
  const DatasetSource& train_source(int phase) const;

  // Access-logging wrapper state; sampling is serial during batch
  // construction, so plain counters suffice.
  void enable_access_log() const;
  void set_train_phase(int phase) const;
  const StreamAccessLog* access_log() const { return log_.get(); }

 private:
  mutable std::shared_ptr<StreamAccessLog> log_;
};

TaskStream make_synthetic_stream(const SyntheticShiftConfig& cfg, std::uint64_t seed);
TaskStream split_sequential_tasks(const DatasetSource& src, int group_size, std::uint64_t seed);

// Directory-per-class grayscale PNG ingestion: root/<class_name>/*.png.
// Images are resized to side x side (bilinear), scaled to [0,1] with ink
// mapped to 1 (255 - value), and flattened row-major. Classes are sorted
// by name; the first base_count classes form the base pool (0 = all).
DatasetSource load_image_dir(const std::string& root, int side, int base_count = 0);

}  // namespace boml
