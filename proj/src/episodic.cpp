#include "boml/episodic.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "boml/errors.hpp"
#include "boml/rng.hpp"

namespace boml {

namespace {

// Engine-modulo draw: self-contained so sampled episodes do not depend
// on the standard library's distribution internals.
int rand_below(std::mt19937_64& eng, int n) { return static_cast<int>(eng() % n); }

void fisher_yates(std::vector<int>& v, std::mt19937_64& eng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
    std::swap(v[i], v[rand_below(eng, i + 1)]);
}

}  // namespace

std::size_t DatasetSource::payload_bytes() const {
  std::size_t n = 0;
  for (const auto& cls : examples) n += cls.size() * feature_dim * sizeof(double);
  return n;
}

void DatasetSource::validate() const {
  for (int c : base_classes)
    for (int n : novel_classes)
      if (c == n) throw InputError("dataset: class " + std::to_string(c) + " in both pools");
  for (int c : base_classes)
    if (c < 0 || c >= class_count()) throw InputError("dataset: base class id out of range");
  for (int c : novel_classes)
    if (c < 0 || c >= class_count()) throw InputError("dataset: novel class id out of range");
}

EpisodicTask sample_task_from_classes(const DatasetSource& src, const std::vector<int>& classes,
                                      int n_way, int k_shot, int q_per_class,
                                      std::uint64_t seed) {
  if (n_way < 1 || k_shot < 1 || q_per_class < 1)
    throw InputError("sample_task: n_way, k_shot, q_per_class must be positive");
  if (static_cast<int>(classes.size()) < n_way)
    throw CapacityError("sample_task: pool has " + std::to_string(classes.size()) +
                        " classes, need " + std::to_string(n_way));

  auto eng = make_engine(seed_mix(seed, kTagTask, n_way, k_shot, q_per_class));
  std::vector<int> order = classes;
  fisher_yates(order, eng);
  order.resize(n_way);  // episode-local label = position in this list

  const int per_class = k_shot + q_per_class;
  EpisodicTask task;
  task.n_way = n_way;
  task.k_shot = k_shot;
  task.q_per_class = q_per_class;
  task.support_x = DenseMatrix(n_way * k_shot, src.feature_dim);
  task.query_x = DenseMatrix(n_way * q_per_class, src.feature_dim);

  for (int label = 0; label < n_way; ++label) {
    const auto& pool = src.examples[order[label]];
    if (static_cast<int>(pool.size()) < per_class)
      throw CapacityError("sample_task: class " + std::to_string(order[label]) + " has " +
                          std::to_string(pool.size()) + " examples, need " +
                          std::to_string(per_class));
    std::vector<int> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    fisher_yates(idx, eng);
    for (int s = 0; s < k_shot; ++s) {
      const int row = label * k_shot + s;
      for (int d = 0; d < src.feature_dim; ++d) task.support_x.at(row, d) = pool[idx[s]][d];
      task.support_y.push_back(label);
    }
    for (int q = 0; q < q_per_class; ++q) {
      const int row = label * q_per_class + q;
      for (int d = 0; d < src.feature_dim; ++d)
        task.query_x.at(row, d) = pool[idx[k_shot + q]][d];
      task.query_y.push_back(label);
    }
  }
  return task;
}

EpisodicTask sample_task(const DatasetSource& src, Split split, int n_way, int k_shot,
                         int q_per_class, std::uint64_t seed) {
  const auto& pool = split == Split::kBase ? src.base_classes : src.novel_classes;
  return sample_task_from_classes(src, pool, n_way, k_shot, q_per_class,
                                  seed_mix(seed, static_cast<std::uint64_t>(split) + 1));
}

void SyntheticShiftConfig::validate() const {
  if (domains < 1) throw InputError("stream config: domains must be >= 1");
  if (classes_per_domain < 1) throw InputError("stream config: classes_per_domain must be >= 1");
  if (base_classes < 1 || base_classes > classes_per_domain)
    throw InputError("stream config: base_classes must be in [1, classes_per_domain]");
  if (examples_per_class < 1) throw InputError("stream config: examples_per_class must be >= 1");
  if (feature_dim < 1) throw InputError("stream config: feature_dim must be >= 1");
  if (subspace_dim < 1 || subspace_dim > feature_dim)
    throw InputError("stream config: subspace_dim must be in [1, feature_dim]");
  if (noise_scale < 0.0 || prototype_dispersion < 0.0 || distractor_scale < 0.0)
    throw InputError("stream config: negative scale");
}

int TaskStream::phases() const {
  return mode == StreamMode::kSequentialDatasets ? static_cast<int>(sources.size())
                                                 : static_cast<int>(task_groups.size());
}

int TaskStream::eval_sets() const {
  return mode == StreamMode::kSequentialDatasets ? static_cast<int>(sources.size()) : 1;
}

const DatasetSource& TaskStream::train_source(int phase) const {
  if (phase < 0 || phase >= phases()) throw InputError("stream: phase out of range");
  return mode == StreamMode::kSequentialDatasets ? sources[phase] : sources[0];
}

void TaskStream::enable_access_log() const {
  log_ = std::make_shared<StreamAccessLog>();
  log_->phases = phases();
  log_->counts.assign(static_cast<std::size_t>(phases()) * phases(), 0);
}

void TaskStream::set_train_phase(int phase) const {
  if (log_) log_->current_train_phase = phase;
}

EpisodicTask TaskStream::sample_train(int phase, int n_way, int k_shot, int q_per_class,
                                      std::uint64_t seed) const {
  if (phase < 0 || phase >= phases()) throw InputError("stream: phase out of range");
  if (log_ && log_->current_train_phase >= 0)
    ++log_->counts[static_cast<std::size_t>(log_->current_train_phase) * log_->phases + phase];
  if (mode == StreamMode::kSequentialDatasets)
    return sample_task(sources[phase], Split::kBase, n_way, k_shot, q_per_class, seed);
  return sample_task_from_classes(sources[0], task_groups[phase], n_way, k_shot, q_per_class,
                                  seed);
}

EpisodicTask TaskStream::sample_eval(int eval_set, int n_way, int k_shot, int q_per_class,
                                     std::uint64_t seed) const {
  if (eval_set < 0 || eval_set >= eval_sets()) throw InputError("stream: eval set out of range");
  return sample_task(sources[mode == StreamMode::kSequentialDatasets ? eval_set : 0],
                     Split::kNovel, n_way, k_shot, q_per_class, seed);
}

TaskStream make_synthetic_stream(const SyntheticShiftConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TaskStream stream;
  stream.mode = StreamMode::kSequentialDatasets;
  for (int t = 0; t < cfg.domains; ++t) {
    DatasetSource src;
    src.name = "domain" + std::to_string(t + 1);
    src.feature_dim = cfg.feature_dim;
    const DenseMatrix rot =
        random_orthogonal(cfg.feature_dim, seed_mix(cfg.rotation_seed, kTagStream, t));
    for (int c = 0; c < cfg.classes_per_domain; ++c) {
      // Canonical prototypes are shared across domains; the domains
      // differ by their rotation (and the per-domain example noise).
      auto proto_eng = make_engine(seed_mix(seed, kTagStream, c));
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> proto(cfg.feature_dim, 0.0);
      for (int d = 0; d < cfg.subspace_dim; ++d)
        proto[d] = cfg.prototype_dispersion * gauss(proto_eng);
      auto eng = make_engine(seed_mix(seed, kTagStream, t, c, 1));
      std::vector<std::vector<double>> cls;
      for (int e = 0; e < cfg.examples_per_class; ++e) {
        std::vector<double> raw(cfg.feature_dim);
        for (int d = 0; d < cfg.feature_dim; ++d)
          raw[d] = d < cfg.subspace_dim ? proto[d] + cfg.noise_scale * gauss(eng)
                                        : cfg.distractor_scale * gauss(eng);
        std::vector<double> x(cfg.feature_dim, 0.0);
        for (int i = 0; i < cfg.feature_dim; ++i)
          for (int j = 0; j < cfg.feature_dim; ++j) x[i] += rot.at(i, j) * raw[j];
        cls.push_back(std::move(x));
      }
      src.examples.push_back(std::move(cls));
    }
    // Deterministic class-index split: first base_classes ids are base.
    for (int c = 0; c < cfg.classes_per_domain; ++c)
      (c < cfg.base_classes ? src.base_classes : src.novel_classes).push_back(c);
    src.validate();
    stream.sources.push_back(std::move(src));
  }
  return stream;
}

TaskStream split_sequential_tasks(const DatasetSource& src, int group_size, std::uint64_t seed) {
  if (group_size < 1) throw InputError("split_sequential_tasks: group_size must be >= 1");
  const int n = static_cast<int>(src.base_classes.size());
  if (group_size > n)
    throw CapacityError("split_sequential_tasks: group_size " + std::to_string(group_size) +
                        " exceeds " + std::to_string(n) + " base classes");
  auto eng = make_engine(seed_mix(seed, kTagStream, group_size));
  std::vector<int> order = src.base_classes;
  fisher_yates(order, eng);

  TaskStream stream;
  stream.mode = StreamMode::kSequentialTasks;
  stream.sources.push_back(src);
  const int groups = n / group_size;
  for (int g = 0; g < groups; ++g) {
    const int begin = g * group_size;
    // Remainder classes join the final group so the groups partition
    // the base pool.
    const int end = g + 1 == groups ? n : begin + group_size;
    stream.task_groups.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return stream;
}

}  // namespace boml
