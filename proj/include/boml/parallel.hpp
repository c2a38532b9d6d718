#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace boml {

// Worker count: explicit request > BOML_WORKERS env var > OpenMP default.
inline int worker_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BOML_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Fan a per-index job out over OpenMP threads. Every index writes only
// its own slots, so results are identical to the serial loop for any
// worker count; reductions over the outputs stay ordered at the caller.
// Exceptions are captured and rethrown after the region (the first one
// in index order wins).
template <class Fn>
void task_map(int n, int workers, Fn&& fn) {
  if (workers != 1) {
#ifdef _OPENMP
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count(workers))
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
#endif
  }
  for (int i = 0; i < n; ++i) fn(i);
}

// Serial reference for task_map, kept for the parity tests and the
// benchmark target.
template <class Fn>
void task_map_serial(int n, Fn&& fn) {
  for (int i = 0; i < n; ++i) fn(i);
}

// Pairwise tree sum: deterministic and exact for power-of-two counts of
// identical addends (mean over duplicated tasks stays bit-equal to the
// single-task value).
inline double tree_sum(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::vector<double> cur = v;
  while (cur.size() > 1) {
    std::vector<double> next((cur.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next[i / 2] = cur[i] + cur[i + 1];
    if (cur.size() % 2 == 1) next.back() = cur.back();
    cur = std::move(next);
  }
  return cur[0];
}

}  // namespace boml
