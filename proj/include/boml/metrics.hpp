#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace boml {

// One meta-evaluation event.
struct MetricRecord {
  std::uint64_t seed = 0;
  std::string method;
  int phase = 0;         // 1-based training phase
  int step = 0;          // global outer iteration at the checkpoint
  int eval_dataset = 0;  // 1-based evaluation pool index
  double acc_mean = 0.0;
  double acc_ci = 0.0;
  double loss = 0.0;
  double wall_ms = 0.0;

  bool operator==(const MetricRecord&) const = default;
};

// Schema: seed,method,phase,step,eval_dataset,acc_mean,acc_ci,loss,wall_ms.
// Rows are emitted sorted by (seed, phase, step, eval_dataset); doubles
// round-trip exactly.
void emit_metrics(const std::vector<MetricRecord>& records, const std::string& path);
std::vector<MetricRecord> parse_metrics(const std::string& path);

// Phase-end forgetting matrix rows:
// seed,phase,eval_dataset,acc_mean,acc_ci.
struct ForgettingCell {
  std::uint64_t seed = 0;
  int phase = 0;
  int eval_dataset = 0;
  double acc_mean = 0.0;
  double acc_ci = 0.0;
};
void emit_forgetting(const std::vector<ForgettingCell>& cells, const std::string& path);
std::vector<ForgettingCell> parse_forgetting(const std::string& path);

std::string format_double(double v);

}  // namespace boml
