#include "boml/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "boml/errors.hpp"

namespace boml {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_metrics(const std::vector<MetricRecord>& records, const std::string& path) {
  std::vector<MetricRecord> rows = records;
  std::stable_sort(rows.begin(), rows.end(), [](const MetricRecord& a, const MetricRecord& b) {
    if (a.seed != b.seed) return a.seed < b.seed;
    if (a.phase != b.phase) return a.phase < b.phase;
    if (a.step != b.step) return a.step < b.step;
    return a.eval_dataset < b.eval_dataset;
  });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write metrics file: " + path);
  out << "seed,method,phase,step,eval_dataset,acc_mean,acc_ci,loss,wall_ms\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << r.method << ',' << r.phase << ',' << r.step << ',' << r.eval_dataset
        << ',' << format_double(r.acc_mean) << ',' << format_double(r.acc_ci) << ','
        << format_double(r.loss) << ',' << format_double(r.wall_ms) << '\n';
  }
  if (!out) throw IngestionError("metrics write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string tok;
  while (std::getline(in, tok, ',')) fields.push_back(tok);
  return fields;
}

}  // namespace

std::vector<MetricRecord> parse_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "seed,method,phase,step,eval_dataset,acc_mean,acc_ci,loss,wall_ms")
    throw FormatError("bad metrics header in: " + path);
  std::vector<MetricRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw FormatError("bad metrics row in " + path + ": " + line);
    MetricRecord r;
    r.seed = std::stoull(f[0]);
    r.method = f[1];
    r.phase = std::stoi(f[2]);
    r.step = std::stoi(f[3]);
    r.eval_dataset = std::stoi(f[4]);
    r.acc_mean = std::stod(f[5]);
    r.acc_ci = std::stod(f[6]);
    r.loss = std::stod(f[7]);
    r.wall_ms = std::stod(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_forgetting(const std::vector<ForgettingCell>& cells, const std::string& path) {
  std::vector<ForgettingCell> rows = cells;
  std::stable_sort(rows.begin(), rows.end(), [](const ForgettingCell& a, const ForgettingCell& b) {
    if (a.seed != b.seed) return a.seed < b.seed;
    if (a.phase != b.phase) return a.phase < b.phase;
    return a.eval_dataset < b.eval_dataset;
  });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write forgetting file: " + path);
  out << "seed,phase,eval_dataset,acc_mean,acc_ci\n";
  for (const auto& r : rows)
    out << r.seed << ',' << r.phase << ',' << r.eval_dataset << ',' << format_double(r.acc_mean)
        << ',' << format_double(r.acc_ci) << '\n';
  if (!out) throw IngestionError("forgetting write failed: " + path);
}

std::vector<ForgettingCell> parse_forgetting(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open forgetting file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "seed,phase,eval_dataset,acc_mean,acc_ci")
    throw FormatError("bad forgetting header in: " + path);
  std::vector<ForgettingCell> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw FormatError("bad forgetting row in " + path + ": " + line);
    ForgettingCell c;
    c.seed = std::stoull(f[0]);
    c.phase = std::stoi(f[1]);
    c.eval_dataset = std::stoi(f[2]);
    c.acc_mean = std::stod(f[3]);
    c.acc_ci = std::stod(f[4]);
    out.push_back(c);
  }
  return out;
}

}  // namespace boml
