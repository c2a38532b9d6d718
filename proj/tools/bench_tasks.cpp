// Compares the serial reference against the OpenMP task fan-out on a
// realistic meta-batch gradient workload and on the raw matrix kernels,
// and verifies the parallel results are bit-identical to serial.

#include <chrono>
#include <cstdio>

#include "boml/bomla.hpp"
#include "boml/maml.hpp"
#include "boml/parallel.hpp"

using namespace boml;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class Fn>
double time_ms(Fn&& fn, int reps) {
  fn();  // warm-up
  const double t0 = now_ms();
  for (int i = 0; i < reps; ++i) fn();
  return (now_ms() - t0) / reps;
}

}  // namespace

int main() {
  SyntheticShiftConfig scfg;
  scfg.domains = 1;
  const TaskStream stream = make_synthetic_stream(scfg, 1234);
  const Network net = Network::mlp(20, {32}, 5);
  const ParamSet params = net.init_params(99);
  const InnerLoopConfig inner{3, 0.4, false};

  MetaBatch batch;
  for (int m = 0; m < 16; ++m) batch.tasks.push_back(stream.sample_train(0, 5, 1, 15, 1000 + m));

  const int workers = worker_count();
  std::printf("meta-batch gradient, %zu tasks, k=%d\n", batch.tasks.size(), inner.k);

  LossGrad serial_lg, parallel_lg;
  const double t_serial =
      time_ms([&] { serial_lg = maml_grad(net, params, batch, inner, 1); }, 5);
  const double t_parallel =
      time_ms([&] { parallel_lg = maml_grad(net, params, batch, inner, workers); }, 5);

  bool identical = serial_lg.loss == parallel_lg.loss;
  for (std::size_t l = 0; identical && l < serial_lg.grad.layers.size(); ++l)
    identical = max_abs_diff(serial_lg.grad.layers[l], parallel_lg.grad.layers[l]) == 0.0;

  std::printf("  serial:   %8.2f ms\n", t_serial);
  std::printf("  %2d workers: %6.2f ms   speedup %.2fx   bit-identical: %s\n", workers,
              t_parallel, t_serial / t_parallel, identical ? "yes" : "NO");

  const DenseMatrix a = gaussian_matrix(384, 384, 1.0, 5);
  const DenseMatrix b = gaussian_matrix(384, 384, 1.0, 6);
  DenseMatrix cs, cp;
  const double m_serial = time_ms([&] { cs = matmul_serial(a, b); }, 10);
  const double m_parallel = time_ms([&] { cp = matmul(a, b); }, 10);
  std::printf("matmul 384x384\n");
  std::printf("  serial:   %8.3f ms\n", m_serial);
  std::printf("  parallel: %8.3f ms   speedup %.2fx   bit-identical: %s\n", m_parallel,
              m_serial / m_parallel, max_abs_diff(cs, cp) == 0.0 ? "yes" : "NO");

  const DenseMatrix ka = gaussian_matrix(24, 24, 1.0, 7);
  const DenseMatrix kb = gaussian_matrix(24, 24, 1.0, 8);
  DenseMatrix ks, kp;
  const double k_serial = time_ms([&] { ks = kron_serial(ka, kb); }, 10);
  const double k_parallel = time_ms([&] { kp = kron(ka, kb); }, 10);
  std::printf("kron 24x24 (x) 24x24\n");
  std::printf("  serial:   %8.3f ms\n", k_serial);
  std::printf("  parallel: %8.3f ms   speedup %.2fx   bit-identical: %s\n", k_parallel,
              k_serial / k_parallel, max_abs_diff(ks, kp) == 0.0 ? "yes" : "NO");

  return identical ? 0 : 1;
}
