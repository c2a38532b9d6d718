#include "boml/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "boml/rng.hpp"

namespace boml {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

// Row-partitioned parallelism keeps each output entry on one thread, so
// the result is bit-identical to the serial kernel.
constexpr long kParallelFlops = 1L << 17;

}  // namespace

DenseMatrix::DenseMatrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw DimensionError("DenseMatrix: negative dimension");
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  DenseMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows(); ++r) {
    require(rows[r].size() == rows[0].size(), "from_rows: ragged rows");
    for (int c = 0; c < m.cols(); ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

static void matmul_rows(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c,
                        int r0, int r1) {
  const int n = a.cols();
  const int bc = b.cols();
  for (int i = r0; i < r1; ++i) {
    double* crow = c.data() + static_cast<std::size_t>(i) * bc;
    const double* arow = a.data() + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.data() + static_cast<std::size_t>(k) * bc;
      for (int j = 0; j < bc; ++j) crow[j] += av * brow[j];
    }
  }
}

DenseMatrix matmul_serial(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
  DenseMatrix c(a.rows(), b.cols());
  matmul_rows(a, b, c, 0, a.rows());
  return c;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
  DenseMatrix c(a.rows(), b.cols());
  const long flops = static_cast<long>(a.rows()) * a.cols() * b.cols();
  if (flops >= kParallelFlops) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i) matmul_rows(a, b, c, i, i + 1);
  } else {
    matmul_rows(a, b, c, 0, a.rows());
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "add: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] += b.raw()[i];
  return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "sub: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] -= b.raw()[i];
  return c;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "hadamard: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] *= b.raw()[i];
  return c;
}

DenseMatrix scale(const DenseMatrix& a, double c) {
  DenseMatrix m = a;
  for (double& v : m.raw()) v *= c;
  return m;
}

void add_in_place(DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "add_in_place: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] += b.raw()[i];
}

void axpy_in_place(DenseMatrix& a, double c, const DenseMatrix& b) {
  require(a.same_shape(b), "axpy_in_place: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] += c * b.raw()[i];
}

void scale_in_place(DenseMatrix& a, double c) {
  for (double& v : a.raw()) v *= c;
}

static void kron_rows(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& k,
                      int i0, int i1) {
  const int br = b.rows();
  const int bc = b.cols();
  for (int i = i0; i < i1; ++i) {
    for (int r = 0; r < br; ++r) {
      double* out = k.data() + (static_cast<std::size_t>(i) * br + r) * k.cols();
      for (int j = 0; j < a.cols(); ++j) {
        const double av = a.at(i, j);
        const double* bin = b.data() + static_cast<std::size_t>(r) * bc;
        double* cell = out + static_cast<std::size_t>(j) * bc;
        for (int c = 0; c < bc; ++c) cell[c] = av * bin[c];
      }
    }
  }
}

DenseMatrix kron_serial(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  kron_rows(a, b, k, 0, a.rows());
  return k;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  if (k.size() >= static_cast<std::size_t>(kParallelFlops)) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i) kron_rows(a, b, k, i, i + 1);
  } else {
    kron_rows(a, b, k, 0, a.rows());
  }
  return k;
}

std::vector<double> vec_col(const DenseMatrix& a) {
  std::vector<double> v(a.size());
  std::size_t idx = 0;
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < a.rows(); ++i) v[idx++] = a.at(i, j);
  return v;
}

DenseMatrix unvec_col(const std::vector<double>& v, int rows, int cols) {
  require(v.size() == static_cast<std::size_t>(rows) * cols, "unvec_col: length mismatch");
  DenseMatrix m(rows, cols);
  std::size_t idx = 0;
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m.at(i, j) = v[idx++];
  return m;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.raw()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.raw()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
  return m;
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.raw()[i] * b.raw()[i];
  return s;
}

bool all_finite(const DenseMatrix& a) {
  for (double v : a.raw())
    if (!std::isfinite(v)) return false;
  return true;
}

DenseMatrix symmetrize(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "symmetrize: not square");
  DenseMatrix s(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s.at(i, j) = 0.5 * (a.at(i, j) + a.at(j, i));
  return s;
}

namespace {

// Householder reduction of a symmetric matrix to tridiagonal form,
// followed by implicit-shift QL. Classic tred2/tqli pair; `vectors`
// may be null when only eigenvalues are wanted.
void tridiagonalize(DenseMatrix& a, std::vector<double>& d, std::vector<double>& e,
                    bool want_vectors) {
  const int n = a.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i > 0; --i) {
    const int l = i - 1;
    double h = 0.0, sc = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) sc += std::abs(a.at(i, k));
      if (sc == 0.0) {
        e[i] = a.at(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          a.at(i, k) /= sc;
          h += a.at(i, k) * a.at(i, k);
        }
        double f = a.at(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = sc * g;
        h -= f * g;
        a.at(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          if (want_vectors) a.at(j, i) = a.at(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += a.at(j, k) * a.at(i, k);
          for (int k = j + 1; k <= l; ++k) g += a.at(k, j) * a.at(i, k);
          e[j] = g / h;
          f += e[j] * a.at(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = a.at(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) a.at(j, k) -= f * e[k] + g * a.at(i, k);
        }
      }
    } else {
      e[i] = a.at(i, l);
    }
    d[i] = h;
  }
  if (want_vectors) d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (want_vectors) {
      const int l = i - 1;
      if (d[i] != 0.0) {
        for (int j = 0; j <= l; ++j) {
          double g = 0.0;
          for (int k = 0; k <= l; ++k) g += a.at(i, k) * a.at(k, j);
          for (int k = 0; k <= l; ++k) a.at(k, j) -= g * a.at(k, i);
        }
      }
      d[i] = a.at(i, i);
      a.at(i, i) = 1.0;
      for (int j = 0; j <= l; ++j) a.at(j, i) = a.at(i, j) = 0.0;
    } else {
      d[i] = a.at(i, i);
    }
  }
}

double hypot2(double a, double b) { return std::sqrt(a * a + b * b); }

void ql_implicit(std::vector<double>& d, std::vector<double>& e, DenseMatrix* z) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 2.22e-16 * dd) break;
      }
      if (m != l) {
        if (++iter == 50) throw DomainError("sym_eigen: QL failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot2(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = hypot2(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z != nullptr) {
            for (int k = 0; k < z->rows(); ++k) {
              f = z->at(k, i + 1);
              z->at(k, i + 1) = s * z->at(k, i) + c * f;
              z->at(k, i) = c * z->at(k, i) - s * f;
            }
          }
        }
        if (r == 0.0 && m - 1 >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

std::vector<double> sym_eigenvalues(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "sym_eigenvalues: not square");
  if (a.rows() == 0) return {};
  DenseMatrix work = a;
  std::vector<double> d, e;
  tridiagonalize(work, d, e, /*want_vectors=*/false);
  ql_implicit(d, e, nullptr);
  std::sort(d.begin(), d.end());
  return d;
}

std::vector<double> sym_eigen(const DenseMatrix& a, DenseMatrix& vectors) {
  require(a.rows() == a.cols(), "sym_eigen: not square");
  vectors = a;
  std::vector<double> d, e;
  tridiagonalize(vectors, d, e, /*want_vectors=*/true);
  ql_implicit(d, e, &vectors);
  // Sort eigenpairs ascending by eigenvalue.
  const int n = a.rows();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return d[x] < d[y]; });
  DenseMatrix sorted(n, n);
  std::vector<double> ds(n);
  for (int j = 0; j < n; ++j) {
    ds[j] = d[order[j]];
    for (int i = 0; i < n; ++i) sorted.at(i, j) = vectors.at(i, order[j]);
  }
  vectors = std::move(sorted);
  return ds;
}

double min_eigenvalue_sym(const DenseMatrix& a) {
  const auto ev = sym_eigenvalues(a);
  return ev.empty() ? 0.0 : ev.front();
}

DenseMatrix gaussian_matrix(int rows, int cols, double stddev, std::uint64_t seed) {
  DenseMatrix m(rows, cols);
  auto eng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : m.raw()) v = stddev * dist(eng);
  return m;
}

DenseMatrix random_orthogonal(int n, std::uint64_t seed) {
  DenseMatrix q = gaussian_matrix(n, n, 1.0, seed);
  // Modified Gram-Schmidt over columns, one re-orthogonalization pass.
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < j; ++k) {
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += q.at(i, k) * q.at(i, j);
        for (int i = 0; i < n; ++i) q.at(i, j) -= proj * q.at(i, k);
      }
      double nrm = 0.0;
      for (int i = 0; i < n; ++i) nrm += q.at(i, j) * q.at(i, j);
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) throw DomainError("random_orthogonal: degenerate draw");
      for (int i = 0; i < n; ++i) q.at(i, j) /= nrm;
    }
  }
  return q;
}

}  // namespace boml
