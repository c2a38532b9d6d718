#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "boml/errors.hpp"

namespace boml {

// Row-major dense matrix of doubles. Small and value-semantic; all the
// heavy per-task state in this project is built out of these.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator()(int r, int c) { return at(r, c); }
  double operator()(int r, int c) const { return at(r, c); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  static DenseMatrix identity(int n);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Kernels. matmul dispatches to an OpenMP row-partitioned path above a
// size cutoff; matmul_serial is the reference kept for testing and the
// benchmark target. Both produce bit-identical output (each entry is
// computed by one thread with the same inner-loop order).
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_serial(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double c);
void add_in_place(DenseMatrix& a, const DenseMatrix& b);
void axpy_in_place(DenseMatrix& a, double c, const DenseMatrix& b);  // a += c*b
void scale_in_place(DenseMatrix& a, double c);

// Kronecker product with the standard block layout:
// (a (x) b)[i*b.rows+r, j*b.cols+c] = a(i,j) * b(r,c).
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix kron_serial(const DenseMatrix& a, const DenseMatrix& b);

// Column-stacking vectorization and its inverse.
std::vector<double> vec_col(const DenseMatrix& a);
DenseMatrix unvec_col(const std::vector<double>& v, int rows, int cols);

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double dot(const DenseMatrix& a, const DenseMatrix& b);
bool all_finite(const DenseMatrix& a);

// Eigenvalues of a symmetric matrix, ascending. Householder
// tridiagonalization followed by implicit-shift QL. `sym_eigen` also
// returns eigenvectors as columns of `vectors`.
std::vector<double> sym_eigenvalues(const DenseMatrix& a);
std::vector<double> sym_eigen(const DenseMatrix& a, DenseMatrix& vectors);
double min_eigenvalue_sym(const DenseMatrix& a);

DenseMatrix symmetrize(const DenseMatrix& a);  // (a + a^T)/2

// Random fills. Entries are drawn in row-major order from the engine so
// results are reproducible for a given seed.
DenseMatrix gaussian_matrix(int rows, int cols, double stddev, std::uint64_t seed);
// Orthonormal matrix from modified Gram-Schmidt on a Gaussian draw.
DenseMatrix random_orthogonal(int n, std::uint64_t seed);

}  // namespace boml
