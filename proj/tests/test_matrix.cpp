#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "boml/matrix.hpp"

using namespace boml;

TEST_CASE("matmul matches a hand-rolled triple loop") {
  const DenseMatrix a = gaussian_matrix(7, 5, 1.0, 11);
  const DenseMatrix b = gaussian_matrix(5, 9, 1.0, 12);
  const DenseMatrix c = matmul(a, b);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 9; ++j) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(4, 2)), DimensionError);
}

TEST_CASE("parallel kernels are bit-identical to serial references") {
  const DenseMatrix a = gaussian_matrix(160, 170, 1.0, 1);
  const DenseMatrix b = gaussian_matrix(170, 150, 1.0, 2);
  CHECK(max_abs_diff(matmul(a, b), matmul_serial(a, b)) == 0.0);

  const DenseMatrix ka = gaussian_matrix(23, 21, 1.0, 3);
  const DenseMatrix kb = gaussian_matrix(19, 22, 1.0, 4);
  CHECK(max_abs_diff(kron(ka, kb), kron_serial(ka, kb)) == 0.0);
}

TEST_CASE("kron identity: (A (x) G) vec(X) = vec(G X A^T)") {
  const DenseMatrix a = gaussian_matrix(6, 6, 1.0, 21);  // input side
  const DenseMatrix g = gaussian_matrix(4, 4, 1.0, 22);  // output side
  const DenseMatrix x = gaussian_matrix(4, 6, 1.0, 23);  // out x in weight layout
  const auto vx = vec_col(x);
  const DenseMatrix big = kron(a, g);
  std::vector<double> lhs(vx.size(), 0.0);
  for (int i = 0; i < big.rows(); ++i)
    for (int j = 0; j < big.cols(); ++j) lhs[i] += big.at(i, j) * vx[j];
  const auto rhs = vec_col(matmul(matmul(g, x), transpose(a)));
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-12);
}

TEST_CASE("vec_col round-trips") {
  const DenseMatrix x = gaussian_matrix(5, 7, 1.0, 31);
  const DenseMatrix y = unvec_col(vec_col(x), 5, 7);
  CHECK(max_abs_diff(x, y) == 0.0);
}

TEST_CASE("symmetric eigensolver reproduces known spectra") {
  DenseMatrix m(2, 2);
  m.at(0, 0) = 2.0;
  m.at(1, 1) = 2.0;
  m.at(0, 1) = m.at(1, 0) = 1.0;
  const auto ev = sym_eigenvalues(m);
  CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));

  // diag(1..5) under an orthogonal change of basis
  const DenseMatrix q = random_orthogonal(5, 77);
  DenseMatrix d(5, 5);
  for (int i = 0; i < 5; ++i) d.at(i, i) = i + 1.0;
  const auto ev2 = sym_eigenvalues(matmul(matmul(q, d), transpose(q)));
  for (int i = 0; i < 5; ++i) CHECK(ev2[i] == doctest::Approx(i + 1.0).epsilon(1e-10));
}

TEST_CASE("eigenpairs satisfy A v = lambda v") {
  const DenseMatrix a = gaussian_matrix(40, 40, 1.0, 5);
  const DenseMatrix s = symmetrize(matmul(a, transpose(a)));
  DenseMatrix v;
  const auto ev = sym_eigen(s, v);
  CHECK(ev.front() >= -1e-10);  // Gram matrix is PSD
  double worst = 0.0;
  for (int j = 0; j < s.rows(); ++j)
    for (int i = 0; i < s.rows(); ++i) {
      double sv = 0.0;
      for (int k = 0; k < s.rows(); ++k) sv += s.at(i, k) * v.at(k, j);
      worst = std::max(worst, std::abs(sv - ev[j] * v.at(i, j)));
    }
  CHECK(worst <= 1e-9 * max_abs(s) * s.rows());
}

TEST_CASE("random_orthogonal produces orthonormal columns") {
  const int n = 20;
  const DenseMatrix q = random_orthogonal(n, 99);
  const DenseMatrix qtq = matmul(transpose(q), q);
  CHECK(max_abs_diff(qtq, DenseMatrix::identity(n)) <= 1e-12);
}

TEST_CASE("gaussian_matrix is reproducible per seed") {
  CHECK(max_abs_diff(gaussian_matrix(4, 4, 1.0, 8), gaussian_matrix(4, 4, 1.0, 8)) == 0.0);
  CHECK(max_abs_diff(gaussian_matrix(4, 4, 1.0, 8), gaussian_matrix(4, 4, 1.0, 9)) > 0.0);
}
