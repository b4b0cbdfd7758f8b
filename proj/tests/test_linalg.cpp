#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dmp/error.hpp"
#include "dmp/linalg.hpp"
#include "oracles.hpp"

using namespace dmp;

namespace {

double reconstruction_error(const Matrix& a, const ThinSvd& svd) {
  Matrix us = svd.u;
  for (std::size_t j = 0; j < svd.sigma.size(); ++j)
    for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= svd.sigma[j];
  return frobenius_norm(subtract(a, kernels::multiply_a_bt(us, svd.v)));
}

double orthonormality_defect(const Matrix& m) {
  const Matrix g = kernels::multiply_at_b(m, m);
  return max_abs(subtract(g, Matrix::identity(m.cols())));
}

}  // namespace

TEST_CASE("kernels: parallel and serial variants agree bitwise") {
  Rng rng(11);
  const Matrix a = oracle::random_matrix(17, 9, rng);
  const Matrix b = oracle::random_matrix(9, 23, rng);
  CHECK(kernels::multiply(a, b) == kernels::multiply_serial(a, b));
  CHECK(kernels::multiply_at_b(transpose(a), b) ==
        kernels::multiply_at_b_serial(transpose(a), b));
  CHECK(kernels::multiply_a_bt(a, transpose(b)) ==
        kernels::multiply_a_bt_serial(a, transpose(b)));
  const auto mean = std::vector<double>(17, 0.25);
  CHECK(kernels::scatter(a, mean) == kernels::scatter_serial(a, mean));
}

TEST_CASE("thin_svd: identity") {
  const ThinSvd svd = thin_svd(Matrix::identity(3), 3);
  for (double s : svd.sigma) CHECK(s == doctest::Approx(1.0));
  const Matrix uvt = kernels::multiply_a_bt(svd.u, svd.v);
  CHECK(max_abs(subtract(uvt, Matrix::identity(3))) < 1e-12);
}

TEST_CASE("thin_svd: diagonal with rank deficiency") {
  const Matrix a = Matrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 0}});
  const ThinSvd svd = thin_svd(a, 2);
  CHECK(svd.sigma[0] == doctest::Approx(3.0));
  CHECK(svd.sigma[1] == doctest::Approx(2.0));
}

TEST_CASE("thin_svd: random 6x4 reconstructs, cross-checked with Jacobi oracle") {
  Rng rng(42);
  const Matrix a = oracle::random_matrix(6, 4, rng);
  const ThinSvd svd = thin_svd(a, 4);
  CHECK(reconstruction_error(a, svd) < 1e-9);

  const auto ref = oracle::jacobi_svd(a);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(svd.sigma[i] == doctest::Approx(ref.sigma[i]).epsilon(1e-10));
}

TEST_CASE("thin_svd: orthonormal factors and descending order, many seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t d = 3 + rng.uniform_index(8);
    const std::size_t n = 3 + rng.uniform_index(8);
    const std::size_t r = 1 + rng.uniform_index(std::min(d, n));
    const Matrix a = oracle::random_matrix(d, n, rng);
    const ThinSvd svd = thin_svd(a, r);
    CHECK(orthonormality_defect(svd.u) < 1e-10);
    CHECK(orthonormality_defect(svd.v) < 1e-10);
    for (std::size_t i = 0; i + 1 < r; ++i) CHECK(svd.sigma[i] >= svd.sigma[i + 1]);
    CHECK(svd.sigma[r - 1] >= 0.0);
  }
}

TEST_CASE("thin_svd: sign convention makes output deterministic") {
  Rng rng(7);
  const Matrix a = oracle::random_matrix(5, 5, rng);
  const ThinSvd s1 = thin_svd(a, 3);
  const ThinSvd s2 = thin_svd(a, 3);
  CHECK(s1.u == s2.u);
  CHECK(s1.v == s2.v);
  for (std::size_t j = 0; j < 3; ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      if (std::fabs(s1.u(i, j)) > std::fabs(best)) best = s1.u(i, j);
    CHECK(best > 0.0);
  }
}

TEST_CASE("thin_svd: input validation") {
  Matrix bad(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(thin_svd(bad, 1), InvalidInputError);
  CHECK_THROWS_AS(thin_svd(Matrix::identity(2), 0), InvalidInputError);
  CHECK_THROWS_AS(thin_svd(Matrix::identity(2), 3), InvalidInputError);
}

TEST_CASE("thin_svd: degenerate gap flag") {
  CHECK(thin_svd(Matrix::identity(3), 2).degenerate);
  const Matrix gapped = Matrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  CHECK_FALSE(thin_svd(gapped, 2).degenerate);
  CHECK(thin_svd(Matrix(3, 3), 1).degenerate);
}

TEST_CASE("sym_eig: diagonal") {
  const SymEig e = sym_eig(Matrix::from_rows({{5, 0}, {0, 1}}));
  CHECK(e.eigenvalues[0] == doctest::Approx(5.0));
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(std::fabs(e.eigenvectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(e.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig: 2x2 against the characteristic polynomial") {
  // [[2,1],[1,2]]: trace 4, det 3, so lambda = 3 and 1.
  const SymEig e = sym_eig(Matrix::from_rows({{2, 1}, {1, 2}}));
  CHECK(e.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sym_eig: construct-then-decompose recovers the spectrum") {
  Rng rng(3);
  const std::size_t n = 6;
  const Matrix q = oracle::random_orthogonal(n, rng);
  std::vector<double> lam = {9, 6.5, 4, 2.5, 1, 0.25};
  Matrix scaled = q;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= lam[j];
  const Matrix c = kernels::multiply_a_bt(scaled, q);
  const SymEig e = sym_eig(c);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(e.eigenvalues[i] == doctest::Approx(lam[i]).epsilon(1e-10));

  // Reconstruction and orthonormality invariants.
  Matrix vs = e.eigenvectors;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) vs(i, j) *= e.eigenvalues[j];
  CHECK(frobenius_norm(subtract(c, kernels::multiply_a_bt(vs, e.eigenvectors))) <
        1e-8 * frobenius_norm(c));
  CHECK(orthonormality_defect(e.eigenvectors) < 1e-10);
}

TEST_CASE("sym_eig: eigenvalues invariant under orthogonal conjugation") {
  Rng rng(17);
  const std::size_t n = 5;
  const Matrix c = oracle::random_spd(n, rng);
  const Matrix q = oracle::random_orthogonal(n, rng);
  const Matrix rotated = kernels::multiply_a_bt(kernels::multiply(q, c), q);
  const SymEig e1 = sym_eig(c);
  const SymEig e2 = sym_eig(rotated);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::fabs(e1.eigenvalues[i] - e2.eigenvalues[i]) < 1e-9);
}

TEST_CASE("sym_eig: rejects asymmetric input") {
  CHECK_THROWS_AS(sym_eig(Matrix::from_rows({{1, 2}, {0, 1}})), InvalidInputError);
  CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), InvalidInputError);
}

TEST_CASE("matrix_log_spd: log of identity is zero") {
  const Matrix l = matrix_log_spd(Matrix::identity(4), 1e-12);
  CHECK(max_abs(l) < 1e-10);
}

TEST_CASE("matrix_log_spd: diagonal scalar logs") {
  const double e1 = std::exp(1.0), e2 = std::exp(2.0);
  const Matrix l = matrix_log_spd(Matrix::from_rows({{e1, 0}, {0, e2}}), 1e-14);
  CHECK(l(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(l(1, 1) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::fabs(l(0, 1)) < 1e-12);
}

TEST_CASE("matrix_log_spd: exp(log C) recovers C + eps I") {
  Rng rng(5);
  const double eps = 1e-6;
  const Matrix c = oracle::random_spd(5, rng);
  const Matrix back = oracle::matrix_exp(matrix_log_spd(c, eps));
  Matrix expect = c;
  for (std::size_t i = 0; i < 5; ++i) expect(i, i) += eps;
  CHECK(frobenius_norm(subtract(back, expect)) < 1e-8);
}

TEST_CASE("matrix_log_spd: domain errors") {
  CHECK_THROWS_AS(matrix_log_spd(Matrix::identity(2), 0.0), InvalidInputError);
  const Matrix negdef = Matrix::from_rows({{-2, 0}, {0, 1}});
  CHECK_THROWS_AS(matrix_log_spd(negdef, 1e-9), NumericalDomainError);
}

TEST_CASE("matrix_log_spd: log-distance invariant under joint rotation") {
  Rng rng(23);
  const std::size_t n = 4;
  const Matrix c1 = oracle::random_spd(n, rng);
  const Matrix c2 = oracle::random_spd(n, rng);
  const Matrix q = oracle::random_orthogonal(n, rng);
  const double eps = 1e-8;
  auto rot = [&](const Matrix& c) {
    return kernels::multiply_a_bt(kernels::multiply(q, c), q);
  };
  const double base =
      frobenius_norm(subtract(matrix_log_spd(c1, eps), matrix_log_spd(c2, eps)));
  const double rotated = frobenius_norm(
      subtract(matrix_log_spd(rot(c1), eps), matrix_log_spd(rot(c2), eps)));
  CHECK(std::fabs(base - rotated) < 1e-8);
}

TEST_CASE("thin_svd: large-dimension one-sided Jacobi path") {
  Rng rng(99);
  const Matrix a = oracle::random_matrix(80, 70, rng);
  const ThinSvd svd = thin_svd(a, 5);
  const auto ref = oracle::jacobi_svd(a);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(svd.sigma[i] == doctest::Approx(ref.sigma[i]).epsilon(1e-9));
  CHECK(orthonormality_defect(svd.u) < 1e-10);
  CHECK(orthonormality_defect(svd.v) < 1e-10);
}
