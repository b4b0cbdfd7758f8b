#pragma once

// Test-side reference implementations, kept independent of the library
// paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "dmp/matrix.hpp"
#include "dmp/rng.hpp"

namespace oracle {

using dmp::Matrix;

struct SvdResult {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

/// Plain Hestenes one-sided Jacobi SVD, written directly from the rotation
/// recurrences. Descending order, no sign convention.
inline SvdResult jacobi_svd(Matrix a) {
  const std::size_t d = a.rows(), n = a.cols();
  const bool flipped = d < n;
  if (flipped) a = dmp::transpose(a);
  const std::size_t rows = a.rows(), cols = a.cols();
  Matrix v = Matrix::identity(cols);
  for (int sweep = 0; sweep < 128; ++sweep) {
    bool changed = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double app = 0, aqq = 0, apq = 0;
        for (std::size_t i = 0; i < rows; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (std::fabs(apq) < 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
        changed = true;
        const double tau = (aqq - app) / (2 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1 + tau * tau));
        const double c = 1 / std::sqrt(1 + t * t), s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double x = a(i, p), y = a(i, q);
          a(i, p) = c * x - s * y;
          a(i, q) = s * x + c * y;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          const double x = v(i, p), y = v(i, q);
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    }
    if (!changed) break;
  }
  SvdResult res;
  res.sigma.resize(cols);
  res.u = Matrix(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double nrm = 0;
    for (std::size_t i = 0; i < rows; ++i) nrm += a(i, j) * a(i, j);
    nrm = std::sqrt(nrm);
    res.sigma[j] = nrm;
    if (nrm > 0)
      for (std::size_t i = 0; i < rows; ++i) res.u(i, j) = a(i, j) / nrm;
  }
  res.v = v;
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return res.sigma[x] > res.sigma[y]; });
  SvdResult sorted;
  sorted.sigma.resize(cols);
  sorted.u = Matrix(rows, cols);
  sorted.v = Matrix(cols, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    sorted.sigma[j] = res.sigma[order[j]];
    for (std::size_t i = 0; i < rows; ++i) sorted.u(i, j) = res.u(i, order[j]);
    for (std::size_t i = 0; i < cols; ++i) sorted.v(i, j) = res.v(i, order[j]);
  }
  if (flipped) std::swap(sorted.u, sorted.v);
  return sorted;
}

/// exp(A) by scaling-and-squaring with a Taylor series.
inline Matrix matrix_exp(const Matrix& a) {
  const std::size_t n = a.rows();
  int squarings = 0;
  double nrm = dmp::max_abs(a);
  Matrix scaled = a;
  while (nrm > 0.5) {
    dmp::scale_in_place(scaled, 0.5);
    nrm *= 0.5;
    ++squarings;
  }
  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 24; ++k) {
    term = dmp::kernels::multiply_serial(term, scaled);
    dmp::scale_in_place(term, 1.0 / k);
    dmp::add_in_place(result, term);
  }
  for (int k = 0; k < squarings; ++k)
    result = dmp::kernels::multiply_serial(result, result);
  return result;
}

/// Naive double-loop covariance.
inline Matrix covariance_naive(const Matrix& h, const std::vector<double>& mean) {
  const std::size_t d = h.rows(), n = h.cols();
  Matrix c(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0;
      for (std::size_t q = 0; q < n; ++q)
        acc += (h(i, q) - mean[i]) * (h(j, q) - mean[j]);
      c(i, j) = acc / (n - 1);
    }
  return c;
}

/// Central finite differences of a scalar function over a matrix argument.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f,
                                const Matrix& at, double step = 1e-5) {
  Matrix grad(at.rows(), at.cols());
  Matrix work = at;
  for (std::size_t i = 0; i < at.rows(); ++i) {
    for (std::size_t j = 0; j < at.cols(); ++j) {
      const double orig = work(i, j);
      work(i, j) = orig + step;
      const double up = f(work);
      work(i, j) = orig - step;
      const double dn = f(work);
      work(i, j) = orig;
      grad(i, j) = (up - dn) / (2 * step);
    }
  }
  return grad;
}

/// Worst relative disagreement between two gradients; small entries compare
/// against an absolute floor so that FD noise cannot dominate.
inline double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    const double denom = std::max({std::fabs(x), std::fabs(y), floor});
    worst = std::max(worst, std::fabs(x - y) / denom);
  }
  return worst;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, dmp::Rng& rng,
                            double scale = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian sample.
inline Matrix random_orthogonal(std::size_t n, dmp::Rng& rng) {
  Matrix g = random_matrix(n, n, rng);
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> v = g.col(j);
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0;
      for (std::size_t i = 0; i < n; ++i) proj += v[i] * q(i, p);
      for (std::size_t i = 0; i < n; ++i) v[i] -= proj * q(i, p);
    }
    const double nrm = dmp::norm2(v);
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / nrm;
  }
  return q;
}

/// Random symmetric positive definite matrix with the given spectrum floor.
inline Matrix random_spd(std::size_t n, dmp::Rng& rng, double lam_min = 0.1) {
  const Matrix q = random_orthogonal(n, rng);
  Matrix scaled = q;
  for (std::size_t j = 0; j < n; ++j) {
    const double lam = lam_min + rng.uniform(0.0, 4.0);
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= lam;
  }
  return dmp::kernels::multiply_a_bt_serial(scaled, q);
}

}  // namespace oracle
