#include "dmp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmp/error.hpp"

namespace dmp {

namespace {

constexpr double kJacobiTol = 1e-14;
constexpr int kMaxSweeps = 64;
constexpr double kDegenerateGap = 1e-8;

/// Flips column signs so the largest-magnitude entry is positive.
/// Returns true when the column was negated.
bool fix_column_sign(Matrix& m, std::size_t j) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double a = std::fabs(m(i, j));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (m(best, j) < 0.0) {
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
    return true;
  }
  return false;
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues in
/// `a`'s diagonal and accumulates rotations into `v`.
void jacobi_eig(Matrix& a, Matrix& v) {
  const std::size_t n = a.rows();
  v = Matrix::identity(n);
  if (n < 2) return;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::fabs(a(i, j)));
  if (scale == 0.0) return;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(a(p, q)));
    if (off <= kJacobiTol * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= kJacobiTol * scale * 1e-3) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
}

Matrix symmetrized(const Matrix& c) {
  Matrix a(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) a(i, j) = 0.5 * (c(i, j) + c(j, i));
  return a;
}

std::vector<std::size_t> descending_order(const std::vector<double>& vals) {
  std::vector<std::size_t> order(vals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  return order;
}

/// Gram-Schmidt completion: a unit vector orthogonal to the first `k`
/// columns of `m`, for filling singular vectors of the numerical null space.
std::vector<double> orthogonal_completion(const Matrix& m, std::size_t k) {
  const std::size_t n = m.rows();
  for (std::size_t cand = 0; cand < n; ++cand) {
    std::vector<double> v(n, 0.0);
    v[cand] = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += v[i] * m(i, j);
      for (std::size_t i = 0; i < n; ++i) v[i] -= proj * m(i, j);
    }
    const double nv = norm2(v);
    if (nv > 1e-8) {
      for (double& x : v) x /= nv;
      return v;
    }
  }
  throw NumericalDomainError("orthogonal completion failed");
}

/// One-sided Jacobi on the columns of a (rows >= cols). Produces the full
/// set of singular triplets of a.
void one_sided_jacobi(Matrix a, Matrix& u, std::vector<double>& sigma, Matrix& v) {
  const std::size_t n = a.cols();
  v = Matrix::identity(n);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (std::fabs(gamma) <= kJacobiTol * std::sqrt(alpha * beta) || gamma == 0.0)
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    if (!rotated) break;
  }
  sigma.assign(n, 0.0);
  u = Matrix(a.rows(), n);
  for (std::size_t j = 0; j < n; ++j) {
    double nj = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) nj += a(i, j) * a(i, j);
    nj = std::sqrt(nj);
    sigma[j] = nj;
    if (nj > 0.0)
      for (std::size_t i = 0; i < a.rows(); ++i) u(i, j) = a(i, j) / nj;
  }
}

}  // namespace

SymEig sym_eig(const Matrix& c) {
  if (c.rows() != c.cols()) throw InvalidInputError("sym_eig: matrix not square");
  if (!c.all_finite()) throw InvalidInputError("sym_eig: non-finite input");
  double scale = max_abs(c);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = i + 1; j < c.cols(); ++j)
      if (std::fabs(c(i, j) - c(j, i)) > 1e-9 * std::max(scale, 1e-300))
        throw InvalidInputError("sym_eig: input asymmetric beyond tolerance");

  // Symmetrize before iterating so roundoff asymmetry cannot accumulate.
  Matrix a = symmetrized(c);
  Matrix v;
  jacobi_eig(a, v);

  std::vector<double> vals(c.rows());
  for (std::size_t i = 0; i < c.rows(); ++i) vals[i] = a(i, i);
  const auto order = descending_order(vals);

  SymEig out;
  out.eigenvalues.resize(c.rows());
  out.eigenvectors = Matrix(c.rows(), c.rows());
  for (std::size_t j = 0; j < c.rows(); ++j) {
    out.eigenvalues[j] = vals[order[j]];
    for (std::size_t i = 0; i < c.rows(); ++i)
      out.eigenvectors(i, j) = v(i, order[j]);
    fix_column_sign(out.eigenvectors, j);
  }
  return out;
}

ThinSvd thin_svd(const Matrix& a, std::size_t r) {
  const std::size_t d = a.rows(), n = a.cols();
  if (r < 1 || r > std::min(d, n))
    throw InvalidInputError("thin_svd: rank out of range");
  if (!a.all_finite()) throw InvalidInputError("thin_svd: non-finite input");

  const std::size_t p = std::min(d, n);
  Matrix full_u, full_v;
  std::vector<double> full_sigma;

  if (p <= 64) {
    // Gram route: eigendecomposition of the smaller Gram matrix.
    if (d <= n) {
      const Matrix w = kernels::multiply_a_bt(a, a);
      SymEig e = sym_eig(w);
      full_u = e.eigenvectors;
      full_sigma.resize(d);
      for (std::size_t i = 0; i < d; ++i)
        full_sigma[i] = std::sqrt(std::max(e.eigenvalues[i], 0.0));
      full_v = Matrix(n, d);
      const Matrix atu = kernels::multiply_at_b(a, full_u);  // n x d
      for (std::size_t j = 0; j < d; ++j) {
        if (full_sigma[j] > 1e-12 * std::max(full_sigma[0], 1e-300)) {
          for (std::size_t i = 0; i < n; ++i) full_v(i, j) = atu(i, j) / full_sigma[j];
        } else {
          full_v.set_col(j, orthogonal_completion(full_v, j));
        }
      }
    } else {
      const Matrix w = kernels::multiply_at_b(a, a);
      SymEig e = sym_eig(w);
      full_v = e.eigenvectors;
      full_sigma.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        full_sigma[i] = std::sqrt(std::max(e.eigenvalues[i], 0.0));
      full_u = Matrix(d, n);
      const Matrix av = kernels::multiply(a, full_v);  // d x n
      for (std::size_t j = 0; j < n; ++j) {
        if (full_sigma[j] > 1e-12 * std::max(full_sigma[0], 1e-300)) {
          for (std::size_t i = 0; i < d; ++i) full_u(i, j) = av(i, j) / full_sigma[j];
        } else {
          full_u.set_col(j, orthogonal_completion(full_u, j));
        }
      }
    }
  } else {
    if (d >= n) {
      one_sided_jacobi(a, full_u, full_sigma, full_v);
    } else {
      one_sided_jacobi(transpose(a), full_v, full_sigma, full_u);
    }
    const auto order = descending_order(full_sigma);
    Matrix su(full_u.rows(), full_u.cols()), sv(full_v.rows(), full_v.cols());
    std::vector<double> ss(full_sigma.size());
    for (std::size_t j = 0; j < order.size(); ++j) {
      ss[j] = full_sigma[order[j]];
      for (std::size_t i = 0; i < su.rows(); ++i) su(i, j) = full_u(i, order[j]);
      for (std::size_t i = 0; i < sv.rows(); ++i) sv(i, j) = full_v(i, order[j]);
    }
    full_u = std::move(su);
    full_v = std::move(sv);
    full_sigma = std::move(ss);
    for (std::size_t j = 0; j < full_sigma.size(); ++j)
      if (full_sigma[j] == 0.0) {
        // Null-space columns from Jacobi are zero; rebuild them orthonormal.
        full_u.set_col(j, orthogonal_completion(full_u, j));
      }
  }

  ThinSvd out;
  out.u = Matrix(d, r);
  out.v = Matrix(n, r);
  out.sigma.assign(full_sigma.begin(), full_sigma.begin() + r);
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < d; ++i) out.u(i, j) = full_u(i, j);
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = full_v(i, j);
    if (fix_column_sign(out.u, j)) {
      for (std::size_t i = 0; i < n; ++i) out.v(i, j) = -out.v(i, j);
    }
  }

  const double s1 = full_sigma.empty() ? 0.0 : full_sigma[0];
  if (s1 == 0.0) {
    out.degenerate = true;
  } else {
    const std::size_t check = std::min(r + 1, p);
    for (std::size_t i = 0; i + 1 < check; ++i)
      if (full_sigma[i] - full_sigma[i + 1] < kDegenerateGap * s1) out.degenerate = true;
  }
  return out;
}

Matrix matrix_log_spd(const Matrix& c, double eps) {
  if (eps <= 0.0) throw InvalidInputError("matrix_log_spd: eps must be positive");
  SymEig e = sym_eig(c);
  const std::size_t n = c.rows();
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double shifted = e.eigenvalues[i] + eps;
    if (shifted <= 0.0)
      throw NumericalDomainError("matrix_log_spd: eigenvalue + eps not positive");
    logs[i] = std::log(shifted);
  }
  Matrix scaled = e.eigenvectors;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= logs[j];
  Matrix out = kernels::multiply_a_bt(scaled, e.eigenvectors);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

}  // namespace dmp
