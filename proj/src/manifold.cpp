#include "dmp/manifold.hpp"

#include <cmath>

#include "dmp/error.hpp"

namespace dmp {

namespace {

constexpr double kDegenerateGap = 1e-8;

Matrix centered(const Matrix& h, const std::vector<double>& mean) {
  Matrix out = h;
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) out(i, j) -= mean[i];
  return out;
}

Matrix projector(const Matrix& u, std::size_t cols) {
  Matrix top(u.rows(), cols);
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < cols; ++j) top(i, j) = u(i, j);
  return kernels::multiply_a_bt(top, top);
}

void check_pair(const ManifoldPoint& p, const ManifoldPoint& q) {
  if (p.u.rows() != q.u.rows() || p.u.cols() != q.u.cols())
    throw InvalidInputError("manifold distance: dimension mismatch");
}

}  // namespace

std::vector<double> column_mean(const Matrix& h) {
  std::vector<double> mu(h.rows(), 0.0);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h.cols(); ++j) acc += h(i, j);
    mu[i] = acc / static_cast<double>(h.cols());
  }
  return mu;
}

Matrix covariance(const Matrix& h, const std::vector<double>& mean) {
  if (h.cols() < 2)
    throw InsufficientSamplesError("covariance: needs at least 2 samples");
  if (mean.size() != h.rows())
    throw InvalidInputError("covariance: mean length != feature dim");
  return kernels::scatter(h, mean);
}

ManifoldPoint manifold_point(const Matrix& h, const Metric& metric) {
  if (h.cols() < 2)
    throw InsufficientSamplesError("manifold_point: needs at least 2 samples");
  ManifoldPoint out;
  out.mu = column_mean(h);
  out.c = covariance(h, out.mu);
  const SymEig e = sym_eig(out.c);
  out.eigenvalues = e.eigenvalues;
  std::size_t keep = h.rows();
  if (metric.kind != MetricKind::LogEuclidean) {
    if (metric.d_prime < 1 || metric.d_prime >= h.rows())
      throw InvalidInputError("manifold_point: d_prime must lie in [1, d-1]");
    keep = metric.d_prime;
  }
  out.u = Matrix(h.rows(), keep);
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < keep; ++j) out.u(i, j) = e.eigenvectors(i, j);
  return out;
}

double grassmann_distance(const ManifoldPoint& p, const ManifoldPoint& q) {
  check_pair(p, q);
  const double d = static_cast<double>(p.u.rows());
  const Matrix diff = subtract(kernels::multiply_a_bt(p.u, p.u),
                               kernels::multiply_a_bt(q.u, q.u));
  const double f = frobenius_norm(diff);
  return f * f / (d * d);
}

double affine_grassmann_distance(const ManifoldPoint& p, const ManifoldPoint& q) {
  check_pair(p, q);
  const std::size_t d = p.u.rows();
  const Matrix pp = kernels::multiply_a_bt(p.u, p.u);
  const Matrix pq = kernels::multiply_a_bt(q.u, q.u);
  const double basis_term = frobenius_norm(subtract(pp, pq));

  std::vector<double> rp(d), rq(d);
  for (std::size_t i = 0; i < d; ++i) {
    double ap = 0.0, aq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      ap += pp(i, j) * p.mu[j];
      aq += pq(i, j) * q.mu[j];
    }
    rp[i] = p.mu[i] - ap;
    rq[i] = q.mu[i] - aq;
  }
  double disp = 0.0;
  for (std::size_t i = 0; i < d; ++i) disp += (rp[i] - rq[i]) * (rp[i] - rq[i]);
  const double dd = static_cast<double>(d);
  return (basis_term + std::sqrt(disp)) / (dd * dd);
}

double log_euclidean_distance(const ManifoldPoint& p, const ManifoldPoint& q, double eps) {
  if (p.c.rows() != q.c.rows())
    throw InvalidInputError("log_euclidean_distance: dimension mismatch");
  if (eps <= 0.0) throw InvalidInputError("log_euclidean_distance: eps must be positive");
  const double d = static_cast<double>(p.c.rows());
  const Matrix diff = subtract(matrix_log_spd(p.c, eps), matrix_log_spd(q.c, eps));
  return frobenius_norm(diff) / (d * d);
}

double metric_distance(const ManifoldPoint& p, const ManifoldPoint& q, const Metric& metric) {
  switch (metric.kind) {
    case MetricKind::Grassmann:
      return grassmann_distance(p, q);
    case MetricKind::AffineGrassmann:
      return affine_grassmann_distance(p, q);
    case MetricKind::LogEuclidean:
      return log_euclidean_distance(p, q, metric.eps);
  }
  throw InvalidInputError("metric_distance: unknown metric");
}

namespace {

struct DomainEig {
  Matrix centered_h;
  SymEig eig;
  std::size_t n;
};

DomainEig domain_eig(const Matrix& h) {
  DomainEig out;
  out.n = h.cols();
  const auto mu = column_mean(h);
  out.centered_h = centered(h, mu);
  out.eig = sym_eig(covariance(h, mu));
  return out;
}

/// dL/dH for one domain given dL/dP (the gradient w.r.t. that domain's
/// projector). Cross-block eigen perturbation of C = (1/(n-1)) Hc Hc^T;
/// each (top k, complement m) pair solves the 2x2 SVD perturbation system,
/// which for the symmetric case collapses to division by the eigen-gap.
Matrix pullback_through_projector(const DomainEig& dom, const Matrix& dl_dp,
                                  std::size_t d_prime) {
  const std::size_t d = dom.eig.eigenvectors.rows();
  const Matrix& u = dom.eig.eigenvectors;
  const std::vector<double>& lam = dom.eig.eigenvalues;

  Matrix u_top(d, d_prime), u_comp(d, d - d_prime);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d_prime; ++j) u_top(i, j) = u(i, j);
    for (std::size_t j = d_prime; j < d; ++j) u_comp(i, j - d_prime) = u(i, j);
  }

  // F(m,k) = 2 (u_m^T dL/dP u_k) / (lam_k - lam_m), m in complement, k in top.
  Matrix f = kernels::multiply_at_b(u_comp, kernels::multiply(dl_dp, u_top));
  for (std::size_t m = 0; m < f.rows(); ++m)
    for (std::size_t k = 0; k < f.cols(); ++k)
      f(m, k) *= 2.0 / (lam[k] - lam[d_prime + m]);

  const Matrix m = kernels::multiply(u_comp, kernels::multiply_a_bt(f, u_top));
  Matrix g(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) g(i, j) = 0.5 * (m(i, j) + m(j, i));

  // dL/dHc = (2/(n-1)) G Hc, then pull back through the centering map.
  Matrix dhc = kernels::multiply(g, dom.centered_h);
  scale_in_place(dhc, 2.0 / static_cast<double>(dom.n - 1));
  const auto gmean = column_mean(dhc);
  for (std::size_t i = 0; i < dhc.rows(); ++i)
    for (std::size_t j = 0; j < dhc.cols(); ++j) dhc(i, j) -= gmean[i];
  return dhc;
}

}  // namespace

AlignmentGradient grassmann_alignment_gradient(const Matrix& hs, const Matrix& ht,
                                               std::size_t d_prime) {
  if (hs.rows() != ht.rows())
    throw InvalidInputError("grassmann_alignment_gradient: feature dims differ");
  if (d_prime < 1 || d_prime >= hs.rows())
    throw InvalidInputError("grassmann_alignment_gradient: d_prime out of range");
  if (hs.cols() < d_prime + 1 || ht.cols() < d_prime + 1)
    throw InvalidInputError("grassmann_alignment_gradient: too few columns for d_prime");

  const DomainEig s = domain_eig(hs);
  const DomainEig t = domain_eig(ht);
  const std::size_t d = hs.rows();

  AlignmentGradient out;
  for (const DomainEig* dom : {&s, &t}) {
    const auto& lam = dom->eig.eigenvalues;
    const double top = std::max(lam[0], 0.0);
    if (lam[d_prime - 1] - lam[d_prime] <= kDegenerateGap * std::max(top, 1e-300)) {
      out.degenerate = true;
    }
  }

  Matrix proj_s = projector(s.eig.eigenvectors, d_prime);
  Matrix proj_t = projector(t.eig.eigenvectors, d_prime);
  const Matrix diff = subtract(proj_s, proj_t);
  const double f = frobenius_norm(diff);
  out.loss = f * f / (static_cast<double>(d) * static_cast<double>(d));
  if (out.degenerate) {
    out.d_hs = Matrix(hs.rows(), hs.cols());
    out.d_ht = Matrix(ht.rows(), ht.cols());
    return out;
  }

  const double scl = 2.0 / (static_cast<double>(d) * static_cast<double>(d));
  const Matrix dl_dps = scale(diff, scl);
  const Matrix dl_dpt = scale(diff, -scl);
  out.d_hs = pullback_through_projector(s, dl_dps, d_prime);
  out.d_ht = pullback_through_projector(t, dl_dpt, d_prime);
  return out;
}

AlignmentGradient numeric_alignment_gradient(const Matrix& hs, const Matrix& ht,
                                             const Metric& metric, double step) {
  const ManifoldPoint pt = manifold_point(ht, metric);
  const ManifoldPoint ps = manifold_point(hs, metric);

  AlignmentGradient out;
  out.loss = metric_distance(ps, pt, metric);
  out.d_hs = Matrix(hs.rows(), hs.cols());
  out.d_ht = Matrix(ht.rows(), ht.cols());

  Matrix work = hs;
  for (std::size_t i = 0; i < hs.rows(); ++i) {
    for (std::size_t j = 0; j < hs.cols(); ++j) {
      const double orig = work(i, j);
      work(i, j) = orig + step;
      const double up = metric_distance(manifold_point(work, metric), pt, metric);
      work(i, j) = orig - step;
      const double dn = metric_distance(manifold_point(work, metric), pt, metric);
      work(i, j) = orig;
      out.d_hs(i, j) = (up - dn) / (2.0 * step);
    }
  }
  work = ht;
  for (std::size_t i = 0; i < ht.rows(); ++i) {
    for (std::size_t j = 0; j < ht.cols(); ++j) {
      const double orig = work(i, j);
      work(i, j) = orig + step;
      const double up = metric_distance(ps, manifold_point(work, metric), metric);
      work(i, j) = orig - step;
      const double dn = metric_distance(ps, manifold_point(work, metric), metric);
      work(i, j) = orig;
      out.d_ht(i, j) = (up - dn) / (2.0 * step);
    }
  }
  return out;
}

AlignmentGradient alignment_gradient(const Matrix& hs, const Matrix& ht,
                                     const Metric& metric) {
  if (metric.kind == MetricKind::Grassmann)
    return grassmann_alignment_gradient(hs, ht, metric.d_prime);
  return numeric_alignment_gradient(hs, ht, metric);
}

}  // namespace dmp
