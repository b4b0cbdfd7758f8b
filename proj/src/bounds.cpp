#include "dmp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmp/error.hpp"
#include "dmp/linalg.hpp"
#include "dmp/manifold.hpp"

namespace dmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt3 = 1.7320508075688772935274463415059;

void check_bound_params(const BoundParams& p) {
  if (p.m_bound <= 0.0) throw InvalidInputError("bounds: M must be positive");
  if (p.n < 1) throw InvalidInputError("bounds: n must be >= 1");
  if (p.delta <= 0.0 || p.delta > 1.0)
    throw InvalidInputError("bounds: delta must lie in (0, 1]");
}

double gap_term(const std::vector<double>& eig, std::size_t d_prime, double numer) {
  const double gap = eig[d_prime - 1] - eig[d_prime];
  if (gap <= 0.0) return kInf;
  return numer / gap;
}

void check_spectra(const std::vector<double>& eig_s, const std::vector<double>& eig_t,
                   std::size_t d_prime) {
  if (d_prime < 1) throw InvalidInputError("error index: d_prime must be >= 1");
  if (eig_s.size() < d_prime + 1 || eig_t.size() < d_prime + 1)
    throw InvalidInputError("error index: spectra shorter than d_prime + 1");
  for (const auto* e : {&eig_s, &eig_t})
    for (std::size_t i = 0; i + 1 < e->size(); ++i)
      if ((*e)[i] < (*e)[i + 1] - 1e-12)
        throw InvalidInputError("error index: spectrum not descending");
}

}  // namespace

double e_delta(const BoundParams& p) {
  check_bound_params(p);
  return 4.0 * p.m_bound / std::sqrt(static_cast<double>(p.n)) *
         (1.0 + std::sqrt(std::log(1.0 / p.delta) / 2.0));
}

double error_index_grassmann(const std::vector<double>& eig_s,
                             const std::vector<double>& eig_t, std::size_t d_prime) {
  check_spectra(eig_s, eig_t, d_prime);
  const double rd = std::sqrt(static_cast<double>(d_prime));
  return gap_term(eig_s, d_prime, rd) + gap_term(eig_t, d_prime, rd);
}

double error_index_affine(const std::vector<double>& eig_s,
                          const std::vector<double>& eig_t,
                          const std::vector<double>& mean_s,
                          const std::vector<double>& mean_t, std::size_t d_prime) {
  check_spectra(eig_s, eig_t, d_prime);
  const double rd = std::sqrt(static_cast<double>(d_prime));
  return gap_term(eig_s, d_prime, rd * norm2(mean_s)) +
         gap_term(eig_t, d_prime, rd * norm2(mean_t));
}

double error_index_partial(const std::vector<double>& w_true,
                           const std::vector<double>& w_est, double alpha, double e_g,
                           double e_del) {
  if (w_true.size() != w_est.size())
    throw InvalidInputError("error_index_partial: weight lengths differ");
  if (alpha < 0.0) throw InvalidInputError("error_index_partial: alpha must be >= 0");
  double sq = 0.0;
  for (std::size_t i = 0; i < w_true.size(); ++i) {
    const double diff = w_true[i] * w_true[i] - w_est[i] * w_est[i];
    sq += diff * diff;
  }
  return alpha * std::sqrt(sq) + 2.0 * std::sqrt(2.0) * e_del * e_g;
}

ErrorIndexCurve suggest_dimension(const std::vector<double>& eig_s,
                                  const std::vector<double>& eig_t, std::size_t d_max) {
  if (d_max < 1) throw InvalidInputError("suggest_dimension: d_max must be >= 1");
  if (eig_s.size() < d_max + 1 || eig_t.size() < d_max + 1)
    throw InvalidInputError("suggest_dimension: d_max exceeds spectrum length - 1");
  ErrorIndexCurve curve;
  curve.values.resize(d_max);
  double best = kInf;
  for (std::size_t dp = 1; dp <= d_max; ++dp) {
    const double v = error_index_grassmann(eig_s, eig_t, dp);
    curve.values[dp - 1] = v;
    if (v < best) {
      best = v;
      curve.argmin = dp;
      curve.argmin_defined = true;
    }
  }
  curve.reference = curve.values[d_max - 1];
  curve.reference_d = d_max;
  return curve;
}

Matrix BoxDistribution::sample(std::size_t n, Rng& rng) const {
  Matrix out(dim, n);
  std::vector<double> u(dim);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < dim; ++k)
      u[k] = std::sqrt(eigenvalues[k]) * rng.uniform(-kSqrt3, kSqrt3);
    for (std::size_t i = 0; i < dim; ++i) {
      double acc = mean[i];
      for (std::size_t k = 0; k < dim; ++k) acc += rotation(i, k) * u[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix BoxDistribution::true_covariance() const {
  Matrix scaled = rotation;
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < dim; ++i) scaled(i, j) *= eigenvalues[j];
  return kernels::multiply_a_bt(scaled, rotation);
}

Matrix BoxDistribution::true_projector(std::size_t d_prime) const {
  Matrix top(dim, d_prime);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < d_prime; ++j) top(i, j) = rotation(i, j);
  return kernels::multiply_a_bt(top, top);
}

BoxDistribution make_box_distribution(std::size_t dim, std::vector<double> eigenvalues,
                                      std::vector<double> mean, std::uint64_t seed) {
  if (eigenvalues.size() != dim || mean.size() != dim)
    throw InvalidInputError("make_box_distribution: length mismatch");
  double tr = 0.0;
  for (std::size_t i = 0; i + 1 < dim; ++i)
    if (eigenvalues[i] < eigenvalues[i + 1])
      throw InvalidInputError("make_box_distribution: spectrum not descending");
  for (double v : eigenvalues) {
    if (v <= 0.0) throw InvalidInputError("make_box_distribution: eigenvalues must be > 0");
    tr += v;
  }
  BoxDistribution dist;
  dist.dim = dim;
  dist.eigenvalues = std::move(eigenvalues);
  dist.mean = std::move(mean);
  dist.m_bound = norm2(dist.mean) + std::sqrt(3.0 * tr);

  // Random rotation: orthonormalized Gaussian matrix.
  Rng rng(seed);
  Matrix g(dim, dim);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  dist.rotation = Matrix(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> v = g.col(j);
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0.0;
      for (std::size_t i = 0; i < dim; ++i) proj += v[i] * dist.rotation(i, p);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * dist.rotation(i, p);
    }
    const double nrm = norm2(v);
    if (nrm < 1e-9) throw NumericalDomainError("make_box_distribution: rotation degenerate");
    for (std::size_t i = 0; i < dim; ++i) dist.rotation(i, j) = v[i] / nrm;
  }
  return dist;
}

std::vector<double> default_box_spectrum(std::size_t dim) {
  std::vector<double> eig(dim);
  double v = 8.0;
  for (std::size_t i = 0; i < dim; ++i) {
    eig[i] = v;
    v *= 0.55;
  }
  return eig;
}

double TrialStats::median_deviation() const {
  if (deviations.empty()) return 0.0;
  std::vector<double> s = deviations;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

namespace {

Matrix empirical_projector(const Matrix& samples, std::size_t d_prime,
                           std::vector<double>* mean_out = nullptr,
                           std::vector<double>* eig_out = nullptr) {
  const auto mu = column_mean(samples);
  const SymEig e = sym_eig(covariance(samples, mu));
  if (mean_out) *mean_out = mu;
  if (eig_out) *eig_out = e.eigenvalues;
  Matrix top(samples.rows(), d_prime);
  for (std::size_t i = 0; i < samples.rows(); ++i)
    for (std::size_t j = 0; j < d_prime; ++j) top(i, j) = e.eigenvectors(i, j);
  return kernels::multiply_a_bt(top, top);
}

void require_sample_threshold(const BoxDistribution& dist, std::size_t n,
                              std::size_t d_prime, double delta) {
  const double gap = dist.eigenvalues[d_prime - 1] - dist.eigenvalues[d_prime];
  if (gap <= 0.0)
    throw InvalidInputError("monte carlo: spectrum degenerate at d_prime");
  const double k = 4.0 * dist.m_bound * (1.0 + std::sqrt(std::log(1.0 / delta) / 2.0));
  const double needed = (k / gap) * (k / gap);
  if (static_cast<double>(n) < needed)
    throw InvalidInputError("monte carlo: n below the sample threshold (need >= " +
                            std::to_string(static_cast<std::size_t>(needed) + 1) + ")");
}

template <typename TrialFn>
TrialStats run_trials(std::size_t trials, std::uint64_t seed, TrialFn&& fn) {
  TrialStats stats;
  stats.trials = trials;
  if (trials == 0) return stats;
  stats.empty = false;
  stats.deviations.assign(trials, 0.0);
  stats.bounds.assign(trials, 0.0);
  const std::int64_t t = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < t; ++i) {
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    fn(static_cast<std::size_t>(i), rng, stats.deviations[i], stats.bounds[i]);
  }
  for (std::size_t i = 0; i < trials; ++i)
    if (stats.deviations[i] > stats.bounds[i]) ++stats.violations;
  return stats;
}

}  // namespace

TrialStats monte_carlo_projector_bound(std::size_t dim, std::size_t n,
                                       std::size_t d_prime, double delta,
                                       std::size_t trials, std::uint64_t seed) {
  if (dim < 2 || d_prime < 1 || d_prime >= dim)
    throw InvalidInputError("monte_carlo_projector_bound: bad dimensions");
  const BoxDistribution dist = make_box_distribution(
      dim, default_box_spectrum(dim), std::vector<double>(dim, 0.0), seed ^ 0x517cc1b7);
  require_sample_threshold(dist, n, d_prime, delta);

  const double e = e_delta({dist.m_bound, n, delta});
  const double gap = dist.eigenvalues[d_prime - 1] - dist.eigenvalues[d_prime];
  const double rhs =
      2.0 * std::sqrt(2.0) * e * std::sqrt(static_cast<double>(d_prime)) / gap;
  const Matrix p_true = dist.true_projector(d_prime);

  return run_trials(trials, seed,
                    [&](std::size_t, Rng& rng, double& dev, double& bound) {
                      const Matrix x = dist.sample(n, rng);
                      const Matrix p_emp = empirical_projector(x, d_prime);
                      dev = frobenius_norm(subtract(p_true, p_emp));
                      bound = rhs;
                    });
}

TrialStats monte_carlo_grassmann_bound(const BoxDistribution& ds,
                                       const BoxDistribution& dt, std::size_t n,
                                       std::size_t d_prime, double delta,
                                       std::size_t trials, std::uint64_t seed) {
  if (ds.dim != dt.dim) throw InvalidInputError("monte carlo: dimension mismatch");
  require_sample_threshold(ds, n, d_prime, delta);
  require_sample_threshold(dt, n, d_prime, delta);

  const double m = std::max(ds.m_bound, dt.m_bound);
  const double e = e_delta({m, n, delta});
  const double eg = error_index_grassmann(ds.eigenvalues, dt.eigenvalues, d_prime);
  const double rhs = 2.0 * std::sqrt(2.0) * e * eg;
  const double d_true =
      frobenius_norm(subtract(ds.true_projector(d_prime), dt.true_projector(d_prime)));

  return run_trials(trials, seed,
                    [&](std::size_t, Rng& rng, double& dev, double& bound) {
                      const Matrix xs = ds.sample(n, rng);
                      const Matrix xt = dt.sample(n, rng);
                      const double d_emp =
                          frobenius_norm(subtract(empirical_projector(xs, d_prime),
                                                  empirical_projector(xt, d_prime)));
                      dev = std::fabs(d_true - d_emp);
                      bound = rhs;
                    });
}

TrialStats monte_carlo_affine_bound(const BoxDistribution& ds, const BoxDistribution& dt,
                                    std::size_t n, std::size_t d_prime, double delta,
                                    std::size_t trials, std::uint64_t seed) {
  if (ds.dim != dt.dim) throw InvalidInputError("monte carlo: dimension mismatch");
  require_sample_threshold(ds, n, d_prime, delta);
  require_sample_threshold(dt, n, d_prime, delta);

  const std::size_t dim = ds.dim;
  const double m = std::max(ds.m_bound, dt.m_bound);
  const double e = e_delta({m, n, delta});
  const double slack = std::sqrt(2.0 * static_cast<double>(dim)) / 4.0;

  auto affine_dist = [dim](const Matrix& pp, const std::vector<double>& mp,
                           const Matrix& pq, const std::vector<double>& mq) {
    const double basis = frobenius_norm(subtract(pp, pq));
    double disp = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double rp = mp[i], rq = mq[i];
      for (std::size_t j = 0; j < dim; ++j) {
        rp -= pp(i, j) * mp[j];
        rq -= pq(i, j) * mq[j];
      }
      disp += (rp - rq) * (rp - rq);
    }
    return basis + std::sqrt(disp);
  };

  const Matrix ps = ds.true_projector(d_prime);
  const Matrix pt = dt.true_projector(d_prime);
  const double d_true = affine_dist(ps, ds.mean, pt, dt.mean);

  return run_trials(
      trials, seed, [&](std::size_t, Rng& rng, double& dev, double& bound) {
        const Matrix xs = ds.sample(n, rng);
        const Matrix xt = dt.sample(n, rng);
        std::vector<double> ms, mt;
        const Matrix pes = empirical_projector(xs, d_prime, &ms);
        const Matrix pet = empirical_projector(xt, d_prime, &mt);
        dev = std::fabs(d_true - affine_dist(pes, ms, pet, mt));
        const double eag = error_index_affine(ds.eigenvalues, dt.eigenvalues, ms, mt,
                                              d_prime);
        bound = 2.0 * std::sqrt(2.0) * e * (slack + eag);
      });
}

}  // namespace dmp
