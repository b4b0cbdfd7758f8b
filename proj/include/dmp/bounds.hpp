#pragma once

#include <cstdint>
#include <vector>

#include "dmp/matrix.hpp"
#include "dmp/rng.hpp"

namespace dmp {

struct BoundParams {
  double m_bound = 1.0;  // sup ||x||
  std::size_t n = 1;
  double delta = 0.1;    // failure probability, in (0,1)
};

/// E(delta) = (4 M / sqrt(n)) (1 + sqrt(ln(1/delta)/2)).
double e_delta(const BoundParams& p);

/// sqrt(d')/gap_s + sqrt(d')/gap_t; +inf when a gap vanishes.
double error_index_grassmann(const std::vector<double>& eig_s,
                             const std::vector<double>& eig_t, std::size_t d_prime);

/// Mean-norm weighted variant for the affine metric.
double error_index_affine(const std::vector<double>& eig_s,
                          const std::vector<double>& eig_t,
                          const std::vector<double>& mean_s,
                          const std::vector<double>& mean_t, std::size_t d_prime);

/// alpha ||w^2 - w_hat^2||_2 + 2 sqrt(2) E e_g (element-wise squares).
double error_index_partial(const std::vector<double>& w_true,
                           const std::vector<double>& w_est, double alpha, double e_g,
                           double e_del);

struct ErrorIndexCurve {
  std::vector<double> values;  // values[i] = e(i+1)
  std::size_t argmin = 0;      // d' value, not an offset
  bool argmin_defined = false;
  double reference = 0.0;      // value at d_max, the (b_s - 1) highlight
  std::size_t reference_d = 0;
};

ErrorIndexCurve suggest_dimension(const std::vector<double>& eig_s,
                                  const std::vector<double>& eig_t, std::size_t d_max);

/// Bounded sampling distribution with exactly known covariance: x = mean +
/// R D^{1/2} u with u uniform on [-sqrt(3), sqrt(3)]^dim, so Cov = R D R^T
/// and ||x|| <= ||mean|| + sqrt(3 tr D).
struct BoxDistribution {
  std::size_t dim = 0;
  Matrix rotation;                  // d x d orthogonal, columns = eigenvectors
  std::vector<double> eigenvalues;  // descending, > 0
  std::vector<double> mean;
  double m_bound = 0.0;

  Matrix sample(std::size_t n, Rng& rng) const;
  Matrix true_covariance() const;
  Matrix true_projector(std::size_t d_prime) const;
};

BoxDistribution make_box_distribution(std::size_t dim, std::vector<double> eigenvalues,
                                      std::vector<double> mean, std::uint64_t seed);

struct TrialStats {
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::vector<double> deviations;  // per trial
  std::vector<double> bounds;      // per trial right-hand sides
  bool empty = true;

  double violation_rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(trials);
  }
  double median_deviation() const;
};

/// Lemma-style projector check on the module's fixed distribution:
/// ||U U^T - U~ U~^T||_F vs 2 sqrt(2) E(delta) sqrt(d')/gap. Trials run in
/// parallel with per-trial derived seeds, so the counts are deterministic.
TrialStats monte_carlo_projector_bound(std::size_t dim, std::size_t n,
                                       std::size_t d_prime, double delta,
                                       std::size_t trials, std::uint64_t seed = 2026);

/// Grassmann-distance estimation error vs 2 sqrt(2) E(delta) e_G(d').
/// Theorem-native quantities: unscaled, unsquared Frobenius distances.
TrialStats monte_carlo_grassmann_bound(const BoxDistribution& ds,
                                       const BoxDistribution& dt, std::size_t n,
                                       std::size_t d_prime, double delta,
                                       std::size_t trials, std::uint64_t seed = 2026);

/// Affine variant with the extra sqrt(2 d)/4 slack term; the error index
/// uses the empirical mean norms of each trial.
TrialStats monte_carlo_affine_bound(const BoxDistribution& ds, const BoxDistribution& dt,
                                    std::size_t n, std::size_t d_prime, double delta,
                                    std::size_t trials, std::uint64_t seed = 2026);

/// The fixed well-gapped spectrum used by monte_carlo_projector_bound.
std::vector<double> default_box_spectrum(std::size_t dim);

}  // namespace dmp
