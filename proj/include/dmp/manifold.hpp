#pragma once

#include <vector>

#include "dmp/linalg.hpp"
#include "dmp/matrix.hpp"

namespace dmp {

enum class MetricKind { Grassmann, AffineGrassmann, LogEuclidean };

/// Metric selection plus its parameters. `d_prime` is used by the Grassmann
/// kinds, `eps` regularizes the Log-Euclidean covariances.
struct Metric {
  MetricKind kind = MetricKind::Grassmann;
  std::size_t d_prime = 1;
  double eps = 1e-6;
};

/// One domain's representation on a manifold layer: covariance, top
/// orthonormal basis, full descending spectrum and the feature mean.
struct ManifoldPoint {
  Matrix c;                        // d x d covariance
  Matrix u;                        // d x d' basis (d x d for LogEuclidean)
  std::vector<double> eigenvalues; // full spectrum, descending
  std::vector<double> mu;          // length d
};

std::vector<double> column_mean(const Matrix& h);

/// (1/(n-1)) (H - mean 1^T)(H - mean 1^T)^T.
Matrix covariance(const Matrix& h, const std::vector<double>& mean);

ManifoldPoint manifold_point(const Matrix& h, const Metric& metric);

double grassmann_distance(const ManifoldPoint& p, const ManifoldPoint& q);
double affine_grassmann_distance(const ManifoldPoint& p, const ManifoldPoint& q);
double log_euclidean_distance(const ManifoldPoint& p, const ManifoldPoint& q, double eps);
double metric_distance(const ManifoldPoint& p, const ManifoldPoint& q, const Metric& metric);

/// Alignment loss plus exact feature gradients. `degenerate` means an
/// eigen-gap at the d' cut fell below threshold; the gradients are then
/// unusable and callers skip the alignment term for the batch.
struct AlignmentGradient {
  double loss = 0.0;
  Matrix d_hs;
  Matrix d_ht;
  bool degenerate = false;
};

/// Analytic gradient of the Grassmann alignment loss through the SVD
/// perturbation identities.
AlignmentGradient grassmann_alignment_gradient(const Matrix& hs, const Matrix& ht,
                                               std::size_t d_prime);

/// Central finite differences over every feature entry; exact gradients for
/// the affine Grassmann and Log-Euclidean metrics are not derived, so the
/// training path for those metrics pays the numerical cost.
AlignmentGradient numeric_alignment_gradient(const Matrix& hs, const Matrix& ht,
                                             const Metric& metric, double step = 1e-5);

/// Dispatches to the analytic Grassmann gradient or the numeric fallback.
AlignmentGradient alignment_gradient(const Matrix& hs, const Matrix& ht,
                                     const Metric& metric);

}  // namespace dmp
