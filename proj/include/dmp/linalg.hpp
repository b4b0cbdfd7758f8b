#pragma once

#include <vector>

#include "dmp/matrix.hpp"

namespace dmp {

/// Full symmetric eigendecomposition, eigenvalues descending.
/// Eigenvector sign convention: the largest-magnitude entry of each column
/// is positive (first such entry on ties), so results are reproducible.
struct SymEig {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;  // columns
};

/// Thin SVD with the same sign convention applied to U (V follows so that
/// U diag(sigma) V^T is preserved). `degenerate` is set when consecutive
/// singular values around the retained block differ by less than
/// 1e-8 * sigma_1; gradient code treats such spectra as ill-posed.
struct ThinSvd {
  Matrix u;                   // d x r
  std::vector<double> sigma;  // length r, descending
  Matrix v;                   // n x r
  bool degenerate = false;
};

ThinSvd thin_svd(const Matrix& a, std::size_t r);

SymEig sym_eig(const Matrix& c);

/// U log(D + eps I) U^T from the eigendecomposition of a symmetric PSD C.
Matrix matrix_log_spd(const Matrix& c, double eps);

}  // namespace dmp
