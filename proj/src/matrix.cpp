#include "dmp/matrix.hpp"

#include <cmath>
#include <cstdint>

#include "dmp/error.hpp"

namespace dmp {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidInputError("from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::vector<double> Matrix::col(std::size_t j) const {
  std::vector<double> v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, const std::vector<double>& v) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace kernels {

namespace {

inline void multiply_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = b.cols(), k = a.cols();
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(p, j);
    out(i, j) = acc;
  }
}

inline void multiply_at_b_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = b.cols(), k = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += a(p, i) * b(p, j);
    out(i, j) = acc;
  }
}

inline void multiply_a_bt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = b.rows(), k = a.cols();
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(j, p);
    out(i, j) = acc;
  }
}

inline void scatter_row(const Matrix& h, const std::vector<double>& mean, Matrix& out,
                        std::size_t i, double inv) {
  const std::size_t d = h.rows(), n = h.cols();
  for (std::size_t j = i; j < d; ++j) {
    double acc = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      acc += (h(i, q) - mean[i]) * (h(j, q) - mean[j]);
    out(i, j) = acc * inv;
    out(j, i) = acc * inv;
  }
}

}  // namespace

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInputError("multiply: inner dims differ");
  Matrix out(a.rows(), b.cols());
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) multiply_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix multiply_serial(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInputError("multiply: inner dims differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) multiply_row(a, b, out, i);
  return out;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidInputError("multiply_at_b: row counts differ");
  Matrix out(a.cols(), b.cols());
  const std::int64_t m = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) multiply_at_b_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix multiply_at_b_serial(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidInputError("multiply_at_b: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) multiply_at_b_row(a, b, out, i);
  return out;
}

Matrix multiply_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidInputError("multiply_a_bt: col counts differ");
  Matrix out(a.rows(), b.rows());
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) multiply_a_bt_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix multiply_a_bt_serial(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidInputError("multiply_a_bt: col counts differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) multiply_a_bt_row(a, b, out, i);
  return out;
}

Matrix scatter(const Matrix& h, const std::vector<double>& mean) {
  if (mean.size() != h.rows()) throw InvalidInputError("scatter: mean length != rows");
  if (h.cols() < 2) throw InsufficientSamplesError("scatter: needs at least 2 columns");
  Matrix out(h.rows(), h.rows());
  const double inv = 1.0 / static_cast<double>(h.cols() - 1);
  const std::int64_t d = static_cast<std::int64_t>(h.rows());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < d; ++i) scatter_row(h, mean, out, static_cast<std::size_t>(i), inv);
  return out;
}

Matrix scatter_serial(const Matrix& h, const std::vector<double>& mean) {
  if (mean.size() != h.rows()) throw InvalidInputError("scatter: mean length != rows");
  if (h.cols() < 2) throw InsufficientSamplesError("scatter: needs at least 2 columns");
  Matrix out(h.rows(), h.rows());
  const double inv = 1.0 / static_cast<double>(h.cols() - 1);
  for (std::size_t i = 0; i < h.rows(); ++i) scatter_row(h, mean, out, i, inv);
  return out;
}

}  // namespace kernels

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInputError("add: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInputError("subtract: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
  return out;
}

void add_in_place(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInputError("add_in_place: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

void scale_in_place(Matrix& a, double s) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= s;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
  return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace dmp
