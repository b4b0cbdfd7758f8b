#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace dmp {

/// Dense row-major double-precision matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::vector<double> col(std::size_t j) const;
  void set_col(std::size_t j, const std::vector<double>& v);

  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Dense kernels. Each has an OpenMP-parallel entry point and a serial
/// reference used by the tests and the benchmark. Every output element is
/// accumulated in a fixed order, so the two variants agree bitwise.
namespace kernels {

Matrix multiply(const Matrix& a, const Matrix& b);          // A * B
Matrix multiply_at_b(const Matrix& a, const Matrix& b);     // A^T * B
Matrix multiply_a_bt(const Matrix& a, const Matrix& b);     // A * B^T

Matrix multiply_serial(const Matrix& a, const Matrix& b);
Matrix multiply_at_b_serial(const Matrix& a, const Matrix& b);
Matrix multiply_a_bt_serial(const Matrix& a, const Matrix& b);

/// (1/(n-1)) * (H - mean 1^T)(H - mean 1^T)^T for column-sample layout.
Matrix scatter(const Matrix& h, const std::vector<double>& mean);
Matrix scatter_serial(const Matrix& h, const std::vector<double>& mean);

}  // namespace kernels

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
void add_in_place(Matrix& a, const Matrix& b);
void scale_in_place(Matrix& a, double s);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

}  // namespace dmp
