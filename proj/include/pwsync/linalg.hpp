#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwsync {

using Vec = std::vector<double>;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a theorem or operation is applied outside its hypotheses.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix. Sizes in this library are desk-scale (n <= a few
// hundred), so no sparse storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const { return data_; }

  Matrix transpose() const;
  // (M + M^T) / 2
  Matrix symmetric_part() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix operator*(double s) const;
  Vec operator*(std::span<const double> x) const;

  double frobenius_norm() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
// Converges when the off-diagonal Frobenius norm drops below
// tol * ||M||_F.
Vec symmetric_eigenvalues(const Matrix& m, double tol = 1e-12,
                          int max_sweeps = 100);

// Largest eigenvalue of sym(m).
double lambda_max_sym(const Matrix& m);

// ||m||_2 = sqrt(lambda_max(m^T m)).
double spectral_norm(const Matrix& m);

double norm2(std::span<const double> x);
double max_entry(std::span<const double> x);
double min_entry(std::span<const double> x);

}  // namespace pwsync
