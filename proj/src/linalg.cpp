#include "pwsync/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pwsync {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ValidationError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::symmetric_part() const {
  if (!square()) throw ValidationError("symmetric_part of non-square matrix");
  Matrix s(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
  return s;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw ValidationError("matrix product shape mismatch");
  Matrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
    }
  return out;
}

Matrix Matrix::operator*(double s) const {
  Matrix out = *this;
  for (auto& v : out.data_) v *= s;
  return out;
}

Vec Matrix::operator*(std::span<const double> x) const {
  if (x.size() != cols_) throw ValidationError("matrix-vector shape mismatch");
  Vec y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

double Matrix::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

Vec symmetric_eigenvalues(const Matrix& m, double tol, int max_sweeps) {
  if (!m.square()) throw ValidationError("eigenvalues of non-square matrix");
  const std::size_t n = m.rows();
  Matrix a = m;
  const double scale = a.frobenius_norm();

  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  for (int sweep = 0; sweep < max_sweeps && scale > 0.0; ++sweep) {
    if (off_norm() < tol * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  Vec eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double lambda_max_sym(const Matrix& m) {
  const Vec eig = symmetric_eigenvalues(m.symmetric_part());
  return eig.empty() ? -std::numeric_limits<double>::infinity() : eig.back();
}

double spectral_norm(const Matrix& m) {
  const Vec eig = symmetric_eigenvalues(m.transpose() * m);
  return eig.empty() ? 0.0 : std::sqrt(std::max(eig.back(), 0.0));
}

double norm2(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

double max_entry(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  return *std::max_element(x.begin(), x.end());
}

double min_entry(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::infinity();
  return *std::min_element(x.begin(), x.end());
}

}  // namespace pwsync
