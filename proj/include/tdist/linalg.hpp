#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdist {

using Vector = std::vector<double>;

// Cholesky pivot fell below tolerance: the input is not (numerically)
// positive definite, e.g. fewer than d independent samples.
struct NotPositiveDefinite : std::runtime_error {
  int pivot;
  explicit NotPositiveDefinite(int pivot_index)
      : std::runtime_error("matrix not positive definite (pivot " +
                           std::to_string(pivot_index) + ")"),
        pivot(pivot_index) {}
};

// Small dense row-major matrix. Everything here is O(d^3) without blocking;
// the estimators only ever see d up to ~16.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        a_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) {
    return a_[static_cast<size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return a_[static_cast<size_t>(i) * cols_ + j];
  }
  const double* row(int i) const { return a_.data() + static_cast<size_t>(i) * cols_; }
  double* row(int i) { return a_.data() + static_cast<size_t>(i) * cols_; }

  Matrix transposed() const;
  Matrix operator*(const Matrix& rhs) const;
  Vector operator*(const Vector& v) const;
  Matrix operator+(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix& operator*=(double c);

  double frobenius_norm() const;
  double max_abs_diff(const Matrix& rhs) const;
  bool finite() const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// Symmetric positive definite matrix carrying its lower Cholesky factor.
// Immutable after construction; safe to share across threads.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  // Symmetrizes the input as (M + M^T)/2, then factors. Throws
  // NotPositiveDefinite if a pivot falls at or below pivot_tol.
  static SpdMatrix from_matrix(const Matrix& m, double pivot_tol = 1e-300);

  // Builds Sigma = L L^T from a lower-triangular factor with positive diagonal.
  static SpdMatrix from_cholesky(const Matrix& lower);

  static SpdMatrix identity(int d) { return from_cholesky(Matrix::identity(d)); }
  static SpdMatrix scaled_identity(int d, double c);

  int dim() const { return d_; }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  const Matrix& chol() const { return chol_; }

  // v^T Sigma^{-1} v via forward substitution on the Cholesky factor.
  double quad_form(const Vector& v) const;
  // Solves L y = v (forward substitution).
  Vector solve_lower(const Vector& v) const;
  // Solves Sigma y = v.
  Vector solve(const Vector& v) const;
  double log_det() const;
  Matrix inverse() const;

 private:
  int d_ = 0;
  Matrix m_;
  Matrix chol_;
};

// Operation-style entry points used throughout the estimators.
SpdMatrix cholesky(const Matrix& m, double pivot_tol = 1e-300);
double quad_form(const SpdMatrix& m, const Vector& v);
double log_det(const SpdMatrix& m);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
Vector operator-(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);
Vector scaled(const Vector& v, double c);

}  // namespace tdist
