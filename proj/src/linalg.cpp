#include "tdist/linalg.hpp"

#include <cmath>

namespace tdist {

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("matrix product: dimension mismatch");
  Matrix out(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < rhs.cols_; ++j) out(i, j) += aik * rhs(k, j);
    }
  return out;
}

Vector Matrix::operator*(const Vector& v) const {
  if (cols_ != static_cast<int>(v.size()))
    throw std::invalid_argument("matrix-vector product: dimension mismatch");
  Vector out(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("matrix sum: dimension mismatch");
  Matrix out = *this;
  for (size_t i = 0; i < a_.size(); ++i) out.a_[i] += rhs.a_[i];
  return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("matrix difference: dimension mismatch");
  Matrix out = *this;
  for (size_t i = 0; i < a_.size(); ++i) out.a_[i] -= rhs.a_[i];
  return out;
}

Matrix& Matrix::operator*=(double c) {
  for (double& x : a_) x *= c;
  return *this;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double x : a_) s += x * x;
  return std::sqrt(s);
}

double Matrix::max_abs_diff(const Matrix& rhs) const {
  double m = 0.0;
  for (size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::fabs(a_[i] - rhs.a_[i]));
  return m;
}

bool Matrix::finite() const {
  for (double x : a_)
    if (!std::isfinite(x)) return false;
  return true;
}

SpdMatrix SpdMatrix::from_matrix(const Matrix& m, double pivot_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SpdMatrix: matrix not square");
  if (!m.finite()) throw std::invalid_argument("SpdMatrix: non-finite entries");
  const int d = m.rows();
  SpdMatrix out;
  out.d_ = d;
  out.m_ = Matrix(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.m_(i, j) = 0.5 * (m(i, j) + m(j, i));

  // Standard left-looking Cholesky, no pivoting.
  Matrix& L = out.chol_;
  L = Matrix(d, d);
  for (int j = 0; j < d; ++j) {
    double diag = out.m_(j, j);
    for (int k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > pivot_tol)) throw NotPositiveDefinite(j);
    L(j, j) = std::sqrt(diag);
    for (int i = j + 1; i < d; ++i) {
      double s = out.m_(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return out;
}

SpdMatrix SpdMatrix::from_cholesky(const Matrix& lower) {
  if (lower.rows() != lower.cols()) throw std::invalid_argument("from_cholesky: not square");
  const int d = lower.rows();
  SpdMatrix out;
  out.d_ = d;
  out.chol_ = Matrix(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) out.chol_(i, j) = lower(i, j);
    if (!(out.chol_(i, i) > 0.0) || !std::isfinite(out.chol_(i, i)))
      throw NotPositiveDefinite(i);
  }
  out.m_ = Matrix(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k <= j; ++k) s += out.chol_(i, k) * out.chol_(j, k);
      out.m_(i, j) = s;
      out.m_(j, i) = s;
    }
  if (!out.m_.finite()) throw std::invalid_argument("from_cholesky: overflow");
  return out;
}

SpdMatrix SpdMatrix::scaled_identity(int d, double c) {
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = c;
  return from_matrix(m);
}

Vector SpdMatrix::solve_lower(const Vector& v) const {
  if (static_cast<int>(v.size()) != d_)
    throw std::invalid_argument("solve_lower: dimension mismatch");
  Vector y(d_);
  for (int i = 0; i < d_; ++i) {
    double s = v[i];
    for (int k = 0; k < i; ++k) s -= chol_(i, k) * y[k];
    y[i] = s / chol_(i, i);
  }
  return y;
}

Vector SpdMatrix::solve(const Vector& v) const {
  Vector y = solve_lower(v);
  // back substitution with L^T
  for (int i = d_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < d_; ++k) s -= chol_(k, i) * y[k];
    y[i] = s / chol_(i, i);
  }
  return y;
}

double SpdMatrix::quad_form(const Vector& v) const {
  Vector y = solve_lower(v);
  double s = 0.0;
  for (double x : y) s += x * x;
  return s;
}

double SpdMatrix::log_det() const {
  double s = 0.0;
  for (int i = 0; i < d_; ++i) s += std::log(chol_(i, i));
  return 2.0 * s;
}

Matrix SpdMatrix::inverse() const {
  Matrix inv(d_, d_);
  Vector e(d_, 0.0);
  for (int j = 0; j < d_; ++j) {
    e[j] = 1.0;
    Vector col = solve(e);
    for (int i = 0; i < d_; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  // symmetrize round-off
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < i; ++j) {
      double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

SpdMatrix cholesky(const Matrix& m, double pivot_tol) {
  return SpdMatrix::from_matrix(m, pivot_tol);
}

double quad_form(const SpdMatrix& m, const Vector& v) { return m.quad_form(v); }

double log_det(const SpdMatrix& m) { return m.log_det(); }

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector difference: dimension mismatch");
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector operator+(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector sum: dimension mismatch");
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector scaled(const Vector& v, double c) {
  Vector out(v);
  for (double& x : out) x *= c;
  return out;
}

}  // namespace tdist
