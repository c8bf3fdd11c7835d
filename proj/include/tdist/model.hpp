#pragma once

#include <optional>

#include "tdist/linalg.hpp"
#include "tdist/rng.hpp"

namespace tdist {

// The triple being estimated: degrees of freedom, location, scatter.
struct StudentTParams {
  double nu = 1.0;
  Vector mu;
  SpdMatrix sigma;

  StudentTParams() = default;
  StudentTParams(double nu_, Vector mu_, SpdMatrix sigma_);
  int dim() const { return sigma.dim(); }
};

// Data points x_1..x_n with weights from the open probability simplex.
class WeightedSample {
 public:
  // points is n x d; weights must be positive and sum to 1 (abs tol 1e-12).
  WeightedSample(Matrix points, Vector weights);
  static WeightedSample uniform(Matrix points);

  int size() const { return points_.rows(); }
  int dim() const { return points_.cols(); }
  const double* point(int i) const { return points_.row(i); }
  Vector point_vec(int i) const;
  double weight(int i) const { return weights_[i]; }
  const Vector& weights() const { return weights_; }
  const Matrix& points() const { return points_; }

  // Assumption: max w_i < 1/d. Advisory only; violations are reported, not fatal.
  bool weight_bound_ok() const;

 private:
  Matrix points_;
  Vector weights_;
};

// E-step quantities: delta_i = (x_i-mu)^T Sigma^{-1} (x_i-mu) and
// gamma_i = (nu+d)/(nu+delta_i).
struct Mahalanobis {
  Vector delta;
  Vector gamma;
};

Vector mahalanobis_distances(const Vector& mu, const SpdMatrix& sigma,
                             const WeightedSample& data);

// Where the delta_i sit relative to [d - sqrt(2d), d + sqrt(2d)] decides
// whether F can have a zero (no zero when all inside, a zero when all outside).
enum class FZeroClass { NoZero, HasZero, Indeterminate };

struct FDiagnostic {
  FZeroClass classification;
  double interval_lo;
  double interval_hi;
};

FDiagnostic classify_f_zero(const Vector& deltas, int d);

double log_pdf(const StudentTParams& params, const Vector& x);
double pdf(const StudentTParams& params, const Vector& x);

// L(nu, mu, Sigma) = -2 log G((d+nu)/2) + 2 log G(nu/2) - nu log nu
//                    + (d+nu) sum w_i log(nu + delta_i) + log|Sigma|.
double neg_log_likelihood(const StudentTParams& params, const WeightedSample& data);
double neg_log_likelihood(double nu, const Vector& deltas, const Vector& weights,
                          int d, double logdet_sigma);

struct Gradient {
  Vector d_mu;
  Matrix d_sigma;
  double d_nu;
};

Gradient grad(const StudentTParams& params, const WeightedSample& data);

// F(nu/2) from the nu critical-point equation; equals dL/dnu.
double f_nu(double nu, const Vector& deltas, const Vector& weights, int d);

// Draws n samples via X = mu + Sigma^{1/2} Z / sqrt(Y), Z ~ N(0,I),
// Y ~ Gamma(nu/2, nu/2). Rows of the result are the samples.
Matrix sample(const StudentTParams& params, int n, Rng& rng);

}  // namespace tdist
