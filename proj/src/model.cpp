#include "tdist/model.hpp"

#include <cmath>

#include "tdist/special.hpp"

namespace tdist {

namespace {
constexpr double kLogPi = 1.1447298858494001741;
// Above this nu the direct lgamma/log formula for L starts to cancel; switch
// to the Stirling-difference + log1p form (both agree to ~1e-11 there).
constexpr double kStableNu = 1000.0;

// gamma - log(gamma) - 1 for gamma = 1 + rho, stable when rho is tiny.
inline double gamma_log_term(double rho) { return rho - std::log1p(rho); }
}  // namespace

StudentTParams::StudentTParams(double nu_, Vector mu_, SpdMatrix sigma_)
    : nu(nu_), mu(std::move(mu_)), sigma(std::move(sigma_)) {
  if (!(nu > 0.0)) throw std::domain_error("StudentTParams: nu must be > 0");
  if (static_cast<int>(mu.size()) != sigma.dim())
    throw std::invalid_argument("StudentTParams: mu and sigma dimensions disagree");
}

WeightedSample::WeightedSample(Matrix points, Vector weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  const int n = points_.rows();
  if (n < 1) throw std::invalid_argument("WeightedSample: empty sample");
  if (static_cast<int>(weights_.size()) != n)
    throw std::invalid_argument("WeightedSample: weight count mismatch");
  if (!points_.finite()) throw std::invalid_argument("WeightedSample: non-finite point");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("WeightedSample: weights must be positive");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("WeightedSample: weights must sum to 1");
}

WeightedSample WeightedSample::uniform(Matrix points) {
  const int n = points.rows();
  if (n < 1) throw std::invalid_argument("WeightedSample: empty sample");
  Vector w(n, 1.0 / n);
  double sum = 0.0;
  for (int i = 0; i < n - 1; ++i) sum += w[i];
  w[n - 1] = 1.0 - sum;  // exact unit sum
  return WeightedSample(std::move(points), std::move(w));
}

Vector WeightedSample::point_vec(int i) const {
  const double* p = point(i);
  return Vector(p, p + dim());
}

bool WeightedSample::weight_bound_ok() const {
  double wmax = 0.0;
  for (double w : weights_) wmax = std::max(wmax, w);
  return wmax < 1.0 / dim();
}

Vector mahalanobis_distances(const Vector& mu, const SpdMatrix& sigma,
                             const WeightedSample& data) {
  const int n = data.size(), d = data.dim();
  if (static_cast<int>(mu.size()) != d || sigma.dim() != d)
    throw std::invalid_argument("mahalanobis_distances: dimension mismatch");
  Vector deltas(n);
  Vector centered(d), y(d);
  const Matrix& L = sigma.chol();
  for (int i = 0; i < n; ++i) {
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) centered[j] = x[j] - mu[j];
    // forward substitution, unrolled here because it is the hot loop
    double q = 0.0;
    for (int r = 0; r < d; ++r) {
      double s = centered[r];
      for (int k = 0; k < r; ++k) s -= L(r, k) * y[k];
      y[r] = s / L(r, r);
      q += y[r] * y[r];
    }
    deltas[i] = q;
  }
  return deltas;
}

FDiagnostic classify_f_zero(const Vector& deltas, int d) {
  const double half = std::sqrt(2.0 * d);
  const double lo = d - half, hi = d + half;
  bool all_inside = true, all_outside = true;
  for (double delta : deltas) {
    const bool inside = delta >= lo && delta <= hi;
    all_inside &= inside;
    all_outside &= !inside;
  }
  FZeroClass cls = FZeroClass::Indeterminate;
  if (all_inside)
    cls = FZeroClass::NoZero;
  else if (all_outside)
    cls = FZeroClass::HasZero;
  return {cls, lo, hi};
}

double log_pdf(const StudentTParams& params, const Vector& x) {
  const int d = params.dim();
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("log_pdf: dimension mismatch");
  const double nu = params.nu;
  const double delta = params.sigma.quad_form(x - params.mu);
  return log_gamma_diff(0.5 * nu, 0.5 * d) - 0.5 * d * (std::log(nu) + kLogPi) -
         0.5 * params.sigma.log_det() - 0.5 * (d + nu) * std::log1p(delta / nu);
}

double pdf(const StudentTParams& params, const Vector& x) {
  return std::exp(log_pdf(params, x));
}

double neg_log_likelihood(double nu, const Vector& deltas, const Vector& weights,
                          int d, double logdet_sigma) {
  if (!(nu > 0.0)) throw std::domain_error("neg_log_likelihood: nu must be > 0");
  const size_t n = deltas.size();
  if (weights.size() != n) throw std::invalid_argument("neg_log_likelihood: size mismatch");
  const double z = 0.5 * nu, h = 0.5 * d;
  if (nu < kStableNu) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += weights[i] * std::log(nu + deltas[i]);
    return -2.0 * (std::lgamma(z + h) - std::lgamma(z)) - nu * std::log(nu) +
           (d + nu) * s + logdet_sigma;
  }
  // Large-nu form: -2 [lgamma(z+h)-lgamma(z)-h log z] + d log 2
  //                + (d+nu) sum w_i log1p(delta_i/nu) + log|Sigma|.
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += weights[i] * std::log1p(deltas[i] / nu);
  constexpr double kLog2 = 0.69314718055994530942;
  return -2.0 * (log_gamma_diff(z, h) - h * std::log(z)) + d * kLog2 +
         (d + nu) * s + logdet_sigma;
}

double neg_log_likelihood(const StudentTParams& params, const WeightedSample& data) {
  if (params.dim() != data.dim())
    throw std::invalid_argument("neg_log_likelihood: dimension mismatch");
  const Vector deltas = mahalanobis_distances(params.mu, params.sigma, data);
  return neg_log_likelihood(params.nu, deltas, data.weights(), data.dim(),
                            params.sigma.log_det());
}

double f_nu(double nu, const Vector& deltas, const Vector& weights, int d) {
  if (!(nu > 0.0)) throw std::domain_error("f_nu: nu must be > 0");
  if (deltas.size() != weights.size()) throw std::invalid_argument("f_nu: size mismatch");
  double acc = phi_diff(0.5 * nu, 0.5 * d);
  for (size_t i = 0; i < deltas.size(); ++i) {
    const double rho = (d - deltas[i]) / (nu + deltas[i]);  // gamma_i - 1
    acc += weights[i] * gamma_log_term(rho);
  }
  return acc;
}

Gradient grad(const StudentTParams& params, const WeightedSample& data) {
  const int n = data.size(), d = data.dim();
  if (params.dim() != d) throw std::invalid_argument("grad: dimension mismatch");
  const double nu = params.nu;
  Gradient g;
  g.d_mu = Vector(d, 0.0);
  g.d_sigma = params.sigma.inverse();
  Vector deltas(n);
  Vector centered(d);
  for (int i = 0; i < n; ++i) {
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) centered[j] = x[j] - params.mu[j];
    Vector y = params.sigma.solve(centered);  // Sigma^{-1} (x_i - mu)
    deltas[i] = dot(centered, y);
    const double c = data.weight(i) / (nu + deltas[i]);
    for (int j = 0; j < d; ++j) g.d_mu[j] -= 2.0 * (d + nu) * c * y[j];
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) g.d_sigma(r, s) -= (d + nu) * c * y[r] * y[s];
  }
  g.d_nu = f_nu(nu, deltas, data.weights(), d);
  return g;
}

Matrix sample(const StudentTParams& params, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  const int d = params.dim();
  const Matrix& L = params.sigma.chol();
  Matrix out(n, d);
  Vector z(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    const double y = rng.gamma(0.5 * params.nu, 0.5 * params.nu);
    const double inv_sqrt_y = 1.0 / std::sqrt(y);
    double* row = out.row(i);
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int k = 0; k <= r; ++k) s += L(r, k) * z[k];
      row[r] = params.mu[r] + s * inv_sqrt_y;
    }
  }
  return out;
}

}  // namespace tdist
