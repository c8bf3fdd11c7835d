#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tdist {

// Domain: x > 0 for all gamma-family functions below.
double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

// phi(x) = psi(x) - log(x). Strictly increasing and negative, with
// -1/x < phi(x) < -1/(2x).
double phi(double x);
double phi_prime(double x);

// A(x) = phi(x) - phi(x+t), evaluated without cancellation for large x,
// where the naive difference of two O(1/x) values loses the O(t/x^2) result.
double phi_diff(double x, double t);
double phi_diff_prime(double x, double t);

// lgamma(z+h) - lgamma(z) without forming the two large values (z >= 20).
double log_gamma_diff(double z, double h);

// Standard normal CDF and quantile (used by the block homogeneity test).
double normal_cdf(double x);
double normal_quantile(double p);

struct ScalarSolverConfig {
  double rel_tol = 1e-12;
  int max_iters = 200;
  double bracket_growth = 2.0;
};

struct SolverError : std::runtime_error {
  enum Kind { NoSignChange, MaxIters };
  Kind kind;
  SolverError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

namespace detail {

// Newton with a maintained sign-change bracket; steps leaving the bracket are
// replaced by bisection. f must be increasing with f(lo) < 0 < f(hi).
template <class F, class DF>
double newton_bisect(F&& f, DF&& df, double lo, double hi, double x0, double f_scale,
                     const ScalarSolverConfig& cfg) {
  double x = x0;
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  const double f_tol = cfg.rel_tol * f_scale;
  double fx = f(x);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (fx == 0.0 || std::fabs(fx) <= f_tol) return x;
    if (fx < 0.0) lo = x; else hi = x;
    if (hi - lo <= cfg.rel_tol * std::max(std::fabs(x), std::numeric_limits<double>::min()))
      return x;
    const double d = df(x);
    double xn = (d > 0.0 && std::isfinite(d)) ? x - fx / d : lo;
    if (!(xn > lo && xn < hi) || !std::isfinite(xn)) xn = 0.5 * (lo + hi);
    x = xn;
    fx = f(x);
  }
  throw SolverError(SolverError::MaxIters, "scalar solver: max iterations");
}

}  // namespace detail

// Finds the zero of a strictly increasing f on (0, inf), expanding a bracket
// geometrically from x0. Throws NoSignChange when the expansion exhausts the
// double range without a sign change (the caller's "no zero" diagnostic).
template <class F, class DF>
double solve_increasing_zero(F&& f, DF&& df, double x0,
                             const ScalarSolverConfig& cfg = {}) {
  if (!(x0 > 0.0)) throw std::domain_error("solve_increasing_zero: x0 must be > 0");
  double fx0 = f(x0);
  if (fx0 == 0.0) return x0;
  const double scale = 1.0 + std::fabs(fx0);
  double lo, hi;
  if (fx0 < 0.0) {
    lo = x0;
    hi = x0;
    for (;;) {
      if (hi > 1e300)
        throw SolverError(SolverError::NoSignChange, "no sign change while expanding up");
      lo = hi;
      hi *= cfg.bracket_growth;
      double fh = f(hi);
      if (std::isnan(fh))
        throw SolverError(SolverError::NoSignChange, "non-finite value while expanding up");
      if (fh >= 0.0) break;
    }
  } else {
    hi = x0;
    lo = x0;
    for (;;) {
      if (lo < 1e-300)
        throw SolverError(SolverError::NoSignChange, "no sign change while expanding down");
      hi = lo;
      lo /= cfg.bracket_growth;
      double fl = f(lo);
      if (std::isnan(fl))
        throw SolverError(SolverError::NoSignChange, "non-finite value while expanding down");
      if (fl <= 0.0) break;
    }
  }
  return detail::newton_bisect(f, df, lo, hi, x0, scale, cfg);
}

// Same solver with a caller-supplied bracket (grown outward a little if
// rounding spoiled the sign conditions at the endpoints).
template <class F, class DF>
double solve_increasing_zero_bracketed(F&& f, DF&& df, double lo, double hi, double x0,
                                       const ScalarSolverConfig& cfg = {}) {
  double flo = f(lo), fhi = f(hi);
  for (int k = 0; k < 64 && !(flo < 0.0); ++k) {
    lo /= cfg.bracket_growth;
    flo = f(lo);
  }
  for (int k = 0; k < 64 && !(fhi > 0.0); ++k) {
    hi *= cfg.bracket_growth;
    fhi = f(hi);
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo < 0.0 && fhi > 0.0))
    throw SolverError(SolverError::NoSignChange, "bracket endpoints do not straddle zero");
  const double scale = 1.0 + std::min(std::fabs(flo), std::fabs(fhi));
  return detail::newton_bisect(f, df, lo, hi, x0, scale, cfg);
}

}  // namespace tdist
