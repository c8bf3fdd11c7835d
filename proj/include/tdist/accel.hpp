#pragma once

#include <deque>
#include <functional>

#include "tdist/estimators.hpp"

namespace tdist {

enum class AccelScheme { None, Squarem, Daarem };

const char* to_string(AccelScheme scheme);
std::optional<AccelScheme> scheme_from_string(const std::string& name);

// Unconstrained chart theta = (log nu, mu, log-Cholesky of Sigma): strictly
// lower entries of the factor raw, diagonal entries logged. Every finite theta
// decodes to a valid parameter, so extrapolated candidates stay feasible.
int param_dim(int d);  // 1 + d + d(d+1)/2
Vector encode_params(const StudentTParams& params);
StudentTParams decode_params(const Vector& theta, int d);  // throws on overflow

using ChartMap = std::function<Vector(const Vector&)>;
using ChartObjective = std::function<double(const Vector&)>;

struct SquaremConfig {
  int max_backtracks = 50;
};

// One SQUAREM update: two map steps, squared extrapolation with
// alpha = min(-|s|/|v|, -1), backtracking alpha <- (alpha-1)/2 until the
// objective does not increase, then a final map application. Falls back to
// the plain double step when backtracking is exhausted.
Vector squarem_step(const ChartMap& map, const Vector& theta,
                    const ChartObjective& objective, const SquaremConfig& cfg = {});

struct DaaremConfig {
  double epsilon = 0.01;
  double epsilon_c = 0.0;
  double alpha = 1.2;
  int kappa = 25;
  int D = 50;   // 2 * kappa
  int m = 0;    // 0: use min(ceil(p/2), 10)
};

int daarem_history_size(const DaaremConfig& cfg, int p);
double daarem_delta(int s, const DaaremConfig& cfg);

struct DaaremState {
  int m = 0;            // effective history size
  std::deque<Vector> thetas;  // recent iterates, oldest first
  std::deque<Vector> residuals;
  int c = 1;
  int s = 0;
  int iter = 1;         // 1-based update counter (restart every m updates)
  double checkpoint = 0.0;  // L* of Algorithm's restart test

  // Seeds the state with theta0 and the plain first step theta1 = theta0 + f0.
  static DaaremState init(const ChartMap& map, const Vector& theta0,
                          const ChartObjective& objective, const DaaremConfig& cfg);
  const Vector& current() const { return thetas.back(); }
};

// lambda >= 0 such that |(F^T F + lambda I)^{-1} F^T f|^2 equals delta_r times
// the undamped value; bisection on log10 lambda in [-12, 12].
double solve_damping_lambda(const Matrix& F, const Vector& f, double delta_r);

// One damped-Anderson update with restarts and epsilon-monotonicity; returns
// the new iterate and advances the state.
Vector daarem_step(const ChartMap& map, DaaremState& state,
                   const ChartObjective& objective, const DaaremConfig& cfg = {});

// Outer driver matching estimators::fit but with one iteration counted per
// accelerated step. scheme == None delegates to fit() unchanged.
FitResult accelerated_fit(AlgorithmKind kind, AccelScheme scheme,
                          const WeightedSample& data, const FitConfig& cfg = {},
                          const SquaremConfig& squarem = {},
                          const DaaremConfig& daarem = {});

}  // namespace tdist
