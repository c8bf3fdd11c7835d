#include "tdist/accel.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace tdist {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLambdaFloor = 1e-12;

Vector axpy2(const Vector& base, double a, const Vector& u, double b, const Vector& v) {
  Vector out(base.size());
  for (size_t i = 0; i < base.size(); ++i) out[i] = base[i] + a * u[i] + b * v[i];
  return out;
}

// gamma = (F^T F + lambda I)^{-1} F^T f for the small m x m system.
Vector damped_coefficients(const Matrix& F, const Vector& f, double lambda) {
  const int m = F.cols();
  Matrix normal(m, m);
  Vector rhs(m, 0.0);
  const int p = F.rows();
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b <= a; ++b) {
      double s = 0.0;
      for (int i = 0; i < p; ++i) s += F(i, a) * F(i, b);
      normal(a, b) = s;
      normal(b, a) = s;
    }
    double s = 0.0;
    for (int i = 0; i < p; ++i) s += F(i, a) * f[i];
    rhs[a] = s;
    normal(a, a) += lambda;
  }
  return SpdMatrix::from_matrix(normal).solve(rhs);
}

double squared_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

const char* to_string(AccelScheme scheme) {
  switch (scheme) {
    case AccelScheme::None: return "none";
    case AccelScheme::Squarem: return "squarem";
    case AccelScheme::Daarem: return "daarem";
  }
  return "?";
}

std::optional<AccelScheme> scheme_from_string(const std::string& name) {
  if (name == "none") return AccelScheme::None;
  if (name == "squarem") return AccelScheme::Squarem;
  if (name == "daarem") return AccelScheme::Daarem;
  return std::nullopt;
}

int param_dim(int d) { return 1 + d + d * (d + 1) / 2; }

Vector encode_params(const StudentTParams& params) {
  const int d = params.dim();
  Vector theta(param_dim(d));
  theta[0] = std::log(params.nu);
  for (int j = 0; j < d; ++j) theta[1 + j] = params.mu[j];
  const Matrix& L = params.sigma.chol();
  int k = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j)
      theta[k++] = (i == j) ? std::log(L(i, i)) : L(i, j);
  return theta;
}

StudentTParams decode_params(const Vector& theta, int d) {
  if (static_cast<int>(theta.size()) != param_dim(d))
    throw std::invalid_argument("decode_params: length mismatch");
  for (double x : theta)
    if (!std::isfinite(x)) throw std::domain_error("decode_params: non-finite entry");
  const double nu = std::exp(theta[0]);
  if (!std::isfinite(nu) || nu <= 0.0) throw std::domain_error("decode_params: nu overflow");
  Vector mu(theta.begin() + 1, theta.begin() + 1 + d);
  Matrix L(d, d);
  int k = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = theta[k++];
      L(i, j) = (i == j) ? std::exp(v) : v;
      if (!std::isfinite(L(i, j))) throw std::domain_error("decode_params: factor overflow");
    }
  return StudentTParams(nu, std::move(mu), SpdMatrix::from_cholesky(L));
}

Vector squarem_step(const ChartMap& map, const Vector& theta,
                    const ChartObjective& objective, const SquaremConfig& cfg) {
  const Vector theta1 = map(theta);
  Vector s(theta.size()), v(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) s[i] = theta1[i] - theta[i];
  const double s_norm = std::sqrt(squared_norm(s));
  if (s_norm == 0.0) return theta;  // fixed point
  const Vector theta2 = map(theta1);
  for (size_t i = 0; i < theta.size(); ++i) v[i] = (theta2[i] - theta1[i]) - s[i];
  const double v_norm = std::sqrt(squared_norm(v));
  if (v_norm == 0.0) return theta2;

  double alpha = -std::max(s_norm / v_norm, 1.0);
  const double l_base = objective(theta);
  for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
    const Vector candidate = axpy2(theta, -2.0 * alpha, s, alpha * alpha, v);
    if (objective(candidate) <= l_base) return map(candidate);
    alpha = 0.5 * (alpha - 1.0);
  }
  return theta2;  // monotone by L(G(G(theta))) <= L(theta)
}

int daarem_history_size(const DaaremConfig& cfg, int p) {
  if (cfg.m > 0) return cfg.m;
  return std::min((p + 1) / 2, 10);
}

double daarem_delta(int s, const DaaremConfig& cfg) {
  return 1.0 / (1.0 + std::pow(cfg.alpha, static_cast<double>(cfg.kappa - s)));
}

double solve_damping_lambda(const Matrix& F, const Vector& f, double delta_r) {
  if (!(delta_r > 0.0 && delta_r <= 1.0))
    throw std::domain_error("solve_damping_lambda: delta in (0, 1]");
  if (delta_r == 1.0) return 0.0;
  const double base = squared_norm(damped_coefficients(F, f, kLambdaFloor));
  if (base == 0.0) return 0.0;
  const double target = delta_r * base;
  auto ratio = [&](double lambda) {
    return squared_norm(damped_coefficients(F, f, lambda));
  };
  double lo = 1e-12, hi = 1e12;
  if (ratio(lo) <= target) return lo;
  if (ratio(hi) >= target) return hi;
  // geometric bisection; the squared norm is strictly decreasing in lambda
  while (hi / lo > 1.0 + 1e-8) {
    const double mid = std::sqrt(lo * hi);
    if (ratio(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

DaaremState DaaremState::init(const ChartMap& map, const Vector& theta0,
                              const ChartObjective& objective, const DaaremConfig& cfg) {
  DaaremState st;
  st.m = daarem_history_size(cfg, static_cast<int>(theta0.size()));
  const Vector g0 = map(theta0);
  Vector f0(theta0.size());
  for (size_t i = 0; i < theta0.size(); ++i) f0[i] = g0[i] - theta0[i];
  st.thetas.push_back(theta0);
  st.thetas.push_back(g0);  // theta1 = theta0 + f(theta0)
  st.residuals.push_back(std::move(f0));
  st.c = 1;
  st.s = 0;
  st.iter = 1;
  st.checkpoint = objective(st.thetas.back());
  return st;
}

Vector daarem_step(const ChartMap& map, DaaremState& state,
                   const ChartObjective& objective, const DaaremConfig& cfg) {
  const Vector& theta = state.current();
  const int p = static_cast<int>(theta.size());
  const Vector g = map(theta);
  Vector f(p);
  for (int i = 0; i < p; ++i) f[i] = g[i] - theta[i];
  state.residuals.push_back(f);

  const int m_r = std::min(state.m, state.c);
  const int have = static_cast<int>(state.residuals.size()) - 1;
  const int cols = std::min(m_r, have);

  Vector candidate = g;  // theta + f
  bool extrapolated = false;
  if (cols > 0) {
    Matrix F(p, cols), X(p, cols);
    const int base_f = static_cast<int>(state.residuals.size()) - 1 - cols;
    const int base_t = static_cast<int>(state.thetas.size()) - 1 - cols;
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < p; ++i) {
        F(i, j) = state.residuals[base_f + j + 1][i] - state.residuals[base_f + j][i];
        X(i, j) = state.thetas[base_t + j + 1][i] - state.thetas[base_t + j][i];
      }
    const double delta_r = daarem_delta(state.s, cfg);
    try {
      const double lambda = solve_damping_lambda(F, f, delta_r);
      const Vector gamma = damped_coefficients(F, f, std::max(lambda, kLambdaFloor));
      candidate = g;
      for (int j = 0; j < cols; ++j) {
        const double gj = gamma[j];
        for (int i = 0; i < p; ++i) candidate[i] -= (X(i, j) + F(i, j)) * gj;
      }
      extrapolated = true;
    } catch (const NotPositiveDefinite&) {
      candidate = g;  // rank-deficient history: fall back to the plain step
    }
  }

  int s_new = state.s;
  Vector next;
  if (extrapolated && objective(candidate) <= objective(theta) + cfg.epsilon) {
    next = std::move(candidate);
    ++s_new;
  } else {
    next = g;
  }

  if (state.iter % state.m == 0) {
    if (objective(next) > state.checkpoint + cfg.epsilon_c)
      s_new = std::max(s_new - state.m, -cfg.D);
    state.c = 1;
    state.checkpoint = objective(next);
  } else {
    state.c += 1;
  }
  state.s = std::min(s_new, cfg.D);
  state.iter += 1;

  state.thetas.push_back(next);
  while (static_cast<int>(state.thetas.size()) > state.m + 2) state.thetas.pop_front();
  while (static_cast<int>(state.residuals.size()) > state.m + 1) state.residuals.pop_front();
  return state.thetas.back();
}

FitResult accelerated_fit(AlgorithmKind kind, AccelScheme scheme,
                          const WeightedSample& data, const FitConfig& cfg,
                          const SquaremConfig& squarem, const DaaremConfig& daarem) {
  if (scheme == AccelScheme::None) return fit(kind, data, cfg);
  const int n = data.size(), d = data.dim();
  if (n < d + 1) throw std::invalid_argument("fit: need n >= d + 1 samples");
  const auto t0 = std::chrono::steady_clock::now();

  ChartMap map = [&](const Vector& th) {
    return encode_params(fixed_point_map(kind, decode_params(th, d), data, cfg));
  };
  ChartObjective objective = [&](const Vector& th) -> double {
    try {
      return neg_log_likelihood(decode_params(th, d), data);
    } catch (const GaussianLimitSignal&) {
      throw;
    } catch (...) {
      return kInf;
    }
  };

  FitResult result;
  StudentTParams params = initial_params(data, cfg.fixed_nu.value_or(cfg.nu0));
  Vector theta = encode_params(params);
  result.final_objective = neg_log_likelihood(params, data);
  if (cfg.record_trace) result.objective_trace.push_back(result.final_objective);
  result.status = FitStatus::MaxIters;
  result.iterations = cfg.max_outer_iters;

  DaaremState daarem_state;
  bool daarem_ready = false;
  int iteration = 0;
  auto finish_gaussian = [&]() {
    result.status = FitStatus::GaussianLimit;
    result.iterations = iteration + 1;
    result.gaussian_sigma = gaussian_limit_sigma(data);
  };

  for (; iteration < cfg.max_outer_iters; ++iteration) {
    Vector theta_next;
    try {
      if (scheme == AccelScheme::Squarem) {
        theta_next = squarem_step(map, theta, objective, squarem);
      } else if (!daarem_ready) {
        daarem_state = DaaremState::init(map, theta, objective, daarem);
        daarem_ready = true;
        theta_next = daarem_state.current();
      } else {
        theta_next = daarem_step(map, daarem_state, objective, daarem);
      }
    } catch (const GaussianLimitSignal&) {
      finish_gaussian();
      break;
    }
    StudentTParams next = decode_params(theta_next, d);
    result.final_objective = neg_log_likelihood(next, data);
    if (cfg.record_trace) result.objective_trace.push_back(result.final_objective);
    const double step = relative_step(params, next);
    params = std::move(next);
    theta = std::move(theta_next);
    if (params.nu > cfg.nu_max) {
      finish_gaussian();
      break;
    }
    if (step < cfg.tol) {
      result.status = FitStatus::Converged;
      result.iterations = iteration + 1;
      break;
    }
  }
  result.params = std::move(params);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace tdist
