#include "tdist/estimators.hpp"

#include <chrono>
#include <cmath>

namespace tdist {

namespace {

inline double gamma_log_term(double rho) { return rho - std::log1p(rho); }

// sum w_i (gamma_i - log gamma_i - 1) evaluated at (nu, deltas).
double weighted_gamma_terms(double nu, const Vector& deltas, const Vector& weights, int d) {
  double b = 0.0;
  for (size_t i = 0; i < deltas.size(); ++i) {
    const double rho = (d - deltas[i]) / (nu + deltas[i]);
    b += weights[i] * gamma_log_term(rho);
  }
  return b;
}

// zero of phi(x) + c for c > 0, bracketed by the phi bound
// -1/x < phi(x) < -1/(2x): the zero lies in (1/(2c), 1/c).
double solve_phi_plus_c(double c, double x_start, const ScalarSolverConfig& solver) {
  auto f = [c](double x) { return phi(x) + c; };
  auto df = [](double x) { return phi_prime(x); };
  return solve_increasing_zero_bracketed(f, df, 0.5 / c, 1.0 / c, x_start, solver);
}

}  // namespace

const char* to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::EM: return "em";
    case AlgorithmKind::AEM: return "aem";
    case AlgorithmKind::MMF: return "mmf";
    case AlgorithmKind::GMMF: return "gmmf";
    case AlgorithmKind::ECME: return "ecme";
  }
  return "?";
}

std::optional<AlgorithmKind> algorithm_from_string(const std::string& name) {
  if (name == "em") return AlgorithmKind::EM;
  if (name == "aem") return AlgorithmKind::AEM;
  if (name == "mmf") return AlgorithmKind::MMF;
  if (name == "gmmf") return AlgorithmKind::GMMF;
  if (name == "ecme") return AlgorithmKind::ECME;
  return std::nullopt;
}

const char* to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIters: return "max_iters";
    case FitStatus::GaussianLimit: return "gaussian_limit";
  }
  return "?";
}

Mahalanobis e_step(const StudentTParams& params, const WeightedSample& data) {
  Mahalanobis m;
  m.delta = mahalanobis_distances(params.mu, params.sigma, data);
  m.gamma.resize(m.delta.size());
  const double nu = params.nu;
  const int d = data.dim();
  for (size_t i = 0; i < m.delta.size(); ++i) m.gamma[i] = (nu + d) / (nu + m.delta[i]);
  return m;
}

std::pair<Vector, SpdMatrix> m_step_location_scatter(AlgorithmKind kind,
                                                     const WeightedSample& data,
                                                     const Vector& gammas) {
  const int n = data.size(), d = data.dim();
  if (static_cast<int>(gammas.size()) != n)
    throw std::invalid_argument("m_step: gamma count mismatch");
  double norm = 0.0;
  Vector mu(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double wg = data.weight(i) * gammas[i];
    norm += wg;
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) mu[j] += wg * x[j];
  }
  for (int j = 0; j < d; ++j) mu[j] /= norm;

  Matrix scatter(d, d);
  Vector centered(d);
  for (int i = 0; i < n; ++i) {
    const double wg = data.weight(i) * gammas[i];
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) centered[j] = x[j] - mu[j];
    for (int r = 0; r < d; ++r)
      for (int s = 0; s <= r; ++s) scatter(r, s) += wg * centered[r] * centered[s];
  }
  const bool normalized = kind == AlgorithmKind::AEM || kind == AlgorithmKind::MMF ||
                          kind == AlgorithmKind::GMMF;
  for (int r = 0; r < d; ++r)
    for (int s = 0; s <= r; ++s) {
      if (normalized) scatter(r, s) /= norm;
      scatter(s, r) = scatter(r, s);
    }
  return {std::move(mu), SpdMatrix::from_matrix(scatter)};
}

double nu_step_em(double nu_r, const Vector& gammas, const Vector& weights, int d,
                  const ScalarSolverConfig& solver, double grad_tol) {
  if (!(nu_r > 0.0)) throw std::domain_error("nu_step_em: nu must be > 0");
  double c = -phi(0.5 * (nu_r + d));
  for (size_t i = 0; i < gammas.size(); ++i)
    c += weights[i] * gamma_log_term(gammas[i] - 1.0);
  if (grad_tol > 0.0 && std::fabs(phi(0.5 * nu_r) + c) <= grad_tol) return nu_r;
  return 2.0 * solve_phi_plus_c(c, 0.5 * nu_r, solver);
}

double nu_step_aem(double nu_r, const Vector& deltas_next, const Vector& weights,
                   int d, const ScalarSolverConfig& solver, double grad_tol) {
  if (!(nu_r > 0.0)) throw std::domain_error("nu_step_aem: nu must be > 0");
  const double c = -phi(0.5 * (nu_r + d)) + weighted_gamma_terms(nu_r, deltas_next, weights, d);
  if (grad_tol > 0.0 && std::fabs(phi(0.5 * nu_r) + c) <= grad_tol) return nu_r;
  return 2.0 * solve_phi_plus_c(c, 0.5 * nu_r, solver);
}

double nu_step_mmf(double nu_r, const Vector& deltas_next, const Vector& weights,
                   int d, const ScalarSolverConfig& solver, double grad_tol) {
  if (!(nu_r > 0.0)) throw std::domain_error("nu_step_mmf: nu must be > 0");
  const double b = weighted_gamma_terms(nu_r, deltas_next, weights, d);
  if (b <= 0.0) return nu_r;  // all gamma_i = 1: A + b < 0 everywhere, no zero
  const double t = 0.5 * d;
  if (grad_tol > 0.0 && std::fabs(phi_diff(0.5 * nu_r, t) + b) <= grad_tol) return nu_r;
  auto f = [b, t](double x) { return phi_diff(x, t) + b; };
  auto df = [t](double x) { return phi_diff_prime(x, t); };
  return 2.0 * solve_increasing_zero(f, df, 0.5 * nu_r, solver);
}

double nu_step_gmmf(double nu_r, const Vector& deltas_next, const Vector& weights,
                    int d, const InnerLoopConfig& cfg, std::vector<double>* trace) {
  if (!(nu_r > 0.0)) throw std::domain_error("nu_step_gmmf: nu must be > 0");
  double nu = nu_r;
  if (trace) trace->push_back(nu);
  if (std::fabs(f_nu(nu, deltas_next, weights, d)) <= cfg.grad_tol) return nu;
  for (int l = 0; l < cfg.max_iters; ++l) {
    const double nu_next = nu_step_mmf(nu, deltas_next, weights, d, cfg.solver);
    if (trace) trace->push_back(nu_next);
    if (nu_next > cfg.nu_max) throw GaussianLimitSignal{nu_next};
    const bool done = std::fabs(nu_next - nu) <= cfg.tol * nu ||
                      (cfg.grad_tol > 0.0 &&
                       std::fabs(f_nu(nu_next, deltas_next, weights, d)) <= cfg.grad_tol);
    nu = nu_next;
    if (done) break;
  }
  return nu;  // on max_iters the last iterate carries over; L still descends
}

double nu_step_ecme(double nu_r, const Vector& deltas_next, const Vector& weights,
                    int d, const InnerLoopConfig& cfg) {
  return nu_step_gmmf(nu_r, deltas_next, weights, d, cfg);
}

StudentTParams fixed_point_map(AlgorithmKind kind, const StudentTParams& params,
                               const WeightedSample& data, const FitConfig& cfg) {
  Mahalanobis maha = e_step(params, data);
  auto [mu_next, sigma_next] = m_step_location_scatter(kind, data, maha.gamma);
  double nu_next = params.nu;
  if (!cfg.fixed_nu) {
    const int d = data.dim();
    if (kind == AlgorithmKind::EM) {
      nu_next = nu_step_em(params.nu, maha.gamma, data.weights(), d, cfg.solver,
                           cfg.nu_grad_tol);
    } else {
      const Vector deltas_next = mahalanobis_distances(mu_next, sigma_next, data);
      switch (kind) {
        case AlgorithmKind::AEM:
          nu_next = nu_step_aem(params.nu, deltas_next, data.weights(), d, cfg.solver,
                                cfg.nu_grad_tol);
          break;
        case AlgorithmKind::MMF:
          nu_next = nu_step_mmf(params.nu, deltas_next, data.weights(), d, cfg.solver,
                                cfg.nu_grad_tol);
          break;
        case AlgorithmKind::GMMF:
        case AlgorithmKind::ECME: {
          InnerLoopConfig inner{cfg.inner_tol, cfg.inner_max_iters, cfg.nu_max, cfg.solver,
                                cfg.nu_grad_tol};
          nu_next = nu_step_gmmf(params.nu, deltas_next, data.weights(), d, inner);
          break;
        }
        default: break;
      }
    }
  }
  return StudentTParams(nu_next, std::move(mu_next), std::move(sigma_next));
}

StudentTParams initial_params(const WeightedSample& data, double nu0) {
  const int n = data.size(), d = data.dim();
  Vector mu(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double w = data.weight(i);
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) mu[j] += w * x[j];
  }
  Matrix cov(d, d);
  Vector centered(d);
  for (int i = 0; i < n; ++i) {
    const double w = data.weight(i);
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) centered[j] = x[j] - mu[j];
    for (int r = 0; r < d; ++r)
      for (int s = 0; s <= r; ++s) cov(r, s) += w * centered[r] * centered[s];
  }
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < r; ++s) cov(s, r) = cov(r, s);
  return StudentTParams(nu0, std::move(mu), SpdMatrix::from_matrix(cov));
}

double relative_step(const StudentTParams& prev, const StudentTParams& next) {
  double num = 0.0, den = 0.0;
  for (size_t j = 0; j < prev.mu.size(); ++j) {
    const double dm = next.mu[j] - prev.mu[j];
    num += dm * dm;
    den += prev.mu[j] * prev.mu[j];
  }
  const int d = prev.dim();
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) {
      const double ds = next.sigma(r, s) - prev.sigma(r, s);
      num += ds * ds;
      den += prev.sigma(r, s) * prev.sigma(r, s);
    }
  // The log-nu term is relative for nu away from 1 and saturates to the
  // absolute difference once |log nu| < 1, where a relative reading degenerates.
  const double log_prev = std::log(prev.nu);
  const double nu_term =
      std::fabs(std::log(next.nu) - log_prev) / std::max(std::fabs(log_prev), 1.0);
  return std::sqrt(num) / std::sqrt(den) + nu_term;
}

SpdMatrix gaussian_limit_sigma(const WeightedSample& data) {
  const int n = data.size(), d = data.dim();
  Vector mean(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double w = data.weight(i);
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) mean[j] += w * x[j];
  }
  Matrix second(d, d);
  Vector centered(d);
  for (int i = 0; i < n; ++i) {
    const double w = data.weight(i);
    const double* x = data.point(i);
    for (int j = 0; j < d; ++j) centered[j] = x[j] - mean[j];
    for (int r = 0; r < d; ++r)
      for (int s = 0; s <= r; ++s) second(r, s) += w * centered[r] * centered[s];
  }
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < r; ++s) second(s, r) = second(r, s);
  return SpdMatrix::from_matrix(second);
}

FitResult fit(AlgorithmKind kind, const WeightedSample& data, const FitConfig& cfg) {
  const int n = data.size(), d = data.dim();
  if (n < d + 1) throw std::invalid_argument("fit: need n >= d + 1 samples");
  const auto t0 = std::chrono::steady_clock::now();

  FitResult result;
  StudentTParams params = initial_params(data, cfg.fixed_nu.value_or(cfg.nu0));
  result.final_objective = neg_log_likelihood(params, data);
  if (cfg.record_trace) result.objective_trace.push_back(result.final_objective);
  result.status = FitStatus::MaxIters;
  result.iterations = cfg.max_outer_iters;

  for (int r = 0; r < cfg.max_outer_iters; ++r) {
    StudentTParams next;
    try {
      next = fixed_point_map(kind, params, data, cfg);
    } catch (const GaussianLimitSignal&) {
      result.status = FitStatus::GaussianLimit;
      result.iterations = r + 1;
      result.gaussian_sigma = gaussian_limit_sigma(data);
      break;
    }
    result.final_objective = neg_log_likelihood(next, data);
    if (cfg.record_trace) result.objective_trace.push_back(result.final_objective);
    const double step = relative_step(params, next);
    params = std::move(next);
    if (params.nu > cfg.nu_max) {
      result.status = FitStatus::GaussianLimit;
      result.iterations = r + 1;
      result.gaussian_sigma = gaussian_limit_sigma(data);
      break;
    }
    if (step < cfg.tol) {
      result.status = FitStatus::Converged;
      result.iterations = r + 1;
      break;
    }
  }
  result.params = std::move(params);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace tdist
