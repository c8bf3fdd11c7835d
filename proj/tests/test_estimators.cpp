#include <doctest.h>

#include <cmath>

#include "tdist/estimators.hpp"

using namespace tdist;

namespace {

Matrix points_from(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.begin()->size());
  Matrix m(n, d);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

SpdMatrix spd2(double a, double b, double c) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = b;
  m(1, 1) = c;
  return SpdMatrix::from_matrix(m);
}

WeightedSample sample_from_t(double nu, int n, int d, uint64_t seed, double sigma_scale = 1.0) {
  Rng rng(seed);
  const StudentTParams truth(nu, Vector(d, 0.0), SpdMatrix::scaled_identity(d, sigma_scale));
  return WeightedSample::uniform(sample(truth, n, rng));
}

double grad_norm(const Gradient& g) {
  double s = g.d_nu * g.d_nu;
  for (double v : g.d_mu) s += v * v;
  for (int r = 0; r < g.d_sigma.rows(); ++r)
    for (int c = 0; c < g.d_sigma.cols(); ++c) s += g.d_sigma(r, c) * g.d_sigma(r, c);
  return std::sqrt(s);
}

// inverse of g(rho) = rho - log1p(rho) on rho > 0, bisection oracle
double invert_gamma_log_term(double target) {
  double lo = 1e-12, hi = 1e6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - std::log1p(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("e_step examples") {
  // single point at mu: delta 0, gamma (nu+d)/nu
  const WeightedSample one = WeightedSample::uniform(points_from({{2.0, -1.0}}));
  const StudentTParams p(4.0, {2.0, -1.0}, SpdMatrix::identity(2));
  const Mahalanobis m = e_step(p, one);
  CHECK(m.delta[0] == doctest::Approx(0.0));
  CHECK(m.gamma[0] == doctest::Approx(6.0 / 4.0));

  // nu = d = 1 with delta = 1 gives gamma = 1
  const WeightedSample x1 = WeightedSample::uniform(points_from({{1.0}}));
  const Mahalanobis m1 = e_step(StudentTParams(1.0, {0.0}, SpdMatrix::identity(1)), x1);
  CHECK(m1.delta[0] == doctest::Approx(1.0));
  CHECK(m1.gamma[0] == doctest::Approx(1.0));

  // quad_form oracle: Sigma = [[2,-1],[-1,2]], x = (1,1) has delta = 2
  const WeightedSample x2 = WeightedSample::uniform(points_from({{1.0, 1.0}}));
  const Mahalanobis m2 = e_step(StudentTParams(4.0, {0.0, 0.0}, spd2(2, -1, 2)), x2);
  CHECK(m2.delta[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m2.gamma[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("m_step examples") {
  const WeightedSample data = WeightedSample::uniform(points_from({{-1.0}, {0.0}, {2.0}}));

  SUBCASE("equal gammas reduce the location to the weighted mean") {
    const Vector gammas(3, 0.7);
    auto [mu, sigma] = m_step_location_scatter(AlgorithmKind::EM, data, gammas);
    CHECK(mu[0] == doctest::Approx(1.0 / 3.0));
    (void)sigma;
  }

  SUBCASE("hand-computed update and the EM/aEM scatter ratio") {
    const Vector gammas{1.0, 2.0, 1.0};
    auto [mu_em, sigma_em] = m_step_location_scatter(AlgorithmKind::EM, data, gammas);
    auto [mu_aem, sigma_aem] = m_step_location_scatter(AlgorithmKind::AEM, data, gammas);
    CHECK(mu_em[0] == doctest::Approx(0.25));
    CHECK(mu_aem[0] == doctest::Approx(0.25));
    const double expected_em =
        (1.0 * 1.5625 + 2.0 * 0.0625 + 1.0 * 3.0625) / 3.0;  // sum w g (x - 1/4)^2
    CHECK(sigma_em(0, 0) == doctest::Approx(expected_em).epsilon(1e-14));
    const double norm = (1.0 + 2.0 + 1.0) / 3.0;
    CHECK(sigma_aem(0, 0) == doctest::Approx(expected_em / norm).epsilon(1e-14));
  }

  SUBCASE("degenerate data fails with NotPositiveDefinite") {
    const WeightedSample flat = WeightedSample::uniform(points_from({{1.0}, {1.0}, {1.0}}));
    CHECK_THROWS_AS(m_step_location_scatter(AlgorithmKind::EM, flat, Vector(3, 1.0)),
                    NotPositiveDefinite);
  }
}

TEST_CASE("nu_step_em") {
  // all gamma = 1: c = -phi((nu+d)/2), so the zero sits at nu + d exactly
  const Vector gammas(3, 1.0), w(3, 1.0 / 3.0);
  for (int d : {1, 2}) {
    for (double nu : {0.7, 3.0, 12.0}) {
      const double next = nu_step_em(nu, gammas, w, d);
      CHECK(next == doctest::Approx(nu + d).epsilon(1e-9));
    }
  }

  // residual oracle at nu_r = 3, d = 2, gamma = {0.5, 2.0}
  const double next = nu_step_em(3.0, {0.5, 2.0}, {0.5, 0.5}, 2);
  const double c = -phi(2.5) + 0.5 * (0.5 - std::log(0.5) - 1.0) + 0.5 * (2.0 - std::log(2.0) - 1.0);
  CHECK(std::fabs(phi(0.5 * next) + c) < 1e-10);
  // and the solution respects the phi bracket nu/2 in (1/(2c), 1/c)
  CHECK(0.5 * next > 0.5 / c);
  CHECK(0.5 * next < 1.0 / c);
}

TEST_CASE("nu_step_aem") {
  // deltas at d make the gamma terms vanish: same zero as the all-ones EM case
  const Vector w(3, 1.0 / 3.0);
  const Vector deltas_at_d(3, 2.0);
  CHECK(nu_step_aem(3.0, deltas_at_d, w, 2) == doctest::Approx(5.0).epsilon(1e-9));

  // differs from the EM step whenever the deltas moved
  const WeightedSample data = sample_from_t(2.0, 50, 2, 9001);
  StudentTParams params = initial_params(data, 3.0);
  const Mahalanobis maha = e_step(params, data);
  auto [mu1, sigma1] = m_step_location_scatter(AlgorithmKind::AEM, data, maha.gamma);
  const Vector deltas_next = mahalanobis_distances(mu1, sigma1, data);
  const double nu_aem = nu_step_aem(params.nu, deltas_next, data.weights(), 2);
  const double nu_em = nu_step_em(params.nu, maha.gamma, data.weights(), 2);
  CHECK(nu_aem != doctest::Approx(nu_em).epsilon(1e-12));

  // residual oracle, nu_r = 3, d = 2, deltas {1, 7}
  const double next = nu_step_aem(3.0, {1.0, 7.0}, {0.5, 0.5}, 2);
  const double g1 = 5.0 / 4.0, g2 = 5.0 / 10.0;
  const double c = -phi(2.5) + 0.5 * (g1 - std::log(g1) - 1.0) + 0.5 * (g2 - std::log(g2) - 1.0);
  CHECK(std::fabs(phi(0.5 * next) + c) < 1e-10);
}

TEST_CASE("nu_step_mmf") {
  const Vector w(2, 0.5);

  SUBCASE("b = 0 returns nu unchanged") {
    const Vector deltas_at_d(2, 2.0);
    CHECK(nu_step_mmf(3.0, deltas_at_d, w, 2) == doctest::Approx(3.0));
  }

  SUBCASE("constructed fixed point: b = |A(nu_r/2)|") {
    const double nu_r = 3.0;
    const double target = -phi_diff(0.5 * nu_r, 1.0);  // |A| for d = 2
    const double rho = invert_gamma_log_term(target);
    // rho = (d - delta)/(nu_r + delta) => delta = (d - rho nu_r)/(1 + rho)
    const double delta = (2.0 - rho * nu_r) / (1.0 + rho);
    const Vector deltas(2, delta);
    CHECK(nu_step_mmf(nu_r, deltas, w, 2) == doctest::Approx(nu_r).epsilon(1e-7));
  }

  SUBCASE("residual oracle nu_r = 3, d = 2, deltas {1, 7}") {
    const double next = nu_step_mmf(3.0, {1.0, 7.0}, w, 2);
    const double g1 = 5.0 / 4.0, g2 = 5.0 / 10.0;
    const double b = 0.5 * (g1 - std::log(g1) - 1.0) + 0.5 * (g2 - std::log(g2) - 1.0);
    CHECK(std::fabs(phi_diff(0.5 * next, 1.0) + b) < 1e-10);
  }
}

TEST_CASE("nu_step_gmmf") {
  const Vector w3(3, 1.0 / 3.0);

  SUBCASE("converges with monotone iterates and zero residual") {
    std::vector<double> trace;
    const double nu_star = nu_step_gmmf(3.0, {9.0, 10.0, 0.1}, w3, 2, {}, &trace);
    CHECK(std::fabs(f_nu(nu_star, {9.0, 10.0, 0.1}, w3, 2)) < 1e-8);
    // Lemma: iterates are monotone in the direction fixed by sign of F(nu_0)
    const bool increasing = f_nu(3.0, {9.0, 10.0, 0.1}, w3, 2) < 0.0;
    for (size_t i = 1; i < trace.size(); ++i) {
      if (increasing)
        CHECK(trace[i] >= trace[i - 1]);
      else
        CHECK(trace[i] <= trace[i - 1]);
    }
  }

  SUBCASE("an existing zero is a fixed point") {
    const Vector deltas{9.0, 10.0, 0.1};
    const double nu_star = nu_step_gmmf(3.0, deltas, w3, 2);
    const double again = nu_step_gmmf(nu_star, deltas, w3, 2);
    CHECK(again == doctest::Approx(nu_star).epsilon(1e-8));
  }

  SUBCASE("all deltas inside the band diverge to the Gaussian limit") {
    const Vector deltas{1.5, 2.0, 2.5};  // inside [0, 4] for d = 2
    CHECK_THROWS_AS(nu_step_gmmf(3.0, deltas, w3, 2), GaussianLimitSignal);
  }

  SUBCASE("ecme shares the inner iteration") {
    const Vector deltas{9.0, 10.0, 0.1};
    CHECK(nu_step_ecme(3.0, deltas, w3, 2) ==
          doctest::Approx(nu_step_gmmf(3.0, deltas, w3, 2)));
  }
}

TEST_CASE("fixed_point_map") {
  const WeightedSample data = sample_from_t(2.0, 80, 2, 424242);

  SUBCASE("composition matches the hand-chained steps") {
    const StudentTParams params(3.0, {0.1, -0.2}, spd2(1.2, 0.1, 0.9));
    const StudentTParams next = fixed_point_map(AlgorithmKind::AEM, params, data);
    const Mahalanobis maha = e_step(params, data);
    auto [mu1, sigma1] = m_step_location_scatter(AlgorithmKind::AEM, data, maha.gamma);
    const Vector deltas_next = mahalanobis_distances(mu1, sigma1, data);
    const double nu1 = nu_step_aem(params.nu, deltas_next, data.weights(), 2);
    CHECK(next.nu == nu1);
    for (int j = 0; j < 2; ++j) CHECK(next.mu[j] == mu1[j]);
    CHECK(next.sigma.matrix().max_abs_diff(sigma1.matrix()) == 0.0);
  }

  SUBCASE("symmetric data keeps mu at zero") {
    const WeightedSample sym =
        WeightedSample::uniform(points_from({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 2.0}, {0.0, -2.0}}));
    const StudentTParams params(3.0, {0.0, 0.0}, SpdMatrix::identity(2));
    for (auto kind : {AlgorithmKind::EM, AlgorithmKind::MMF}) {
      const StudentTParams next = fixed_point_map(kind, params, sym);
      CHECK(std::fabs(next.mu[0]) < 1e-15);
      CHECK(std::fabs(next.mu[1]) < 1e-15);
    }
  }

  SUBCASE("a converged fit is nearly a fixed point") {
    FitConfig cfg;
    cfg.tol = 1e-9;
    const FitResult res = fit(AlgorithmKind::MMF, data, cfg);
    REQUIRE(res.status == FitStatus::Converged);
    const StudentTParams mapped = fixed_point_map(AlgorithmKind::MMF, res.params, data);
    double num = std::fabs(mapped.nu - res.params.nu);
    double den = res.params.nu;
    for (int j = 0; j < 2; ++j) {
      num = std::max(num, std::fabs(mapped.mu[j] - res.params.mu[j]));
      den = std::max(den, std::fabs(res.params.mu[j]));
    }
    num = std::max(num, mapped.sigma.matrix().max_abs_diff(res.params.sigma.matrix()));
    CHECK(num <= 1e-6 * std::max(1.0, den));
  }
}

TEST_CASE("fit recovers nu for Cauchy-like data") {
  int close = 0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    const WeightedSample data = sample_from_t(1.0, 1000, 2, 100 + s);
    const FitResult res = fit(AlgorithmKind::GMMF, data);
    CHECK(res.status == FitStatus::Converged);
    if (std::fabs(res.params.nu - 1.0) < 0.15) ++close;
  }
  CHECK(close >= seeds - 1);  // median relative error well under 15%
}

TEST_CASE("monotone descent on random instances") {
  Rng seeder(555);
  for (auto kind : {AlgorithmKind::EM, AlgorithmKind::AEM, AlgorithmKind::MMF,
                    AlgorithmKind::GMMF, AlgorithmKind::ECME}) {
    for (int rep = 0; rep < 4; ++rep) {
      const int d = 1 + rep % 3;
      const double nu_true = rep % 2 ? 1.0 : 5.0;
      const WeightedSample data = sample_from_t(nu_true, 150, d, seeder.raw());
      const FitResult res = fit(kind, data);
      for (size_t i = 1; i < res.objective_trace.size(); ++i)
        CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-10);
    }
  }
}

TEST_CASE("one-step nu ordering") {
  Rng seeder(777);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(seeder.raw() % 3);
    const WeightedSample data = sample_from_t(1.5, 60, d, seeder.raw());
    StudentTParams params = initial_params(data, 0.5 + 8.0 * (rep / 20.0));
    // shared (mu, Sigma) update, then the three nu updates from the same state
    const Mahalanobis maha = e_step(params, data);
    auto [mu1, sigma1] = m_step_location_scatter(AlgorithmKind::AEM, data, maha.gamma);
    const Vector deltas_next = mahalanobis_distances(mu1, sigma1, data);
    const double logdet = sigma1.log_det();
    auto value = [&](double nu) {
      return neg_log_likelihood(nu, deltas_next, data.weights(), d, logdet);
    };
    const double nu_aem = nu_step_aem(params.nu, deltas_next, data.weights(), d);
    const double nu_mmf = nu_step_mmf(params.nu, deltas_next, data.weights(), d);
    double nu_gmmf;
    try {
      nu_gmmf = nu_step_gmmf(params.nu, deltas_next, data.weights(), d);
    } catch (const GaussianLimitSignal&) {
      continue;  // F without a zero: the ordering statement does not apply
    }
    const double l_r = value(params.nu);
    CHECK(value(nu_aem) <= l_r + 1e-10);
    CHECK(value(nu_mmf) <= value(nu_aem) + 1e-10);
    CHECK(value(nu_gmmf) <= value(nu_mmf) + 1e-10);
  }
}

TEST_CASE("critical point at convergence") {
  const WeightedSample data = sample_from_t(2.0, 400, 2, 31);
  FitConfig cfg;
  cfg.tol = 1e-8;
  for (auto kind : {AlgorithmKind::AEM, AlgorithmKind::MMF, AlgorithmKind::GMMF}) {
    const FitResult res = fit(kind, data, cfg);
    REQUIRE(res.status == FitStatus::Converged);
    const Gradient g = grad(res.params, data);
    const double scale = 1.0 + std::fabs(res.final_objective);
    CHECK(grad_norm(g) <= 1e-4 * scale);
  }
}

TEST_CASE("affine equivariance of the estimates") {
  const WeightedSample data = sample_from_t(1.5, 300, 2, 606);
  Matrix a(2, 2);
  a(0, 0) = 1.3;
  a(1, 0) = -0.4;
  a(1, 1) = 0.8;
  const Vector b{2.0, -1.0};
  Matrix tpts(data.size(), 2);
  for (int i = 0; i < data.size(); ++i) {
    const Vector x = a * data.point_vec(i) + b;
    tpts(i, 0) = x[0];
    tpts(i, 1) = x[1];
  }
  const WeightedSample tdata = WeightedSample::uniform(std::move(tpts));
  FitConfig cfg;
  cfg.tol = 1e-9;
  const FitResult base = fit(AlgorithmKind::MMF, data, cfg);
  const FitResult trans = fit(AlgorithmKind::MMF, tdata, cfg);
  REQUIRE(base.status == FitStatus::Converged);
  REQUIRE(trans.status == FitStatus::Converged);
  CHECK(trans.params.nu == doctest::Approx(base.params.nu).epsilon(1e-6));
  const Vector want_mu = a * base.params.mu + b;
  for (int j = 0; j < 2; ++j)
    CHECK(trans.params.mu[j] == doctest::Approx(want_mu[j]).epsilon(1e-6));
  const Matrix want_sigma = a * base.params.sigma.matrix() * a.transposed();
  CHECK(trans.params.sigma.matrix().max_abs_diff(want_sigma) <
        1e-6 * want_sigma.frobenius_norm());
}

TEST_CASE("fixed-nu mode satisfies the trace identity") {
  const WeightedSample data = sample_from_t(1.0, 200, 1, 11);
  FitConfig cfg;
  cfg.fixed_nu = 1.0;
  cfg.tol = 1e-10;
  for (auto kind : {AlgorithmKind::EM, AlgorithmKind::MMF}) {
    const FitResult res = fit(kind, data, cfg);
    REQUIRE(res.status == FitStatus::Converged);
    CHECK(res.params.nu == 1.0);
    const Vector deltas = mahalanobis_distances(res.params.mu, res.params.sigma, data);
    double acc = 0.0;
    for (int i = 0; i < data.size(); ++i)
      acc += data.weight(i) / (1.0 + deltas[i]);
    CHECK((1.0 + data.dim()) * acc == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("gaussian data reaches the Gaussian limit") {
  Rng rng(2025);
  Matrix pts(400, 2);
  for (int i = 0; i < 400; ++i) {
    pts(i, 0) = rng.normal() * 1.5;
    pts(i, 1) = rng.normal() * 0.5 + 0.2 * pts(i, 0);
  }
  const WeightedSample data = WeightedSample::uniform(std::move(pts));
  const FitResult res = fit(AlgorithmKind::GMMF, data);
  REQUIRE(res.status == FitStatus::GaussianLimit);
  REQUIRE(res.gaussian_sigma.has_value());
  const SpdMatrix want = gaussian_limit_sigma(data);
  CHECK(res.gaussian_sigma->matrix().max_abs_diff(want.matrix()) < 1e-10);
  CHECK(res.iterations >= 1);
}

TEST_CASE("fit rejects undersized samples") {
  const WeightedSample tiny = WeightedSample::uniform(points_from({{1.0, 2.0}, {0.0, 1.0}}));
  CHECK_THROWS_AS(fit(AlgorithmKind::EM, tiny), std::invalid_argument);
}
