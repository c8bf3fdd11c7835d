#include <doctest.h>

#include <cmath>

#include "tdist/rng.hpp"
#include "tdist/special.hpp"

using namespace tdist;

namespace {

struct GridPoint {
  double x, value;
};

// Reference values computed with a 40-digit arbitrary-precision evaluation.
const GridPoint kDigamma[] = {
    {0.01, -100.560885457868672}, {0.05, -20.4978449912998693},
    {0.1, -10.4237549404110762},  {0.25, -4.22745353337626541},
    {0.5, -1.96351002602142348},  {0.75, -1.08586087978647217},
    {1.0, -0.577215664901532861}, {1.5, 0.0364899739785765206},
    {2.0, 0.422784335098467139},  {3.0, 0.922784335098467139},
    {4.5, 1.3888709263595289},    {6.0, 1.70611766843180047},
    {8.0, 2.01564147795561},      {12.0, 2.44266167997581202},
    {20.0, 2.97052399224214905},  {50.0, 3.9019896734278922},
    {123.25, 4.81015253196481888},{1000.0, 6.90725519564881205},
    {31622.5, 10.3616083599117592},{1e6, 13.8155100579641908}};

const GridPoint kTrigamma[] = {
    {0.01, 10001.6212135283128},  {0.05, 401.532357342115075},
    {0.1, 101.433299150792748},   {0.25, 17.1973291545071107},
    {0.5, 4.93480220054467931},   {0.75, 2.5418796476716065},
    {1.0, 1.64493406684822644},   {1.5, 0.934802200544679309},
    {2.0, 0.644934066848226436},  {3.0, 0.394934066848226436},
    {4.5, 0.248725103039010375},  {6.0, 0.181322955737115325},
    {8.0, 0.133137014694031425},  {12.0, 0.0869018728717683908},
    {20.0, 0.0512708229352031198},{50.0, 0.0202013332266971258},
    {123.25, 0.00814659445608026499},{1000.0, 0.00100050016666663333},
    {31622.5, 3.16235532198046478e-5},{1e6, 1.00000050000016667e-6}};

const GridPoint kLogGamma[] = {
    {0.01, 4.5994798780420217},   {0.05, 2.96887920105173077},
    {0.1, 2.2527126517342059},    {0.25, 1.28802252469807746},
    {0.5, 0.572364942924700087},  {0.75, 0.203280951431295371},
    {1.0, 0.0},                   {1.5, -0.120782237635245222},
    {2.0, 0.0},                   {3.0, 0.693147180559945309},
    {4.5, 2.45373657084244222},   {6.0, 4.78749174278204599},
    {8.0, 8.5251613610654143},    {12.0, 17.5023078458738858},
    {20.0, 39.339884187199494},   {50.0, 144.565743946344886},
    {123.25, 468.614482950516644},{1000.0, 5905.22042320918121},
    {31622.5, 296033.698493027557},{1e6, 12815504.5691476117}};

double rel_err(double got, double want) {
  if (want == 0.0) return std::fabs(got);
  return std::fabs(got - want) / std::fabs(want);
}

// Direct series psi'(x) = sum 1/(x+k)^2 with an Euler-Maclaurin tail.
double trigamma_series_oracle(double x, long terms = 1000000) {
  double s = 0.0;
  for (long k = terms - 1; k >= 0; --k) s += 1.0 / ((x + k) * (x + k));
  const double tail_at = x + terms;
  s += 1.0 / tail_at + 0.5 / (tail_at * tail_at) + 1.0 / (6.0 * tail_at * tail_at * tail_at);
  return s;
}

}  // namespace

TEST_CASE("gamma-family accuracy on the reference grid") {
  for (const auto& p : kLogGamma) CHECK(rel_err(log_gamma(p.x), p.value) < 1e-13);
  for (const auto& p : kDigamma) CHECK(rel_err(digamma(p.x), p.value) < 1e-12);
  for (const auto& p : kTrigamma) CHECK(rel_err(trigamma(p.x), p.value) < 1e-10);
}

TEST_CASE("special function identities") {
  const double euler = 0.57721566490153286061;
  CHECK(log_gamma(1.0) == doctest::Approx(0.0));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
  CHECK(log_gamma(10.0) == doctest::Approx(std::log(362880.0)).epsilon(1e-14));
  CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-13));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-13));
  const double pi2 = M_PI * M_PI;
  CHECK(trigamma(1.0) == doctest::Approx(pi2 / 6.0).epsilon(1e-12));
  CHECK(trigamma(0.5) == doctest::Approx(pi2 / 2.0).epsilon(1e-12));
  CHECK(trigamma(3.7) == doctest::Approx(trigamma_series_oracle(3.7)).epsilon(1e-9));

  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.0), std::domain_error);
  CHECK_THROWS_AS(trigamma(0.0), std::domain_error);
  CHECK_THROWS_AS(phi(-2.0), std::domain_error);
}

TEST_CASE("phi and its bracketing") {
  const double euler = 0.57721566490153286061;
  CHECK(phi(1.0) == doctest::Approx(-euler).epsilon(1e-13));
  CHECK(phi(100.0) > -0.01);
  CHECK(phi(100.0) < -0.005);
  CHECK(phi(0.25) == doctest::Approx(digamma(0.25) - std::log(0.25)).epsilon(1e-13));

  // -1/x < phi(x) < -1/(2x) on a log grid, and phi strictly increasing
  double prev = -INFINITY;
  for (double lx = -3.0; lx <= 6.0; lx += 0.125) {
    const double x = std::pow(10.0, lx);
    const double p = phi(x);
    CHECK(p > -1.0 / x);
    CHECK(p < -0.5 / x);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("derivative consistency") {
  for (double x : {0.1, 1.0, 3.0, 10.0, 100.0}) {
    const double h = 1e-5 * x;
    const double fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
    CHECK(trigamma(x) == doctest::Approx(fd).epsilon(1e-5));
    const double fd_phi = (phi(x + h) - phi(x - h)) / (2.0 * h);
    CHECK(phi_prime(x) == doctest::Approx(fd_phi).epsilon(1e-5));
  }
}

TEST_CASE("phi_diff matches the naive difference and stays accurate at scale") {
  for (double t : {0.5, 1.0, 1.5, 4.0}) {
    for (double x : {0.05, 0.7, 2.0, 5.0, 20.0, 300.0}) {
      CHECK(phi_diff(x, t) == doctest::Approx(phi(x) - phi(x + t)).epsilon(1e-11));
      const double h = 1e-5 * x;
      const double fd = (phi_diff(x + h, t) - phi_diff(x - h, t)) / (2.0 * h);
      CHECK(phi_diff_prime(x, t) == doctest::Approx(fd).epsilon(1e-4));
    }
    // asymptotically A(x) ~ -t/(2x^2)
    const double x = 1e8;
    CHECK(phi_diff(x, t) < 0.0);
    CHECK(phi_diff(x, t) == doctest::Approx(-0.5 * t / (x * (x + t))).epsilon(1e-2));
  }
}

TEST_CASE("log_gamma_diff matches lgamma at moderate z and stays smooth at the switch") {
  for (double z : {0.5, 3.0, 19.0, 20.5, 100.0, 1e4}) {
    for (double h : {0.5, 1.0, 2.5}) {
      const double direct = std::lgamma(z + h) - std::lgamma(z);
      CHECK(log_gamma_diff(z, h) == doctest::Approx(direct).epsilon(1e-11));
    }
  }
}

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.95996398454005424).epsilon(1e-12));
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("safeguarded zero solver") {
  ScalarSolverConfig cfg;
  auto linear = [](double x) { return x - 5.0; };
  auto dlinear = [](double) { return 1.0; };
  CHECK(solve_increasing_zero(linear, dlinear, 1.0, cfg) == doctest::Approx(5.0));

  // phi(x) = -0.1 has its zero inside (1/(2c), 1/c) = (5, 10)
  auto f = [](double x) { return phi(x) + 0.1; };
  auto df = [](double x) { return phi_prime(x); };
  const double xstar = solve_increasing_zero(f, df, 1.0, cfg);
  CHECK(xstar > 5.0);
  CHECK(xstar < 10.0);
  CHECK(std::fabs(phi(xstar) + 0.1) < 1e-12);
  const double xstar2 = solve_increasing_zero_bracketed(f, df, 5.0, 10.0, 7.0, cfg);
  CHECK(xstar2 == doctest::Approx(xstar).epsilon(1e-10));

  auto logf = [](double x) { return std::log(x); };
  auto dlogf = [](double x) { return 1.0 / x; };
  CHECK(solve_increasing_zero(logf, dlogf, 7.0, cfg) == doctest::Approx(1.0).epsilon(1e-12));

  // increasing but negative everywhere: expansion must report no sign change
  auto neg = [](double x) { return -1.0 / x; };
  auto dneg = [](double x) { return 1.0 / (x * x); };
  CHECK_THROWS_AS(solve_increasing_zero(neg, dneg, 1.0, cfg), SolverError);
}

TEST_CASE("solver residuals on randomized monotone functions") {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const double root = std::pow(10.0, -2.0 + 5.0 * rng.uniform());
    const double a = 0.1 + 2.0 * rng.uniform();
    const double b = 2.0 * rng.uniform();
    auto f = [=](double x) { return a * (x - root) + b * std::atan(x - root); };
    auto df = [=](double x) {
      const double u = x - root;
      return a + b / (1.0 + u * u);
    };
    const double x0 = std::pow(10.0, -2.0 + 5.0 * rng.uniform());
    const double xstar = solve_increasing_zero(f, df, x0);
    CHECK(std::fabs(f(xstar)) <= 1e-10 * (1.0 + std::fabs(f(x0))));
  }
}
