#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "gaplab/errors.hpp"
#include "gaplab/exponents.hpp"
#include "gaplab/radial_ode.hpp"

using namespace gaplab;

namespace {

double sup_error(const RadialSolution& g, double lo, double c) {
  double err = 0.0;
  for (std::size_t i = 0; i < g.grid.size(); ++i)
    if (g.grid[i] >= lo) err = std::max(err, std::abs(g.values[i] - std::pow(g.grid[i], c)));
  return err;
}

}  // namespace

TEST_CASE("solve_g normalization and monotonicity") {
  for (double eps : {1e-2, 1e-3, 1e-5}) {
    const auto g = solve_g(GapOdeProblem{eps, 3, 2.0, 1.0, 1});
    CHECK(g.grid.back() == 1.0);
    CHECK(g.values.back() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      CHECK(g.values[i] > 0.0);
      if (i > 0) CHECK(g.values[i] > g.values[i - 1]);
    }
    CHECK(ode_residual(g) <= 1e-6);
  }
}

TEST_CASE("solve_g limits") {
  const double a = alpha(3, 2.0);
  CHECK(sup_error(solve_g(GapOdeProblem{1e-12, 3, 2.0, 1.0, 1}), 0.1, a) <= 1e-3);
  CHECK(sup_error(solve_g(GapOdeProblem{1e8, 3, 2.0, 1.0, 1}), 0.01, 1.0) <= 1e-3);
  CHECK(sup_error(solve_g(GapOdeProblem{1e8, 3, 2.0, 1.0, 1}), 0.1, 1.0) <= 1e-3);
}

TEST_CASE("solve_g lies strictly between r and r^alpha") {
  const double a = alpha(3, 2.0);
  const auto g = solve_g(GapOdeProblem{1e-3, 3, 2.0, 1.0, 1});
  for (std::size_t i = 0; i + 1 < g.grid.size(); ++i) {
    const double r = g.grid[i];
    CHECK(g.values[i] > r);
    CHECK(g.values[i] < std::pow(r, a));
  }
}

TEST_CASE("solve_g is linear in the boundary value") {
  const GapOdeProblem prob{1e-3, 4, 3.0, 2.0 / 3.0, 1};
  const auto g1 = solve_g(prob);
  const auto g3 = solve_g(prob, {}, 3.0);
  REQUIRE(g1.grid.size() == g3.grid.size());
  for (std::size_t i = 0; i < g1.grid.size(); ++i)
    CHECK(g3.values[i] == doctest::Approx(3.0 * g1.values[i]).epsilon(1e-14));
}

TEST_CASE("solve_g does not depend on the start radius") {
  const GapOdeProblem prob{1e-3, 3, 2.0, 1.0, 1};
  RadialGridSpec a, b;
  a.r_min = 1e-6;
  b.r_min = 1e-8;
  const auto ga = solve_g(prob, a);
  const auto gb = solve_g(prob, b);
  for (double r : {1e-5, 1e-3, 0.01, 0.03, 0.1, 0.5})
    CHECK(ga(r) == doctest::Approx(gb(r)).epsilon(1e-7));
}

TEST_CASE("solve_g rejects bad input") {
  CHECK_THROWS_AS(solve_g(GapOdeProblem{0.0, 3, 2.0, 1.0, 1}), DomainError);
  CHECK_THROWS_AS(solve_g(GapOdeProblem{1e-3, 3, 2.0, -1.0, 1}), DomainError);
  CHECK_THROWS_AS(solve_g(GapOdeProblem{1e-3, 2, 2.0, 1.0, 1}), DomainError);
  RadialGridSpec coarse;
  coarse.nodes_per_decade = 4;
  CHECK_THROWS_AS(solve_g(GapOdeProblem{1e-3, 3, 2.0, 1.0, 1}, coarse), DomainError);
  RadialGridSpec late;
  late.r_min = 0.05;
  CHECK_THROWS_AS(solve_g(GapOdeProblem{1e-3, 3, 2.0, 1.0, 1}, late), DomainError);
}

TEST_CASE("apply_L on monomials and envelopes") {
  const GapOdeProblem prob{1e-3, 3, 2.0, 1.0, 1};
  const double a = alpha(3, 2.0);
  for (double r : {1e-4, 1e-3, 0.03, 0.2, 0.9}) {
    const double expected = prob.m * prob.profile_fraction(r) / r;
    CHECK(apply_L(prob, RadialFunction::monomial(1.0), r) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(apply_L(prob, RadialFunction::monomial(1.0), r) > 0.0);
    CHECK(apply_L_monomial(prob, a, r) <= 0.0);
    // finite-difference fallback agrees with the closed form
    RadialFunction f{[a](double x) { return std::pow(x, a); }, {}, {}};
    CHECK(apply_L(prob, f, r) == doctest::Approx(apply_L_monomial(prob, a, r)).epsilon(1e-5));
  }
  for (int k : {1, 2, 3}) {
    const GapOdeProblem pk{1e-4, 3, 2.0, 1.0, k};
    const double ak = alpha_k(ExponentParams{3, 2.0, k});
    for (double r : {1e-5, 1e-3, 0.01, 0.1, 0.99}) CHECK(apply_L_monomial(pk, ak, r) <= 0.0);
  }
  CHECK_THROWS_AS(apply_L(prob, RadialFunction::monomial(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(apply_L(prob, RadialFunction::monomial(1.0), -1.0), DomainError);
}

TEST_CASE("r0 and C0") {
  const double a = alpha(3, 2.0);
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const auto c = r0_C0(eps, 3, 2.0, 1.0, 1.0, 2.0);
    CHECK(c.r0 == doctest::Approx(eps / 2.0).epsilon(1e-15));
    CHECK(c.C0 == doctest::Approx(std::pow(eps / 2.0, a - 1.0) / (1.0 - eps / 2.0)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(r0_C0(1e-3, 3, 2.0, 1.0, 1.0, 3.0), DomainError);
  CHECK_THROWS_AS(r0_C0(1e-3, 3, 2.0, 1.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(r0_C0(1e-3, 3, 2.0, 1.0, 0.0, 2.0), DomainError);
  // r0 >= 1 makes the C0 denominator non-positive
  CHECK_THROWS_AS(r0_C0(10.0, 3, 2.0, 1.0, 1.0, 2.0), DomainError);
}

TEST_CASE("certify_bounds") {
  SUBCASE("zero violations across the tested range") {
    for (int d : {3, 4}) {
      for (double m : {2.0, 3.0}) {
        const double beta = subsolution_threshold(d, m);
        for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
          const GapOdeProblem prob{eps, d, m, 2.0 / m, 1};
          const auto cert = certify_bounds(prob, solve_g(prob), beta);
          CAPTURE(d);
          CAPTURE(m);
          CAPTURE(eps);
          CHECK(cert.valid());
          CHECK(cert.lower.nodes_checked > 0);
          CHECK(cert.linear_upper.nodes_checked > 0);
        }
      }
    }
  }
  SUBCASE("corrupted profile is rejected") {
    const GapOdeProblem prob{1e-3, 3, 2.0, 1.0, 1};
    auto g = solve_g(prob);
    const double a = alpha(3, 2.0);
    for (std::size_t i = 0; i + 1 < g.grid.size(); ++i) g.values[i] = 1.1 * std::pow(g.grid[i], a);
    const auto cert = certify_bounds(prob, g, subsolution_threshold(3, 2.0));
    CHECK_FALSE(cert.valid());
    CHECK(cert.power_upper.bound_violations > 0);
  }
  SUBCASE("large epsilon: g is r") {
    const GapOdeProblem prob{1e8, 3, 2.0, 1.0, 1};
    const auto g = solve_g(prob);
    double dev = 0.0;
    for (std::size_t i = 0; i < g.grid.size(); ++i)
      dev = std::max(dev, std::abs(g.values[i] / g.grid[i] - 1.0));
    CHECK(dev <= 1e-6);
    CHECK(certify_bounds(prob, g, subsolution_threshold(3, 2.0)).lower.valid());
  }
  SUBCASE("mismatched problem") {
    const auto g = solve_g(GapOdeProblem{1e-3, 3, 2.0, 1.0, 1});
    CHECK_THROWS_AS(certify_bounds(GapOdeProblem{1e-4, 3, 2.0, 1.0, 1}, g, std::sqrt(2.0)),
                    DomainError);
    CHECK_THROWS_AS(certify_bounds(GapOdeProblem{1e-3, 3, 2.0, 1.0, 2}, g, std::sqrt(2.0)),
                    DomainError);
  }
}

TEST_CASE("mode decay") {
  const auto v1 = mode_decay(GapOdeProblem{1e-3, 3, 2.0, 1.0, 1});
  const auto g = solve_g(GapOdeProblem{1e-3, 3, 2.0, 1.0, 1});
  for (double r : {1e-4, 1e-2, 0.5}) CHECK(v1.solution(r) == doctest::Approx(g(r)).epsilon(1e-12));

  for (int k : {1, 2, 3}) {
    for (double eps : {1e-3, 1e-4}) {
      const auto rep = mode_decay(GapOdeProblem{eps, 3, 2.0, 1.0, k});
      CAPTURE(k);
      CAPTURE(eps);
      CHECK(rep.passed);
      CHECK(rep.sup_ratio <= 1.0 + 1e-3);
    }
  }
  const auto k2 = mode_decay(GapOdeProblem{1e-4, 3, 2.0, 1.0, 2});
  CHECK(k2.alpha_k == doctest::Approx(std::sqrt(5.0) - 1.0).epsilon(1e-15));

  // epsilon -> infinity: V -> r^{c+}, c+ the positive root of c^2 + (d-3) c - k(k+d-3)
  for (int k : {1, 2, 3}) {
    const int d = 4;
    const double cplus = positive_quadratic_root(d - 3.0, k * (k + d - 3.0));
    const auto rep = mode_decay(GapOdeProblem{1e8, d, 2.0, 1.0, k});
    for (double r : {0.1, 0.3, 0.7})
      CHECK(rep.solution(r) == doctest::Approx(std::pow(r, cplus)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(mode_decay(GapOdeProblem{1e-3, 3, 2.0, 2.0, 1}), DomainError);
}

TEST_CASE("uniqueness diagnostic") {
  const GapOdeProblem prob{1e-3, 3, 2.0, 1.0, 1};
  RadialGridSpec spec;
  spec.r_min = 1e-5;
  const auto g = solve_g(prob, spec);
  const auto prof = uniqueness_profile(prob, g);
  CHECK(prof.values.back() == 0.0);
  CHECK(uniqueness_diagnostic(prob, g) >= 1e3);
  CHECK(prof.diverges(1e3));

  // g = r, d = 3: I(r) = (1/r - r) / (2 eps) up to the lambda r^m correction
  const GapOdeProblem flat{1e8, 3, 2.0, 1.0, 1};
  const auto gf = solve_g(flat);
  const auto pf = uniqueness_profile(flat, gf);
  for (std::size_t i = 0; i + 1 < pf.grid.size(); i += 37) {
    const double r = pf.grid[i];
    CHECK(pf.values[i] == doctest::Approx((1.0 / r - r) / (2.0 * flat.epsilon)).epsilon(1e-4));
  }
}

TEST_CASE("linear bound is skipped when C0 is undefined") {
  const GapOdeProblem prob{1e8, 3, 2.0, 1.0, 1};
  const auto cert = certify_bounds(prob, solve_g(prob), std::sqrt(2.0));
  CHECK(cert.linear_upper.nodes_checked == 0);
  CHECK(cert.valid());
  CHECK_THROWS_AS(certify_bounds(prob, solve_g(prob), std::sqrt(2.0), 1.0, 3.0), DomainError);
}
