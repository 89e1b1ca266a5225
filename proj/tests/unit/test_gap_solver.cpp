#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "gaplab/errors.hpp"
#include "gaplab/gap_geometry.hpp"
#include "gaplab/gap_solver.hpp"

using namespace gaplab;

namespace {

ModeProblem make_problem(const InclusionPair& pair, int nr, int ns, int d = 3) {
  ModeProblem p{build_chart(pair), d};
  p.grid.nr = nr;
  p.grid.ns = ns;
  return p;
}

// u* = r (1 + s^2) with the source and conormal fluxes of the weighted
// operator computed by central differences of the exact flux.
struct Manufactured {
  FlattenedChart chart;
  int d;

  static double exact(double r, double s) { return r * (1.0 + s * s); }

  double weight(double r) const { return std::pow(r, d - 2.0); }
  double flux_r(double r, double s) const {
    const auto c = chart.coefficients(r, s);
    return weight(r) * (c.a_rr * (1.0 + s * s) + c.a_rs * 2.0 * r * s);
  }
  double flux_s(double r, double s) const {
    const auto c = chart.coefficients(r, s);
    return weight(r) * (c.a_rs * (1.0 + s * s) + c.a_ss * 2.0 * r * s);
  }
  double source(double r, double s) const {
    const double h = 1e-5;
    const double rm = std::max(r - h, 0.0);
    const double rp = std::min(r + h, chart.R0());
    const double dr = (flux_r(rp, s) - flux_r(rm, s)) / (rp - rm);
    const double sm = std::max(s - h, 0.0);
    const double sp = std::min(s + h, 1.0);
    const double ds = (flux_s(r, sp) - flux_s(r, sm)) / (sp - sm);
    const double react = (d - 2.0) * std::pow(r, d - 4.0) * chart.coefficients(r, s).jacobian;
    return -dr - ds + react * exact(r, s);
  }
};

double manufactured_error(int nr, int ns, int d) {
  const auto pair = InclusionPair::m_ellipsoids(2.0, 1.0, 1.0, 0.05, 0.3);
  ModeProblem p = make_problem(pair, nr, ns, d);
  p.grid.grading = 0.0;
  const Manufactured mf{p.chart, d};
  p.lateral.profile = [R0 = pair.R0](double s) { return Manufactured::exact(R0, s); };
  p.forcing.source = [mf](double r, double s) { return mf.source(r, s); };
  p.forcing.top_flux = [mf](double r) { return mf.flux_s(r, 1.0); };
  p.forcing.bottom_flux = [mf](double r) { return -mf.flux_s(r, 0.0); };
  const auto sol = solve_mode(p);
  double err = 0.0;
  for (int i = 0; i <= sol.grid.nr(); ++i)
    for (int j = 0; j <= sol.grid.ns(); ++j)
      err = std::max(err, std::abs(sol.value(i, j) -
                                   Manufactured::exact(sol.grid.r[static_cast<std::size_t>(i)],
                                                       sol.grid.s[static_cast<std::size_t>(j)])));
  return err;
}

}  // namespace

TEST_CASE("graded radii") {
  const auto pair = InclusionPair::m_ellipsoids(2.0, 1.0, 1.0, 1e-4, 0.3);
  const auto r = graded_radii(pair, 256, 0.5);
  REQUIRE(r.size() == 257);
  CHECK(r.front() == 0.0);
  CHECK(r.back() == doctest::Approx(0.3).epsilon(1e-15));
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
  // cells are much finer inside the transition radius than near R0
  CHECK(r[1] - r[0] < 0.05 * (r[256] - r[255]));
  const auto u = graded_radii(pair, 16, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == doctest::Approx(0.3 * i / 16.0));
}

TEST_CASE("problem validation") {
  const auto pair = InclusionPair::m_ellipsoids(2.0, 1.0, 1.0, 1e-3);
  CHECK_THROWS_AS(assemble(make_problem(pair, 4, 32)), DomainError);
  CHECK_THROWS_AS(assemble(make_problem(pair, 64, 4)), DomainError);
  CHECK_THROWS_AS(assemble(make_problem(pair, 64, 16, 2)), DomainError);
}

TEST_CASE("assembled matrix is symmetric") {
  const auto pair = InclusionPair::m_ellipsoids(2.0, 1.0, 1.0, 1e-3);
  for (int d : {3, 4}) {
    const auto sys = assemble(make_problem(pair, 64, 16, d));
    const Eigen::SparseMatrix<double> asym = sys.matrix - Eigen::SparseMatrix<double>(sys.matrix.transpose());
    CHECK(asym.norm() <= 1e-12 * sys.matrix.norm());
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd x(sys.unknown_count()), y(sys.unknown_count());
      for (int k = 0; k < x.size(); ++k) {
        x[k] = nd(rng);
        y[k] = nd(rng);
      }
      const double lhs = (sys.matrix * x).dot(y);
      const double rhs = x.dot(sys.matrix * y);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0));
      CHECK(x.dot(sys.matrix * x) > 0.0);
    }
  }
}

TEST_CASE("flat plates reproduce u = r") {
  const auto pair = InclusionPair::flat_plates(1e-2, 0.3);
  const auto sol = solve_mode(make_problem(pair, 256, 32));
  double err = 0.0;
  for (int i = 0; i <= sol.grid.nr(); ++i)
    for (int j = 0; j <= sol.grid.ns(); ++j)
      err = std::max(err, std::abs(sol.value(i, j) - sol.grid.r[static_cast<std::size_t>(i)]));
  CHECK(err <= 1e-6);
  const auto prof = max_gradient(sol, 0.0, 0.3);
  CHECK(std::abs(prof.max - 1.0) <= 1e-3);
  for (std::size_t i = 0; i < sol.gap_average.size(); ++i)
    CHECK(sol.gap_average[i] == doctest::Approx(sol.grid.r[i]).epsilon(1e-6).scale(1e-6));
  CHECK(sol.diagnostics.maximum_principle);
}

TEST_CASE("manufactured solution converges at second order") {
  for (int d : {3, 4}) {
    const double coarse = manufactured_error(32, 8, d);
    const double fine = manufactured_error(64, 16, d);
    const double finer = manufactured_error(128, 32, d);
    CAPTURE(d);
    CAPTURE(coarse);
    CAPTURE(fine);
    CAPTURE(finer);
    CHECK(fine / finer >= 3.5);
    CHECK(fine / finer <= 4.5);
    CHECK(coarse / fine >= 3.0);
  }
}

TEST_CASE("first mode in the m-ellipsoid gap") {
  const auto pair = InclusionPair::m_ellipsoids(2.0, 1.0, 1.0, 1e-3);
  const auto sol = solve_mode(make_problem(pair, 256, 32));
  const auto& dg = sol.diagnostics;
  CHECK(dg.maximum_principle);
  CHECK(dg.residual <= 1e-8);
  CHECK(dg.solution_min >= dg.boundary_min - 1e-12);
  CHECK(dg.solution_max <= dg.boundary_max + 1e-12);
  CHECK(dg.subsolution_margin >= -10.0 * dg.max_cell_diameter * dg.max_cell_diameter);
  for (int j = 0; j <= sol.grid.ns(); ++j) CHECK(sol.value(0, j) == 0.0);
  CHECK(sol.gap_average.front() == 0.0);
  for (int i = 0; i <= sol.grid.nr(); ++i)
    for (int j = 0; j <= sol.grid.ns(); ++j)
      CHECK(sol.value(i, j) >= sol.grid.r[static_cast<std::size_t>(i)] - 1e-12);
  const auto prof = max_gradient(sol, 0.0, 0.15);
  CHECK(prof.max > 1.0);
  CHECK(prof.argmax_r < 0.15);
  CHECK(prof.radii.size() == prof.maxima.size());
  CHECK(*std::max_element(prof.maxima.begin(), prof.maxima.end()) == prof.max);
  CHECK(sol.average_at(0.0) == 0.0);
}

TEST_CASE("solution is linear in the lateral data") {
  const auto pair = InclusionPair::m_ellipsoids(3.0, 1.0, 1.0, 1e-3);
  ModeProblem a = make_problem(pair, 128, 16);
  ModeProblem b = a;
  b.lateral.value = 2.0 * pair.R0;
  const auto sa = solve_mode(a);
  const auto sb = solve_mode(b);
  for (std::size_t k = 0; k < sa.values.size(); ++k)
    CHECK(sb.values[k] == doctest::Approx(2.0 * sa.values[k]).epsilon(1e-8).scale(1e-12));
}

TEST_CASE("iterative and direct solvers agree") {
  const auto pair = InclusionPair::m_ellipsoids(2.0, 1.0, 1.0, 1e-3);
  ModeProblem direct = make_problem(pair, 128, 16);
  direct.solver.method = LinearSolverKind::Direct;
  ModeProblem cg = direct;
  cg.solver.method = LinearSolverKind::Iterative;
  const auto sd = solve_mode(direct);
  const auto sc = solve_mode(cg);
  CHECK(sc.diagnostics.iterations > 0);
  CHECK(sc.diagnostics.residual <= 1e-10);
  double diff = 0.0;
  for (std::size_t k = 0; k < sd.values.size(); ++k) diff = std::max(diff, std::abs(sd.values[k] - sc.values[k]));
  CHECK(diff <= 1e-7);

  ModeProblem capped = cg;
  capped.solver.max_iterations = 3;
  CHECK_THROWS_AS(solve_mode(capped), ConvergenceError);
}
