#include "gaplab/gap_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "gaplab/errors.hpp"

namespace gaplab {

namespace {

constexpr int kDirectLimit = 100000;

std::string where(const ModeGrid& grid, int node) {
  const int i = node / (grid.ns() + 1);
  const int j = node % (grid.ns() + 1);
  return "row of node (i=" + std::to_string(i) + ", j=" + std::to_string(j) +
         ", r=" + std::to_string(grid.r[static_cast<std::size_t>(i)]) +
         ", s=" + std::to_string(grid.s[static_cast<std::size_t>(j)]) + ")";
}

}  // namespace

void ModeProblem::validate() const {
  if (d < 3) throw DomainError("mode problem: d must be >= 3");
  if (grid.nr < 8 || grid.ns < 8) throw DomainError("mode problem: nr and ns must be >= 8");
  if (!std::isfinite(grid.grading)) throw DomainError("mode problem: grading must be finite");
  if (!(solver.tolerance > 0.0)) throw DomainError("mode problem: solver tolerance must be positive");
  if (solver.max_iterations < 1) throw DomainError("mode problem: max_iterations must be >= 1");
}

std::vector<double> graded_radii(const InclusionPair& pair, int nr, double grading) {
  const double R0 = pair.R0;
  std::vector<double> r(static_cast<std::size_t>(nr) + 1);
  if (grading == 0.0 || pair.lambda0 == 0.0) {
    for (int i = 0; i <= nr; ++i) r[static_cast<std::size_t>(i)] = R0 * i / nr;
    return r;
  }
  const double eps = pair.epsilon;
  const double lam = pair.lambda0;
  const double m = pair.m;
  auto density = [&](double t) { return std::pow(eps + lam * std::pow(t, m), -grading); };

  // cumulative trapezoid on a fine uniform grid resolving eps^{1/m}
  const double scale = std::pow(eps / lam, 1.0 / m);
  const auto fine = static_cast<std::size_t>(
      std::clamp(std::max(100.0 * nr, 200.0 * R0 / scale), 1000.0, 5e6));
  std::vector<double> xi(fine + 1, 0.0);
  const double dt = R0 / static_cast<double>(fine);
  double prev = density(0.0);
  for (std::size_t k = 1; k <= fine; ++k) {
    const double cur = density(dt * static_cast<double>(k));
    xi[k] = xi[k - 1] + 0.5 * dt * (prev + cur);
    prev = cur;
  }
  const double total = xi.back();
  std::size_t k = 0;
  r.front() = 0.0;
  for (int i = 1; i < nr; ++i) {
    const double target = total * i / nr;
    while (xi[k + 1] < target) ++k;
    const double frac = (target - xi[k]) / (xi[k + 1] - xi[k]);
    r[static_cast<std::size_t>(i)] = dt * (static_cast<double>(k) + frac);
  }
  r.back() = R0;
  return r;
}

ModeGrid make_grid(const ModeProblem& problem) {
  const auto& pair = problem.chart.pair();
  ModeGrid grid;
  grid.r = graded_radii(pair, problem.grid.nr, problem.grid.resolve_grading(pair.m));
  grid.s.resize(static_cast<std::size_t>(problem.grid.ns) + 1);
  for (int j = 0; j <= problem.grid.ns; ++j)
    grid.s[static_cast<std::size_t>(j)] = static_cast<double>(j) / problem.grid.ns;
  for (std::size_t i = 1; i < grid.r.size(); ++i)
    if (!(grid.r[i] > grid.r[i - 1]))
      throw DomainError("mode grid: radial nodes are not strictly increasing");
  return grid;
}

LinearSystem assemble(const ModeProblem& problem) {
  problem.validate();
  const auto& chart = problem.chart;
  const double R0 = chart.R0();
  const double weight_power = problem.d - 2.0;
  auto weight = [&](double r) { return std::pow(r, weight_power); };

  LinearSystem sys;
  sys.grid = make_grid(problem);
  const auto& grid = sys.grid;
  const int nr = grid.nr();
  const int ns = grid.ns();
  const int stride = ns + 1;
  const int nodes = (nr + 1) * stride;
  const int unknowns = (nr - 1) * stride;

  // Dirichlet values on the axis and at r = R0; NaN marks unknown nodes
  sys.dirichlet.assign(static_cast<std::size_t>(nodes), std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j <= ns; ++j) {
    sys.dirichlet[static_cast<std::size_t>(grid.node(0, j))] = 0.0;
    sys.dirichlet[static_cast<std::size_t>(grid.node(nr, j))] =
        problem.lateral.at(grid.s[static_cast<std::size_t>(j)], R0);
  }
  auto unknown = [&](int node) { return node - stride; };
  auto is_free = [&](int node) { return node >= stride && node < nodes - stride; };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(unknowns) * 9 + 64);
  sys.rhs = Eigen::VectorXd::Zero(unknowns);

  // Adds coef * u_a * u_b (symmetrized) to the quadratic form.
  auto couple = [&](int a, int b, double coef) {
    const bool fa = is_free(a);
    const bool fb = is_free(b);
    if (fa && fb) {
      triplets.emplace_back(unknown(a), unknown(b), coef);
      if (a != b) triplets.emplace_back(unknown(b), unknown(a), coef);
    } else if (fa) {
      sys.rhs[unknown(a)] -= coef * sys.dirichlet[static_cast<std::size_t>(b)];
    } else if (fb) {
      sys.rhs[unknown(b)] -= coef * sys.dirichlet[static_cast<std::size_t>(a)];
    }
  };
  // coef * (u_a - u_b)^2
  auto difference = [&](int a, int b, double coef) {
    couple(a, a, coef);
    couple(b, b, coef);
    couple(a, b, -coef);
  };

  const double hs = 1.0 / ns;
  for (int i = 0; i < nr; ++i) {
    const double r_lo = grid.r[static_cast<std::size_t>(i)];
    const double r_hi = grid.r[static_cast<std::size_t>(i) + 1];
    const double hr = r_hi - r_lo;
    const double r_mid = 0.5 * (r_lo + r_hi);
    const double w_mid = weight(r_mid);
    const double w_lo = weight(r_lo);
    const double w_hi = weight(r_hi);
    for (int j = 0; j < ns; ++j) {
      const double s_lo = grid.s[static_cast<std::size_t>(j)];
      const double s_hi = grid.s[static_cast<std::size_t>(j) + 1];
      const double s_mid = 0.5 * (s_lo + s_hi);
      const int sw = grid.node(i, j);
      const int se = grid.node(i + 1, j);
      const int nw = grid.node(i, j + 1);
      const int ne = grid.node(i + 1, j + 1);

      // radial differences on the bottom and top edges
      const double k_bottom = w_mid * chart.coefficients(r_mid, s_lo).a_rr;
      const double k_top = w_mid * chart.coefficients(r_mid, s_hi).a_rr;
      difference(se, sw, 0.5 * hs * k_bottom / hr);
      difference(ne, nw, 0.5 * hs * k_top / hr);

      // transverse differences on the left and right edges
      const double k_left = w_lo * chart.coefficients(r_lo, s_mid).a_ss;
      const double k_right = w_hi * chart.coefficients(r_hi, s_mid).a_ss;
      difference(nw, sw, 0.5 * hr * k_left / hs);
      difference(ne, se, 0.5 * hr * k_right / hs);

      // cross term 2 a_rs u_r u_s with cell-centered differences:
      // hr hs 2 k (X / 2hr)(Y / 2hs) = (k/2) X Y
      const double k_cross = w_mid * chart.coefficients(r_mid, s_mid).a_rs;
      if (k_cross != 0.0) {
        const std::array<int, 4> corner{sw, se, nw, ne};
        const std::array<double, 4> x{-1.0, 1.0, -1.0, 1.0};  // radial difference pattern
        const std::array<double, 4> y{-1.0, -1.0, 1.0, 1.0};  // transverse difference pattern
        for (int a = 0; a < 4; ++a) {
          for (int b = a; b < 4; ++b) {
            const double c = 0.5 * k_cross * (a == b ? x[a] * y[a] : 0.5 * (x[a] * y[b] + x[b] * y[a]));
            if (c == 0.0) continue;
            if (a == b) {
              couple(corner[a], corner[a], c);
            } else {
              // both orderings of the off-diagonal product
              const bool fa = is_free(corner[a]);
              const bool fb = is_free(corner[b]);
              if (fa && fb) {
                triplets.emplace_back(unknown(corner[a]), unknown(corner[b]), c);
                triplets.emplace_back(unknown(corner[b]), unknown(corner[a]), c);
              } else if (fa) {
                sys.rhs[unknown(corner[a])] -= c * sys.dirichlet[static_cast<std::size_t>(corner[b])];
              } else if (fb) {
                sys.rhs[unknown(corner[b])] -= c * sys.dirichlet[static_cast<std::size_t>(corner[a])];
              }
            }
          }
        }
      }

      // reaction (d-2) r^{d-4} J u^2, lumped at the corners off the axis
      const double quarter = 0.25 * hr * hs;
      const std::array<std::pair<int, std::pair<double, double>>, 4> corners{{
          {sw, {r_lo, s_lo}}, {se, {r_hi, s_lo}}, {nw, {r_lo, s_hi}}, {ne, {r_hi, s_hi}}}};
      for (const auto& [node, rs] : corners) {
        const double rc = rs.first;
        if (rc == 0.0) continue;
        const double react = (problem.d - 2.0) * std::pow(rc, problem.d - 4.0) *
                             chart.coefficients(rc, rs.second).jacobian;
        couple(node, node, quarter * react);
        if (problem.forcing.source && is_free(node))
          sys.rhs[unknown(node)] += quarter * problem.forcing.source(rc, rs.second);
      }
    }

    // conormal flux data on s = 0 and s = 1, trapezoidal along the edge
    if (problem.forcing.top_flux) {
      const int a = grid.node(i, ns);
      const int b = grid.node(i + 1, ns);
      if (is_free(a)) sys.rhs[unknown(a)] += 0.5 * hr * problem.forcing.top_flux(r_lo);
      if (is_free(b)) sys.rhs[unknown(b)] += 0.5 * hr * problem.forcing.top_flux(r_hi);
    }
    if (problem.forcing.bottom_flux) {
      const int a = grid.node(i, 0);
      const int b = grid.node(i + 1, 0);
      if (is_free(a)) sys.rhs[unknown(a)] += 0.5 * hr * problem.forcing.bottom_flux(r_lo);
      if (is_free(b)) sys.rhs[unknown(b)] += 0.5 * hr * problem.forcing.bottom_flux(r_hi);
    }
  }

  sys.matrix.resize(unknowns, unknowns);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  for (int k = 0; k < unknowns; ++k) {
    const double diag = sys.matrix.coeff(k, k);
    if (!(diag > 0.0))
      throw DomainError("assemble: system is not positive definite; non-positive diagonal in " +
                        where(grid, sys.node_of(k)));
  }
  return sys;
}

double ModeSolution::average_at(double r) const {
  const auto& rs = grid.r;
  if (r <= rs.front()) return gap_average.front();
  if (r >= rs.back()) return gap_average.back();
  const auto it = std::upper_bound(rs.begin(), rs.end(), r);
  const auto i = static_cast<std::size_t>(it - rs.begin()) - 1;
  const double t = (r - rs[i]) / (rs[i + 1] - rs[i]);
  return (1.0 - t) * gap_average[i] + t * gap_average[i + 1];
}

ModeSolution solve_mode(const ModeProblem& problem) {
  LinearSystem sys = assemble(problem);
  const auto& grid = sys.grid;
  const int n = sys.unknown_count();

  Eigen::VectorXd x(n);
  SolveDiagnostics diag;
  const bool direct = problem.solver.method == LinearSolverKind::Direct ||
                      (problem.solver.method == LinearSolverKind::Auto && n <= kDirectLimit);
  if (direct) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.matrix);
    if (ldlt.info() != Eigen::Success)
      throw DomainError("solve_mode: factorization failed; the assembled system is not SPD");
    const auto& dvec = ldlt.vectorD();
    for (int k = 0; k < dvec.size(); ++k)
      if (!(dvec[k] > 0.0))
        throw DomainError("solve_mode: non-positive pivot; system is not SPD (pivot " +
                          std::to_string(k) + ")");
    x = ldlt.solve(sys.rhs);
    diag.method = "direct-ldlt";
    diag.iterations = 1;
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(problem.solver.tolerance);
    cg.setMaxIterations(problem.solver.max_iterations);
    cg.compute(sys.matrix);
    // start from the linear interpolant u = r (R0-scaled lateral value)
    Eigen::VectorXd guess(n);
    const double lateral = problem.lateral.at(0.5, problem.chart.R0());
    for (int k = 0; k < n; ++k) {
      const int node = sys.node_of(k);
      const double r = grid.r[static_cast<std::size_t>(node / (grid.ns() + 1))];
      guess[k] = lateral * r / problem.chart.R0();
    }
    x = cg.solveWithGuess(sys.rhs, guess);
    diag.method = "pcg-jacobi";
    diag.iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success)
      throw ConvergenceError("solve_mode: conjugate gradient stopped after " +
                             std::to_string(cg.iterations()) + " iterations at relative residual " +
                             std::to_string(cg.error()));
  }
  const double bnorm = sys.rhs.norm();
  diag.residual = (sys.matrix * x - sys.rhs).norm() / (bnorm > 0.0 ? bnorm : 1.0);
  if (!(diag.residual <= std::max(problem.solver.tolerance, 1e-8)))
    throw ConvergenceError("solve_mode: relative residual " + std::to_string(diag.residual) +
                           " above tolerance");

  const auto& chart = problem.chart;
  const auto& pair = chart.pair();
  ModeSolution sol;
  sol.grid = grid;
  sol.R0 = chart.R0();
  sol.epsilon = pair.epsilon;
  sol.lambda0 = pair.lambda0;
  sol.m = pair.m;
  sol.d = problem.d;
  sol.values = sys.dirichlet;
  for (int k = 0; k < n; ++k) sol.values[static_cast<std::size_t>(sys.node_of(k))] = x[k];

  const int nr = grid.nr();
  const int ns = grid.ns();
  const double hs = 1.0 / ns;

  diag.boundary_min = 0.0;
  diag.boundary_max = 0.0;
  for (int j = 0; j <= ns; ++j) {
    const double v = sol.value(nr, j);
    diag.boundary_min = std::min(diag.boundary_min, v);
    diag.boundary_max = std::max(diag.boundary_max, v);
  }
  diag.solution_min = *std::min_element(sol.values.begin(), sol.values.end());
  diag.solution_max = *std::max_element(sol.values.begin(), sol.values.end());
  const double slack = 1e-10 * std::max(1.0, std::abs(diag.boundary_max - diag.boundary_min));
  diag.maximum_principle = diag.solution_min >= diag.boundary_min - slack &&
                           diag.solution_max <= diag.boundary_max + slack;

  diag.subsolution_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= nr; ++i)
    for (int j = 0; j <= ns; ++j)
      diag.subsolution_margin = std::min(diag.subsolution_margin,
                                         sol.value(i, j) - grid.r[static_cast<std::size_t>(i)]);

  const std::size_t cells = static_cast<std::size_t>(nr) * static_cast<std::size_t>(ns);
  sol.cell_r.resize(cells);
  sol.cell_s.resize(cells);
  sol.cell_z.resize(cells);
  sol.grad_r.resize(cells);
  sol.grad_z.resize(cells);
  diag.max_cell_diameter = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double r_lo = grid.r[static_cast<std::size_t>(i)];
    const double r_hi = grid.r[static_cast<std::size_t>(i) + 1];
    const double hr = r_hi - r_lo;
    const double r_mid = 0.5 * (r_lo + r_hi);
    for (int j = 0; j < ns; ++j) {
      const double s_lo = grid.s[static_cast<std::size_t>(j)];
      const double s_hi = grid.s[static_cast<std::size_t>(j) + 1];
      const double s_mid = 0.5 * (s_lo + s_hi);
      const double sw = sol.value(i, j);
      const double se = sol.value(i + 1, j);
      const double nw = sol.value(i, j + 1);
      const double ne = sol.value(i + 1, j + 1);
      const double du_dr = 0.5 * ((se - sw) + (ne - nw)) / hr;
      const double du_ds = 0.5 * ((nw - sw) + (ne - se)) / hs;
      const auto c = chart.coefficients(r_mid, s_mid);
      const std::size_t cell = static_cast<std::size_t>(i) * static_cast<std::size_t>(ns) +
                               static_cast<std::size_t>(j);
      sol.cell_r[cell] = r_mid;
      sol.cell_s[cell] = s_mid;
      sol.cell_z[cell] = chart.to_physical(r_mid, s_mid);
      sol.grad_r[cell] = du_dr + c.s_r * du_ds;
      sol.grad_z[cell] = du_ds / c.jacobian;

      const double z_sw = chart.to_physical(r_lo, s_lo);
      const double z_ne = chart.to_physical(r_hi, s_hi);
      const double z_se = chart.to_physical(r_hi, s_lo);
      const double z_nw = chart.to_physical(r_lo, s_hi);
      const double diag1 = std::hypot(hr, z_ne - z_sw);
      const double diag2 = std::hypot(hr, z_nw - z_se);
      diag.max_cell_diameter = std::max({diag.max_cell_diameter, diag1, diag2});
    }
  }

  sol.gap_average.assign(static_cast<std::size_t>(nr) + 1, 0.0);
  for (int i = 0; i <= nr; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= ns; ++j) {
      const double w = (j == 0 || j == ns) ? 0.5 : 1.0;
      acc += w * sol.value(i, j);
    }
    sol.gap_average[static_cast<std::size_t>(i)] = acc * hs;
  }
  sol.diagnostics = diag;
  return sol;
}

GradientProfile max_gradient(const ModeSolution& sol, double r_lo, double r_hi) {
  GradientProfile out;
  const int nr = sol.grid.nr();
  const int ns = sol.grid.ns();
  for (int i = 0; i < nr; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(ns);
    const double rc = sol.cell_r[base];
    if (rc < r_lo || rc > r_hi) continue;
    double column = 0.0;
    for (int j = 0; j < ns; ++j) {
      const std::size_t cell = base + static_cast<std::size_t>(j);
      const double g = std::hypot(sol.grad_r[cell], sol.grad_z[cell]);
      if (g > column) column = g;
      if (g > out.max) {
        out.max = g;
        out.argmax_r = rc;
        out.argmax_s = sol.cell_s[cell];
      }
    }
    out.radii.push_back(rc);
    out.maxima.push_back(column);
  }
  return out;
}

std::vector<double> gap_average(const ModeSolution& sol) { return sol.gap_average; }

}  // namespace gaplab
