#pragma once

// First-mode (k = 1) axisymmetric equation in the gap window,
//
//   u_rr + (d-2)/r u_r - (d-2)/r^2 u + u_zz = 0,   0 < r < R0,
//
// with homogeneous Neumann data on both inclusion surfaces, u = 0 on the axis
// and Dirichlet data at r = R0. It is solved on the flattened rectangle
// [0, R0] x [0, 1] in self-adjoint form
//
//   -d_i(r^{d-2} A_ij d_j u) + (d-2) r^{d-4} J u = 0,
//
// where the Neumann condition becomes the conormal condition of A.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "gaplab/gap_geometry.hpp"

namespace gaplab {

struct GridSpec {
  int nr = 256;           // radial cells
  int ns = 32;            // cells across the gap
  double grading = -1.0;  // p: nodes uniform in int_0^r (eps + lambda0 t^m)^{-p} dt; < 0 selects 1/m

  double resolve_grading(double m) const { return grading < 0.0 ? 1.0 / m : grading; }
};

enum class LinearSolverKind {
  Auto,      // direct for <= 1e5 unknowns, otherwise preconditioned CG
  Direct,    // sparse LDL^T
  Iterative  // diagonally preconditioned conjugate gradient
};

struct SolverSpec {
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 200000;
  LinearSolverKind method = LinearSolverKind::Auto;
};

/// Dirichlet data at r = R0: a constant (default R0) or a profile in s.
struct LateralCondition {
  double value = -1.0;  // < 0 selects R0
  std::function<double(double)> profile;

  double at(double s, double R0) const {
    if (profile) return profile(s);
    return value < 0.0 ? R0 : value;
  }
};

/// Optional right-hand side, used for manufactured solutions: a source term
/// F(r, s) of the weighted equation and outward conormal fluxes
/// r^{d-2} (A grad u) . n on s = 1 (top) and s = 0 (bottom).
struct ModeForcing {
  std::function<double(double, double)> source;
  std::function<double(double)> top_flux;
  std::function<double(double)> bottom_flux;
};

struct ModeProblem {
  FlattenedChart chart;
  int d = 3;
  LateralCondition lateral;
  GridSpec grid;
  SolverSpec solver;
  ModeForcing forcing;

  /// Throws DomainError for d < 3, nr or ns < 8, or invalid grading.
  void validate() const;
};

struct ModeGrid {
  std::vector<double> r;  // nr + 1 nodes, r.front() = 0, r.back() = R0
  std::vector<double> s;  // ns + 1 nodes, uniform on [0, 1]

  int nr() const { return static_cast<int>(r.size()) - 1; }
  int ns() const { return static_cast<int>(s.size()) - 1; }
  int node(int i, int j) const { return i * (ns() + 1) + j; }
};

/// Radial nodes uniform in xi(r) = int_0^r (eps + lambda0 t^m)^{-p} dt.
std::vector<double> graded_radii(const InclusionPair& pair, int nr, double grading);
ModeGrid make_grid(const ModeProblem& problem);

struct LinearSystem {
  ModeGrid grid;
  Eigen::SparseMatrix<double> matrix;  // unknowns are nodes with 0 < r < R0
  Eigen::VectorXd rhs;
  std::vector<double> dirichlet;       // node values on r = 0 and r = R0
  int unknown_count() const { return static_cast<int>(rhs.size()); }
  /// Global node index of unknown `k`.
  int node_of(int k) const { return k + grid.ns() + 1; }
};

/// Assembles the symmetric positive definite system. The stencil couples each
/// node with its eight neighbours; conormal rows at s = 0, 1 come out of the
/// same energy with the cross term included. Throws DomainError with the
/// offending row if a diagonal entry is not positive.
LinearSystem assemble(const ModeProblem& problem);

struct SolveDiagnostics {
  std::string method;
  int iterations = 0;
  double residual = 0.0;  // ||K u - b|| / ||b||
  double boundary_min = 0.0;
  double boundary_max = 0.0;
  double solution_min = 0.0;
  double solution_max = 0.0;
  bool maximum_principle = false;
  double max_cell_diameter = 0.0;  // physical units
  double subsolution_margin = 0.0; // min over nodes of u - r
};

struct ModeSolution {
  ModeGrid grid;
  double R0 = 0.0;
  double epsilon = 0.0;
  double lambda0 = 0.0;
  double m = 2.0;
  int d = 3;
  std::vector<double> values;        // node values, index grid.node(i, j)
  std::vector<double> cell_r;        // cell centers, index i * ns + j
  std::vector<double> cell_s;
  std::vector<double> cell_z;        // physical x_d of the cell center
  std::vector<double> grad_r;        // physical d/dr at cell centers
  std::vector<double> grad_z;        // physical d/dx_d at cell centers
  std::vector<double> gap_average;   // U(r_i), s-average of u at each radial node
  SolveDiagnostics diagnostics;

  double value(int i, int j) const { return values[static_cast<std::size_t>(grid.node(i, j))]; }
  /// Linear interpolation of the gap average.
  double average_at(double r) const;
};

/// Throws ConvergenceError when the iteration cap is hit before the tolerance.
ModeSolution solve_mode(const ModeProblem& problem);

struct GradientProfile {
  double max = 0.0;
  double argmax_r = 0.0;
  double argmax_s = 0.0;
  std::vector<double> radii;    // radial cell centers inside the region
  std::vector<double> maxima;   // M(r) = max_s |grad u|
};

/// Maximum of |grad u| over cells whose center lies in [r_lo, r_hi].
GradientProfile max_gradient(const ModeSolution& sol, double r_lo, double r_hi);

/// U(r_i) at the radial nodes (trapezoidal s-average).
std::vector<double> gap_average(const ModeSolution& sol);

}  // namespace gaplab
