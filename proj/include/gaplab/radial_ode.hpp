#pragma once

// Singular radial ODE of the gap-averaged first mode,
//
//   L_k g = g'' + ((d-2)/r + m lambda r^{m-1}/(eps + lambda r^m)) g' - k(k+d-3)/r^2 g = 0,
//
// on (0, 1) with g(1) = 1 and g bounded at the origin, together with the
// explicit sub/supersolution envelopes that bracket its solution.

#include <functional>
#include <string>
#include <vector>

namespace gaplab {

struct GapOdeProblem {
  double epsilon = 1e-3;  // gap distance, > 0
  int d = 3;
  double m = 2.0;
  double lambda = 1.0;    // gap-profile coefficient, > 0
  int k = 1;              // mode index

  void validate() const;

  /// eps^{1/m}: radius where eps and the profile lambda r^m balance.
  double transition_radius() const;
  /// k(k + d - 3)
  double mode_constant() const;
  /// lambda r^m / (eps + lambda r^m), in [0, 1).
  double profile_fraction(double r) const;
  /// (d-2)/r + m lambda r^{m-1}/(eps + lambda r^m)
  double drift(double r) const;

  bool operator==(const GapOdeProblem&) const = default;
};

struct RadialGridSpec {
  double r_min = 0.0;           // <= 0 selects min(1e-6, eps^{1/m}/100)
  int nodes_per_decade = 64;    // log-uniform nodes; at least 8
  double step_tolerance = 1e-10;

  double resolve_start(const GapOdeProblem& prob) const;
};

/// Bounded solution of L_k g = 0 sampled on a log-uniform grid ending at r = 1.
struct RadialSolution {
  GapOdeProblem problem;
  std::vector<double> grid;        // strictly increasing, grid.back() == 1
  std::vector<double> values;      // g(r_i)
  std::vector<double> derivative;  // g'(r_i)
  std::vector<double> log_slope;   // r g'/g at r_i
  double normalization = 1.0;      // g(1)

  /// Cubic Hermite interpolation of ln g in ln r; power-law extension below grid.front().
  double operator()(double r) const;
  double start_radius() const { return grid.front(); }
};

/// Integrates the bounded branch from the start radius to r = 1 and scales by
/// linearity so that g(1) = boundary_value.
/// Throws DomainError for an invalid problem or a grid too coarse to resolve
/// eps^{1/m}; ConvergenceError when the integrator fails.
RadialSolution solve_g(const GapOdeProblem& prob, const RadialGridSpec& spec = {},
                       double boundary_value = 1.0);

/// Largest relative ODE residual at interior nodes, with g_t and g_tt taken
/// from fourth-order central differences in t = ln r on the solution grid.
double ode_residual(const RadialSolution& sol);

/// A radial profile with optional closed-form derivatives. Missing
/// derivatives are replaced by fourth-order central differences.
struct RadialFunction {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;

  static RadialFunction monomial(double c);
};

/// Residual L_k f(r); throws DomainError for r <= 0.
double apply_L(const GapOdeProblem& prob, const RadialFunction& f, double r);

/// Exact identity L_k r^c = r^{c-2}[c^2 + (d - 3 + m t) c - k(k+d-3)],
/// t = lambda r^m/(eps + lambda r^m).
double apply_L_monomial(const GapOdeProblem& prob, double c, double r);

/// lambda^{(beta-alpha)/m} r^beta (eps + lambda r^m)^{(alpha-beta)/m}
RadialFunction lower_envelope(const GapOdeProblem& prob, double beta);
/// C0 (r - a0 r^{b0})
RadialFunction linear_supersolution(double C0, double a0, double b0);

struct SupersolutionConstants {
  double r0 = 0.0;
  double C0 = 0.0;
};

/// r0 = (a0 (b0-1)(d+b0-2) eps / (m lambda (1 + a0 b0)))^{1/(m+1-b0)},
/// C0 = r0^{alpha-1} / (1 - a0 r0^{b0-1}).
/// Requires a0 > 0 and 1 < b0 < m + 1; throws DomainError when the C0
/// denominator is not positive.
SupersolutionConstants r0_C0(double epsilon, int d, double m, double lambda, double a0 = 1.0,
                             double b0 = 2.0);

/// p(t) = (beta-alpha)^2 t^2 + ((alpha-beta)(d+m+2beta-3) + m beta) t + (d-2+beta)(beta-1)
double p_poly(double beta, int d, double m, double t);
double p_poly_derivative(double beta, int d, double m, double t);
/// p'(t) <= 0 on [0, 1] (p' is affine, so both endpoints are checked).
bool p_poly_nonincreasing(double beta, int d, double m);

enum class EnvelopeKind { Subsolution, Supersolution };

struct SubSuperCertificate {
  EnvelopeKind kind = EnvelopeKind::Subsolution;
  std::string name;
  double beta = 0.0;  // lower envelope exponent, or alpha for r^alpha
  double a0 = 0.0;
  double b0 = 0.0;
  double r0 = 0.0;
  double C0 = 0.0;
  int nodes_checked = 0;
  int residual_sign_violations = 0;  // nodes where L(envelope) has the wrong sign
  double max_residual_violation = 0.0;
  int bound_violations = 0;          // nodes where g lies on the wrong side
  double max_violation = 0.0;        // largest relative excursion
  double min_margin = 0.0;           // smallest relative gap between g and the envelope

  bool valid() const { return residual_sign_violations == 0 && bound_violations == 0; }
};

struct BoundsCertificate {
  double tolerance = 1e-6;
  SubSuperCertificate lower;        // min{r, lower_envelope} <= g
  SubSuperCertificate power_upper;  // g <= r^alpha
  SubSuperCertificate linear_upper; // g <= C0 r on (0, r0)

  bool valid() const { return lower.valid() && power_upper.valid() && linear_upper.valid(); }
};

/// Checks the two-sided envelope bounds on every grid node, with relative
/// tolerance `tol`. Requires k == 1 and sol solved for prob. When eps is so
/// large that C0 is undefined the linear bound checks no nodes.
BoundsCertificate certify_bounds(const GapOdeProblem& prob, const RadialSolution& sol,
                                 double beta, double a0 = 1.0, double b0 = 2.0,
                                 double tol = 1e-6);

struct DecayReport {
  int k = 1;
  double alpha_k = 0.0;
  double sup_ratio = 0.0;  // sup_r V(r)/r^{alpha_k}
  double argsup = 1.0;
  double tolerance = 1e-3;
  bool passed = false;
  RadialSolution solution;
};

/// Solves L_k V = 0, V(1) = 1 and bounds V by r^{alpha_k}. Requires lambda == 1.
DecayReport mode_decay(const GapOdeProblem& prob, const RadialGridSpec& spec = {},
                       double tol = 1e-3);

struct UniquenessProfile {
  std::vector<double> grid;
  std::vector<double> values;  // I(r) = g(r) int_r^1 ds / (g^2 s^{d-2} (eps + lambda s^m))
  double at_min = 0.0;

  bool diverges(double threshold) const { return at_min >= threshold; }
};

UniquenessProfile uniqueness_profile(const GapOdeProblem& prob, const RadialSolution& sol);
/// I at the smallest grid node.
double uniqueness_diagnostic(const GapOdeProblem& prob, const RadialSolution& sol);

}  // namespace gaplab
