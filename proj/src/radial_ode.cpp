#include "gaplab/radial_ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "gaplab/errors.hpp"
#include "gaplab/exponents.hpp"

namespace gaplab {

namespace odeint = boost::numeric::odeint;

void GapOdeProblem::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("radial ODE: epsilon must be positive and finite");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("radial ODE: lambda must be positive and finite");
  ExponentParams{d, m, k}.validate();
}

double GapOdeProblem::transition_radius() const { return std::pow(epsilon, 1.0 / m); }

double GapOdeProblem::mode_constant() const { return static_cast<double>(k) * (k + d - 3); }

double GapOdeProblem::profile_fraction(double r) const {
  const double x = lambda * std::pow(r, m) / epsilon;
  return x / (1.0 + x);
}

double GapOdeProblem::drift(double r) const { return (d - 2.0) / r + m * profile_fraction(r) / r; }

double RadialGridSpec::resolve_start(const GapOdeProblem& prob) const {
  if (r_min > 0.0) return r_min;
  return std::min(1e-6, prob.transition_radius() / 100.0);
}

namespace {

using State = std::array<double, 2>;  // (ln g, r g'/g) as functions of t = ln r

// Riccati form of L_k g = 0 in t = ln r:
//   (ln g)_t = phi,   phi_t = q - phi^2 - (d - 3 + m tau) phi,
// with tau the profile fraction. The bounded branch is the forward-stable
// fixed point, so forward integration from the origin stays on it.
struct RiccatiSystem {
  const GapOdeProblem& prob;
  double q;

  void operator()(const State& x, State& dxdt, double t) const {
    const double tau = prob.profile_fraction(std::exp(t));
    dxdt[0] = x[1];
    dxdt[1] = q - x[1] * x[1] - (prob.d - 3.0 + prob.m * tau) * x[1];
  }
};

double hermite(double t0, double t1, double y0, double y1, double s0, double s1, double t) {
  const double h = t1 - t0;
  const double u = (t - t0) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * s0 + (-2 * u3 + 3 * u2) * y1 +
         (u3 - u2) * h * s1;
}

}  // namespace

RadialSolution solve_g(const GapOdeProblem& prob, const RadialGridSpec& spec,
                       double boundary_value) {
  prob.validate();
  if (spec.nodes_per_decade < 8)
    throw DomainError("solve_g: grid too coarse to resolve eps^{1/m}: need >= 8 nodes per "
                      "decade, got " + std::to_string(spec.nodes_per_decade));
  const double r_start = spec.resolve_start(prob);
  if (!(r_start > 0.0 && r_start < 1.0))
    throw DomainError("solve_g: start radius must lie in (0, 1)");
  const double rt = prob.transition_radius();
  if (rt < 1.0 && r_start > rt / 10.0)
    throw DomainError("solve_g: start radius must lie at least a decade below eps^{1/m}");

  const double t_start = std::log(r_start);
  const auto n = static_cast<std::size_t>(
      std::ceil(-t_start / std::log(10.0) * spec.nodes_per_decade));
  const double h = -t_start / static_cast<double>(n);
  std::vector<double> times(n + 1);
  for (std::size_t i = 0; i <= n; ++i) times[i] = t_start + h * static_cast<double>(i);
  times.back() = 0.0;

  // Bounded indicial root c = k, corrected to first order in x = lambda r^m / eps.
  const double k = prob.k;
  const double x0 = prob.lambda * std::pow(r_start, prob.m) / prob.epsilon;
  const double phi0 = k - prob.m * k / (prob.m + 2.0 * k + prob.d - 3.0) * x0;

  RiccatiSystem system{prob, prob.mode_constant()};
  State state{0.0, phi0};
  std::vector<State> trajectory;
  trajectory.reserve(n + 1);
  try {
    auto stepper = odeint::make_dense_output(spec.step_tolerance, spec.step_tolerance,
                                             odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, system, state, times.begin(), times.end(), h / 4.0,
                            [&](const State& x, double) { trajectory.push_back(x); });
  } catch (const std::exception& e) {
    throw ConvergenceError(std::string("solve_g: integrator failed: ") + e.what());
  }
  if (trajectory.size() != n + 1)
    throw ConvergenceError("solve_g: integrator did not reach r = 1");

  const double log_g1 = trajectory.back()[0];
  RadialSolution sol;
  sol.problem = prob;
  sol.grid.resize(n + 1);
  sol.values.resize(n + 1);
  sol.derivative.resize(n + 1);
  sol.log_slope.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double r = std::exp(times[i]);
    const double g = boundary_value * std::exp(trajectory[i][0] - log_g1);
    if (!std::isfinite(g) || !std::isfinite(trajectory[i][1]))
      throw ConvergenceError("solve_g: non-finite solution value");
    sol.grid[i] = r;
    sol.values[i] = g;
    sol.log_slope[i] = trajectory[i][1];
    sol.derivative[i] = trajectory[i][1] * g / r;
  }
  sol.grid.back() = 1.0;
  sol.values.back() = boundary_value;
  sol.derivative.back() = trajectory.back()[1] * boundary_value;
  sol.normalization = boundary_value;
  return sol;
}

double RadialSolution::operator()(double r) const {
  if (!(r > 0.0)) throw DomainError("RadialSolution: evaluation radius must be positive");
  const double scale = normalization;
  if (r <= grid.front()) return values.front() * std::pow(r / grid.front(), log_slope.front());
  if (r >= grid.back()) return values.back() * std::pow(r / grid.back(), log_slope.back());
  const auto it = std::upper_bound(grid.begin(), grid.end(), r);
  const auto i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double t = std::log(r);
  const double y = hermite(std::log(grid[i]), std::log(grid[i + 1]),
                           std::log(values[i] / scale), std::log(values[i + 1] / scale),
                           log_slope[i], log_slope[i + 1], t);
  return scale * std::exp(y);
}

double ode_residual(const RadialSolution& sol) {
  const auto& prob = sol.problem;
  const std::size_t n = sol.grid.size();
  if (n < 5) return 0.0;
  const double h = std::log(sol.grid[1]) - std::log(sol.grid[0]);
  const double q = prob.mode_constant();
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double* g = &sol.values[i];
    const double gt = (-g[2] + 8.0 * g[1] - 8.0 * g[-1] + g[-2]) / (12.0 * h);
    const double gtt = (-g[2] + 16.0 * g[1] - 30.0 * g[0] + 16.0 * g[-1] - g[-2]) / (12.0 * h * h);
    const double drift = prob.d - 3.0 + prob.m * prob.profile_fraction(sol.grid[i]);
    const double res = gtt + drift * gt - q * g[0];
    const double scale = std::abs(gtt) + std::abs(drift * gt) + std::abs(q * g[0]);
    worst = std::max(worst, std::abs(res) / scale);
  }
  return worst;
}

RadialFunction RadialFunction::monomial(double c) {
  return {[c](double r) { return std::pow(r, c); },
          [c](double r) { return c * std::pow(r, c - 1.0); },
          [c](double r) { return c * (c - 1.0) * std::pow(r, c - 2.0); }};
}

double apply_L(const GapOdeProblem& prob, const RadialFunction& f, double r) {
  if (!(r > 0.0)) throw DomainError("apply_L: radius must be positive");
  const double v = f.value(r);
  double d1 = 0.0;
  double d2 = 0.0;
  const double h = 1e-3 * r;
  auto sample = [&](int j) { return f.value(r + j * h); };
  if (f.first) {
    d1 = f.first(r);
  } else {
    d1 = (-sample(2) + 8.0 * sample(1) - 8.0 * sample(-1) + sample(-2)) / (12.0 * h);
  }
  if (f.second) {
    d2 = f.second(r);
  } else {
    d2 = (-sample(2) + 16.0 * sample(1) - 30.0 * v + 16.0 * sample(-1) - sample(-2)) /
         (12.0 * h * h);
  }
  return d2 + prob.drift(r) * d1 - prob.mode_constant() / (r * r) * v;
}

double apply_L_monomial(const GapOdeProblem& prob, double c, double r) {
  if (!(r > 0.0)) throw DomainError("apply_L: radius must be positive");
  const double t = prob.profile_fraction(r);
  return std::pow(r, c - 2.0) * (c * c + (prob.d - 3.0 + prob.m * t) * c - prob.mode_constant());
}

RadialFunction lower_envelope(const GapOdeProblem& prob, double beta) {
  const double a = alpha(prob.d, prob.m);
  const double m = prob.m;
  const double lam = prob.lambda;
  const double eps = prob.epsilon;
  const double gamma = (a - beta) / m;
  const double amp = std::pow(lam, (beta - a) / m);
  auto value = [=](double r) { return amp * std::pow(r, beta) * std::pow(eps + lam * std::pow(r, m), gamma); };
  // psi = (ln f)'
  auto psi = [=](double r) {
    return beta / r + gamma * m * lam * std::pow(r, m - 1.0) / (eps + lam * std::pow(r, m));
  };
  auto dpsi = [=](double r) {
    const double s = eps + lam * std::pow(r, m);
    const double num = (m - 1.0) * std::pow(r, m - 2.0) * s - m * lam * std::pow(r, 2.0 * m - 2.0);
    return -beta / (r * r) + gamma * m * lam * num / (s * s);
  };
  return {value, [=](double r) { return value(r) * psi(r); },
          [=](double r) {
            const double p = psi(r);
            return value(r) * (p * p + dpsi(r));
          }};
}

RadialFunction linear_supersolution(double C0, double a0, double b0) {
  return {[=](double r) { return C0 * (r - a0 * std::pow(r, b0)); },
          [=](double r) { return C0 * (1.0 - a0 * b0 * std::pow(r, b0 - 1.0)); },
          [=](double r) { return -C0 * a0 * b0 * (b0 - 1.0) * std::pow(r, b0 - 2.0); }};
}

SupersolutionConstants r0_C0(double epsilon, int d, double m, double lambda, double a0,
                             double b0) {
  ExponentParams{d, m, 1}.validate();
  if (!(epsilon > 0.0)) throw DomainError("r0_C0: epsilon must be positive");
  if (!(lambda > 0.0)) throw DomainError("r0_C0: lambda must be positive");
  if (!(a0 > 0.0)) throw DomainError("r0_C0: a0 must be positive");
  if (!(b0 > 1.0 && b0 < m + 1.0)) throw DomainError("r0_C0: b0 must satisfy 1 < b0 < m + 1");
  const double a = alpha(d, m);
  SupersolutionConstants out;
  const double base = a0 * (b0 - 1.0) * (d + b0 - 2.0) / (m * lambda * (1.0 + a0 * b0)) * epsilon;
  out.r0 = std::pow(base, 1.0 / (m + 1.0 - b0));
  const double denom = 1.0 - a0 * std::pow(out.r0, b0 - 1.0);
  if (!(denom > 0.0))
    throw DomainError("r0_C0: 1 - a0 r0^{b0-1} <= 0; r0 too large for the chosen (a0, b0)");
  out.C0 = std::pow(out.r0, a - 1.0) / denom;
  return out;
}

double p_poly(double beta, int d, double m, double t) {
  const double a = alpha(d, m);
  const double c2 = (beta - a) * (beta - a);
  const double c1 = (a - beta) * (d + m + 2.0 * beta - 3.0) + m * beta;
  const double c0 = (d - 2.0 + beta) * (beta - 1.0);
  return (c2 * t + c1) * t + c0;
}

double p_poly_derivative(double beta, int d, double m, double t) {
  const double a = alpha(d, m);
  return 2.0 * (beta - a) * (beta - a) * t + (a - beta) * (d + m + 2.0 * beta - 3.0) + m * beta;
}

bool p_poly_nonincreasing(double beta, int d, double m) {
  // rounding slack relative to the size of the coefficients
  const double slack = 1e-12 * (1.0 + beta * beta + d + m);
  return p_poly_derivative(beta, d, m, 0.0) <= slack && p_poly_derivative(beta, d, m, 1.0) <= slack;
}

namespace {

// Magnitude of the individual terms of L f, used to judge the sign of a residual.
double operator_scale(const GapOdeProblem& prob, const RadialFunction& f, double r) {
  return std::abs(f.second(r)) + std::abs(prob.drift(r) * f.first(r)) +
         std::abs(prob.mode_constant() / (r * r) * f.value(r));
}

}  // namespace

BoundsCertificate certify_bounds(const GapOdeProblem& prob, const RadialSolution& sol,
                                 double beta, double a0, double b0, double tol) {
  prob.validate();
  if (!(sol.problem == prob)) throw DomainError("certify_bounds: solution was solved for a different problem");
  if (prob.k != 1) throw DomainError("certify_bounds: envelopes are stated for the first mode (k = 1)");
  const double a = alpha(prob.d, prob.m);
  // sign-check slack for L(envelope), relative to the operator's term magnitudes
  constexpr double kSignSlack = 1e-9;

  BoundsCertificate cert;
  cert.tolerance = tol;

  auto& lower = cert.lower;
  lower.kind = EnvelopeKind::Subsolution;
  lower.name = "min{r, lambda^{(beta-alpha)/m} r^beta (eps+lambda r^m)^{(alpha-beta)/m}} <= g";
  lower.beta = beta;
  lower.min_margin = std::numeric_limits<double>::infinity();

  auto& upper = cert.power_upper;
  upper.kind = EnvelopeKind::Supersolution;
  upper.name = "g <= r^alpha";
  upper.beta = a;
  upper.min_margin = std::numeric_limits<double>::infinity();

  auto& linear = cert.linear_upper;
  linear.kind = EnvelopeKind::Supersolution;
  linear.name = "g <= C0 r on (0, r0)";
  linear.a0 = a0;
  linear.b0 = b0;
  // for large eps the C0 denominator is not positive and the bound is vacuous
  SupersolutionConstants consts{0.0, 0.0};
  bool linear_applies = true;
  try {
    consts = r0_C0(prob.epsilon, prob.d, prob.m, prob.lambda, a0, b0);
  } catch (const DomainError&) {
    if (!(a0 > 0.0 && b0 > 1.0 && b0 < prob.m + 1.0)) throw;
    linear_applies = false;
    linear.name += " (not applicable: 1 - a0 r0^{b0-1} <= 0)";
  }
  linear.r0 = consts.r0;
  linear.C0 = consts.C0;
  linear.min_margin = std::numeric_limits<double>::infinity();

  const RadialFunction env = lower_envelope(prob, beta);
  const RadialFunction power = RadialFunction::monomial(a);
  const RadialFunction super = linear_supersolution(linear_applies ? consts.C0 : 1.0, a0, b0);

  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    const double r = sol.grid[i];
    const double g = sol.values[i];

    // lower: L(env) >= 0, and min{r, env} <= g
    ++lower.nodes_checked;
    const double l_env = apply_L(prob, env, r);
    const double s_env = operator_scale(prob, env, r);
    if (l_env < -kSignSlack * s_env) {
      ++lower.residual_sign_violations;
      lower.max_residual_violation = std::max(lower.max_residual_violation, -l_env / s_env);
    }
    const double floor = std::min(r, env.value(r));
    const double excess = floor / g - 1.0;
    lower.min_margin = std::min(lower.min_margin, -excess);
    if (excess > tol) {
      ++lower.bound_violations;
      lower.max_violation = std::max(lower.max_violation, excess);
    }

    // upper: L(r^alpha) <= 0, and g <= r^alpha
    ++upper.nodes_checked;
    const double l_pow = apply_L(prob, power, r);
    const double s_pow = operator_scale(prob, power, r);
    if (l_pow > kSignSlack * s_pow) {
      ++upper.residual_sign_violations;
      upper.max_residual_violation = std::max(upper.max_residual_violation, l_pow / s_pow);
    }
    const double over = g / std::pow(r, a) - 1.0;
    upper.min_margin = std::min(upper.min_margin, -over);
    if (over > tol) {
      ++upper.bound_violations;
      upper.max_violation = std::max(upper.max_violation, over);
    }

    // linear: L(C0 (r - a0 r^b0)) <= 0 and g <= C0 r on (0, r0)
    if (linear_applies && r < consts.r0) {
      ++linear.nodes_checked;
      const double l_sup = apply_L(prob, super, r);
      const double s_sup = operator_scale(prob, super, r);
      if (l_sup > kSignSlack * s_sup) {
        ++linear.residual_sign_violations;
        linear.max_residual_violation = std::max(linear.max_residual_violation, l_sup / s_sup);
      }
      const double lin_over = g / (consts.C0 * r) - 1.0;
      linear.min_margin = std::min(linear.min_margin, -lin_over);
      if (lin_over > tol) {
        ++linear.bound_violations;
        linear.max_violation = std::max(linear.max_violation, lin_over);
      }
    }
  }
  return cert;
}

DecayReport mode_decay(const GapOdeProblem& prob, const RadialGridSpec& spec, double tol) {
  prob.validate();
  if (prob.lambda != 1.0) throw DomainError("mode_decay: the decay bound is normalized to lambda = 1");
  DecayReport report;
  report.k = prob.k;
  report.alpha_k = alpha_k(ExponentParams{prob.d, prob.m, prob.k});
  report.tolerance = tol;
  report.solution = solve_g(prob, spec, 1.0);
  const auto& sol = report.solution;
  report.sup_ratio = 0.0;
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    const double ratio = sol.values[i] / std::pow(sol.grid[i], report.alpha_k);
    if (ratio > report.sup_ratio) {
      report.sup_ratio = ratio;
      report.argsup = sol.grid[i];
    }
  }
  report.passed = report.sup_ratio <= 1.0 + tol;
  return report;
}

UniquenessProfile uniqueness_profile(const GapOdeProblem& prob, const RadialSolution& sol) {
  prob.validate();
  if (!(sol.problem == prob)) throw DomainError("uniqueness_diagnostic: mismatched problem");
  const std::size_t n = sol.grid.size();
  // integrand of int ds/G(s) written in t = ln s (ds = s dt)
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sol.grid[i];
    const double g = sol.values[i];
    f[i] = s / (g * g * std::pow(s, prob.d - 2.0) * (prob.epsilon + prob.lambda * std::pow(s, prob.m)));
  }
  UniquenessProfile out;
  out.grid = sol.grid;
  out.values.assign(n, 0.0);
  double tail = 0.0;  // int_{r_i}^1
  for (std::size_t i = n - 1; i-- > 0;) {
    const double h = std::log(sol.grid[i + 1]) - std::log(sol.grid[i]);
    const double ratio = f[i + 1] / f[i];
    // exact for integrands exponential in t
    const double piece = std::abs(ratio - 1.0) < 1e-8 ? h * 0.5 * (f[i] + f[i + 1])
                                                      : h * (f[i + 1] - f[i]) / std::log(ratio);
    tail += piece;
    out.values[i] = sol.values[i] * tail;
  }
  out.at_min = out.values.front();
  return out;
}

double uniqueness_diagnostic(const GapOdeProblem& prob, const RadialSolution& sol) {
  return uniqueness_profile(prob, sol).at_min;
}

}  // namespace gaplab
