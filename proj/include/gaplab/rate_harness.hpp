#pragma once

// Epsilon sweeps of the gap solver, log-log rate fits against the exponent
// algebra, and the bundled verification report.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaplab/exponents.hpp"
#include "gaplab/sweep_config.hpp"

namespace gaplab {

struct SweepRow {
  // CSV columns
  double epsilon = 0.0;
  double max_grad = 0.0;    // max |grad u| over r <= R0/2
  double u_at_eps1m = 0.0;  // gap average U at r = eps^{1/m}
  double grad_lb = 0.0;     // U(eps^{1/m}) / eps^{1/m}
  double c1_est = 0.0;      // U / g at r = eps^{1/m}

  // diagnostics
  double max_grad_radius = 0.0;
  double profile_bound = 0.0;       // sup_{r <= R0/2} M(r) / (eps + lambda0 r^m)^{(alpha-1)/m}
  double c1_spread = 0.0;           // max/min of U/g on [eps^{1/m}, min(4 eps^{1/m}, R0/2)]
  double decay_slope = 0.0;         // slope of ln U against ln r on [eps^{1/m}, R0/2]
  double decay_slope_ode = 0.0;     // same fit for the radial profile g on the same nodes
  double decay_bound = 0.0;         // sup of U(r)/r^alpha on [eps^{1/m}, R0/2]
  double subsolution_margin = 0.0;  // min over nodes of u - r
  double subsolution_allowance = 0.0;  // 10 h^2
  bool maximum_principle = false;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  int nr = 0;
  int ns = 0;
};

struct SweepResult {
  SweepConfig config;
  ExponentResult targets;
  double lambda0 = 0.0;
  std::vector<SweepRow> rows;
};

/// Solves every epsilon of the configuration (up to cfg.parallelism at a
/// time); rows come back in configuration order regardless of completion
/// order. A failing solve aborts the sweep with the epsilon in the message.
SweepResult run_sweep(const SweepConfig& cfg);

/// Measures one epsilon. Exposed for tests and the CLI.
SweepRow measure_epsilon(const SweepConfig& cfg, std::size_t index);

/// Columns exactly: epsilon, max_grad, u_at_eps1m, grad_lb, c1_est.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

struct RateFit {
  std::string quantity;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;  // ln y - (intercept + slope ln eps)
  double target = 0.0;
  double deviation = 0.0;         // |slope - target|
};

/// Ordinary least squares of ln y on ln eps. Requires >= 4 points and
/// positive values (DomainError otherwise).
RateFit fit_rate(std::span<const double> eps, std::span<const double> y, double target);

/// Fits column `quantity` (max_grad, u_at_eps1m, grad_lb or c1_est) of the
/// rows in `window` (all rows when empty).
RateFit fit_rate(const std::vector<SweepRow>& table, const std::string& quantity, double target,
                 const std::vector<int>& window = {});

/// Expected exponent of a CSV quantity: (alpha-1)/m for max_grad and grad_lb,
/// alpha/m for u_at_eps1m, 0 for c1_est.
double quantity_target(const std::string& quantity, const ExponentResult& targets);
double quantity_value(const SweepRow& row, const std::string& quantity);

nlohmann::json fit_to_json(const RateFit& fit);

struct VerifyReport {
  nlohmann::json json;
  bool passed = false;
};

/// Runs every check for the configured geometry and returns a report with
/// one section per check. Geometry failures skip the remaining sections.
VerifyReport verify_all(const SweepConfig& cfg);

// Tolerances of the verification report.
inline constexpr double kSlopeTolerance = 0.05;
inline constexpr double kStabilityFactor = 2.0;
inline constexpr double kBoundTolerance = 1e-6;
inline constexpr double kDecayTolerance = 1e-3;

}  // namespace gaplab
