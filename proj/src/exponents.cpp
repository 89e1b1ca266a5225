#include "gaplab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaplab/errors.hpp"

namespace gaplab {

void ExponentParams::validate() const {
  if (d < 3) throw DomainError("exponents: dimension d must be >= 3, got " + std::to_string(d));
  if (!(m >= 2.0) || !std::isfinite(m))
    throw DomainError("exponents: convexity order m must be a finite real >= 2, got " +
                      std::to_string(m));
  if (k < 1) throw DomainError("exponents: mode index k must be >= 1, got " + std::to_string(k));
}

double positive_quadratic_root(double b, double q) {
  return 2.0 * q / (b + std::sqrt(b * b + 4.0 * q));
}

double quadratic_residual(double b, double q, double c) {
  const double scale = std::max({c * c, std::abs(b * c), std::abs(q)});
  return std::abs(c * c + b * c - q) / scale;
}

namespace {

double mode_constant(int d, int k) { return static_cast<double>(k) * (k + d - 3); }

}  // namespace

double alpha_k(const ExponentParams& p) {
  p.validate();
  return positive_quadratic_root(p.d + p.m - 3.0, mode_constant(p.d, p.k));
}

double alpha(const ExponentParams& p) {
  ExponentParams first = p;
  first.k = 1;
  return alpha_k(first);
}

double alpha(int d, double m) { return alpha(ExponentParams{d, m, 1}); }

BlowupRate blowup_rate(const ExponentParams& p) {
  p.validate();
  if (p.k != 1) throw DomainError("blowup_rate: defined for the first mode only (k = 1)");
  const double a = alpha(p);
  BlowupRate out;
  out.rate = (a - 1.0) / p.m;
  out.beta = a / p.m;
  // rate = -1/m + beta holds up to rounding of the two quotients
  if (std::abs(out.rate - (-1.0 / p.m + out.beta)) > 1e-14)
    throw std::logic_error("blowup_rate: rate identity violated");
  return out;
}

ExponentResult exponents(const ExponentParams& p) {
  p.validate();
  ExponentResult r;
  r.alpha = alpha(p);
  r.alpha_k = alpha_k(p);
  r.rate = (r.alpha - 1.0) / p.m;
  r.beta = r.alpha / p.m;
  return r;
}

AsymptoticDiagnostics asymptotic_check(const ExponentParams& p) {
  const double a = alpha(p);
  const double d = p.d;
  AsymptoticDiagnostics out;
  out.large_d_remainder = std::abs(a - (1.0 - p.m / d)) * d * d;
  out.large_m_remainder = std::abs(a - (d - 2.0) / p.m) * p.m * p.m;
  return out;
}

double subsolution_threshold(int d, double m) {
  const double a = alpha(d, m);
  return (2.0 * a * a + a * (d + m - 3.0)) / (2.0 * a + d - 3.0);
}

}  // namespace gaplab
