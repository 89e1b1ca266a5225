#pragma once

// Closed-form exponent algebra for the mode operators
//
//   L_k r^c = r^{c-2} [c^2 + (d-3 + m r^m/(eps + r^m)) c - k(k+d-3)],
//
// whose eps -> 0 indicial equation c^2 + (d+m-3) c - k(k+d-3) = 0 fixes the
// decay exponent alpha_k and, for k = 1, the gradient blow-up rate
// (alpha - 1)/m of the insulated conductivity problem.

namespace gaplab {

struct ExponentParams {
  int d = 3;       // ambient dimension, >= 3
  double m = 2.0;  // convexity order, real >= 2
  int k = 1;       // spherical-harmonic degree of the mode, >= 1

  /// Throws DomainError unless d >= 3, m >= 2 and k >= 1.
  void validate() const;
};

struct ExponentResult {
  double alpha = 0.0;    // first-mode exponent alpha(d, m)
  double alpha_k = 0.0;  // exponent of mode k
  double rate = 0.0;     // (alpha - 1)/m, exponent of eps in |grad u|
  double beta = 0.0;     // alpha/m, so that rate = -1/m + beta
};

/// Positive root of c^2 + b c - q = 0 for b > 0, q > 0, in the
/// conjugate form 2q / (b + sqrt(b^2 + 4q)) which avoids cancellation.
double positive_quadratic_root(double b, double q);

/// Relative residual |c^2 + b c - q| / max(c^2, |b c|, q).
double quadratic_residual(double b, double q, double c);

double alpha(const ExponentParams& p);
double alpha(int d, double m);
double alpha_k(const ExponentParams& p);

struct BlowupRate {
  double rate = 0.0;
  double beta = 0.0;
};

/// Requires k == 1.
BlowupRate blowup_rate(const ExponentParams& p);

ExponentResult exponents(const ExponentParams& p);

struct AsymptoticDiagnostics {
  double large_d_remainder = 0.0;  // |alpha - (1 - m/d)| * d^2
  double large_m_remainder = 0.0;  // |alpha - (d-2)/m| * m^2
};

AsymptoticDiagnostics asymptotic_check(const ExponentParams& p);

/// Smallest beta for which the lower envelope
/// r^beta (eps + lambda r^m)^{(alpha-beta)/m} is a subsolution:
/// (2 alpha^2 + alpha (d+m-3)) / (2 alpha + d - 3).
double subsolution_threshold(int d, double m);

}  // namespace gaplab
