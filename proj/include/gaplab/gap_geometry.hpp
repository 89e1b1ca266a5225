#pragma once

// Geometry of the thin gap between two inclusions whose boundaries near the
// closest point are graphs x_d = eps/2 + h1(r) (upper) and x_d = -eps/2 + h2(r)
// (lower), and the strip map that flattens the gap onto [0, R0] x [0, 1].

#include <functional>
#include <vector>

namespace gaplab {

/// A boundary graph h(r) with its first two derivatives.
struct BoundaryGraph {
  std::function<double(double)> h;
  std::function<double(double)> dh;
  std::function<double(double)> d2h;
};

struct InclusionPair {
  double m = 2.0;
  double r1 = 1.0;
  double r2 = 1.0;
  double epsilon = 1e-3;
  double R0 = 0.3;       // gap window radius
  double kappa1 = 0.0;   // |h_i'(r)| <= kappa1 r^{m-1}
  double kappa2 = 0.0;   // ||h1||_{C^2} + ||h2||_{C^2} <= kappa2
  double gamma = 2.0;    // remainder exponent, h1 - h2 = lambda0 r^m + O(r^{m+gamma})
  double lambda0 = 1.0;  // leading gap-profile coefficient
  bool flat = false;
  BoundaryGraph upper;
  BoundaryGraph lower;

  /// |x'|^m + |x_d - eps/2 - r1|^m = r1^m and |x'|^m + |x_d + eps/2 + r2|^m = r2^m.
  /// R0 <= 0 selects 0.3 min(r1, r2). kappa1/kappa2 are set to the tightest
  /// values found on a 10^4-point grid. Throws DomainError unless
  /// m >= 2, r1, r2, eps > 0 and 0 < R0 < min(r1, r2).
  static InclusionPair m_ellipsoids(double m, double r1, double r2, double epsilon,
                                    double R0 = 0.0);
  /// Parallel plates h1 = h2 = 0 (lambda0 = 0), used as an exactly solvable control.
  static InclusionPair flat_plates(double epsilon, double R0);

  struct Graphs {
    double h1 = 0.0;
    double h2 = 0.0;
    double dh1 = 0.0;
    double dh2 = 0.0;
  };

  /// Throws DomainError for r outside [0, R0].
  Graphs boundary_graphs(double r) const;
  /// eps + h1(r) - h2(r)
  double gap_width(double r) const;
  double gap_width_derivative(double r) const;
  /// -eps/2 + h2(r)
  double bottom(double r) const;
};

struct HypothesisReport {
  bool tangency = false;       // h1(0) = h2(0) = 0 and h1 >= 0 >= h2
  bool profile = false;        // |h1 - h2 - lambda0 r^m| <= C r^{m+gamma}, lambda0 > 0
  bool gradient = false;       // |h_i'| <= kappa1 r^{m-1}
  bool curvature = false;      // C^2 norms <= kappa2
  double profile_constant = 0.0;
  double kappa1_found = 0.0;
  double kappa2_found = 0.0;
  double lambda0_fit = 0.0;    // (h1 - h2)(r)/r^m at the smallest sample radius

  bool passed() const { return tangency && profile && gradient && curvature; }
};

/// Samples the hypotheses on `samples` points of (0, R0], with the C^2 norm
/// taken from second differences of h.
HypothesisReport validate_hypotheses(const InclusionPair& pair, int samples = 10000);

/// Coefficients of the first-mode energy in strip coordinates (r, s), without
/// the radial weight r^{d-2}:
///   E(u) = int r^{d-2} [a_rr u_r^2 + 2 a_rs u_r u_s + a_ss u_s^2 + (d-2) J u^2 / r^2] dr ds.
/// a_rr a_ss - a_rs^2 = 1 identically.
struct ChartCoefficients {
  double a_rr = 0.0;
  double a_rs = 0.0;
  double a_ss = 0.0;
  double jacobian = 0.0;  // dz/ds = gap width
  double s_r = 0.0;       // ds/dr at fixed z
};

struct ChartDiagnostics {
  double min_gap_width = 0.0;
  double min_jacobian = 0.0;
  double min_determinant = 0.0;  // a_rr a_ss - a_rs^2
  double cross_constant = 0.0;   // max |normalized_cross| / (r^{m-1} gap_width)
  double round_trip_error = 0.0;
};

class FlattenedChart;
FlattenedChart build_chart(const InclusionPair& pair);

class FlattenedChart {
 public:
  explicit FlattenedChart(InclusionPair pair);

  const InclusionPair& pair() const { return pair_; }
  double R0() const { return pair_.R0; }
  double gap_width(double r) const { return pair_.gap_width(r); }
  double bottom(double r) const { return pair_.bottom(r); }

  /// s = (z - bottom(r)) / gap_width(r)
  double to_rectangle(double r, double z) const;
  double to_physical(double r, double s) const;

  ChartCoefficients coefficients(double r, double s) const;
  /// Cross coefficient rescaled to a gap of thickness 2 gap_width(r), the
  /// normalization in which it is bounded by C r^{m-1} gap_width(r).
  double normalized_cross(double r, double s) const;

  const ChartDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  friend FlattenedChart build_chart(const InclusionPair& pair);

  InclusionPair pair_;
  ChartDiagnostics diagnostics_;
};

/// Builds the strip chart and evaluates its diagnostics on a 200 x 21 grid.
/// Throws DomainError when the gap width is not positive somewhere on [0, R0].
FlattenedChart build_chart(const InclusionPair& pair);

}  // namespace gaplab
