#include "gaplab/gap_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gaplab/errors.hpp"

namespace gaplab {

namespace {

// r1 - (r1^m - r^m)^{1/m} written as -r1 expm1(log1p(-(r/r1)^m)/m), which keeps
// full relative accuracy as r -> 0.
BoundaryGraph ellipsoid_cap(double m, double radius, double sign) {
  BoundaryGraph g;
  g.h = [=](double r) {
    const double x = std::pow(r / radius, m);
    return -sign * radius * std::expm1(std::log1p(-x) / m);
  };
  g.dh = [=](double r) {
    const double w = std::pow(radius, m) - std::pow(r, m);
    return sign * std::pow(r, m - 1.0) * std::pow(w, 1.0 / m - 1.0);
  };
  g.d2h = [=](double r) {
    const double w = std::pow(radius, m) - std::pow(r, m);
    return sign * (m - 1.0) *
           (std::pow(r, m - 2.0) * std::pow(w, 1.0 / m - 1.0) +
            std::pow(r, 2.0 * m - 2.0) * std::pow(w, 1.0 / m - 2.0));
  };
  return g;
}

BoundaryGraph zero_graph() {
  auto zero = [](double) { return 0.0; };
  return {zero, zero, zero};
}

}  // namespace

InclusionPair InclusionPair::m_ellipsoids(double m, double r1, double r2, double epsilon,
                                          double R0) {
  if (!(m >= 2.0) || !std::isfinite(m)) throw DomainError("m_ellipsoids: m must be >= 2");
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw DomainError("m_ellipsoids: semi-axes must be positive");
  if (!(epsilon > 0.0)) throw DomainError("m_ellipsoids: epsilon must be positive");
  if (R0 <= 0.0) R0 = 0.3 * std::min(r1, r2);
  if (!(R0 < std::min(r1, r2)))
    throw DomainError("m_ellipsoids: gap window R0 = " + std::to_string(R0) +
                      " must be smaller than both semi-axes");

  InclusionPair p;
  p.m = m;
  p.r1 = r1;
  p.r2 = r2;
  p.epsilon = epsilon;
  p.R0 = R0;
  p.gamma = m;
  p.lambda0 = (1.0 / std::pow(r1, m - 1.0) + 1.0 / std::pow(r2, m - 1.0)) / m;
  p.upper = ellipsoid_cap(m, r1, 1.0);
  p.lower = ellipsoid_cap(m, r2, -1.0);

  constexpr int kSamples = 10000;
  double k1 = 0.0;
  double c2_upper[3] = {0.0, 0.0, 0.0};
  double c2_lower[3] = {0.0, 0.0, 0.0};
  for (int i = 1; i <= kSamples; ++i) {
    const double r = R0 * i / kSamples;
    const double rm1 = std::pow(r, m - 1.0);
    k1 = std::max({k1, std::abs(p.upper.dh(r)) / rm1, std::abs(p.lower.dh(r)) / rm1});
    c2_upper[0] = std::max(c2_upper[0], std::abs(p.upper.h(r)));
    c2_upper[1] = std::max(c2_upper[1], std::abs(p.upper.dh(r)));
    c2_upper[2] = std::max(c2_upper[2], std::abs(p.upper.d2h(r)));
    c2_lower[0] = std::max(c2_lower[0], std::abs(p.lower.h(r)));
    c2_lower[1] = std::max(c2_lower[1], std::abs(p.lower.dh(r)));
    c2_lower[2] = std::max(c2_lower[2], std::abs(p.lower.d2h(r)));
  }
  p.kappa1 = k1;
  p.kappa2 = c2_upper[0] + c2_upper[1] + c2_upper[2] + c2_lower[0] + c2_lower[1] + c2_lower[2];
  return p;
}

InclusionPair InclusionPair::flat_plates(double epsilon, double R0) {
  if (!(epsilon > 0.0)) throw DomainError("flat_plates: epsilon must be positive");
  if (!(R0 > 0.0)) throw DomainError("flat_plates: R0 must be positive");
  InclusionPair p;
  p.m = 2.0;
  p.r1 = std::numeric_limits<double>::infinity();
  p.r2 = std::numeric_limits<double>::infinity();
  p.epsilon = epsilon;
  p.R0 = R0;
  p.gamma = 2.0;
  p.lambda0 = 0.0;
  p.flat = true;
  p.upper = zero_graph();
  p.lower = zero_graph();
  return p;
}

InclusionPair::Graphs InclusionPair::boundary_graphs(double r) const {
  if (!(r >= 0.0 && r <= R0 * (1.0 + 1e-12)))
    throw DomainError("boundary_graphs: radius " + std::to_string(r) + " outside [0, R0]");
  return {upper.h(r), lower.h(r), upper.dh(r), lower.dh(r)};
}

double InclusionPair::gap_width(double r) const { return epsilon + upper.h(r) - lower.h(r); }

double InclusionPair::gap_width_derivative(double r) const { return upper.dh(r) - lower.dh(r); }

double InclusionPair::bottom(double r) const { return -0.5 * epsilon + lower.h(r); }

HypothesisReport validate_hypotheses(const InclusionPair& pair, int samples) {
  HypothesisReport rep;
  const double m = pair.m;
  const double R0 = pair.R0;
  const double step = R0 / samples;

  rep.tangency = std::abs(pair.upper.h(0.0)) <= 1e-15 && std::abs(pair.lower.h(0.0)) <= 1e-15;
  double profile_c = 0.0;
  double k1 = 0.0;
  double sup_h[2] = {0.0, 0.0};
  double sup_dh[2] = {0.0, 0.0};
  double sup_d2h[2] = {0.0, 0.0};
  const BoundaryGraph* graphs[2] = {&pair.upper, &pair.lower};

  for (int i = 0; i <= samples; ++i) {
    const double r = step * i;
    const double h1 = pair.upper.h(r);
    const double h2 = pair.lower.h(r);
    if (h1 < 0.0 || h2 > 0.0) rep.tangency = false;
    for (int g = 0; g < 2; ++g) {
      const auto& graph = *graphs[g];
      sup_h[g] = std::max(sup_h[g], std::abs(graph.h(r)));
      // centered differences inside, one-sided at the endpoints
      const double a = std::clamp(r, step, R0 - step);
      const double hm = graph.h(a - step);
      const double h0 = graph.h(a);
      const double hp = graph.h(a + step);
      sup_dh[g] = std::max(sup_dh[g], std::abs(graph.dh(r)));
      sup_d2h[g] = std::max(sup_d2h[g], std::abs((hp - 2.0 * h0 + hm) / (step * step)));
    }
    if (r > 0.0) {
      const double rm = std::pow(r, m);
      profile_c = std::max(profile_c, std::abs(h1 - h2 - pair.lambda0 * rm) / std::pow(r, m + pair.gamma));
      const double rm1 = std::pow(r, m - 1.0);
      k1 = std::max({k1, std::abs(pair.upper.dh(r)) / rm1, std::abs(pair.lower.dh(r)) / rm1});
    }
  }
  const double r_small = step;
  rep.lambda0_fit = (pair.upper.h(r_small) - pair.lower.h(r_small)) / std::pow(r_small, m);
  rep.profile_constant = profile_c;
  rep.profile = pair.lambda0 > 0.0 && std::isfinite(profile_c);
  rep.kappa1_found = k1;
  rep.gradient = k1 <= pair.kappa1 * (1.0 + 1e-9) + 1e-15;
  rep.kappa2_found = sup_h[0] + sup_dh[0] + sup_d2h[0] + sup_h[1] + sup_dh[1] + sup_d2h[1];
  // second differences carry O(step^2) truncation error
  rep.curvature = rep.kappa2_found <= pair.kappa2 * (1.0 + 1e-4) + 1e-15;
  return rep;
}

FlattenedChart::FlattenedChart(InclusionPair pair) : pair_(std::move(pair)) {}

double FlattenedChart::to_rectangle(double r, double z) const {
  return (z - pair_.bottom(r)) / pair_.gap_width(r);
}

double FlattenedChart::to_physical(double r, double s) const {
  return pair_.bottom(r) + s * pair_.gap_width(r);
}

ChartCoefficients FlattenedChart::coefficients(double r, double s) const {
  const double delta = pair_.gap_width(r);
  const double slope = pair_.lower.dh(r) + s * pair_.gap_width_derivative(r);  // dz/dr at fixed s
  ChartCoefficients c;
  c.jacobian = delta;
  c.s_r = -slope / delta;
  c.a_rr = delta;
  c.a_rs = -slope;
  c.a_ss = (slope * slope + 1.0) / delta;
  return c;
}

double FlattenedChart::normalized_cross(double r, double s) const {
  return 2.0 * pair_.gap_width(r) * coefficients(r, s).a_rs;
}

FlattenedChart build_chart(const InclusionPair& pair) {
  FlattenedChart chart(pair);
  ChartDiagnostics diag;
  diag.min_gap_width = std::numeric_limits<double>::infinity();
  diag.min_jacobian = std::numeric_limits<double>::infinity();
  diag.min_determinant = std::numeric_limits<double>::infinity();
  constexpr int kRadial = 200;
  constexpr int kStrip = 20;
  for (int i = 0; i <= kRadial; ++i) {
    const double r = pair.R0 * i / kRadial;
    const double delta = pair.gap_width(r);
    if (!(delta > 0.0))
      throw DomainError("build_chart: degenerate gap, width " + std::to_string(delta) +
                        " at r = " + std::to_string(r));
    diag.min_gap_width = std::min(diag.min_gap_width, delta);
    for (int j = 0; j <= kStrip; ++j) {
      const double s = static_cast<double>(j) / kStrip;
      const auto c = chart.coefficients(r, s);
      diag.min_jacobian = std::min(diag.min_jacobian, c.jacobian);
      diag.min_determinant = std::min(diag.min_determinant, c.a_rr * c.a_ss - c.a_rs * c.a_rs);
      if (r > 0.0 && !pair.flat) {
        const double bound = std::pow(r, pair.m - 1.0) * delta;
        diag.cross_constant = std::max(diag.cross_constant, std::abs(chart.normalized_cross(r, s)) / bound);
      }
      const double z = chart.to_physical(r, s);
      const double back = chart.to_physical(r, chart.to_rectangle(r, z));
      diag.round_trip_error = std::max(diag.round_trip_error, std::abs(back - z) / std::max(1.0, std::abs(z)));
    }
  }
  if (!(diag.min_determinant > 0.0))
    throw DomainError("build_chart: coefficient matrix is not positive definite");
  chart.diagnostics_ = diag;
  return chart;
}

}  // namespace gaplab
