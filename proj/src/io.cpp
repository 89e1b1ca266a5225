#include "gaplab/io.hpp"

#include <cstdio>
#include <ostream>

namespace gaplab {

namespace {

void put(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void put_row(std::ostream& out, std::initializer_list<double> vals) {
  bool first = true;
  for (double v : vals) {
    if (!first) out << ',';
    put(out, v);
    first = false;
  }
  out << '\n';
}

nlohmann::json envelope_json(const SubSuperCertificate& c) {
  return {{"name", c.name},
          {"kind", c.kind == EnvelopeKind::Subsolution ? "subsolution" : "supersolution"},
          {"beta", c.beta},
          {"a0", c.a0},
          {"b0", c.b0},
          {"r0", c.r0},
          {"C0", c.C0},
          {"nodes_checked", c.nodes_checked},
          {"residual_sign_violations", c.residual_sign_violations},
          {"max_residual_violation", c.max_residual_violation},
          {"bound_violations", c.bound_violations},
          {"max_violation", c.max_violation},
          {"min_margin", c.min_margin},
          {"valid", c.valid()}};
}

}  // namespace

void write_ode_csv(const RadialSolution& sol, std::ostream& out) {
  out << "r,g,g_prime\n";
  for (std::size_t i = 0; i < sol.grid.size(); ++i)
    put_row(out, {sol.grid[i], sol.values[i], sol.derivative[i]});
}

void write_field_csv(const ModeSolution& sol, std::ostream& out) {
  out << "r,s,u,grad_r,grad_d\n";
  const int nr = sol.grid.nr();
  const int ns = sol.grid.ns();
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < ns; ++j) {
      const std::size_t c = static_cast<std::size_t>(i * ns + j);
      const double u = 0.25 * (sol.value(i, j) + sol.value(i + 1, j) + sol.value(i, j + 1) +
                               sol.value(i + 1, j + 1));
      put_row(out, {sol.cell_r[c], sol.cell_s[c], u, sol.grad_r[c], sol.grad_z[c]});
    }
  }
}

void write_profile_csv(const ModeSolution& sol, std::ostream& out) {
  out << "r,U,M\n";
  const GradientProfile prof = max_gradient(sol, 0.0, sol.R0);
  for (std::size_t i = 0; i < prof.radii.size(); ++i)
    put_row(out, {prof.radii[i], sol.average_at(prof.radii[i]), prof.maxima[i]});
}

nlohmann::json diagnostics_to_json(const SolveDiagnostics& d) {
  return {{"method", d.method},
          {"iterations", d.iterations},
          {"residual", d.residual},
          {"boundary_min", d.boundary_min},
          {"boundary_max", d.boundary_max},
          {"solution_min", d.solution_min},
          {"solution_max", d.solution_max},
          {"maximum_principle", d.maximum_principle},
          {"max_cell_diameter", d.max_cell_diameter},
          {"subsolution_margin", d.subsolution_margin}};
}

nlohmann::json certificate_to_json(const BoundsCertificate& c) {
  return {{"tolerance", c.tolerance},
          {"lower", envelope_json(c.lower)},
          {"power_upper", envelope_json(c.power_upper)},
          {"linear_upper", envelope_json(c.linear_upper)},
          {"valid", c.valid()}};
}

}  // namespace gaplab
