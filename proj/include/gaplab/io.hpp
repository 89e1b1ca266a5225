#pragma once

// Flat-file outputs of single solves.

#include <iosfwd>

#include <json.hpp>

#include "gaplab/gap_solver.hpp"
#include "gaplab/radial_ode.hpp"

namespace gaplab {

/// r,g,g_prime on the solution grid.
void write_ode_csv(const RadialSolution& sol, std::ostream& out);

/// r,s,u,grad_r,grad_d at cell centers; u is the mean of the four corners.
void write_field_csv(const ModeSolution& sol, std::ostream& out);

/// r,U,M at radial cell centers over [0, R0].
void write_profile_csv(const ModeSolution& sol, std::ostream& out);

nlohmann::json diagnostics_to_json(const SolveDiagnostics& d);
nlohmann::json certificate_to_json(const BoundsCertificate& c);

}  // namespace gaplab
