#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gaplab/gap_solver.hpp"

namespace gaplab {

/// JSON run configuration:
///
///   {"d": 3, "m": 2, "r1": 1, "r2": 1, "R0": 0.3,
///    "epsilons": [...],
///    "grid": {"nr": 1024, "ns": 64, "grading": -1}   // or one object per epsilon
///    "solver": {"tol": 1e-10, "max_iter": 200000, "method": "auto"},
///    "fit": {"window": [1, 2, 3, 4, 5]},
///    "lateral_scale": 1.0, "parallelism": 1,
///    "geometry": "m_ellipsoids",             // or "flat_plates" (control runs)
///    "out_dir": "out"}
///
/// Every field is optional.
struct SweepConfig {
  int d = 3;
  double m = 2.0;
  double r1 = 1.0;
  double r2 = 1.0;
  double R0 = 0.0;                // <= 0 selects 0.3 min(r1, r2)
  std::vector<double> epsilons;   // strictly decreasing
  std::vector<GridSpec> grids;    // one entry for all epsilons, or one per epsilon
  SolverSpec solver;
  std::vector<int> fit_window;    // indices into epsilons; empty drops the largest epsilon
  double lateral_scale = 1.0;     // Dirichlet value at R0 is lateral_scale * R0
  int parallelism = 1;
  bool flat_plates = false;       // parallel plates instead of m-ellipsoids
  std::string out_dir = "out";

  /// Throws DomainError for non-decreasing epsilons, fewer than four fit
  /// points, out-of-range window indices or a grid list of the wrong length.
  void validate() const;

  double window_radius() const;
  const GridSpec& grid_for(std::size_t index) const;
  std::vector<int> window() const;
  /// Inclusion pair at epsilon index `index`.
  InclusionPair pair_for(std::size_t index) const;
};

/// `count` log-spaced values from `largest` down to `smallest`.
std::vector<double> log_spaced(double largest, double smallest, int count);

/// d, m with six epsilons in [1e-4, 1e-2] and a 1024 x 64 grid.
SweepConfig default_sweep_config(int d = 3, double m = 2.0);

SweepConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SweepConfig& cfg);
SweepConfig load_config(const std::string& path);

}  // namespace gaplab
