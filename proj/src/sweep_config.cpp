#include "gaplab/sweep_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "gaplab/errors.hpp"

namespace gaplab {

namespace {

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  g.nr = j.value("nr", g.nr);
  g.ns = j.value("ns", g.ns);
  if (j.contains("grading") && !j["grading"].is_null()) g.grading = j["grading"].get<double>();
  return g;
}

nlohmann::json grid_to_json(const GridSpec& g) {
  return {{"nr", g.nr}, {"ns", g.ns}, {"grading", g.grading}};
}

LinearSolverKind method_from_string(const std::string& s) {
  if (s == "auto") return LinearSolverKind::Auto;
  if (s == "direct") return LinearSolverKind::Direct;
  if (s == "cg" || s == "iterative") return LinearSolverKind::Iterative;
  throw DomainError("config: unknown solver method '" + s + "'");
}

std::string method_to_string(LinearSolverKind k) {
  switch (k) {
    case LinearSolverKind::Direct: return "direct";
    case LinearSolverKind::Iterative: return "cg";
    case LinearSolverKind::Auto: break;
  }
  return "auto";
}

}  // namespace

std::vector<double> log_spaced(double largest, double smallest, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(largest);
  const double b = std::log10(smallest);
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  out.front() = largest;
  out.back() = smallest;
  return out;
}

SweepConfig default_sweep_config(int d, double m) {
  SweepConfig cfg;
  cfg.d = d;
  cfg.m = m;
  cfg.epsilons = log_spaced(1e-2, 1e-4, 6);
  GridSpec g;
  g.nr = 1024;
  g.ns = 64;
  cfg.grids = {g};
  return cfg;
}

double SweepConfig::window_radius() const { return R0 > 0.0 ? R0 : 0.3 * std::min(r1, r2); }

const GridSpec& SweepConfig::grid_for(std::size_t index) const {
  static const GridSpec fallback{};
  if (grids.empty()) return fallback;
  if (grids.size() == 1) return grids.front();
  return grids.at(index);
}

std::vector<int> SweepConfig::window() const {
  if (!fit_window.empty()) return fit_window;
  std::vector<int> w;
  for (int i = 1; i < static_cast<int>(epsilons.size()); ++i) w.push_back(i);
  return w;
}

InclusionPair SweepConfig::pair_for(std::size_t index) const {
  const double eps = epsilons.at(index);
  if (flat_plates) return InclusionPair::flat_plates(eps, window_radius());
  return InclusionPair::m_ellipsoids(m, r1, r2, eps, window_radius());
}

void SweepConfig::validate() const {
  if (epsilons.empty()) throw DomainError("config: epsilons must not be empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw DomainError("config: epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw DomainError("config: epsilons must be strictly decreasing");
  }
  if (grids.size() > 1 && grids.size() != epsilons.size())
    throw DomainError("config: give one grid, or one grid per epsilon");
  const auto w = window();
  if (w.size() < 4) throw DomainError("config: the fit window needs at least 4 points");
  for (int i : w)
    if (i < 0 || i >= static_cast<int>(epsilons.size()))
      throw DomainError("config: fit window index " + std::to_string(i) + " out of range");
  if (parallelism < 1) throw DomainError("config: parallelism must be >= 1");
  if (!(lateral_scale > 0.0)) throw DomainError("config: lateral_scale must be positive");
}

SweepConfig config_from_json(const nlohmann::json& j) {
  SweepConfig cfg = default_sweep_config(j.value("d", 3), j.value("m", 2.0));
  cfg.r1 = j.value("r1", cfg.r1);
  cfg.r2 = j.value("r2", cfg.r2);
  cfg.R0 = j.value("R0", cfg.R0);
  if (j.contains("epsilons")) cfg.epsilons = j["epsilons"].get<std::vector<double>>();
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg.grids.clear();
    if (g.is_array()) {
      for (const auto& item : g) cfg.grids.push_back(grid_from_json(item));
    } else {
      cfg.grids.push_back(grid_from_json(g));
    }
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    cfg.solver.tolerance = s.value("tol", cfg.solver.tolerance);
    cfg.solver.max_iterations = s.value("max_iter", cfg.solver.max_iterations);
    if (s.contains("method")) cfg.solver.method = method_from_string(s["method"].get<std::string>());
  }
  if (j.contains("fit") && j["fit"].contains("window"))
    cfg.fit_window = j["fit"]["window"].get<std::vector<int>>();
  cfg.lateral_scale = j.value("lateral_scale", cfg.lateral_scale);
  cfg.parallelism = j.value("parallelism", cfg.parallelism);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  if (j.contains("geometry")) {
    const auto g = j["geometry"].get<std::string>();
    if (g == "flat_plates")
      cfg.flat_plates = true;
    else if (g != "m_ellipsoids")
      throw DomainError("config: unknown geometry '" + g + "'");
  }
  return cfg;
}

nlohmann::json config_to_json(const SweepConfig& cfg) {
  nlohmann::json grids = nlohmann::json::array();
  for (const auto& g : cfg.grids) grids.push_back(grid_to_json(g));
  return {{"d", cfg.d},
          {"m", cfg.m},
          {"r1", cfg.r1},
          {"r2", cfg.r2},
          {"R0", cfg.window_radius()},
          {"epsilons", cfg.epsilons},
          {"grid", grids.size() == 1 ? grids.front() : grids},
          {"solver",
           {{"tol", cfg.solver.tolerance},
            {"max_iter", cfg.solver.max_iterations},
            {"method", method_to_string(cfg.solver.method)}}},
          {"fit", {{"window", cfg.window()}}},
          {"lateral_scale", cfg.lateral_scale},
          {"parallelism", cfg.parallelism},
          {"geometry", cfg.flat_plates ? "flat_plates" : "m_ellipsoids"},
          {"out_dir", cfg.out_dir}};
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace gaplab
