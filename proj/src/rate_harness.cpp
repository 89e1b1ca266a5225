#include "gaplab/rate_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <memory>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gaplab/errors.hpp"
#include "gaplab/gap_geometry.hpp"
#include "gaplab/gap_solver.hpp"
#include "gaplab/radial_ode.hpp"

namespace gaplab {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

// OLS slope of ln y on ln x; no validation.
std::pair<double, double> log_log_ols(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ModeProblem problem_for(const SweepConfig& cfg, std::size_t index, const GridSpec& grid) {
  const auto pair = cfg.pair_for(index);
  LateralCondition lateral;
  lateral.value = cfg.lateral_scale * pair.R0;
  return ModeProblem{build_chart(pair), cfg.d, lateral, grid, cfg.solver, {}};
}

}  // namespace

SweepRow measure_epsilon(const SweepConfig& cfg, std::size_t index) {
  const double eps = cfg.epsilons.at(index);
  const GridSpec& grid = cfg.grid_for(index);
  const ModeProblem prob = problem_for(cfg, index, grid);
  const InclusionPair& pair = prob.chart.pair();
  const ModeSolution sol = solve_mode(prob);

  const double a = alpha(cfg.d, cfg.m);
  const double rate = (a - 1.0) / cfg.m;
  const double half = 0.5 * pair.R0;
  const double rt = std::pow(eps, 1.0 / cfg.m);

  SweepRow row;
  row.epsilon = eps;
  row.nr = grid.nr;
  row.ns = grid.ns;

  const GradientProfile prof = max_gradient(sol, 0.0, half);
  row.max_grad = prof.max;
  row.max_grad_radius = prof.argmax_r;
  for (std::size_t i = 0; i < prof.radii.size(); ++i) {
    const double r = prof.radii[i];
    const double w = std::pow(eps + pair.lambda0 * std::pow(r, cfg.m), rate);
    row.profile_bound = std::max(row.profile_bound, prof.maxima[i] / w);
  }

  row.u_at_eps1m = sol.average_at(rt);
  row.grad_lb = row.u_at_eps1m / rt;

  // parallel plates: the radial profile is g(r) = r
  std::function<double(double)> g = [](double r) { return r; };
  if (!pair.flat) {
    auto sol_g = std::make_shared<RadialSolution>(
        solve_g(GapOdeProblem{eps, cfg.d, cfg.m, pair.lambda0, 1}));
    g = [sol_g](double r) { return (*sol_g)(r); };
  }
  row.c1_est = row.u_at_eps1m / g(rt);
  {
    std::vector<double> ratios;
    const double top = std::min(4.0 * rt, half);
    for (std::size_t i = 1; i < sol.grid.r.size(); ++i) {
      const double r = sol.grid.r[i];
      if (r >= rt && r <= top) ratios.push_back(sol.gap_average[i] / g(r));
    }
    row.c1_spread = ratios.empty() ? 1.0 : spread(ratios);
  }
  {
    std::vector<double> rs, us, gs;
    for (std::size_t i = 1; i < sol.grid.r.size(); ++i) {
      const double r = sol.grid.r[i];
      if (r >= rt && r <= half && sol.gap_average[i] > 0.0) {
        rs.push_back(r);
        us.push_back(sol.gap_average[i]);
        gs.push_back(g(r));
        row.decay_bound = std::max(row.decay_bound, sol.gap_average[i] / std::pow(r, a));
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.decay_slope = rs.size() >= 2 ? log_log_ols(rs, us).first : nan;
    row.decay_slope_ode = rs.size() >= 2 ? log_log_ols(rs, gs).first : nan;
  }

  const SolveDiagnostics& dg = sol.diagnostics;
  row.subsolution_margin = dg.subsolution_margin;
  row.subsolution_allowance = 10.0 * dg.max_cell_diameter * dg.max_cell_diameter;
  row.maximum_principle = dg.maximum_principle;
  row.residual = dg.residual;
  row.iterations = dg.iterations;
  row.method = dg.method;
  return row;
}

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult result;
  result.config = cfg;
  result.targets = exponents(ExponentParams{cfg.d, cfg.m, 1});
  result.lambda0 = cfg.pair_for(0).lambda0;

  const std::size_t n = cfg.epsilons.size();
  result.rows.resize(n);
  const std::size_t width = static_cast<std::size_t>(cfg.parallelism);

  auto run_one = [&cfg](std::size_t i) {
    try {
      return measure_epsilon(cfg, i);
    } catch (const std::exception& e) {
      throw std::runtime_error("sweep failed at epsilon = " + format_double(cfg.epsilons[i]) +
                               ": " + e.what());
    }
  };

  for (std::size_t start = 0; start < n; start += width) {
    const std::size_t stop = std::min(n, start + width);
    if (width == 1) {
      result.rows[start] = run_one(start);
      continue;
    }
    std::vector<std::future<SweepRow>> jobs;
    for (std::size_t i = start; i < stop; ++i) jobs.push_back(std::async(std::launch::async, run_one, i));
    // collect in order; the first failure in index order is reported
    std::exception_ptr failure;
    for (std::size_t i = start; i < stop; ++i) {
      try {
        result.rows[i] = jobs[i - start].get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return result;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "epsilon,max_grad,u_at_eps1m,grad_lb,c1_est\n";
  for (const auto& r : rows) {
    out << format_double(r.epsilon) << ',' << format_double(r.max_grad) << ','
        << format_double(r.u_at_eps1m) << ',' << format_double(r.grad_lb) << ','
        << format_double(r.c1_est) << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("sweep csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epsilon,max_grad,u_at_eps1m,grad_lb,c1_est")
    throw DomainError("sweep csv: unexpected header '" + line + "'");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5)
      throw DomainError("sweep csv line " + std::to_string(lineno) + ": expected 5 columns");
    double v[5];
    for (std::size_t c = 0; c < 5; ++c) {
      try {
        std::size_t used = 0;
        v[c] = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw DomainError("sweep csv line " + std::to_string(lineno) + ": bad number '" +
                          cells[c] + "'");
      }
    }
    SweepRow r;
    r.epsilon = v[0];
    r.max_grad = v[1];
    r.u_at_eps1m = v[2];
    r.grad_lb = v[3];
    r.c1_est = v[4];
    rows.push_back(r);
  }
  return rows;
}

RateFit fit_rate(std::span<const double> eps, std::span<const double> y, double target) {
  if (eps.size() != y.size()) throw DomainError("fit_rate: size mismatch");
  if (eps.size() < 4) throw DomainError("fit_rate: at least 4 points are required");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i]))
      throw DomainError("fit_rate: nonpositive measurement at point " + std::to_string(i) +
                        " (epsilon = " + format_double(eps[i]) + ", y = " + format_double(y[i]) +
                        ")");
  }
  std::vector<double> x(eps.begin(), eps.end()), v(y.begin(), y.end());
  const auto [slope, intercept] = log_log_ols(x, v);
  RateFit fit;
  fit.slope = slope;
  fit.intercept = intercept;
  fit.target = target;
  fit.deviation = std::abs(slope - target);
  fit.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.residuals[i] = std::log(v[i]) - (intercept + slope * std::log(x[i]));
  return fit;
}

double quantity_value(const SweepRow& row, const std::string& quantity) {
  if (quantity == "max_grad") return row.max_grad;
  if (quantity == "u_at_eps1m") return row.u_at_eps1m;
  if (quantity == "grad_lb") return row.grad_lb;
  if (quantity == "c1_est") return row.c1_est;
  throw DomainError("unknown quantity '" + quantity +
                    "' (expected max_grad, u_at_eps1m, grad_lb or c1_est)");
}

double quantity_target(const std::string& quantity, const ExponentResult& t) {
  if (quantity == "max_grad" || quantity == "grad_lb") return t.rate;
  if (quantity == "u_at_eps1m") return t.beta;
  if (quantity == "c1_est") return 0.0;
  throw DomainError("unknown quantity '" + quantity +
                    "' (expected max_grad, u_at_eps1m, grad_lb or c1_est)");
}

RateFit fit_rate(const std::vector<SweepRow>& table, const std::string& quantity, double target,
                 const std::vector<int>& window) {
  std::vector<double> eps, y;
  auto take = [&](const SweepRow& r) {
    eps.push_back(r.epsilon);
    y.push_back(quantity_value(r, quantity));
  };
  if (window.empty()) {
    for (const auto& r : table) take(r);
  } else {
    for (int i : window) {
      if (i < 0 || i >= static_cast<int>(table.size()))
        throw DomainError("fit window index " + std::to_string(i) + " out of range");
      take(table[static_cast<std::size_t>(i)]);
    }
  }
  RateFit fit = fit_rate(eps, y, target);
  fit.quantity = quantity;
  return fit;
}

nlohmann::json fit_to_json(const RateFit& fit) {
  return {{"quantity", fit.quantity}, {"slope", fit.slope},         {"intercept", fit.intercept},
          {"target", fit.target},     {"deviation", fit.deviation}, {"residuals", fit.residuals}};
}

namespace {

json section(const std::string& statement) {
  return {{"statement", statement}, {"passed", false}, {"skipped", false}};
}

json skipped(const std::string& statement) {
  return {{"statement", statement}, {"passed", false}, {"skipped", true}};
}

json geometry_section(const SweepConfig& cfg, bool& ok) {
  json s = section("inclusion boundaries are tangent m-convex graphs over the gap window");
  ok = false;
  try {
    cfg.validate();
    const auto pair = cfg.pair_for(0);
    const auto rep = validate_hypotheses(pair);
    const auto chart = build_chart(pair);
    const auto& cd = chart.diagnostics();
    s["R0"] = pair.R0;
    s["lambda0"] = pair.lambda0;
    s["kappa1"] = rep.kappa1_found;
    s["kappa2"] = rep.kappa2_found;
    s["profile_constant"] = rep.profile_constant;
    s["hypotheses"] = {{"tangency", rep.tangency},
                       {"profile", rep.profile},
                       {"gradient", rep.gradient},
                       {"curvature", rep.curvature}};
    s["chart"] = {{"min_gap_width", cd.min_gap_width},
                  {"min_determinant", cd.min_determinant},
                  {"cross_constant", cd.cross_constant},
                  {"round_trip_error", cd.round_trip_error}};
    ok = rep.passed() && std::abs(cd.min_determinant - 1.0) < 1e-10;
  } catch (const std::exception& e) {
    s["error"] = e.what();
  }
  s["passed"] = ok;
  return s;
}

json exponent_section(const SweepConfig& cfg, const ExponentResult& t) {
  json s = section("alpha is the positive indicial root and the rate is (alpha - 1)/m");
  const double b = cfg.d + cfg.m - 3.0;
  const double q = cfg.d - 2.0;
  const double res = quadratic_residual(b, q, t.alpha);
  const double beta_star = subsolution_threshold(cfg.d, cfg.m);
  s["alpha"] = t.alpha;
  s["rate"] = t.rate;
  s["beta"] = t.beta;
  s["quadratic_residual"] = res;
  s["subsolution_threshold"] = beta_star;
  s["passed"] = res <= 1e-12 && t.alpha > 0.0 && t.alpha < 1.0 &&
                std::abs(t.rate - (t.beta - 1.0 / cfg.m)) <= 1e-14 &&
                p_poly_nonincreasing(beta_star, cfg.d, cfg.m);
  return s;
}

json cert_to_json(const SubSuperCertificate& c) {
  return {{"name", c.name},
          {"nodes_checked", c.nodes_checked},
          {"residual_sign_violations", c.residual_sign_violations},
          {"bound_violations", c.bound_violations},
          {"max_violation", c.max_violation},
          {"min_margin", c.min_margin}};
}

json radial_bounds_section(const SweepConfig& cfg, double lambda0) {
  json s = section("bounded radial profile g satisfies min{r, envelope} <= g <= r^alpha and "
                   "g <= C0 (r - a0 r^b0) near the axis");
  const double beta = subsolution_threshold(cfg.d, cfg.m);
  bool ok = true;
  json cases = json::array();
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    json c{{"epsilon", eps}};
    try {
      const GapOdeProblem prob{eps, cfg.d, cfg.m, lambda0, 1};
      const auto sol = solve_g(prob);
      const auto cert = certify_bounds(prob, sol, beta, 1.0, 2.0, kBoundTolerance);
      c["r0"] = cert.linear_upper.r0;
      c["C0"] = cert.linear_upper.C0;
      c["lower"] = cert_to_json(cert.lower);
      c["power_upper"] = cert_to_json(cert.power_upper);
      c["linear_upper"] = cert_to_json(cert.linear_upper);
      c["passed"] = cert.valid();
      ok = ok && cert.valid();
    } catch (const std::exception& e) {
      c["error"] = e.what();
      c["passed"] = false;
      ok = false;
    }
    cases.push_back(c);
  }
  s["beta"] = beta;
  s["a0"] = 1.0;
  s["b0"] = 2.0;
  s["lambda"] = lambda0;
  s["cases"] = cases;
  s["passed"] = ok;
  return s;
}

json mode_decay_section(const SweepConfig& cfg) {
  json s = section("higher modes decay like r^{alpha_k}: sup V_k(r) / r^{alpha_k} <= 1 + tol");
  bool ok = true;
  json cases = json::array();
  for (int k : {1, 2, 3}) {
    for (double eps : {1e-3, 1e-4}) {
      json c{{"k", k}, {"epsilon", eps}};
      try {
        const auto rep = mode_decay(GapOdeProblem{eps, cfg.d, cfg.m, 1.0, k}, {}, kDecayTolerance);
        c["alpha_k"] = rep.alpha_k;
        c["sup_ratio"] = rep.sup_ratio;
        c["argsup"] = rep.argsup;
        c["passed"] = rep.passed;
        ok = ok && rep.passed;
      } catch (const std::exception& e) {
        c["error"] = e.what();
        c["passed"] = false;
        ok = false;
      }
      cases.push_back(c);
    }
  }
  s["tolerance"] = kDecayTolerance;
  s["cases"] = cases;
  s["passed"] = ok;
  return s;
}

}  // namespace

VerifyReport verify_all(const SweepConfig& cfg) {
  VerifyReport report;
  json& j = report.json;
  j["config"] = json::object();
  try {
    j["config"] = config_to_json(cfg);
  } catch (const std::exception&) {
  }
  const ExponentResult t = exponents(ExponentParams{cfg.d, cfg.m, 1});
  j["targets"] = {{"d", cfg.d},
                  {"m", cfg.m},
                  {"alpha", t.alpha},
                  {"rate", t.rate},
                  {"beta", t.beta},
                  {"subsolution_threshold", subsolution_threshold(cfg.d, cfg.m)}};

  json sections = json::object();
  bool geometry_ok = false;
  sections["geometry"] = geometry_section(cfg, geometry_ok);

  static const char* const kStatements[][2] = {
      {"exponents", "alpha is the positive indicial root and the rate is (alpha - 1)/m"},
      {"radial_bounds", "bounded radial profile g is bracketed by its explicit envelopes"},
      {"mode_decay", "higher modes decay like r^{alpha_k}"},
      {"gap_solver", "discrete maximum principle and subsolution u >= r - 10 h^2 on every solve"},
      {"rate", "fitted max-gradient slope within 0.05 of (alpha - 1)/m"},
      {"lower_bound", "U(eps^{1/m}) eps^{-alpha/m} and the C1 plateau vary by less than a factor 2"},
      {"profile", "M(r) / (eps + lambda0 r^m)^{(alpha-1)/m} is bounded uniformly in r and eps"},
      {"decay", "U(rho) / rho^alpha is bounded uniformly over rho in [eps^{1/m}, R0/2] and eps"}};

  if (!geometry_ok) {
    for (const auto& st : kStatements) sections[st[0]] = skipped(st[1]);
    j["sections"] = sections;
    j["passed"] = false;
    report.passed = false;
    return report;
  }

  const double lambda0 = cfg.pair_for(0).lambda0;
  sections["exponents"] = exponent_section(cfg, t);
  sections["radial_bounds"] = radial_bounds_section(cfg, lambda0);
  sections["mode_decay"] = mode_decay_section(cfg);

  SweepResult sweep;
  bool sweep_ok = true;
  std::string sweep_error;
  try {
    sweep = run_sweep(cfg);
  } catch (const std::exception& e) {
    sweep_ok = false;
    sweep_error = e.what();
  }

  if (!sweep_ok) {
    for (const char* name : {"gap_solver", "rate", "lower_bound", "profile", "decay"}) {
      json s = section(name);
      for (const auto& st : kStatements)
        if (std::string(st[0]) == name) s["statement"] = st[1];
      s["error"] = sweep_error;
      sections[name] = s;
    }
  } else {
    const auto& rows = sweep.rows;
    const auto window = cfg.window();
    std::vector<SweepRow> fit_rows;
    for (int i : window) fit_rows.push_back(rows[static_cast<std::size_t>(i)]);

    json table = json::array();
    for (const auto& r : rows)
      table.push_back({{"epsilon", r.epsilon},
                       {"max_grad", r.max_grad},
                       {"max_grad_radius", r.max_grad_radius},
                       {"u_at_eps1m", r.u_at_eps1m},
                       {"grad_lb", r.grad_lb},
                       {"c1_est", r.c1_est},
                       {"c1_spread", r.c1_spread},
                       {"profile_bound", r.profile_bound},
                       {"decay_slope", r.decay_slope},
                       {"decay_slope_ode", r.decay_slope_ode},
                       {"decay_bound", r.decay_bound},
                       {"subsolution_margin", r.subsolution_margin},
                       {"subsolution_allowance", r.subsolution_allowance},
                       {"maximum_principle", r.maximum_principle},
                       {"residual", r.residual},
                       {"iterations", r.iterations},
                       {"method", r.method},
                       {"nr", r.nr},
                       {"ns", r.ns}});
    j["sweep"] = table;

    {
      json s = section(kStatements[3][1]);
      bool ok = true;
      for (const auto& r : rows)
        ok = ok && r.maximum_principle && r.subsolution_margin >= -r.subsolution_allowance;
      s["passed"] = ok;
      sections["gap_solver"] = s;
    }
    {
      json s = section(kStatements[4][1]);
      json fits = json::object();
      bool ok = true;
      for (const char* q : {"max_grad", "grad_lb", "u_at_eps1m"}) {
        const RateFit f = fit_rate(fit_rows, q, quantity_target(q, t));
        fits[q] = fit_to_json(f);
        if (std::string(q) == "max_grad") ok = f.deviation <= kSlopeTolerance;
      }
      bool monotone = true;
      for (std::size_t i = 1; i < rows.size(); ++i)
        monotone = monotone && rows[i].max_grad > rows[i - 1].max_grad;
      s["tolerance"] = kSlopeTolerance;
      s["window"] = window;
      s["fits"] = fits;
      s["monotone_max_grad"] = monotone;
      s["passed"] = ok;
      sections["rate"] = s;
    }
    {
      json s = section(kStatements[5][1]);
      std::vector<double> scaled, c1;
      for (const auto& r : rows) {
        scaled.push_back(r.u_at_eps1m * std::pow(r.epsilon, -t.beta));
        c1.push_back(r.c1_est);
      }
      const double a = spread(scaled), b = spread(c1);
      s["scaled_u"] = scaled;
      s["scaled_u_spread"] = a;
      s["c1"] = c1;
      s["c1_spread"] = b;
      s["c1_min"] = *std::min_element(c1.begin(), c1.end());
      s["factor"] = kStabilityFactor;
      s["passed"] = a < kStabilityFactor && b < kStabilityFactor && s["c1_min"].get<double>() > 0.0;
      sections["lower_bound"] = s;
    }
    {
      json s = section(kStatements[6][1]);
      std::vector<double> bounds;
      for (const auto& r : rows) bounds.push_back(r.profile_bound);
      const double sp = spread(bounds);
      s["per_epsilon"] = bounds;
      s["bound"] = *std::max_element(bounds.begin(), bounds.end());
      s["spread"] = sp;
      s["factor"] = kStabilityFactor;
      s["passed"] = std::isfinite(sp) && sp <= kStabilityFactor;
      sections["profile"] = s;
    }
    {
      json s = section(kStatements[7][1]);
      // eps with eps^{1/m} > R0/2 have an empty window
      std::vector<double> bounds, without_window;
      for (const auto& r : rows) {
        if (r.decay_bound > 0.0)
          bounds.push_back(r.decay_bound);
        else
          without_window.push_back(r.epsilon);
      }
      const double sp = bounds.empty() ? std::numeric_limits<double>::infinity() : spread(bounds);
      s["epsilons_without_window"] = without_window;
      const auto& last = rows.back();
      s["per_epsilon"] = bounds;
      s["bound"] = bounds.empty() ? 0.0 : *std::max_element(bounds.begin(), bounds.end());
      s["spread"] = sp;
      s["factor"] = kStabilityFactor;
      s["slope"] = {{"epsilon", last.epsilon},
                    {"fitted", last.decay_slope},
                    {"radial_profile", last.decay_slope_ode},
                    {"alpha", t.alpha},
                    {"deviation_from_alpha", std::abs(last.decay_slope - t.alpha)},
                    {"deviation_from_profile", std::abs(last.decay_slope - last.decay_slope_ode)}};
      s["passed"] = std::isfinite(sp) && sp <= kStabilityFactor;
      sections["decay"] = s;
    }
  }

  bool all = true;
  for (const auto& [name, s] : sections.items()) all = all && s["passed"].get<bool>();
  j["sections"] = sections;
  j["passed"] = all;
  report.passed = all;
  return report;
}

}  // namespace gaplab
