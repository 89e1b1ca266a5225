#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <json.hpp>

#include "gaplab/errors.hpp"
#include "gaplab/exponents.hpp"
#include "gaplab/gap_geometry.hpp"
#include "gaplab/gap_solver.hpp"
#include "gaplab/io.hpp"
#include "gaplab/radial_ode.hpp"
#include "gaplab/rate_harness.hpp"
#include "gaplab/sweep_config.hpp"

namespace py = pybind11;
using namespace gaplab;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

SweepConfig parse_config(const std::string& text) {
  return config_from_json(nlohmann::json::parse(text));
}

py::dict radial_to_dict(const RadialSolution& s) {
  py::dict d;
  d["r"] = to_array(s.grid);
  d["g"] = to_array(s.values);
  d["g_prime"] = to_array(s.derivative);
  d["log_slope"] = to_array(s.log_slope);
  d["normalization"] = s.normalization;
  d["ode_residual"] = ode_residual(s);
  return d;
}

py::dict mode_to_dict(const ModeSolution& sol) {
  const int nr = sol.grid.nr();
  const int ns = sol.grid.ns();
  py::array_t<double> u({nr + 1, ns + 1});
  auto uv = u.mutable_unchecked<2>();
  for (int i = 0; i <= nr; ++i)
    for (int j = 0; j <= ns; ++j) uv(i, j) = sol.value(i, j);
  auto cells = [&](const std::vector<double>& v) {
    py::array_t<double> a({nr, ns});
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
  };
  py::dict d;
  d["r"] = to_array(sol.grid.r);
  d["s"] = to_array(sol.grid.s);
  d["u"] = u;
  d["cell_r"] = cells(sol.cell_r);
  d["cell_s"] = cells(sol.cell_s);
  d["grad_r"] = cells(sol.grad_r);
  d["grad_d"] = cells(sol.grad_z);
  d["gap_average"] = to_array(sol.gap_average);
  d["diagnostics"] = diagnostics_to_json(sol.diagnostics).dump();
  const auto prof = max_gradient(sol, 0.0, 0.5 * sol.R0);
  d["max_grad"] = prof.max;
  d["max_grad_radius"] = prof.argmax_r;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gaplab, m) {
  m.doc() = "gradient blow-up lab: exponents, radial ODE, gap solver, rate harness";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("alpha", py::overload_cast<int, double>(&alpha), py::arg("d"), py::arg("m"));
  m.def(
      "alpha_k", [](int d, double mm, int k) { return alpha_k(ExponentParams{d, mm, k}); },
      py::arg("d"), py::arg("m"), py::arg("k"));
  m.def(
      "exponents",
      [](int d, double mm, int k) {
        const auto r = exponents(ExponentParams{d, mm, k});
        py::dict out;
        out["alpha"] = r.alpha;
        out["alpha_k"] = r.alpha_k;
        out["rate"] = r.rate;
        out["beta"] = r.beta;
        return out;
      },
      py::arg("d"), py::arg("m"), py::arg("k") = 1);
  m.def("subsolution_threshold", &subsolution_threshold, py::arg("d"), py::arg("m"));
  m.def("p_poly", &p_poly, py::arg("beta"), py::arg("d"), py::arg("m"), py::arg("t"));
  m.def(
      "r0_C0",
      [](double eps, int d, double mm, double lambda, double a0, double b0) {
        const auto c = r0_C0(eps, d, mm, lambda, a0, b0);
        return py::make_tuple(c.r0, c.C0);
      },
      py::arg("epsilon"), py::arg("d"), py::arg("m"), py::arg("lambda_") = 1.0,
      py::arg("a0") = 1.0, py::arg("b0") = 2.0);

  m.def(
      "solve_g",
      [](double eps, int d, double mm, double lambda, int k, double r_min, int nodes_per_decade) {
        RadialGridSpec spec;
        spec.r_min = r_min;
        spec.nodes_per_decade = nodes_per_decade;
        return radial_to_dict(solve_g(GapOdeProblem{eps, d, mm, lambda, k}, spec));
      },
      py::arg("epsilon"), py::arg("d") = 3, py::arg("m") = 2.0, py::arg("lambda_") = 1.0,
      py::arg("k") = 1, py::arg("r_min") = 0.0, py::arg("nodes_per_decade") = 64);
  m.def(
      "certify_bounds",
      [](double eps, int d, double mm, double lambda, double beta, double a0, double b0, double tol) {
        const GapOdeProblem prob{eps, d, mm, lambda, 1};
        if (beta <= 0.0) beta = subsolution_threshold(d, mm);
        return certificate_to_json(certify_bounds(prob, solve_g(prob), beta, a0, b0, tol)).dump();
      },
      py::arg("epsilon"), py::arg("d") = 3, py::arg("m") = 2.0, py::arg("lambda_") = 1.0,
      py::arg("beta") = 0.0, py::arg("a0") = 1.0, py::arg("b0") = 2.0, py::arg("tol") = 1e-6);
  m.def(
      "mode_decay",
      [](double eps, int d, double mm, int k, double tol) {
        const auto rep = mode_decay(GapOdeProblem{eps, d, mm, 1.0, k}, {}, tol);
        py::dict out;
        out["k"] = rep.k;
        out["alpha_k"] = rep.alpha_k;
        out["sup_ratio"] = rep.sup_ratio;
        out["argsup"] = rep.argsup;
        out["passed"] = rep.passed;
        return out;
      },
      py::arg("epsilon"), py::arg("d") = 3, py::arg("m") = 2.0, py::arg("k") = 1,
      py::arg("tol") = 1e-3);

  m.def(
      "solve_mode",
      [](double eps, int d, double mm, double r1, double r2, double R0, int nr, int ns,
         double grading, bool flat, const std::string& method) {
        const InclusionPair pair = flat ? InclusionPair::flat_plates(eps, R0 > 0.0 ? R0 : 0.3)
                                        : InclusionPair::m_ellipsoids(mm, r1, r2, eps, R0);
        ModeProblem prob{build_chart(pair), d};
        prob.grid = GridSpec{nr, ns, grading};
        if (method == "direct")
          prob.solver.method = LinearSolverKind::Direct;
        else if (method == "cg")
          prob.solver.method = LinearSolverKind::Iterative;
        else if (method != "auto")
          throw DomainError("unknown solver method '" + method + "'");
        py::gil_scoped_release release;
        ModeSolution sol = solve_mode(prob);
        py::gil_scoped_acquire acquire;
        return mode_to_dict(sol);
      },
      py::arg("epsilon"), py::arg("d") = 3, py::arg("m") = 2.0, py::arg("r1") = 1.0,
      py::arg("r2") = 1.0, py::arg("R0") = 0.0, py::arg("nr") = 256, py::arg("ns") = 32,
      py::arg("grading") = -1.0, py::arg("flat") = false, py::arg("method") = "auto");

  m.def(
      "fit_rate",
      [](const std::vector<double>& eps, const std::vector<double>& y, double target) {
        return fit_to_json(fit_rate(eps, y, target)).dump();
      },
      py::arg("epsilon"), py::arg("y"), py::arg("target"));

  m.def(
      "run_sweep",
      [](const std::string& config) {
        const SweepConfig cfg = parse_config(config);
        SweepResult res;
        {
          py::gil_scoped_release release;
          res = run_sweep(cfg);
        }
        std::ostringstream csv;
        write_sweep_csv(res.rows, csv);
        return csv.str();
      },
      py::arg("config_json"));

  m.def(
      "verify_all",
      [](const std::string& config) {
        const SweepConfig cfg = parse_config(config);
        VerifyReport rep;
        {
          py::gil_scoped_release release;
          rep = verify_all(cfg);
        }
        return rep.json.dump();
      },
      py::arg("config_json"));
}
