// gaplab command-line entry point.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaplab/exponents.hpp"
#include "gaplab/gap_geometry.hpp"
#include "gaplab/gap_solver.hpp"
#include "gaplab/io.hpp"
#include "gaplab/radial_ode.hpp"
#include "gaplab/rate_harness.hpp"
#include "gaplab/sweep_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

int cmd_exponent(int d, double m, int k) {
  const auto r = gaplab::exponents(gaplab::ExponentParams{d, m, k});
  json j{{"alpha", r.alpha}, {"alpha_k", r.alpha_k}, {"rate", r.rate}, {"beta", r.beta}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_solve_ode(double eps, int d, double m, double lambda, int k, const std::string& out) {
  const gaplab::GapOdeProblem prob{eps, d, m, lambda, k};
  const auto sol = gaplab::solve_g(prob);
  if (!out.empty()) {
    auto f = open_out(out);
    gaplab::write_ode_csv(sol, f);
  }
  json j{{"epsilon", eps},
         {"d", d},
         {"m", m},
         {"lambda", lambda},
         {"k", k},
         {"nodes", sol.grid.size()},
         {"start_radius", sol.start_radius()},
         {"ode_residual", gaplab::ode_residual(sol)}};
  if (k == 1) {
    const double beta = gaplab::subsolution_threshold(d, m);
    j["certificate"] = gaplab::certificate_to_json(gaplab::certify_bounds(prob, sol, beta));
  } else {
    const auto rep = gaplab::mode_decay(gaplab::GapOdeProblem{eps, d, m, 1.0, k});
    j["decay"] = {{"alpha_k", rep.alpha_k},
                  {"sup_ratio", rep.sup_ratio},
                  {"argsup", rep.argsup},
                  {"passed", rep.passed}};
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_solve_gap(const std::string& config, const std::string& out_dir_opt) {
  const auto cfg = gaplab::load_config(config);
  cfg.validate();
  const fs::path out_dir = out_dir_opt.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir_opt);
  json report = json::array();
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    const auto pair = cfg.pair_for(i);
    gaplab::LateralCondition lateral;
    lateral.value = cfg.lateral_scale * pair.R0;
    const gaplab::ModeProblem prob{gaplab::build_chart(pair), cfg.d, lateral, cfg.grid_for(i),
                                   cfg.solver, {}};
    const auto sol = gaplab::solve_mode(prob);
    const std::string tag = "eps_" + std::to_string(i);
    {
      auto f = open_out(out_dir / (tag + "_field.csv"));
      gaplab::write_field_csv(sol, f);
    }
    {
      auto f = open_out(out_dir / (tag + "_profile.csv"));
      gaplab::write_profile_csv(sol, f);
    }
    json entry = gaplab::diagnostics_to_json(sol.diagnostics);
    entry["epsilon"] = eps;
    entry["field_csv"] = (out_dir / (tag + "_field.csv")).string();
    entry["profile_csv"] = (out_dir / (tag + "_profile.csv")).string();
    report.push_back(entry);
  }
  auto f = open_out(out_dir / "diagnostics.json");
  f << report.dump(2) << '\n';
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const std::string& config) {
  const auto cfg = gaplab::load_config(config);
  const auto result = gaplab::run_sweep(cfg);
  const fs::path out_dir(cfg.out_dir);
  {
    auto f = open_out(out_dir / "sweep.csv");
    gaplab::write_sweep_csv(result.rows, f);
  }
  gaplab::write_sweep_csv(result.rows, std::cout);
  const auto fit = gaplab::fit_rate(result.rows, "max_grad", result.targets.rate, cfg.window());
  std::cerr << "max_grad slope " << fit.slope << " (target " << fit.target << ", deviation "
            << fit.deviation << ")\n";
  return 0;
}

int cmd_fit(const std::string& in, const std::string& quantity, int d, double m,
            std::vector<int> window) {
  std::ifstream f(in);
  if (!f) throw std::runtime_error("cannot open '" + in + "'");
  const auto rows = gaplab::read_sweep_csv(f);
  const auto targets = gaplab::exponents(gaplab::ExponentParams{d, m, 1});
  // like sweep configs, the largest epsilon is left out unless a window is given
  if (window.empty())
    for (int i = 1; i < static_cast<int>(rows.size()); ++i) window.push_back(i);
  const auto fit =
      gaplab::fit_rate(rows, quantity, gaplab::quantity_target(quantity, targets), window);
  std::cout << gaplab::fit_to_json(fit).dump(2) << '\n';
  return 0;
}

int cmd_verify(const std::string& config) {
  const auto cfg = gaplab::load_config(config);
  const auto report = gaplab::verify_all(cfg);
  std::cout << report.json.dump(2) << '\n';
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaplab: gradient blow-up lab for insulated m-convex inclusions"};
  app.require_subcommand(1);

  int d = 3, k = 1;
  double m = 2.0, eps = 1e-3, lambda = 1.0;
  std::string out, config, in, quantity = "max_grad";
  std::vector<int> window;

  auto* exp = app.add_subcommand("exponent", "print alpha, alpha_k, rate and beta as JSON");
  exp->add_option("--d", d, "dimension")->required();
  exp->add_option("--m", m, "convexity order")->required();
  exp->add_option("--k", k, "mode index");

  auto* ode = app.add_subcommand("solve-ode", "solve the radial ODE and certify its envelopes");
  ode->add_option("--epsilon", eps, "gap distance")->required();
  ode->add_option("--d", d, "dimension")->required();
  ode->add_option("--m", m, "convexity order")->required();
  ode->add_option("--lambda", lambda, "gap-profile coefficient");
  ode->add_option("--k", k, "mode index");
  ode->add_option("--out", out, "CSV output (r,g,g_prime)");

  auto* gap = app.add_subcommand("solve-gap", "solve the first-mode gap problem per epsilon");
  gap->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  gap->add_option("--out", out, "output directory (default: out_dir of the config)");

  auto* sweep = app.add_subcommand("sweep", "run the epsilon sweep and write sweep.csv");
  sweep->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);

  auto* fit = app.add_subcommand("fit", "log-log fit of one sweep column");
  fit->add_option("--in", in, "sweep CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--quantity", quantity, "max_grad, u_at_eps1m, grad_lb or c1_est")
      ->check(CLI::IsMember({"max_grad", "u_at_eps1m", "grad_lb", "c1_est"}));
  fit->add_option("--target-d", d, "dimension of the target exponent")->required();
  fit->add_option("--target-m", m, "convexity order of the target exponent")->required();
  fit->add_option("--window", window, "row indices to fit (default: all but the first)");

  auto* verify = app.add_subcommand("verify", "run every check and print the JSON report");
  verify->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*exp) return cmd_exponent(d, m, k);
    if (*ode) return cmd_solve_ode(eps, d, m, lambda, k, out);
    if (*gap) return cmd_solve_gap(config, out);
    if (*sweep) return cmd_sweep(config);
    if (*fit) return cmd_fit(in, quantity, d, m, window);
    if (*verify) return cmd_verify(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
