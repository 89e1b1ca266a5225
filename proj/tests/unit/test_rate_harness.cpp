#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "gaplab/errors.hpp"
#include "gaplab/exponents.hpp"
#include "gaplab/rate_harness.hpp"
#include "gaplab/sweep_config.hpp"

using namespace gaplab;

namespace {

SweepConfig small_config(int d = 3, double m = 2.0) {
  SweepConfig cfg = default_sweep_config(d, m);
  cfg.grids = {GridSpec{128, 16, -1.0}};
  return cfg;
}

std::string csv_of(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  write_sweep_csv(rows, out);
  return out.str();
}

}  // namespace

TEST_CASE("fit of an exact power law") {
  const double rate = -0.2928932;
  std::vector<double> eps = log_spaced(1e-2, 1e-4, 6), y;
  for (double e : eps) y.push_back(3.0 * std::pow(e, rate));
  const auto fit = fit_rate(eps, y, rate);
  CHECK(std::abs(fit.slope - rate) <= 1e-12);
  CHECK(std::abs(fit.intercept - std::log(3.0)) <= 1e-12);
  CHECK(fit.deviation <= 1e-12);
  for (double r : fit.residuals) CHECK(std::abs(r) <= 1e-12);

  // rescaling moves the intercept only
  std::vector<double> scaled;
  for (double v : y) scaled.push_back(17.5 * v);
  const auto fit2 = fit_rate(eps, scaled, rate);
  CHECK(fit2.slope == doctest::Approx(fit.slope).epsilon(1e-13));
  CHECK(fit2.intercept - fit.intercept == doctest::Approx(std::log(17.5)).epsilon(1e-12));
}

TEST_CASE("fit reports the deviation without clipping") {
  std::vector<double> eps = log_spaced(1e-1, 1e-5, 5), y;
  for (double e : eps) y.push_back(std::pow(e, -0.5));
  const auto fit = fit_rate(eps, y, -0.25);
  CHECK(fit.deviation == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("fit rejects bad measurements") {
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  CHECK_THROWS_AS(fit_rate(eps, std::vector<double>{1, 2, 0, 4}, 0.0), DomainError);
  CHECK_THROWS_AS(fit_rate(eps, std::vector<double>{1, -2, 3, 4}, 0.0), DomainError);
  CHECK_THROWS_AS(fit_rate(std::vector<double>{1e-1, 1e-2, 1e-3}, std::vector<double>{1, 2, 3}, 0.0),
                  DomainError);
  CHECK_THROWS_AS(fit_rate(eps, std::vector<double>{1, 2, 3}, 0.0), DomainError);
}

TEST_CASE("quantity targets") {
  const auto t = exponents(ExponentParams{3, 2.0, 1});
  CHECK(quantity_target("max_grad", t) == t.rate);
  CHECK(quantity_target("grad_lb", t) == t.rate);
  CHECK(quantity_target("u_at_eps1m", t) == t.beta);
  CHECK(quantity_target("c1_est", t) == 0.0);
  CHECK_THROWS_AS(quantity_target("nope", t), DomainError);
}

TEST_CASE("sweep csv round trip") {
  std::vector<SweepRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].epsilon = std::pow(10.0, -2 - i) / 3.0;
    rows[i].max_grad = 1.0 / 7.0 + i;
    rows[i].u_at_eps1m = std::sqrt(2.0) * (i + 1);
    rows[i].grad_lb = M_PI * (i + 1);
    rows[i].c1_est = std::exp(-1.0 - i);
  }
  const std::string text = csv_of(rows);
  CHECK(text.rfind("epsilon,max_grad,u_at_eps1m,grad_lb,c1_est\n", 0) == 0);
  std::istringstream in(text);
  const auto back = read_sweep_csv(in);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].epsilon == rows[i].epsilon);
    CHECK(back[i].max_grad == rows[i].max_grad);
    CHECK(back[i].u_at_eps1m == rows[i].u_at_eps1m);
    CHECK(back[i].grad_lb == rows[i].grad_lb);
    CHECK(back[i].c1_est == rows[i].c1_est);
  }
  std::istringstream bad_header("eps,max_grad\n1,2\n");
  CHECK_THROWS_AS(read_sweep_csv(bad_header), DomainError);
  std::istringstream short_row("epsilon,max_grad,u_at_eps1m,grad_lb,c1_est\n1,2,3\n");
  CHECK_THROWS_AS(read_sweep_csv(short_row), DomainError);
  std::istringstream long_row("epsilon,max_grad,u_at_eps1m,grad_lb,c1_est\n1,2,3,4,5,6\n");
  CHECK_THROWS_AS(read_sweep_csv(long_row), DomainError);
  std::istringstream junk("epsilon,max_grad,u_at_eps1m,grad_lb,c1_est\n1,2,x,4,5\n");
  CHECK_THROWS_AS(read_sweep_csv(junk), DomainError);
}

TEST_CASE("config validation and json round trip") {
  SweepConfig cfg = default_sweep_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.epsilons.size() == 6);
  CHECK(cfg.epsilons.front() == 1e-2);
  CHECK(cfg.epsilons.back() == 1e-4);
  CHECK(cfg.window() == std::vector<int>{1, 2, 3, 4, 5});

  const auto back = config_from_json(config_to_json(cfg));
  CHECK(back.epsilons == cfg.epsilons);
  CHECK(back.grid_for(0).nr == 1024);
  CHECK(back.window() == cfg.window());

  SweepConfig bad = cfg;
  bad.epsilons = {1e-2, 1e-3, 1e-3, 1e-4, 1e-5};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cfg;
  bad.fit_window = {1, 2, 3};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cfg;
  bad.fit_window = {1, 2, 3, 9};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cfg;
  bad.grids = {GridSpec{}, GridSpec{}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cfg;
  bad.epsilons = {1e-2, 1e-3, 1e-4, 1e-5};
  CHECK_THROWS_AS(bad.validate(), DomainError);  // default window keeps only 3 points

  const auto parsed = config_from_json(nlohmann::json::parse(R"({
      "d": 4, "m": 3, "epsilons": [1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
      "grid": {"nr": 200, "ns": 20},
      "solver": {"tol": 1e-9, "max_iter": 500, "method": "cg"},
      "fit": {"window": [0, 1, 2, 3]}, "geometry": "flat_plates"})"));
  CHECK(parsed.d == 4);
  CHECK(parsed.m == 3.0);
  CHECK(parsed.grid_for(3).nr == 200);
  CHECK(parsed.solver.method == LinearSolverKind::Iterative);
  CHECK(parsed.solver.max_iterations == 500);
  CHECK(parsed.flat_plates);
  CHECK_NOTHROW(parsed.validate());
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"solver": {"method": "magic"}})")),
                  DomainError);
}

TEST_CASE("flat-plate control sweep") {
  SweepConfig cfg = small_config();
  cfg.flat_plates = true;
  const auto res = run_sweep(cfg);
  for (const auto& row : res.rows) {
    CHECK(std::abs(row.max_grad - 1.0) <= 1e-3);
    CHECK(row.c1_est == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("m-ellipsoid sweep") {
  const SweepConfig cfg = small_config();
  const auto res = run_sweep(cfg);
  REQUIRE(res.rows.size() == 6);
  CHECK(res.lambda0 == doctest::Approx(1.0));
  CHECK(res.targets.rate == doctest::Approx((std::sqrt(2.0) - 2.0) / 2.0).epsilon(1e-15));
  std::vector<double> scaled;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    if (i > 0) CHECK(r.max_grad > res.rows[i - 1].max_grad);
    CHECK(r.maximum_principle);
    CHECK(r.subsolution_margin >= -r.subsolution_allowance);
    CHECK(r.grad_lb == doctest::Approx(r.u_at_eps1m / std::sqrt(r.epsilon)));
    CHECK(r.c1_est > 0.0);
    // U follows the radial profile on the decay window
    CHECK(std::abs(r.decay_slope - r.decay_slope_ode) <= 0.05);
    scaled.push_back(r.u_at_eps1m / std::pow(r.epsilon, res.targets.beta));
  }
  CHECK(*std::max_element(scaled.begin(), scaled.end()) /
            *std::min_element(scaled.begin(), scaled.end()) <
        2.0);
  const auto fit = fit_rate(res.rows, "max_grad", res.targets.rate, cfg.window());
  CHECK(fit.quantity == "max_grad");
  CHECK(fit.residuals.size() == 5);
  CHECK(fit.deviation <= 0.05);
}

TEST_CASE("sweeps are deterministic") {
  SweepConfig cfg = small_config(4, 2.0);
  const std::string a = csv_of(run_sweep(cfg).rows);
  const std::string b = csv_of(run_sweep(cfg).rows);
  cfg.parallelism = 3;
  const std::string c = csv_of(run_sweep(cfg).rows);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("lateral value does not change the fitted slope") {
  SweepConfig cfg = small_config();
  const auto t = exponents(ExponentParams{3, 2.0, 1});
  const double base = fit_rate(run_sweep(cfg).rows, "max_grad", t.rate, cfg.window()).slope;
  for (double scale : {0.75, 1.25}) {
    cfg.lateral_scale = scale;
    const auto fit = fit_rate(run_sweep(cfg).rows, "max_grad", t.rate, cfg.window());
    CHECK(fit.slope == doctest::Approx(base).epsilon(1e-8));
  }
}

TEST_CASE("a failing solve names its epsilon") {
  SweepConfig cfg = small_config();
  cfg.solver.method = LinearSolverKind::Iterative;
  cfg.solver.max_iterations = 2;
  try {
    run_sweep(cfg);
    FAIL("sweep should have failed");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("epsilon = 0.01") != std::string::npos);
  }
}

TEST_CASE("verify: corrupted geometry skips the remaining sections") {
  SweepConfig cfg = small_config();
  cfg.R0 = 1.0;
  const auto rep = verify_all(cfg);
  CHECK_FALSE(rep.passed);
  const auto& s = rep.json["sections"];
  CHECK_FALSE(s["geometry"]["passed"].get<bool>());
  CHECK(s["geometry"].contains("error"));
  for (const char* name : {"exponents", "radial_bounds", "mode_decay", "gap_solver", "rate",
                           "lower_bound", "profile", "decay"}) {
    CAPTURE(name);
    CHECK(s[name]["skipped"].get<bool>());
    CHECK_FALSE(s[name]["passed"].get<bool>());
  }
  CHECK(rep.json["targets"]["alpha"].get<double>() == doctest::Approx(std::sqrt(2.0) - 1.0));
}

TEST_CASE("verify: coarse default geometry passes") {
  const auto rep = verify_all(small_config());
  CHECK(rep.passed);
  const auto& t = rep.json["targets"];
  CHECK(t["rate"].get<double>() == doctest::Approx((std::sqrt(2.0) - 2.0) / 2.0));
  CHECK(t["beta"].get<double>() == doctest::Approx((std::sqrt(2.0) - 1.0) / 2.0));
  for (const auto& [name, sec] : rep.json["sections"].items()) {
    CAPTURE(name);
    CHECK(sec["passed"].get<bool>());
    CHECK(sec["statement"].is_string());
  }
  CHECK(rep.json["sweep"].size() == 6);
}
