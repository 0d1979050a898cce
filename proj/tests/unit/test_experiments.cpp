#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "roughmc/analytic.hpp"
#include "roughmc/experiments.hpp"

using namespace roughmc;
using nlohmann::json;

namespace {

std::string csv_of(const std::vector<SweepRecord>& r) {
  std::ostringstream o;
  write_records_csv(o, r);
  return o.str();
}

SweepRecord rec(Method m, double sigma, double msd, std::size_t n = 1, double eps = 0.1) {
  SweepRecord r;
  r.method = m;
  r.sigma = sigma;
  r.msd = msd;
  r.n = n;
  r.epsilon = eps;
  r.accept_rate = 0.5;
  return r;
}

json small_sweep() {
  return json::parse(R"({
    "schema_version": 1,
    "methods": ["RWM", "MALA", "ModifiedMALA", "Independence"],
    "potential": {"kind": "separable_rough", "smooth": "harmonic"},
    "beta": 5, "dims": [1, 3], "eps": [0.0625, 0.03125],
    "sigma": {"mode": "log_range", "lo": 0.02, "hi": 1.0, "count": 4},
    "steps": 4000, "replicas": 2, "master_seed": 42
  })");
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const SweepConfig c = SweepConfig::from_json(small_sweep());
  CHECK(c.methods.size() == 4);
  CHECK(c.effective_burn_in() == 400);
  CHECK(c.start_point(3) == std::vector<double>(3, 0.0));
  CHECK(SweepConfig::from_json(c.to_json()).to_json() == c.to_json());

  auto bad = small_sweep();
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(SweepConfig::from_json(bad), std::invalid_argument);
  bad = small_sweep();
  bad["burn_in"] = 4000;
  CHECK_THROWS_AS(SweepConfig::from_json(bad), std::invalid_argument);
  bad = small_sweep();
  bad["methods"] = json::array();
  CHECK_THROWS_AS(SweepConfig::from_json(bad), std::invalid_argument);
  bad = small_sweep();
  bad["sigma"] = {{"mode", "explicit"}, {"values", {0.1, -0.2}}};
  CHECK_THROWS_AS(SweepConfig::from_json(bad), std::invalid_argument);
  bad = small_sweep();
  bad["eps"] = json::array();
  CHECK_THROWS_AS(SweepConfig::from_json(bad), std::invalid_argument);
  bad = small_sweep();
  bad["methods"] = {"HMC"};
  CHECK_THROWS_AS(SweepConfig::from_json(bad), std::invalid_argument);

  auto well = small_sweep();
  well["potential"]["smooth"] = "double_well";
  CHECK(SweepConfig::from_json(well).start_point(2) == std::vector<double>(2, -1.0));
}

TEST_CASE("sigma grids") {
  SigmaGrid g = SigmaGrid::from_json(json::parse(R"({"mode":"log_range","lo":0.1,"hi":10,"count":5})"));
  const auto v = g.resolve(0.5);
  REQUIRE(v.size() == 5);
  CHECK(v[2] == doctest::Approx(1.0).epsilon(1e-14));
  g = SigmaGrid::from_json(json::parse(R"({"mode":"eps_scaled","alpha":0.5,"c":[2,1]})"));
  const auto w = g.resolve(0.25);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(1.0));
  g = SigmaGrid::from_json(json::parse(R"([0.3, 0.1, 0.3])"));
  CHECK(g.resolve(1.0) == std::vector<double>{0.1, 0.3});
  g = SigmaGrid::from_json(json::parse(R"({"mode":"auto","c":1,"decades_below":1,"decades_above":1})"));
  const auto a = g.resolve(0.01);
  CHECK(a.front() <= 0.01 * 0.1 * 1.0001);
  CHECK(a.back() >= 0.1 * 10 / 1.0001);
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK(a[i] / a[i - 1] == doctest::Approx(std::pow(10.0, 0.25)).epsilon(1e-12));
}

TEST_CASE("sweep is deterministic and scheduling-independent") {
  SweepConfig c = SweepConfig::from_json(small_sweep());
  const auto a = run_sigma_sweep(c);
  const auto b = run_sigma_sweep(c);
  const auto s = run_sigma_sweep_serial(c);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(csv_of(a) == csv_of(s));
  // 3 sigma methods x 4 sigmas + 1 sigma-free, x 2 dims x 2 eps
  CHECK(a.size() == (3 * 4 + 1) * 2 * 2);
  for (const auto& r : a) {
    CHECK(r.msd >= 0.0);
    CHECK((r.accept_rate >= 0.0 && r.accept_rate <= 1.0));
    CHECK(r.error.empty());
  }

  c.merge_replicas = false;
  CHECK(run_sigma_sweep(c).size() == (3 * 4 + 1) * 2 * 2 * 2);

  c.master_seed = 43;
  CHECK(csv_of(run_sigma_sweep(c)) != csv_of(a));
}

TEST_CASE("JSON summary replays to identical CSV") {
  for (const char* pot : {R"({"kind":"random_multiscale","modes":10,"seed":7})",
                          R"({"kind":"separable_rough","smooth":"double_well"})"}) {
    json j = small_sweep();
    j["potential"] = json::parse(pot);
    j["dims"] = {1};
    const SweepConfig c = SweepConfig::from_json(j);
    const auto rec1 = run_sigma_sweep(c);
    const json summary = sweep_summary(c, rec1);
    const SweepConfig replay = SweepConfig::from_json(summary.at("config"));
    CHECK(csv_of(run_sigma_sweep(replay)) == csv_of(rec1));
    if (c.potential.kind == PotentialKind::RandomMultiscale)
      CHECK(summary["config"]["potential"]["coefficients"].size() == 10);
  }
}

TEST_CASE("CSV output") {
  CHECK(csv_of({}) == "method,n,epsilon,sigma,msd,msd_stderr,accept_rate,nonfinite,seed,walltime_s\n");
  const SweepConfig c = SweepConfig::from_json(small_sweep());
  const auto r = run_sigma_sweep(c);
  std::istringstream in(csv_of(r));
  const auto back = read_records_csv(in);
  REQUIRE(back.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(back[i].method == r[i].method);
    CHECK(back[i].msd == r[i].msd);
    CHECK(back[i].sigma == r[i].sigma);
    CHECK(back[i].seed == r[i].seed);
  }
  CHECK(csv_of(back) == csv_of(r));
  std::istringstream bad("method,n\nRWM,1\n");
  CHECK_THROWS(read_records_csv(bad));
}

TEST_CASE("merging replicas") {
  std::vector<SweepRecord> r = {rec(Method::RWM, 1.0, 1.0), rec(Method::RWM, 1.0, 3.0)};
  r[0].replica = 0;
  r[1].replica = 1;
  r[0].msd_stderr = 0.3;
  r[1].msd_stderr = 0.4;
  const auto m = merge_replicas(r);
  REQUIRE(m.size() == 1);
  CHECK(m[0].msd == 2.0);
  CHECK(m[0].msd_stderr == doctest::Approx(0.25));
  CHECK(m[0].replica == -1);
}

TEST_CASE("optimal sigma") {
  const auto up = optimal_sigma({rec(Method::MALA, 0.1, 1.0), rec(Method::MALA, 0.2, 2.0),
                                 rec(Method::MALA, 0.4, 3.0)});
  CHECK(up.endpoint);
  CHECK(up.sigma == 0.4);
  const auto tie = optimal_sigma({rec(Method::RWM, 0.1, 1.0), rec(Method::RWM, 0.2, 5.0),
                                  rec(Method::RWM, 0.4, 5.0), rec(Method::RWM, 0.8, 1.0)});
  CHECK(tie.sigma == 0.2);
  CHECK_FALSE(tie.endpoint);
  const auto flat = optimal_sigma({rec(Method::RWM, 0.1, 0.0), rec(Method::RWM, 0.2, 0.0),
                                   rec(Method::RWM, 0.4, 0.0)});
  CHECK(flat.stagnant);
  const auto ind = optimal_sigma({rec(Method::Independence, 0.0, 7.5)});
  CHECK(ind.sigma_free);
  CHECK(ind.msd == 7.5);
  CHECK_THROWS_AS(optimal_sigma({rec(Method::RWM, 0.1, 1.0), rec(Method::RWM, 0.2, 2.0)}),
                  std::invalid_argument);
}

TEST_CASE("optimal MALA sigma on the scalar quadratic") {
  const double eps = 1e-2;
  const double exact = std::sqrt(2.0 * optimal_delta().argument * eps);
  json j = json::parse(R"({
    "schema_version": 1, "methods": ["MALA"],
    "potential": {"kind": "quadratic", "curvature_from_epsilon": true},
    "beta": 1, "eps": [0.01], "steps": 1000000, "burn_in": 1000, "master_seed": 5
  })");
  const double ratio = std::pow(10.0, 1.0 / 16.0);
  j["sigma"] = {{"mode", "log_range"},
                {"lo", exact / std::pow(ratio, 6)},
                {"hi", exact * std::pow(ratio, 6)},
                {"count", 13}};
  const auto best = optimal_sigma(run_sigma_sweep(SweepConfig::from_json(j)));
  CHECK(std::abs(std::log(best.sigma / exact)) <= std::log(ratio) * 1.0001);
  CHECK(best.sigma / std::sqrt(eps) == doctest::Approx(1.59873).epsilon(0.16));
}

TEST_CASE("RWM MSD is unimodal in sigma on a Gaussian") {
  const json j = json::parse(R"({
    "schema_version": 1, "methods": ["RWM"],
    "potential": {"kind": "quadratic", "curvature": 1},
    "beta": 1, "eps": [1], "steps": 1000000, "master_seed": 9,
    "sigma": [0.5, 1, 2, 2.4, 3, 4]
  })");
  const auto r = run_sigma_sweep(SweepConfig::from_json(j));
  REQUIRE(r.size() == 6);
  int changes = 0;
  for (std::size_t i = 2; i < r.size(); ++i)
    changes += ((r[i].msd > r[i - 1].msd) != (r[i - 1].msd > r[i - 2].msd));
  CHECK(changes == 1);
  CHECK(r[1].msd > r[0].msd);
  CHECK(r[5].msd < r[4].msd);
}

TEST_CASE("scaling fit") {
  std::vector<double> eps, sig;
  for (int k = 5; k <= 10; ++k) {
    eps.push_back(std::ldexp(1.0, -k));
    sig.push_back(0.7 * std::pow(eps.back(), 0.5));
  }
  const ScalingFit f = scaling_fit(eps, sig);
  CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.slope_stderr < 1e-10);
  CHECK(std::exp(f.intercept) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK_THROWS_AS(scaling_fit({0.1, 0.01, 0.001}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("RWM optimum does not move with eps on the smooth harmonic") {
  const json j = json::parse(R"({
    "schema_version": 1, "methods": ["RWM"],
    "potential": {"kind": "separable_rough", "smooth": "harmonic", "amplitude": 0},
    "beta": 5, "eps": [0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125, 0.0009765625],
    "steps": 500000, "master_seed": 3,
    "sigma": {"mode": "log_range", "lo": 0.8, "hi": 8, "count": 33}
  })");
  const auto opt = optimal_sigmas(run_sigma_sweep(SweepConfig::from_json(j)));
  std::vector<double> eps, sig;
  for (const auto& o : opt) {
    eps.push_back(o.epsilon);
    sig.push_back(o.sigma);
    CHECK_FALSE(o.endpoint);
  }
  CHECK(std::abs(scaling_fit(eps, sig).slope) < 0.1);
}

TEST_CASE("batch-means stderr follows the square-root law") {
  json j = json::parse(R"({
    "schema_version": 1, "methods": ["RWM", "MALA"],
    "potential": {"kind": "separable_rough", "smooth": "harmonic"},
    "beta": 5, "dims": [1], "eps": [0.03125], "sigma": [0.05, 0.3], "master_seed": 1
  })");
  j["steps"] = 250000;
  const auto a = run_sigma_sweep(SweepConfig::from_json(j));
  j["steps"] = 1000000;
  const auto b = run_sigma_sweep(SweepConfig::from_json(j));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < 3; ++i) {
    const double ratio = b[i].msd_stderr / a[i].msd_stderr;
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
  }
}

TEST_CASE("amplification table") {
  std::vector<SweepRecord> r = {
      rec(Method::RWM, 0.1, 1.0),          rec(Method::RWM, 0.2, 2.0),
      rec(Method::RWM, 0.4, 1.5),          rec(Method::ModifiedMALA, 0.1, 3.0),
      rec(Method::ModifiedMALA, 0.2, 9.0), rec(Method::ModifiedMALA, 0.4, 4.0),
      rec(Method::Independence, 0.0, 20.0)};
  const auto t = amplification_table(r);
  REQUIRE(t.size() == 3);
  for (const auto& row : t) {
    if (row.method == Method::RWM) CHECK(row.ratio == 1.0);
    if (row.method == Method::ModifiedMALA) CHECK(row.ratio == 4.5);
    if (row.method == Method::Independence) CHECK(row.ratio == 10.0);
  }
  const std::string text = render_amplification_text(t);
  CHECK(text.find("ModifiedMALA") != std::string::npos);
  std::ostringstream o;
  write_amplification_csv(o, t);
  CHECK(o.str().rfind("epsilon,n,method,optimal_sigma,optimal_msd,ratio\n", 0) == 0);

  r.erase(r.begin(), r.begin() + 3);
  CHECK_THROWS_AS(amplification_table(r), std::invalid_argument);
}

TEST_CASE("gap and smoothing drivers") {
  const GapConfig g = GapConfig::from_json(json::parse(R"({
    "schema_version": 1, "methods": ["RWM", "Independence"],
    "potential": {"kind": "separable_rough", "smooth": "harmonic"},
    "beta": 5, "eps": [0.0625], "sigma": [0.4], "grid": {"a": -3, "b": 3, "points": 401}
  })"));
  const auto gr = run_gap_sweep(g);
  REQUIRE(gr.size() == 2);
  for (const auto& r : gr) {
    CHECK((r.gap > 0.0 && r.gap <= 2.0));
    CHECK(r.conductance_bound >= r.gap);
  }
  std::ostringstream o;
  write_gap_csv(o, gr);
  CHECK(o.str().rfind("method,epsilon,sigma,G,gap,lambda2,conductance_bound\n", 0) == 0);

  const SmoothConfig s = SmoothConfig::from_json(json::parse(R"({
    "schema_version": 1, "potential": {"kind": "quadratic", "curvature": 1},
    "gamma": 0.05, "beta": 5, "samples": 2000, "x": {"start": -1, "stop": 1, "count": 5}, "seed": 3
  })"));
  const auto rows = run_smoothing(s);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(std::abs(r.gradient - r.x / 1.05) < 4.0 * r.gradient_stderr + 1e-12);
    CHECK(std::abs(r.value - (r.x * r.x / 2.1 + std::log(1.05) / 10.0)) < 4.0 * r.value_stderr);
  }
  std::ostringstream so;
  write_smooth_csv(so, rows);
  CHECK(so.str().rfind("x,v_gamma,grad_v_gamma,v_stderr,grad_stderr\n", 0) == 0);
}

TEST_CASE("analytic summary") {
  const json a = analytic_summary();
  CHECK(std::abs(a.at("delta_star").get<double>() - 1.27797) < 1e-4);
  CHECK(std::abs(a.at("mu_r_minus_one").get<double>() + 0.623) < 0.002);
  CHECK(std::abs(a.at("rwm_optimal_acceptance").get<double>() - 0.234) < 0.002);
}
