#include <doctest.h>

#include <cmath>

#include "harness.hpp"
#include "util.hpp"

using namespace qnme;
using namespace qnme::harness;

namespace {

nlohmann::json bern_family(double delta = 0.0) {
  return {{"distribution", "bernoulli"}, {"params", {{"p", 0.5}}},
          {"T", 0},                      {"m", 0},
          {"delta", delta},              {"n_garbage", 1},
          {"seed", 0}};
}

}  // namespace

TEST_CASE("fit_slope on exact power laws") {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::vector<double> counts1, counts2;
  for (double e : eps) {
    counts1.push_back(7.0 / e);
    counts2.push_back(3.0 / (e * e));
  }
  auto f1 = fit_slope(eps, counts1);
  CHECK(std::abs(f1.slope - 1.0) < 1e-9);
  CHECK(f1.stderr_ < 1e-9);
  auto f2 = fit_slope(eps, counts2);
  CHECK(std::abs(f2.slope - 2.0) < 1e-9);

  CHECK_THROWS_AS(fit_slope({0.1, 0.2}, {1.0, 2.0}), Error);
}

TEST_CASE("sweep config rejects unknown fields and bad versions") {
  nlohmann::json j = {{"schema_version", 1}, {"estimator", "mom"},
                      {"family", bern_family()}, {"eps_list", {0.2, 0.1, 0.05}},
                      {"trials", 4}};
  auto cfg = parse_sweep_config(j);
  CHECK(cfg.estimator == "mom");

  nlohmann::json extra = j;
  extra["spurious"] = true;
  CHECK_THROWS_WITH_AS(parse_sweep_config(extra), doctest::Contains("unknown field"),
                       Error);
  nlohmann::json old = j;
  old["schema_version"] = 2;
  CHECK_THROWS_AS(parse_sweep_config(old), Error);
}

TEST_CASE("run_trials determinism and csv") {
  nlohmann::json j = {{"schema_version", 1}, {"estimator", "mom"},
                      {"family", bern_family()}, {"eps_list", {0.2, 0.1, 0.05}},
                      {"trials", 6}};
  auto cfg = parse_sweep_config(j);
  auto r1 = run_trials(cfg, 99);
  auto r2 = run_trials(cfg, 99);
  CHECK(sweep_csv(r1) == sweep_csv(r2));
  CHECK(r1.rows.size() == 18);
  CHECK(r1.slope_valid);
  CHECK(r1.fit.slope == doctest::Approx(2.0).epsilon(0.15));

  auto r3 = run_trials(cfg, 100);
  CHECK(sweep_csv(r1) != sweep_csv(r3));

  // empty sweep still yields valid (empty) outputs
  auto empty_cfg = cfg;
  empty_cfg.trials = 0;
  auto r0 = run_trials(empty_cfg, 1);
  CHECK(r0.rows.empty());
  CHECK_FALSE(r0.slope_valid);
  CHECK(sweep_csv(r0) == "eps,trial,seed,total_experiments,mu_tilde,success\n");
}

TEST_CASE("bounded sweep achieves the success contract at desk scale") {
  nlohmann::json j = {{"schema_version", 1}, {"estimator", "bounded"},
                      {"family", bern_family(0.01)}, {"eps_list", {0.2}},
                      {"trials", 12}};
  auto cfg = parse_sweep_config(j);
  auto r = run_trials(cfg, 7);
  CHECK(r.success_rate[0] >= 2.0 / 3.0);
  // counts are deterministic per eps: the median equals every row
  for (const auto& row : r.rows)
    CHECK(static_cast<double>(row.total_experiments) ==
          doctest::Approx(r.median_experiments[0]));
}

TEST_CASE("single-run helpers derive plans") {
  auto spec = rvoracle::parse_family_spec(bern_family(0.01));
  auto r = run_estimate_bounded(spec, 0.2, 0.0, 1.0, 5);
  CHECK(r.M == 64);
  CHECK(r.T == 64);
  CHECK(r.total_experiments > 0);

  auto mom = run_baseline_mom(spec, 0.1, 3, 5);
  CHECK(mom.group_size == 100);
  CHECK(mom.n_samples == 300);
  CHECK(mom.total_experiments == 300);
  CHECK(std::abs(mom.estimate - 0.5) <= 0.2);
}

TEST_CASE("adversary verify report") {
  AdversaryVerifyConfig cfg;
  cfg.trials = 5;
  auto rep = adversary_verify(cfg, 11);
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["max_residual"].get<double>() <= 1e-9);
  CHECK(rep["instances"].size() == 5);
}

TEST_CASE("lowdepth verify report") {
  LowDepthVerifyConfig cfg;
  cfg.extra_random = 2;
  auto rep = lowdepth_verify(cfg, 13);
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["counts_ok"].get<bool>());
  CHECK(rep["rounds_ok"].get<bool>());
}

TEST_CASE("counting progress report") {
  CountingConfig cfg;  // defaults: n=8, k=4, m=1, grover
  auto trace = counting_progress(cfg, 3);
  auto j = counting_json(cfg, trace);
  CHECK(j["pass"].get<bool>());
  CHECK(j["final_overlap_abs"].get<double>() >= 0.5);

  CountingConfig trivial;
  trivial.algorithm = "trivial";
  auto t2 = counting_progress(trivial, 3);
  CHECK(t2.final_overlap_abs == doctest::Approx(1.0));
}

TEST_CASE("recover register report") {
  auto rep = recover_register_report(21);
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["cases"].size() == 3);
  CHECK(rep["cases"][0]["fix_length"] == 1);
  CHECK_FALSE(rep["cases"][2]["contract_ok"].get<bool>());
}

TEST_CASE("subgaussian sweep smoke run") {
  nlohmann::json fam = {{"distribution", "gaussian_grid"},
                        {"params",
                         {{"mean", 2.0}, {"sigma", 1.0}, {"points", 33},
                          {"half_width", 8.0}}},
                        {"T", 0},
                        {"m", 0},
                        {"delta", 0.0},
                        {"n_garbage", 0},
                        {"seed", 0}};
  nlohmann::json j = {{"schema_version", 1}, {"estimator", "subgaussian"},
                      {"family", fam},       {"eps_list", {0.5}},
                      {"trials", 2},         {"K", 1.0}};
  auto cfg = parse_sweep_config(j);
  auto r = run_trials(cfg, 17);
  CHECK(r.rows.size() == 2);
  for (const auto& row : r.rows) CHECK(std::abs(row.mu_tilde - 2.0) <= 0.5);
}
