#include <doctest.h>

#include <cmath>
#include <random>

#include "estimators.hpp"
#include "util.hpp"

using namespace qnme;
using namespace qnme::estimators;
using rvoracle::make_rv;
using rvoracle::OracleFamily;

namespace {

OracleFamily bernoulli_family(double p, int T, double delta, int m, std::uint64_t seed,
                              int n_garbage = 1) {
  return OracleFamily::make(make_rv({0.0, 1.0}, {1.0 - p, p}), T, delta, m, seed,
                            n_garbage);
}

}  // namespace

TEST_CASE("qtilde examples and round trip") {
  CHECK(qtilde(0.0) == 0.0);
  CHECK(qtilde(1.0) == 1.0);
  CHECK(qtilde(0.5) == 0.5);
  CHECK(qtilde(0.1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(qtilde(-0.01), Error);
  CHECK_THROWS_AS(qtilde(1.01), Error);

  double prev_p = -1.0;
  for (int k = 0; k <= 20; ++k) {
    double q = 0.05 * k;
    double p = q * q / (2.0 * q * q - 2.0 * q + 1.0);
    CHECK(p > prev_p);  // p(q) strictly increasing on the grid
    prev_p = p;
    CHECK(std::abs(qtilde(p) - q) <= 1e-12);
  }
}

TEST_CASE("delta_threshold examples") {
  double d = delta_threshold(1.0, 1.0, 0.01);
  CHECK(d == doctest::Approx(6.1505).epsilon(1e-4));

  // scaling in K, evaluated on both sides rather than assumed
  double k2 = delta_threshold(2.0, 1.0, 0.01);
  double expect = 2.0 * std::max(std::sqrt(4.0 * std::log(128.0 * 2.0 / 0.01)),
                                 std::sqrt(2.0 * std::log(32.0 / 0.01)));
  CHECK(k2 == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(delta_threshold(1.0, 1.0, 128.0), Error);
  CHECK_THROWS_AS(delta_threshold(1.0, 1.0, 40.0), Error);  // 32R/eps <= 1
}

TEST_CASE("plan_bounded sizes") {
  auto plan = plan_bounded(0.05, 0.0, 1.0);
  CHECK(plan.M == 256);
  CHECK(plan.L % 2 == 1);
  CHECK(plan.reflection_cost == 4 * plan.L);
  CHECK(plan.eps_prime == doctest::Approx(0.05 * 0.05 / 100.0));
}

TEST_CASE("estimate_bounded point mass sanity") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    auto plan = plan_bounded(0.1, 0.0, 1.0);
    auto fam = OracleFamily::make(make_rv({0.7}, {1.0}), plan.M, 0.0,
                                  plan.reflection_cost, seed, 1);
    auto r = estimate_bounded(fam, 0.1, 0.0, 1.0, seed);
    CHECK(std::abs(r.mu_tilde - 0.7) <= 0.1);
    CHECK(r.total_experiments ==
          plan.prep_cost + static_cast<std::int64_t>(plan.M - 1) * plan.reflection_cost);
    CHECK(r.total_experiments == fam.ledger().total());
  }
}

TEST_CASE("estimate_bounded Bernoulli Monte Carlo at eps=0.2") {
  const double eps = 0.2;
  auto plan = plan_bounded(eps, 0.0, 1.0);
  int hits = 0;
  const int trials = 24;
  for (int t = 0; t < trials; ++t) {
    auto fam = bernoulli_family(0.5, plan.M, 0.01, plan.reflection_cost,
                                derive_seed(1000, t));
    auto r = estimate_bounded(fam, eps, 0.0, 1.0, derive_seed(2000, t));
    if (std::abs(r.mu_tilde - 0.5) <= eps) ++hits;
    CHECK(r.total_experiments == fam.ledger().total());
    CHECK(r.q_tilde >= 0.0);
    CHECK(r.q_tilde <= 1.0);
  }
  CHECK(hits >= (2 * trials) / 3);
}

TEST_CASE("estimate_bounded error paths") {
  auto plan = plan_bounded(0.1, 0.0, 1.0);
  // m below one reflection's cost
  auto starved = bernoulli_family(0.5, plan.M, 0.0, plan.reflection_cost - 1, 9);
  CHECK_THROWS_WITH_AS(estimate_bounded(starved, 0.1, 0.0, 1.0, 1),
                       doctest::Contains("BudgetExceeded"), Error);
  // T below M
  auto short_fam = bernoulli_family(0.5, plan.M - 1, 0.0, plan.reflection_cost, 9);
  CHECK_THROWS_WITH_AS(estimate_bounded(short_fam, 0.1, 0.0, 1.0, 1),
                       doctest::Contains("InsufficientOracles"), Error);
  // support outside [L,H]
  auto wide = OracleFamily::make(make_rv({0.0, 2.0}, {0.5, 0.5}), plan.M, 0.0,
                                 plan.reflection_cost, 9, 1);
  CHECK_THROWS_AS(estimate_bounded(wide, 0.1, 0.0, 1.0, 1), Error);
  // delta too large
  auto loose = bernoulli_family(0.5, plan.M, 0.2, plan.reflection_cost, 9);
  CHECK_THROWS_WITH_AS(estimate_bounded(loose, 0.1, 0.0, 1.0, 1),
                       doctest::Contains("delta"), Error);
}

TEST_CASE("delta tolerance does not change matched-seed success materially") {
  const double eps = 0.2;
  auto plan = plan_bounded(eps, 0.0, 1.0);
  int hits0 = 0, hits1 = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    auto f0 = bernoulli_family(0.5, plan.M, 0.0, plan.reflection_cost, derive_seed(51, t));
    auto f1 = bernoulli_family(0.5, plan.M, eps / 4.0, plan.reflection_cost,
                               derive_seed(51, t));
    auto r0 = estimate_bounded(f0, eps, 0.0, 1.0, derive_seed(52, t));
    auto r1 = estimate_bounded(f1, eps, 0.0, 1.0, derive_seed(52, t));
    hits0 += std::abs(r0.mu_tilde - 0.5) <= eps;
    hits1 += std::abs(r1.mu_tilde - 0.5) <= eps;
  }
  CHECK(std::abs(hits0 - hits1) <= 3);  // within the Monte-Carlo error bar
  CHECK(hits1 >= (2 * trials) / 3);
}

TEST_CASE("subgaussian meanbounded matches bounded bit-for-bit when truncation is trivial") {
  const double eps = 0.5, K = 1.0, R = 1.0;
  double Delta = delta_threshold(K, R, eps);
  // support well inside [-R-Delta, R+Delta]
  auto rv = make_rv({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
  auto plan = plan_bounded(eps, -R - Delta, R + Delta);
  auto fam1 = OracleFamily::make(rv, plan.M, 0.0, plan.reflection_cost, 71, 1);
  auto fam2 = OracleFamily::make(rv, plan.M, 0.0, plan.reflection_cost, 71, 1);
  auto r1 = estimate_subgaussian_meanbounded(fam1, eps, K, R, 99);
  auto r2 = estimate_bounded(fam2, eps, -R - Delta, R + Delta, 99);
  CHECK(r1.mu_tilde == r2.mu_tilde);
  CHECK(r1.p_tilde == r2.p_tilde);
  CHECK(r1.total_experiments == r2.total_experiments);
}

TEST_CASE("estimate_subgaussian point mass and N") {
  const double eps = 0.5, K = 1.0;
  auto sg = plan_subgaussian(eps, K, true);
  CHECK(sg.n_classical == 24);
  int T = sg.bounded.M + 1;
  auto fam = OracleFamily::make(make_rv({5.0}, {1.0}), T, 0.0,
                                sg.bounded.reflection_cost, 13, 1);
  auto r = estimate_subgaussian(fam, eps, K, 13);
  CHECK(r.mu_hat == doctest::Approx(5.0));
  CHECK(r.n_classical == 24);
  CHECK(std::abs(r.mu_tilde - 5.0) <= eps);
  CHECK(r.total_experiments == fam.ledger().total());
}

TEST_CASE("classical_sample examples") {
  auto fam = OracleFamily::make(make_rv({2.5}, {1.0}), 1, 0.0, 3, 1, 1);
  std::mt19937_64 eng(2);
  CHECK(classical_sample(fam, 0, eng) == 2.5);
  CHECK(classical_sample(fam, 0, eng) == 2.5);

  auto none = OracleFamily::make(make_rv({2.5}, {1.0}), 1, 0.0, 0, 1, 1);
  CHECK_THROWS_WITH_AS(classical_sample(none, 0, eng),
                       doctest::Contains("BudgetExceeded"), Error);

  auto big = bernoulli_family(0.3, 10000, 0.0, 1, 8, 0);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += classical_sample(big, i, eng);
  CHECK(std::abs(sum / 10000.0 - 0.3) <= 0.02);
}

TEST_CASE("median_of_means examples") {
  CHECK(median_of_means({1.0, 2.0, 3.0, 4.0}, 1) == doctest::Approx(2.5));
  CHECK(median_of_means({1, 1, 1, 100, 1, 1}, 3) == doctest::Approx(1.0));
  CHECK(median_of_means({7, 7, 7, 7, 7}, 2) == doctest::Approx(7.0));
  CHECK_THROWS_AS(median_of_means({}, 1), Error);
  CHECK_THROWS_AS(median_of_means({1.0}, 2), Error);
}

TEST_CASE("truncation bias stays under eps/4 on gaussian grids") {
  for (double eps : {0.25, 0.2}) {
    double K = 1.0, R = 1.0;
    double Delta = delta_threshold(K, R, eps);
    auto rv = rvoracle::gaussian_grid_rv(0.0, 1.0, 65, 8.0);
    auto fam = OracleFamily::make(rv, 2, 0.0, 4, 3, 0);
    auto trunc = fam.truncated(-R - Delta, R + Delta, eps / 2.0);
    double bias = std::abs(trunc.rv(0).mean - rv.mean);
    CHECK(bias <= eps / 4.0);
  }
}

TEST_CASE("discretized gaussian satisfies the sub-Gaussian tail with K=1") {
  for (int points : {33, 65}) {
    auto rv = rvoracle::gaussian_grid_rv(0.0, 1.0, points, 8.0);
    // distinct distances from the mean
    std::vector<double> dists;
    for (double x : rv.support) dists.push_back(std::abs(x - rv.mean));
    std::sort(dists.begin(), dists.end());
    dists.erase(std::unique(dists.begin(), dists.end()), dists.end());
    for (double d : dists) {
      if (d <= 0.0) continue;
      double tail = 0.0;
      for (std::size_t i = 0; i < rv.support.size(); ++i)
        if (std::abs(rv.support[i] - rv.mean) >= d - 1e-12) tail += rv.probs[i];
      CHECK(tail <= 2.0 * std::exp(-d * d / 2.0) + 1e-15);
    }
  }
}

TEST_CASE("result json carries the echo") {
  auto plan = plan_bounded(0.2, 0.0, 1.0);
  auto fam = bernoulli_family(0.5, plan.M, 0.0, plan.reflection_cost, 5);
  auto r = estimate_bounded(fam, 0.2, 0.0, 1.0, 5);
  auto j = result_json(r);
  CHECK(j["M"] == plan.M);
  CHECK(j["total_experiments"] == r.total_experiments);
  CHECK(j["per_oracle_usage"].size() == static_cast<std::size_t>(plan.M));
}
