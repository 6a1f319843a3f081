#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "primitives.hpp"
#include "rvoracle.hpp"

namespace qnme::estimators {

using rvoracle::OracleFamily;

// Inverse of p(q) = q^2 / (2q^2 - 2q + 1) on [0,1]; the removable singularity
// at p = 1/2 evaluates to 1/2.
double qtilde(double p_tilde);

// Truncation radius of the mean-bounded sub-Gaussian reduction:
// K * max( sqrt(4 ln(128K/eps)), sqrt(2 ln(32R/eps)) ), natural logarithm.
double delta_threshold(double K, double R, double eps);

// Circuit-size plan shared by the estimators and the harness.
struct BoundedPlan {
  double eps = 0, lo = 0, hi = 0;
  double eps_prime = 0;   // fixed-point target: eps^2 / (100 (H-L)^2)
  double eps_dprime = 0;  // eps / (H-L)
  primitives::FixedPointPlan fix;
  int L = 0;              // fixed-point length
  int M = 0;              // power-of-two Grover call count
  int reflection_cost = 0;  // oracle experiments per Grover slot (4L)
  int prep_cost = 0;        // oracle experiments for the initial slot (2L)
};

BoundedPlan plan_bounded(double eps, double lo, double hi,
                         double eps_prime_constant = 100.0);

struct SubGaussianPlan {
  double K = 0, R = 0, Delta = 0, lo = 0, hi = 0;
  int n_classical = 0;
  BoundedPlan bounded;
};

SubGaussianPlan plan_subgaussian(double eps, double K, bool with_classical);

struct EstimateResult {
  double mu_tilde = 0, p_tilde = 0, q_tilde = 0;
  std::int64_t total_experiments = 0;
  std::vector<std::int64_t> per_oracle_usage;
  // parameter echo
  double eps = 0, lo = 0, hi = 0, eps_prime = 0, eps_dprime = 0, delta = 0;
  int M = 0, L = 0, y = -1, T = 0, m = 0;
  // sub-Gaussian stage echo
  double K = 0, R = 0, Delta = 0, mu_hat = 0;
  int n_classical = 0;
  std::string warning;
};

EstimateResult estimate_bounded(OracleFamily& family, double eps, double lo, double hi,
                                std::uint64_t run_seed);
EstimateResult estimate_subgaussian_meanbounded(OracleFamily& family, double eps,
                                                double K, double R,
                                                std::uint64_t run_seed);
EstimateResult estimate_subgaussian(OracleFamily& family, double eps, double K,
                                    std::uint64_t run_seed);

// One experiment: apply O_i to |0...0> and sample the index-register marginal.
double classical_sample(OracleFamily& family, int oracle_index, std::mt19937_64& eng);

double median_of_means(const std::vector<double>& samples, int n_groups);

nlohmann::json result_json(const EstimateResult& r);

}  // namespace qnme::estimators
