#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "adversary.hpp"
#include "estimators.hpp"
#include "rvoracle.hpp"

namespace qnme::harness {

// Per-trial seeds derive as derive_seed(master_seed, row_index), with rows
// ordered (eps index, trial index); see util.hpp for the hash.
struct TrialRow {
  double eps = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::int64_t total_experiments = 0;
  double mu_tilde = 0.0;
  bool success = false;
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct SweepResult {
  std::vector<TrialRow> rows;
  std::vector<double> eps_list;
  std::vector<double> median_experiments;
  std::vector<double> success_rate;
  bool slope_valid = false;
  SlopeFit fit;
};

// Least-squares slope of log(median experiments) against log(1/eps),
// with a t-based 95% confidence interval.
SlopeFit fit_slope(const std::vector<double>& eps_list,
                   const std::vector<double>& median_counts);

struct SweepConfig {
  int schema_version = 1;
  std::string estimator;  // bounded | subgaussian | mom
  rvoracle::FamilySpec family;
  std::vector<double> eps_list;
  int trials = 0;
  double lo = 0.0, hi = 1.0;  // bounded window
  double K = 1.0;             // sub-Gaussian parameter
  int mom_groups = 3;
  int m_policy = 0;  // 0 = derive from the circuit plan
};

SweepConfig parse_sweep_config(const nlohmann::json& j);

SweepResult run_trials(const SweepConfig& cfg, std::uint64_t master_seed);
std::string sweep_csv(const SweepResult& result);
nlohmann::json sweep_json(const SweepConfig& cfg, std::uint64_t master_seed,
                          const SweepResult& result);

// Single estimator runs; T = 0 or m = 0 in the family spec means "derive from
// the plan". The family seed combines the spec seed with the master seed.
estimators::EstimateResult run_estimate_bounded(const rvoracle::FamilySpec& spec,
                                                double eps, double lo, double hi,
                                                std::uint64_t master_seed);
estimators::EstimateResult run_estimate_subgaussian(const rvoracle::FamilySpec& spec,
                                                    double eps, double K,
                                                    std::uint64_t master_seed);

struct MomResult {
  double estimate = 0.0;
  std::int64_t total_experiments = 0;
  int n_samples = 0;
  int groups = 0;
  int group_size = 0;
};

MomResult run_baseline_mom(const rvoracle::FamilySpec& spec, double eps, int groups,
                           std::uint64_t master_seed);

// --- verification sweeps backing the CLI subcommands ---

struct AdversaryVerifyConfig {
  int trials = 20;
  int t_max = 3;
  int n_q = 4;
  int n_w = 1;
  int pic_dim_max = 2;
};
AdversaryVerifyConfig parse_adversary_verify_config(const nlohmann::json& j);
nlohmann::json adversary_verify(const AdversaryVerifyConfig& cfg, std::uint64_t seed);

struct LowDepthVerifyConfig {
  int extra_random = 0;  // instances beyond the fixed set
};
LowDepthVerifyConfig parse_lowdepth_verify_config(const nlohmann::json& j);
nlohmann::json lowdepth_verify(const LowDepthVerifyConfig& cfg, std::uint64_t seed);

struct CountingConfig {
  int n = 8, k = 4, m = 1;
  std::string algorithm = "grover";  // grover | random | trivial
  int steps = 0;                     // 0 = as many as the construction needs
};
CountingConfig parse_counting_config(const nlohmann::json& j);
adversary::ProgressTrace counting_progress(const CountingConfig& cfg,
                                           std::uint64_t seed);
nlohmann::json counting_json(const CountingConfig& cfg,
                             const adversary::ProgressTrace& trace);

nlohmann::json recover_register_report(std::uint64_t seed);

}  // namespace qnme::harness
