#include "estimators.hpp"

#include <algorithm>
#include <cmath>

#include "util.hpp"

namespace qnme::estimators {

using rvoracle::Oracle;
using rvoracle::QueryMode;

double qtilde(double p_tilde) {
  if (p_tilde < 0.0 || p_tilde > 1.0)
    fail(ErrorCode::range, "qtilde: p_tilde outside [0,1]");
  double denom = 2.0 * p_tilde - 1.0;
  if (std::abs(denom) < 1e-9) return 0.5;
  return (p_tilde - std::sqrt(p_tilde * (1.0 - p_tilde))) / denom;
}

double delta_threshold(double K, double R, double eps) {
  if (!(K > 0.0 && R > 0.0 && eps > 0.0))
    fail(ErrorCode::validation, "delta_threshold: K, R, eps must be positive");
  double a1 = 128.0 * K / eps;
  double a2 = 32.0 * R / eps;
  if (a1 <= 1.0 || a2 <= 1.0)
    fail(ErrorCode::validation, "delta_threshold: eps too large (log argument <= 1)");
  return K * std::max(std::sqrt(4.0 * std::log(a1)), std::sqrt(2.0 * std::log(a2)));
}

BoundedPlan plan_bounded(double eps, double lo, double hi, double eps_prime_constant) {
  if (!(hi > lo)) fail(ErrorCode::validation, "plan_bounded: requires H > L");
  if (!(eps > 0.0)) fail(ErrorCode::validation, "plan_bounded: eps must be positive");
  BoundedPlan plan;
  plan.eps = eps;
  plan.lo = lo;
  plan.hi = hi;
  plan.eps_dprime = eps / (hi - lo);
  plan.eps_prime = eps * eps / (eps_prime_constant * (hi - lo) * (hi - lo));
  plan.fix = primitives::fixed_point_plan(plan.eps_prime, 1.0 / std::sqrt(2.0));
  plan.L = plan.fix.length;
  int M = 2;
  while (M < 8.0 * (hi - lo) / eps) M *= 2;
  plan.M = M;
  plan.reflection_cost = 4 * plan.L;
  plan.prep_cost = 2 * plan.L;
  return plan;
}

SubGaussianPlan plan_subgaussian(double eps, double K, bool with_classical) {
  SubGaussianPlan plan;
  plan.K = K;
  plan.R = K;
  plan.Delta = delta_threshold(K, plan.R, eps);
  plan.lo = -plan.R - plan.Delta;
  plan.hi = plan.R + plan.Delta;
  plan.n_classical = with_classical
                         ? static_cast<int>(std::ceil(8.0 * std::log(20.0)))
                         : 0;
  plan.bounded = plan_bounded(eps, plan.lo, plan.hi);
  return plan;
}

namespace {

void fill_ledger_echo(EstimateResult& r, const OracleFamily& family) {
  auto report = rvoracle::ledger_report(family);
  r.total_experiments = report.total;
  r.per_oracle_usage = report.per_oracle_totals;
  r.T = family.T();
  r.m = family.m();
  r.delta = family.delta();
}

void charge_slot(rvoracle::QueryLedger& ledger, int oracle_index, int L, bool controlled) {
  // One preparation S_j costs L forward and L adjoint oracle experiments; a
  // Grover slot applies S_j and S_j^dag under control, so 2L of each.
  if (controlled) {
    for (int k = 0; k < 2 * L; ++k) {
      ledger.record(oracle_index, QueryMode::cfwd);
      ledger.record(oracle_index, QueryMode::cadj);
    }
  } else {
    for (int k = 0; k < L; ++k) {
      ledger.record(oracle_index, QueryMode::fwd);
      ledger.record(oracle_index, QueryMode::adj);
    }
  }
}

}  // namespace

EstimateResult estimate_bounded(OracleFamily& family, double eps, double lo, double hi,
                                std::uint64_t run_seed) {
  BoundedPlan plan = plan_bounded(eps, lo, hi);
  for (double x : family.rv(0).support)
    if (x < lo || x > hi)
      fail(ErrorCode::range, "estimate_bounded: family support outside [L,H]");
  if (family.delta() > eps / 2.0 + 1e-12)
    fail(ErrorCode::validation, "estimate_bounded: family delta exceeds eps/2");
  if (family.m() < plan.reflection_cost)
    fail(ErrorCode::budget_exceeded,
         "BudgetExceeded: per-oracle budget m = " + std::to_string(family.m()) +
             " below one reflection's cost " + std::to_string(plan.reflection_cost));

  auto& ledger = family.ledger();
  int start = ledger.cursor();
  if (ledger.used(start) > 0 && family.m() - ledger.used(start) < plan.prep_cost)
    ++start;
  if (start + plan.M > family.T())
    fail(ErrorCode::insufficient_oracles,
         "InsufficientOracles: need " + std::to_string(start + plan.M) +
             " oracles, family has " + std::to_string(family.T()));

  EstimateResult r;
  double mu = family.target_mean();
  double guard = (mu - lo) * (hi - mu) / (4.0 * (hi - lo));
  if (eps > guard)
    r.warning = "eps exceeds (mu-L)(H-mu)/(4(H-L)) = " + fmt_double(guard) +
                "; the accuracy precondition may not hold";

  primitives::StatePrepSchedule schedule;
  schedule.n_system = primitives::system_qubits(family.oracle(start));
  schedule.flag_wire = schedule.n_system - 1;  // the uncompute ancilla
  schedule.available = family.T() - start;
  schedule.make_slot = [&family, &ledger, &plan, start](int slot) {
    int idx = start + slot;
    charge_slot(ledger, idx, plan.L, slot != 0);
    const Oracle oracle = family.oracle(idx);
    return primitives::PrepSlot{
        primitives::prepared_state(oracle, plan.lo, plan.hi, plan.fix)};
  };

  auto eng = make_engine(derive_seed(run_seed, 0xAE));
  auto est = primitives::amplitude_estimation(schedule, plan.M, eng);

  r.p_tilde = est.p_tilde;
  r.y = est.y;
  r.q_tilde = qtilde(est.p_tilde);
  r.mu_tilde = r.q_tilde * (hi - lo) + lo;
  r.eps = eps;
  r.lo = lo;
  r.hi = hi;
  r.eps_prime = plan.eps_prime;
  r.eps_dprime = plan.eps_dprime;
  r.M = plan.M;
  r.L = plan.L;
  fill_ledger_echo(r, family);
  return r;
}

EstimateResult estimate_subgaussian_meanbounded(OracleFamily& family, double eps,
                                                double K, double R,
                                                std::uint64_t run_seed) {
  if (!(K > 0.0 && R > 0.0 && R <= K))
    fail(ErrorCode::validation, "estimate_subgaussian_meanbounded: requires 0 < R <= K");
  if (family.delta() > eps / 4.0 + 1e-12)
    fail(ErrorCode::validation,
         "estimate_subgaussian_meanbounded: family delta exceeds eps/4");
  double Delta = delta_threshold(K, R, eps);
  double lo = -R - Delta;
  double hi = R + Delta;
  // Out-of-range values are redirected to 0, so 0 must be a legal value.
  OracleFamily truncated = family.truncated(lo, hi, eps / 2.0);
  EstimateResult r = estimate_bounded(truncated, eps, lo, hi, run_seed);
  r.K = K;
  r.R = R;
  r.Delta = Delta;
  return r;
}

EstimateResult estimate_subgaussian(OracleFamily& family, double eps, double K,
                                    std::uint64_t run_seed) {
  if (!(K > 0.0)) fail(ErrorCode::validation, "estimate_subgaussian: K must be positive");
  if (family.delta() > eps / 4.0 + 1e-12)
    fail(ErrorCode::validation, "estimate_subgaussian: family delta exceeds eps/4");

  const int n = static_cast<int>(std::ceil(8.0 * std::log(20.0)));
  auto eng = make_engine(derive_seed(run_seed, 0xC1A55));
  auto& ledger = family.ledger();
  std::vector<double> samples;
  int idx = ledger.cursor();
  for (int j = 0; j < n; ++j) {
    while (idx < family.T() && ledger.used(idx) >= family.m()) ++idx;
    if (idx >= family.T())
      fail(ErrorCode::budget_exceeded,
           "BudgetExceeded: not enough budget for classical pre-sampling");
    samples.push_back(classical_sample(family, idx, eng));
  }
  double mu_hat = 0.0;
  for (double s : samples) mu_hat += s;
  mu_hat /= n;

  OracleFamily shifted = family.value_shifted(-mu_hat);
  EstimateResult r = estimate_subgaussian_meanbounded(shifted, eps, K, K,
                                                      derive_seed(run_seed, 0x5F7));
  r.mu_tilde += mu_hat;
  r.mu_hat = mu_hat;
  r.n_classical = n;
  fill_ledger_echo(r, family);
  return r;
}

double classical_sample(OracleFamily& family, int oracle_index, std::mt19937_64& eng) {
  const Oracle oracle = family.oracle(oracle_index);
  family.ledger().record(oracle_index, QueryMode::fwd);
  auto marginal = oracle.index_marginal();
  const std::size_t values = oracle.value_table.size();
  double total = 0.0;
  for (std::size_t v = 0; v < values; ++v) total += marginal[v];
  double u = std::uniform_real_distribution<double>(0.0, total)(eng);
  double acc = 0.0;
  for (std::size_t v = 0; v < values; ++v) {
    acc += marginal[v];
    if (u <= acc) return oracle.value_table[v];
  }
  return oracle.value_table[values - 1];
}

double median_of_means(const std::vector<double>& samples, int n_groups) {
  if (samples.empty()) fail(ErrorCode::validation, "median_of_means: empty input");
  if (n_groups < 1 || static_cast<std::size_t>(n_groups) > samples.size())
    fail(ErrorCode::validation, "median_of_means: bad group count");
  const std::size_t base = samples.size() / static_cast<std::size_t>(n_groups);
  std::vector<double> means;
  std::size_t pos = 0;
  for (int g = 0; g < n_groups; ++g) {
    std::size_t len = (g == n_groups - 1) ? samples.size() - pos : base;
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) sum += samples[pos + i];
    means.push_back(sum / static_cast<double>(len));
    pos += len;
  }
  std::sort(means.begin(), means.end());
  const std::size_t mid = means.size() / 2;
  if (means.size() % 2 == 1) return means[mid];
  return 0.5 * (means[mid - 1] + means[mid]);
}

nlohmann::json result_json(const EstimateResult& r) {
  nlohmann::json j{{"mu_tilde", r.mu_tilde},
                   {"p_tilde", r.p_tilde},
                   {"q_tilde", r.q_tilde},
                   {"total_experiments", r.total_experiments},
                   {"per_oracle_usage", r.per_oracle_usage},
                   {"eps", r.eps},
                   {"lo", r.lo},
                   {"hi", r.hi},
                   {"eps_prime", r.eps_prime},
                   {"eps_dprime", r.eps_dprime},
                   {"delta", r.delta},
                   {"M", r.M},
                   {"L", r.L},
                   {"y", r.y},
                   {"T", r.T},
                   {"m", r.m}};
  if (r.n_classical > 0) {
    j["mu_hat"] = r.mu_hat;
    j["n_classical"] = r.n_classical;
  }
  if (r.K > 0) {
    j["K"] = r.K;
    j["R"] = r.R;
    j["Delta"] = r.Delta;
  }
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

}  // namespace qnme::estimators
