#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "util.hpp"

namespace qnme::harness {

using estimators::EstimateResult;
using rvoracle::FamilySpec;
using rvoracle::OracleFamily;

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::validation, where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(ErrorCode::validation, where + ": unknown field '" + it.key() + "'");
}

void check_schema_version(const nlohmann::json& j, const std::string& where) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
    fail(ErrorCode::validation, where + ": schema_version must be 1");
}

double t_quantile_975(int df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571,
                                 2.447,  2.365, 2.306, 2.262, 2.228};
  if (df < 1) return 0.0;
  if (df <= 10) return table[df - 1];
  return 1.96;
}

// Run one indexed trial; derived family and measurement seeds keep the
// result independent of thread interleaving.
TrialRow run_one(const SweepConfig& cfg, double eps, int trial,
                 std::uint64_t trial_seed) {
  TrialRow row;
  row.eps = eps;
  row.trial = trial;
  row.seed = trial_seed;

  auto base = rvoracle::base_rv_of(cfg.family);
  const std::uint64_t family_seed = derive_seed(trial_seed, 1);
  const std::uint64_t run_seed = derive_seed(trial_seed, 2);

  if (cfg.estimator == "bounded") {
    auto plan = estimators::plan_bounded(eps, cfg.lo, cfg.hi);
    int m = cfg.m_policy > 0 ? cfg.m_policy : plan.reflection_cost;
    int T = cfg.family.T > 0 ? cfg.family.T : plan.M;
    auto family = OracleFamily::make(base, T, cfg.family.delta, m, family_seed,
                                     cfg.family.n_garbage);
    auto r = estimators::estimate_bounded(family, eps, cfg.lo, cfg.hi, run_seed);
    row.total_experiments = r.total_experiments;
    row.mu_tilde = r.mu_tilde;
  } else if (cfg.estimator == "subgaussian") {
    auto sg = estimators::plan_subgaussian(eps, cfg.K, true);
    int m = cfg.m_policy > 0 ? cfg.m_policy : sg.bounded.reflection_cost;
    int T = cfg.family.T > 0
                ? cfg.family.T
                : sg.bounded.M + static_cast<int>((sg.n_classical + m - 1) / m);
    auto family = OracleFamily::make(base, T, cfg.family.delta, m, family_seed,
                                     cfg.family.n_garbage);
    auto r = estimators::estimate_subgaussian(family, eps, cfg.K, run_seed);
    row.total_experiments = r.total_experiments;
    row.mu_tilde = r.mu_tilde;
  } else if (cfg.estimator == "mom") {
    int s = static_cast<int>(std::ceil(4.0 * base.variance / (eps * eps)));
    s = std::max(s, 1);
    auto family = OracleFamily::make(base, cfg.mom_groups, cfg.family.delta, s,
                                     family_seed, cfg.family.n_garbage);
    auto eng = make_engine(run_seed);
    std::vector<double> samples;
    for (int g = 0; g < cfg.mom_groups; ++g)
      for (int i = 0; i < s; ++i)
        samples.push_back(estimators::classical_sample(family, g, eng));
    row.mu_tilde = estimators::median_of_means(samples, cfg.mom_groups);
    row.total_experiments = family.ledger().total();
  } else {
    fail(ErrorCode::validation, "run_trials: unknown estimator '" + cfg.estimator + "'");
  }
  row.success = std::abs(row.mu_tilde - base.mean) <= eps;
  return row;
}

}  // namespace

SlopeFit fit_slope(const std::vector<double>& eps_list,
                   const std::vector<double>& median_counts) {
  const std::size_t n = eps_list.size();
  if (n < 3 || median_counts.size() != n)
    fail(ErrorCode::validation, "fit_slope: needs at least 3 eps points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (eps_list[i] <= 0.0 || median_counts[i] <= 0.0)
      fail(ErrorCode::validation, "fit_slope: eps and counts must be positive");
    x[i] = std::log(1.0 / eps_list[i]);
    y[i] = std::log(median_counts[i]);
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= n;
  ybar /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx <= 0.0) fail(ErrorCode::validation, "fit_slope: degenerate eps list");

  SlopeFit fit;
  fit.slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - ybar - fit.slope * (x[i] - xbar);
    ss_res += r * r;
  }
  double s2 = ss_res / static_cast<double>(n - 2);
  fit.stderr_ = std::sqrt(s2 / sxx);
  double t = t_quantile_975(static_cast<int>(n) - 2);
  fit.ci_lo = fit.slope - t * fit.stderr_;
  fit.ci_hi = fit.slope + t * fit.stderr_;
  return fit;
}

SweepConfig parse_sweep_config(const nlohmann::json& j) {
  check_keys(j,
             {"schema_version", "estimator", "family", "eps_list", "trials", "lo", "hi",
              "K", "mom_groups", "m_policy"},
             "sweep");
  check_schema_version(j, "sweep");
  SweepConfig cfg;
  try {
    cfg.estimator = j.at("estimator").get<std::string>();
    cfg.family = rvoracle::parse_family_spec(j.at("family"));
    cfg.eps_list = j.at("eps_list").get<std::vector<double>>();
    cfg.trials = j.at("trials").get<int>();
    cfg.lo = j.value("lo", 0.0);
    cfg.hi = j.value("hi", 1.0);
    cfg.K = j.value("K", 1.0);
    cfg.mom_groups = j.value("mom_groups", 3);
    cfg.m_policy = j.value("m_policy", 0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("sweep: ") + e.what());
  }
  if (cfg.estimator != "bounded" && cfg.estimator != "subgaussian" &&
      cfg.estimator != "mom")
    fail(ErrorCode::validation, "sweep: estimator must be bounded|subgaussian|mom");
  if (cfg.trials < 0) fail(ErrorCode::validation, "sweep: trials must be >= 0");
  if (cfg.eps_list.empty()) fail(ErrorCode::validation, "sweep: eps_list is empty");
  return cfg;
}

SweepResult run_trials(const SweepConfig& cfg, std::uint64_t master_seed) {
  SweepResult result;
  result.eps_list = cfg.eps_list;
  const std::size_t rows = cfg.eps_list.size() * static_cast<std::size_t>(cfg.trials);
  result.rows.resize(rows);

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (true) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= rows) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error) return;
      }
      std::size_t e = idx / static_cast<std::size_t>(cfg.trials);
      int trial = static_cast<int>(idx % static_cast<std::size_t>(cfg.trials));
      try {
        result.rows[idx] = run_one(cfg, cfg.eps_list[e], trial,
                                   derive_seed(master_seed, idx));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
  if (rows == 0) n_threads = 0;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
    std::vector<double> counts;
    double hits = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& row = result.rows[e * static_cast<std::size_t>(cfg.trials) +
                                    static_cast<std::size_t>(t)];
      counts.push_back(static_cast<double>(row.total_experiments));
      hits += row.success ? 1.0 : 0.0;
    }
    if (!counts.empty()) {
      std::sort(counts.begin(), counts.end());
      std::size_t mid = counts.size() / 2;
      double median = (counts.size() % 2 == 1)
                          ? counts[mid]
                          : 0.5 * (counts[mid - 1] + counts[mid]);
      result.median_experiments.push_back(median);
      result.success_rate.push_back(hits / cfg.trials);
    }
  }
  if (result.median_experiments.size() >= 3) {
    result.fit = fit_slope(cfg.eps_list, result.median_experiments);
    result.slope_valid = true;
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "eps,trial,seed,total_experiments,mu_tilde,success\n";
  for (const auto& row : result.rows)
    out << fmt_double(row.eps) << ',' << row.trial << ',' << row.seed << ','
        << row.total_experiments << ',' << fmt_double(row.mu_tilde) << ','
        << (row.success ? 1 : 0) << '\n';
  return out.str();
}

nlohmann::json sweep_json(const SweepConfig& cfg, std::uint64_t master_seed,
                          const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"eps", row.eps},
                    {"trial", row.trial},
                    {"seed", row.seed},
                    {"total_experiments", row.total_experiments},
                    {"mu_tilde", row.mu_tilde},
                    {"success", row.success}});
  nlohmann::json j{{"schema_version", 1},
                   {"estimator", cfg.estimator},
                   {"family", rvoracle::family_spec_json(cfg.family)},
                   {"eps_list", cfg.eps_list},
                   {"trials", cfg.trials},
                   {"master_seed", master_seed},
                   {"median_experiments", result.median_experiments},
                   {"success_rate", result.success_rate},
                   {"rows", rows}};
  if (result.slope_valid)
    j["slope"] = {{"value", result.fit.slope},
                  {"stderr", result.fit.stderr_},
                  {"ci95", {result.fit.ci_lo, result.fit.ci_hi}}};
  else
    j["slope"] = nullptr;
  return j;
}

namespace {

OracleFamily family_for_single_run(const FamilySpec& spec, int T_auto, int m_auto,
                                   std::uint64_t master_seed) {
  FamilySpec s = spec;
  if (s.T <= 0) s.T = T_auto;
  if (s.m <= 0) s.m = m_auto;
  std::uint64_t family_seed = derive_seed(master_seed, s.seed);
  return OracleFamily::make(rvoracle::base_rv_of(s), s.T, s.delta, s.m, family_seed,
                            s.n_garbage);
}

}  // namespace

EstimateResult run_estimate_bounded(const FamilySpec& spec, double eps, double lo,
                                    double hi, std::uint64_t master_seed) {
  auto plan = estimators::plan_bounded(eps, lo, hi);
  auto family = family_for_single_run(spec, plan.M, plan.reflection_cost, master_seed);
  return estimators::estimate_bounded(family, eps, lo, hi,
                                      derive_seed(master_seed, 0xA11CE));
}

EstimateResult run_estimate_subgaussian(const FamilySpec& spec, double eps, double K,
                                        std::uint64_t master_seed) {
  auto sg = estimators::plan_subgaussian(eps, K, true);
  int m_auto = sg.bounded.reflection_cost;
  int T_auto = sg.bounded.M + (sg.n_classical + m_auto - 1) / m_auto;
  auto family = family_for_single_run(spec, T_auto, m_auto, master_seed);
  return estimators::estimate_subgaussian(family, eps, K,
                                          derive_seed(master_seed, 0xB0B));
}

MomResult run_baseline_mom(const FamilySpec& spec, double eps, int groups,
                           std::uint64_t master_seed) {
  if (groups < 1) fail(ErrorCode::validation, "baseline-mom: groups must be >= 1");
  auto base = rvoracle::base_rv_of(spec);
  int s = std::max(1, static_cast<int>(std::ceil(4.0 * base.variance / (eps * eps))));
  FamilySpec filled = spec;
  if (filled.T <= 0) filled.T = groups;
  if (filled.m <= 0) filled.m = s;
  auto family = family_for_single_run(filled, groups, s, master_seed);
  auto eng = make_engine(derive_seed(master_seed, 0x303));
  std::vector<double> samples;
  int per_oracle = family.m();
  int idx = 0;
  for (int j = 0; j < groups * s; ++j) {
    while (idx < family.T() && family.ledger().used(idx) >= per_oracle) ++idx;
    if (idx >= family.T())
      fail(ErrorCode::budget_exceeded, "BudgetExceeded: baseline needs more samples");
    samples.push_back(estimators::classical_sample(family, idx, eng));
  }
  MomResult r;
  r.estimate = estimators::median_of_means(samples, groups);
  r.total_experiments = family.ledger().total();
  r.n_samples = groups * s;
  r.groups = groups;
  r.group_size = s;
  return r;
}

AdversaryVerifyConfig parse_adversary_verify_config(const nlohmann::json& j) {
  check_keys(j, {"schema_version", "trials", "t_max", "n_q", "n_w", "pic_dim_max"},
             "adversary-verify");
  check_schema_version(j, "adversary-verify");
  AdversaryVerifyConfig cfg;
  cfg.trials = j.value("trials", 20);
  cfg.t_max = j.value("t_max", 3);
  cfg.n_q = j.value("n_q", 4);
  cfg.n_w = j.value("n_w", 1);
  cfg.pic_dim_max = j.value("pic_dim_max", 2);
  return cfg;
}

nlohmann::json adversary_verify(const AdversaryVerifyConfig& cfg, std::uint64_t seed) {
  nlohmann::json instances = nlohmann::json::array();
  double max_residual = 0.0;
  for (int inst = 0; inst < cfg.trials; ++inst) {
    int T = 1 + inst % cfg.t_max;
    int pic_dim = 1 + inst % cfg.pic_dim_max;
    auto alg = adversary::random_query_algorithm(cfg.n_q, cfg.n_w, T, {},
                                                 derive_seed(seed, 4 * inst));
    auto canon = adversary::canonical_from_state(statevec::random_unit_vector(
        1 << cfg.n_q, derive_seed(seed, 4 * inst + 1)));
    statevec::Mat basis = statevec::random_unitary(cfg.n_q + cfg.n_w,
                                                   derive_seed(seed, 4 * inst + 2))
                              .matrix.leftCols(pic_dim);
    auto pi_c = statevec::make_projector(cfg.n_q + cfg.n_w, basis);
    auto rep = adversary::verify_adversarial(alg, canon, pi_c,
                                             derive_seed(seed, 4 * inst + 3));
    max_residual = std::max(max_residual, rep.residual);
    instances.push_back({{"instance", inst},
                         {"T", T},
                         {"pic_dim", pic_dim},
                         {"lhs", rep.lhs},
                         {"rhs", rep.rhs},
                         {"residual", rep.residual},
                         {"kill_residual", rep.kill_residual},
                         {"max_component_residual", rep.max_component_residual}});
  }
  return nlohmann::json{{"schema_version", 1},
                        {"seed", seed},
                        {"n_q", cfg.n_q},
                        {"n_w", cfg.n_w},
                        {"instances", instances},
                        {"max_residual", max_residual},
                        {"pass", max_residual <= 1e-9}};
}

LowDepthVerifyConfig parse_lowdepth_verify_config(const nlohmann::json& j) {
  check_keys(j, {"schema_version", "extra_random"}, "lowdepth-verify");
  check_schema_version(j, "lowdepth-verify");
  LowDepthVerifyConfig cfg;
  cfg.extra_random = j.value("extra_random", 0);
  return cfg;
}

nlohmann::json lowdepth_verify(const LowDepthVerifyConfig& cfg, std::uint64_t seed) {
  struct Instance {
    int n_q, n_w;
    std::vector<int> dirs;
  };
  std::vector<Instance> fixed{{2, 1, {}},           {3, 1, {1}},
                              {3, 1, {-1}},         {2, 1, {1, -1}},
                              {4, 1, {-1, 1}},      {3, 1, {1, -1, 1}}};
  for (int extra = 0; extra < cfg.extra_random; ++extra) {
    std::vector<int> dirs;
    int T = 1 + static_cast<int>(derive_seed(seed, 900 + extra) % 3);
    for (int t = 0; t < T; ++t)
      dirs.push_back((derive_seed(seed, 1000 + 10 * extra + t) & 1) ? 1 : -1);
    fixed.push_back({2 + static_cast<int>(derive_seed(seed, 1100 + extra) % 2), 1, dirs});
  }

  nlohmann::json instances = nlohmann::json::array();
  double max_residual = 0.0;
  bool rounds_ok = true, counts_ok = true;
  int idx = 0;
  for (const auto& inst : fixed) {
    int T = static_cast<int>(inst.dirs.size());
    if (inst.n_w + (T + 1) * inst.n_q > statevec::kMaxDenseQubits) continue;
    auto alg = adversary::random_query_algorithm(inst.n_q, inst.n_w, T, inst.dirs,
                                                 derive_seed(seed, 2 * idx));
    auto oracle = statevec::random_unitary(inst.n_q, derive_seed(seed, 2 * idx + 1));
    auto rep = adversary::build_low_depth(alg, oracle);
    max_residual = std::max(max_residual, rep.residual);
    rounds_ok = rounds_ok && rep.parallel_rounds <= 2;
    counts_ok = counts_ok && rep.total_queries == T;
    instances.push_back({{"instance", idx},
                         {"n_q", inst.n_q},
                         {"n_w", inst.n_w},
                         {"T", T},
                         {"directions", inst.dirs},
                         {"residual", rep.residual},
                         {"queries", rep.total_queries},
                         {"parallel_rounds", rep.parallel_rounds},
                         {"total_qubits", rep.total_qubits}});
    ++idx;
  }
  return nlohmann::json{{"schema_version", 1},
                        {"seed", seed},
                        {"instances", instances},
                        {"max_residual", max_residual},
                        {"rounds_ok", rounds_ok},
                        {"counts_ok", counts_ok},
                        {"pass", max_residual <= 1e-9 && rounds_ok && counts_ok}};
}

CountingConfig parse_counting_config(const nlohmann::json& j) {
  check_keys(j, {"schema_version", "n", "k", "m", "algorithm", "steps"},
             "counting-progress");
  check_schema_version(j, "counting-progress");
  CountingConfig cfg;
  cfg.n = j.value("n", 8);
  cfg.k = j.value("k", 4);
  cfg.m = j.value("m", 1);
  cfg.algorithm = j.value("algorithm", std::string("grover"));
  cfg.steps = j.value("steps", 0);
  return cfg;
}

adversary::ProgressTrace counting_progress(const CountingConfig& cfg,
                                           std::uint64_t seed) {
  int padded = 2;
  while (padded < cfg.n) padded *= 2;
  int kq = 1;
  while ((1 << (kq - 1)) < padded) ++kq;  // log2(padded) + 1 wires
  int blocks = std::max(1, (cfg.n - cfg.k) / (4 * (cfg.m + 1) * (cfg.m + 1)));
  int steps = cfg.steps > 0 ? cfg.steps : cfg.m * blocks;

  adversary::QueryAlgorithm alg;
  if (cfg.algorithm == "grover") {
    alg = adversary::grover_counting_algorithm(padded, steps);
  } else if (cfg.algorithm == "random") {
    alg = adversary::random_query_algorithm(kq, 0, steps,
                                            std::vector<int>(steps, 1), seed);
  } else if (cfg.algorithm == "trivial") {
    alg.n_q = kq;
    alg.n_w = 0;
    for (int t = 0; t <= steps; ++t)
      alg.unitaries.push_back(statevec::identity_op(kq));
    alg.directions.assign(steps, 1);
  } else {
    fail(ErrorCode::validation, "counting-progress: unknown algorithm");
  }
  return adversary::hard_counting_sequence(cfg.n, cfg.k, cfg.m, alg);
}

nlohmann::json counting_json(const CountingConfig& cfg,
                             const adversary::ProgressTrace& trace) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& bt : trace.block_traces) {
    nlohmann::json svals = nlohmann::json::array();
    for (auto s : bt.s_values) svals.push_back({{"re", s.real()}, {"im", s.imag()}});
    blocks.push_back({{"s_values", svals},
                      {"chosen_i0", bt.chosen_index},
                      {"chosen_progress", bt.chosen_progress},
                      {"chosen_bound", bt.chosen_bound}});
  }
  return nlohmann::json{{"schema_version", 1},
                        {"n", cfg.n},
                        {"k", cfg.k},
                        {"m", cfg.m},
                        {"algorithm", cfg.algorithm},
                        {"blocks", trace.blocks},
                        {"block_traces", blocks},
                        {"final_overlap_abs", trace.final_overlap_abs},
                        {"final_bound", trace.final_bound},
                        {"envelope_ok", trace.envelope_ok},
                        {"block_bound_ok", trace.block_bound_ok},
                        {"pass", trace.envelope_ok && trace.block_bound_ok}};
}

nlohmann::json recover_register_report(std::uint64_t seed) {
  struct Case {
    const char* name;
    std::vector<double> probs;
    int first;
  };
  std::vector<Case> cases{{"deterministic", {1.0}, 1},
                          {"two_outcome", {2.0 / 3.0, 1.0 / 3.0}, 1},
                          {"contract_violating", {0.25, 0.25, 0.25, 0.25}, 0}};
  nlohmann::json out = nlohmann::json::array();
  int idx = 0;
  for (const auto& c : cases) {
    auto u = adversary::make_grid_estimator(2, 1, 2, c.probs, c.first,
                                            derive_seed(seed, idx));
    adversary::RecoverInput in{u, 2, 1, 2, 0.25, 0.3, 1e-3};
    auto rep = adversary::recover_query_register(in);
    out.push_back({{"case", c.name},
                   {"outcome_probs", rep.outcome_probs},
                   {"lambda", rep.lambda},
                   {"flank_weight", rep.flank_weight},
                   {"contract_ok", rep.contract_ok},
                   {"contract_violation_flagged", rep.contract_violation_flagged},
                   {"form_residual", rep.form_residual},
                   {"fix_length", rep.fix_length},
                   {"recovered_distance", rep.recovered_distance}});
    ++idx;
  }
  bool pass = true;
  for (const auto& c : out)
    pass = pass && (c["form_residual"].get<double>() < 1e-9) &&
           (c["recovered_distance"].get<double>() <= 1.2e-3);
  return nlohmann::json{
      {"schema_version", 1}, {"seed", seed}, {"cases", out}, {"pass", pass}};
}

}  // namespace qnme::harness
