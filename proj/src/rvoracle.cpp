#include "rvoracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "util.hpp"

namespace qnme::rvoracle {

using statevec::cxd;

FiniteRandomVariable make_rv(std::vector<double> support, std::vector<double> probs) {
  if (support.empty() || support.size() != probs.size())
    fail(ErrorCode::validation, "make_rv: support/probs size mismatch or empty");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) fail(ErrorCode::validation, "make_rv: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    fail(ErrorCode::validation, "make_rv: probabilities sum to " + fmt_double(sum));
  std::set<double> distinct(support.begin(), support.end());
  if (distinct.size() != support.size())
    fail(ErrorCode::validation, "make_rv: support values not distinct");

  FiniteRandomVariable rv;
  rv.support = std::move(support);
  rv.probs = std::move(probs);
  for (std::size_t i = 0; i < rv.support.size(); ++i) rv.mean += rv.probs[i] * rv.support[i];
  for (std::size_t i = 0; i < rv.support.size(); ++i) {
    double d = rv.support[i] - rv.mean;
    rv.variance += rv.probs[i] * d * d;
  }
  return rv;
}

FiniteRandomVariable tilt_to_mean(const FiniteRandomVariable& rv, double target_mean) {
  if (std::abs(target_mean - rv.mean) < 1e-15) return rv;
  if (rv.variance <= 0.0)
    fail(ErrorCode::validation, "tilt_to_mean: zero-variance variable cannot be tilted");
  double xmin = *std::min_element(rv.support.begin(), rv.support.end());
  double xmax = *std::max_element(rv.support.begin(), rv.support.end());
  if (target_mean <= xmin || target_mean >= xmax)
    fail(ErrorCode::validation, "tilt_to_mean: target mean outside open support range");

  auto tilted_mean = [&](double theta, std::vector<double>* out) {
    // log-sum-exp guard: exp(theta*x - c) with c = max theta*x
    double c = -1e300;
    for (double x : rv.support) c = std::max(c, theta * x);
    double z = 0.0, zx = 0.0;
    std::vector<double> w(rv.support.size());
    for (std::size_t i = 0; i < rv.support.size(); ++i) {
      w[i] = rv.probs[i] * std::exp(theta * rv.support[i] - c);
      z += w[i];
      zx += w[i] * rv.support[i];
    }
    if (out) {
      for (auto& wi : w) wi /= z;
      *out = std::move(w);
    }
    return zx / z;
  };

  // mean(theta) is strictly increasing; expand a bracket, then bisect.
  double lo = -1.0, hi = 1.0;
  int guard = 0;
  while (tilted_mean(lo, nullptr) > target_mean) {
    lo *= 2.0;
    if (++guard > 60) fail(ErrorCode::validation, "tilt_to_mean: bracket expansion failed");
  }
  guard = 0;
  while (tilted_mean(hi, nullptr) < target_mean) {
    hi *= 2.0;
    if (++guard > 60) fail(ErrorCode::validation, "tilt_to_mean: bracket expansion failed");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double mv = tilted_mean(mid, nullptr);
    if (std::abs(mv - target_mean) <= 1e-12) {
      lo = hi = mid;
      break;
    }
    (mv < target_mean ? lo : hi) = mid;
  }
  std::vector<double> probs;
  tilted_mean(0.5 * (lo + hi), &probs);
  double sum = 0.0;
  for (double p : probs) sum += p;
  for (auto& p : probs) p /= sum;
  auto out = make_rv(rv.support, std::move(probs));
  if (std::abs(out.mean - target_mean) > 1e-9)
    fail(ErrorCode::validation, "tilt_to_mean: bisection did not converge");
  return out;
}

std::vector<double> Oracle::index_marginal() const {
  Vec s0 = state0();
  std::vector<double> marg(std::size_t{1} << n_index, 0.0);
  const std::int64_t gdim = std::int64_t{1} << n_garbage;
  for (std::int64_t v = 0; v < static_cast<std::int64_t>(marg.size()); ++v)
    for (std::int64_t g = 0; g < gdim; ++g) marg[v] += std::norm(s0(v * gdim + g));
  return marg;
}

Oracle build_oracle(const FiniteRandomVariable& rv, int n_garbage, std::uint64_t seed) {
  if (n_garbage < 0) fail(ErrorCode::validation, "build_oracle: negative garbage size");
  int n_index = 1;
  while ((std::size_t{1} << n_index) < rv.support.size()) ++n_index;
  if (n_index + n_garbage > statevec::kMaxDenseQubits)
    fail(ErrorCode::size, "build_oracle: oracle register exceeds dense limit");

  const std::int64_t gdim = std::int64_t{1} << n_garbage;
  const std::int64_t dim = (std::int64_t{1} << n_index) * gdim;
  Mat col0 = Mat::Zero(dim, 1);
  for (std::size_t x = 0; x < rv.support.size(); ++x) {
    double a = std::sqrt(rv.probs[x]);
    if (n_garbage == 0) {
      col0(static_cast<std::int64_t>(x), 0) = a;
    } else {
      Vec g = statevec::random_unit_vector(static_cast<int>(gdim), derive_seed(seed, x));
      col0.block(static_cast<std::int64_t>(x) * gdim, 0, gdim, 1) = a * g;
    }
  }
  UnitaryOp u = statevec::complete_to_unitary(col0, derive_seed(seed, 0xC011EC7ULL));

  Oracle o;
  o.rv = rv;
  o.n_index = n_index;
  o.n_garbage = n_garbage;
  o.unitary = std::move(u);
  o.value_table = o.rv.support;
  return o;
}

const char* query_mode_name(QueryMode m) {
  switch (m) {
    case QueryMode::fwd: return "fwd";
    case QueryMode::adj: return "adj";
    case QueryMode::cfwd: return "cfwd";
    case QueryMode::cadj: return "cadj";
  }
  return "?";
}

std::optional<QueryMode> query_mode_from_name(const std::string& s) {
  if (s == "fwd") return QueryMode::fwd;
  if (s == "adj") return QueryMode::adj;
  if (s == "cfwd") return QueryMode::cfwd;
  if (s == "cadj") return QueryMode::cadj;
  return std::nullopt;
}

void QueryLedger::record(int oracle_index, QueryMode mode) {
  if (oracle_index < 0 || oracle_index >= T())
    fail(ErrorCode::validation, "ledger: oracle index out of range");
  if (oracle_index < cursor_)
    fail(ErrorCode::turn_order, "TurnOrderViolation: oracle " +
                                    std::to_string(oracle_index) +
                                    " queried after oracle " + std::to_string(cursor_));
  if (used(oracle_index) >= m_)
    fail(ErrorCode::budget_exceeded, "BudgetExceeded: oracle " +
                                         std::to_string(oracle_index) +
                                         " already used " + std::to_string(m_) + " times");
  counts_[oracle_index][static_cast<int>(mode)]++;
  cursor_ = oracle_index;
}

std::int64_t QueryLedger::used(int oracle_index) const {
  const auto& c = counts_.at(oracle_index);
  return c[0] + c[1] + c[2] + c[3];
}

std::int64_t QueryLedger::total() const {
  std::int64_t t = 0;
  for (int i = 0; i < T(); ++i) t += used(i);
  return t;
}

OracleFamily OracleFamily::make(const FiniteRandomVariable& base, int T, double delta,
                                int m, std::uint64_t seed, int n_garbage) {
  if (T < 1) fail(ErrorCode::validation, "make_family: T must be >= 1");
  if (m < 0) fail(ErrorCode::validation, "make_family: m must be >= 0");
  if (delta < 0.0) fail(ErrorCode::validation, "make_family: delta must be >= 0");
  if (delta > 0.0 && base.variance <= 0.0)
    fail(ErrorCode::validation, "make_family: infeasible jitter for zero-variance base");

  OracleFamily f;
  f.m_ = m;
  f.delta_ = delta;
  f.target_mean_ = base.mean;
  f.n_garbage_ = n_garbage;
  f.seed_ = seed;
  f.ledger_ = std::make_shared<QueryLedger>(T, m);

  bool bernoulli = base.support.size() == 2 && base.support[0] == 0.0 &&
                   base.support[1] == 1.0;
  for (int i = 0; i < T; ++i) {
    double u = 0.0;
    if (delta > 0.0) {
      auto eng = make_engine(derive_seed(seed, 0x7177 + i));
      u = std::uniform_real_distribution<double>(-delta, delta)(eng);
    }
    FiniteRandomVariable rv_i;
    if (u == 0.0) {
      rv_i = base;
    } else if (bernoulli) {
      double p = base.probs[1] + u;
      if (p < 0.0 || p > 1.0)
        fail(ErrorCode::validation, "make_family: jittered Bernoulli mean outside [0,1]");
      rv_i = make_rv(base.support, {1.0 - p, p});
    } else {
      rv_i = tilt_to_mean(base, base.mean + u);
    }
    if (std::abs(rv_i.mean - base.mean) > delta + 1e-9)
      fail(ErrorCode::validation, "make_family: jittered mean escaped [-delta, delta]");
    f.rvs_.push_back(std::move(rv_i));
    f.garbage_seeds_.push_back(derive_seed(seed, 0x6A5B + i));
  }
  return f;
}

int OracleFamily::oracle_qubits() const {
  int n_index = 1;
  while ((std::size_t{1} << n_index) < rvs_[0].support.size()) ++n_index;
  return n_index + n_garbage_;
}

Oracle OracleFamily::oracle(int i) const {
  if (i < 0 || i >= T()) fail(ErrorCode::validation, "oracle index out of range");
  if (!cache_ || cache_->first != i)
    cache_.emplace(i, build_oracle(rvs_[i], n_garbage_, garbage_seeds_[i]));
  return cache_->second;
}

OracleFamily OracleFamily::truncated(double lo, double hi, double new_delta) const {
  if (!(lo <= 0.0 && 0.0 <= hi))
    fail(ErrorCode::validation, "truncated: redirect target 0 must lie in [lo, hi]");
  const auto& grid = rvs_[0].support;
  std::vector<std::size_t> keep;
  bool any_clip = false;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] >= lo && grid[j] <= hi)
      keep.push_back(j);
    else
      any_clip = true;
  }
  OracleFamily f = *this;  // shares the ledger
  f.delta_ = new_delta;
  if (!any_clip) return f;

  bool zero_present = false;
  for (std::size_t j : keep) zero_present |= (grid[j] == 0.0);
  for (int i = 0; i < T(); ++i) {
    const auto& rv = rvs_[static_cast<std::size_t>(i)];
    std::vector<double> support, probs;
    double clipped = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
      if (grid[j] < lo || grid[j] > hi) clipped += rv.probs[j];
    for (std::size_t j : keep) {
      support.push_back(grid[j]);
      probs.push_back(rv.probs[j] + (grid[j] == 0.0 ? clipped : 0.0));
    }
    if (!zero_present) {
      support.push_back(0.0);
      probs.push_back(clipped);
    }
    f.rvs_[static_cast<std::size_t>(i)] = make_rv(std::move(support), std::move(probs));
  }
  f.cache_.reset();
  return f;
}

OracleFamily OracleFamily::value_shifted(double shift) const {
  OracleFamily f = *this;  // shares the ledger; unitaries are value-independent
  for (auto& rv : f.rvs_) {
    std::vector<double> support = rv.support;
    for (auto& x : support) x += shift;
    rv = make_rv(std::move(support), rv.probs);
  }
  f.target_mean_ += shift;
  f.cache_.reset();
  return f;
}

StateVector query(OracleFamily& family, int oracle_index, QueryMode mode,
                  const StateVector& s, const std::vector<int>& wires) {
  const Oracle o = family.oracle(oracle_index);
  family.ledger().record(oracle_index, mode);
  switch (mode) {
    case QueryMode::fwd:
      return statevec::apply(o.unitary, s, wires);
    case QueryMode::adj:
      return statevec::apply(statevec::adjoint(o.unitary), s, wires);
    case QueryMode::cfwd:
      return statevec::apply(statevec::controlled(o.unitary, 1), s, wires);
    case QueryMode::cadj:
      return statevec::apply(statevec::controlled(statevec::adjoint(o.unitary), 1), s,
                             wires);
  }
  fail(ErrorCode::validation, "query: bad mode");
}

LedgerReport ledger_report(const OracleFamily& family) {
  const auto& led = family.ledger();
  LedgerReport r;
  r.cursor = led.cursor();
  for (int i = 0; i < led.T(); ++i) {
    r.per_oracle_modes.push_back(led.mode_counts(i));
    r.per_oracle_totals.push_back(led.used(i));
    r.total += led.used(i);
  }
  return r;
}

FiniteRandomVariable gaussian_grid_rv(double mean, double sigma, int points,
                                      double half_width) {
  if (points < 2 || sigma <= 0.0 || half_width <= 0.0)
    fail(ErrorCode::validation, "gaussian_grid_rv: bad parameters");
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  std::vector<double> support(points), probs(points);
  double step = 2.0 * half_width / (points - 1);
  for (int j = 0; j < points; ++j) {
    double z = -half_width + step * j;
    support[j] = mean + sigma * z;
    double zlo = (j == 0) ? -1e300 : z - 0.5 * step;
    double zhi = (j == points - 1) ? 1e300 : z + 0.5 * step;
    probs[j] = cdf(zhi) - cdf(zlo);
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  for (auto& p : probs) p /= sum;
  return make_rv(std::move(support), std::move(probs));
}

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::validation, where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(ErrorCode::validation, where + ": unknown field '" + it.key() + "'");
}

}  // namespace

FamilySpec parse_family_spec(const nlohmann::json& j) {
  check_keys(j, {"distribution", "params", "T", "m", "delta", "n_garbage", "seed"},
             "family");
  FamilySpec s;
  try {
    s.distribution = j.at("distribution").get<std::string>();
    s.params = j.at("params");
    s.T = j.value("T", 0);
    s.m = j.value("m", 0);
    s.delta = j.at("delta").get<double>();
    s.n_garbage = j.value("n_garbage", 1);
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("family: ") + e.what());
  }
  if (s.distribution == "bernoulli")
    check_keys(s.params, {"p"}, "family.params");
  else if (s.distribution == "point_mass")
    check_keys(s.params, {"value"}, "family.params");
  else if (s.distribution == "finite")
    check_keys(s.params, {"support", "probs"}, "family.params");
  else if (s.distribution == "gaussian_grid")
    check_keys(s.params, {"mean", "sigma", "points", "half_width"}, "family.params");
  else
    fail(ErrorCode::validation, "family: unknown distribution '" + s.distribution + "'");
  return s;
}

nlohmann::json family_spec_json(const FamilySpec& s) {
  return nlohmann::json{{"distribution", s.distribution}, {"params", s.params},
                        {"T", s.T},                       {"m", s.m},
                        {"delta", s.delta},               {"n_garbage", s.n_garbage},
                        {"seed", s.seed}};
}

FiniteRandomVariable base_rv_of(const FamilySpec& s) {
  try {
    if (s.distribution == "bernoulli") {
      double p = s.params.at("p").get<double>();
      if (p < 0.0 || p > 1.0) fail(ErrorCode::validation, "bernoulli: p outside [0,1]");
      return make_rv({0.0, 1.0}, {1.0 - p, p});
    }
    if (s.distribution == "point_mass")
      return make_rv({s.params.at("value").get<double>()}, {1.0});
    if (s.distribution == "finite")
      return make_rv(s.params.at("support").get<std::vector<double>>(),
                     s.params.at("probs").get<std::vector<double>>());
    if (s.distribution == "gaussian_grid")
      return gaussian_grid_rv(s.params.at("mean").get<double>(),
                              s.params.at("sigma").get<double>(),
                              s.params.at("points").get<int>(),
                              s.params.at("half_width").get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("family.params: ") + e.what());
  }
  fail(ErrorCode::validation, "family: unknown distribution");
}

OracleFamily instantiate(const FamilySpec& s) {
  if (s.T < 1) fail(ErrorCode::validation, "family: T must be >= 1 (0 means derive it first)");
  return OracleFamily::make(base_rv_of(s), s.T, s.delta, s.m, s.seed, s.n_garbage);
}

}  // namespace qnme::rvoracle
