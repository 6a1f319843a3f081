#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "statevec.hpp"

namespace qnme::rvoracle {

using statevec::Mat;
using statevec::StateVector;
using statevec::UnitaryOp;
using statevec::Vec;

struct FiniteRandomVariable {
  std::vector<double> support;
  std::vector<double> probs;
  double mean = 0.0;
  double variance = 0.0;
};

FiniteRandomVariable make_rv(std::vector<double> support, std::vector<double> probs);

// Re-tilts probabilities as p(x) * exp(theta*x), solving for the theta that
// hits the target mean (bisection, mean tolerance 1e-12). Support is fixed.
FiniteRandomVariable tilt_to_mean(const FiniteRandomVariable& rv, double target_mean);

// State-preparation oracle for one random variable. Register order:
// [index wires (most significant)][garbage wires]; the index register holds a
// support index, real values live in value_table.
struct Oracle {
  FiniteRandomVariable rv;
  int n_index = 0;
  int n_garbage = 0;
  UnitaryOp unitary;
  std::vector<double> value_table;

  int n_qubits() const { return n_index + n_garbage; }
  Vec state0() const { return unitary.matrix.col(0); }  // O|0...0>
  std::vector<double> index_marginal() const;
};

Oracle build_oracle(const FiniteRandomVariable& rv, int n_garbage, std::uint64_t seed);

enum class QueryMode { fwd, adj, cfwd, cadj };
const char* query_mode_name(QueryMode m);
std::optional<QueryMode> query_mode_from_name(const std::string& s);

// Counts every O, O^dagger, controlled-O, controlled-O^dagger application.
// Budget m per oracle; oracle indices must be consumed in non-decreasing order.
class QueryLedger {
 public:
  QueryLedger(int T, int m) : m_(m), counts_(T) {}

  void record(int oracle_index, QueryMode mode);
  std::int64_t used(int oracle_index) const;
  std::int64_t total() const;
  int cursor() const { return cursor_; }
  int T() const { return static_cast<int>(counts_.size()); }
  int m() const { return m_; }
  const std::array<std::int64_t, 4>& mode_counts(int oracle_index) const {
    return counts_[oracle_index];
  }

 private:
  int m_ = 0;
  int cursor_ = 0;
  std::vector<std::array<std::int64_t, 4>> counts_;
};

struct LedgerReport {
  std::vector<std::array<std::int64_t, 4>> per_oracle_modes;
  std::vector<std::int64_t> per_oracle_totals;
  std::int64_t total = 0;
  int cursor = 0;
};

// Ordered family of T oracles sharing register shape, each usable at most m
// times. Oracle i encodes the base variable with a seeded mean jitter in
// [-delta, delta]; garbage and completion seeds differ per oracle.
class OracleFamily {
 public:
  static OracleFamily make(const FiniteRandomVariable& base, int T, double delta,
                           int m, std::uint64_t seed, int n_garbage = 1);

  int T() const { return static_cast<int>(rvs_.size()); }
  int m() const { return m_; }
  double delta() const { return delta_; }
  double target_mean() const { return target_mean_; }
  int n_garbage() const { return n_garbage_; }
  std::uint64_t seed() const { return seed_; }
  const FiniteRandomVariable& rv(int i) const { return rvs_.at(i); }
  int oracle_qubits() const;

  Oracle oracle(int i) const;  // built on demand; one-deep cache behind a copy

  QueryLedger& ledger() { return *ledger_; }
  const QueryLedger& ledger() const { return *ledger_; }

  // Derived families share this family's ledger and budget.
  OracleFamily truncated(double lo, double hi, double new_delta) const;
  OracleFamily value_shifted(double shift) const;

 private:
  std::vector<FiniteRandomVariable> rvs_;
  int m_ = 0;
  double delta_ = 0.0;
  double target_mean_ = 0.0;
  int n_garbage_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint64_t> garbage_seeds_;
  std::shared_ptr<QueryLedger> ledger_;
  mutable std::optional<std::pair<int, Oracle>> cache_;
};

StateVector query(OracleFamily& family, int oracle_index, QueryMode mode,
                  const StateVector& s, const std::vector<int>& wires);

LedgerReport ledger_report(const OracleFamily& family);

// JSON family specification: {distribution, params, T, m, delta, n_garbage, seed}.
struct FamilySpec {
  std::string distribution;
  nlohmann::json params;
  int T = 0;
  int m = 0;
  double delta = 0.0;
  int n_garbage = 1;
  std::uint64_t seed = 0;
};

FamilySpec parse_family_spec(const nlohmann::json& j);
nlohmann::json family_spec_json(const FamilySpec& s);
FiniteRandomVariable base_rv_of(const FamilySpec& s);
OracleFamily instantiate(const FamilySpec& s);

// Symmetric discretized Gaussian: `points` grid values spanning
// mean +- half_width*sigma, bin masses from the normal CDF, tails folded
// into the extreme points.
FiniteRandomVariable gaussian_grid_rv(double mean, double sigma, int points,
                                      double half_width);

}  // namespace qnme::rvoracle
