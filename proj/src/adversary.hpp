#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "rvoracle.hpp"
#include "statevec.hpp"

namespace qnme::adversary {

using statevec::Mat;
using statevec::Projector;
using statevec::UnitaryOp;
using statevec::Vec;

// A T-query algorithm on registers Q (wires 0..n_q-1, most significant) and W:
// U_0..U_T interleaved with oracle queries, each query applied forward
// (a_t = +1) or adjoint (a_t = -1) on Q. Queries here are uncontrolled.
struct QueryAlgorithm {
  int n_q = 0;
  int n_w = 0;
  std::vector<UnitaryOp> unitaries;  // T+1 operators on Q (x) W
  std::vector<int> directions;       // a_1..a_T in {+1,-1}

  int T() const { return static_cast<int>(directions.size()); }
  int n_total() const { return n_q + n_w; }
};

QueryAlgorithm random_query_algorithm(int n_q, int n_w, int T,
                                      const std::vector<int>& directions,
                                      std::uint64_t seed);

// The pinned part of every oracle: O_X|0...0> = |psi_X> on Q.
struct CanonicalAction {
  Vec psi_x;

  Vec zero() const;
  Vec phi_beg(int direction) const;  // |0...0> if a=+1, |psi_X> if a=-1
  Vec phi_end(int direction) const;
};

CanonicalAction canonical_from_state(Vec psi_x);
CanonicalAction canonical_from_oracle(const UnitaryOp& oracle_on_q);

// Oracle-independent effective state after t queries (unnormalized).
Vec effective_state(const QueryAlgorithm& alg, const CanonicalAction& canon, int t);

struct LowDepthReport {
  double residual = 0.0;  // || postselected V_T^low |0...0> - psi_eff^(T) ||
  int total_queries = 0;
  int forward_queries = 0;
  int adjoint_queries = 0;
  int parallel_rounds = 0;  // nonempty rounds; never more than 2
  int total_qubits = 0;
  Vec postselected;  // reordered to the (Q, W) convention
};

LowDepthReport build_low_depth(const QueryAlgorithm& alg, const UnitaryOp& oracle_on_q);

// Completes each oracle so every non-effective component is steered away from
// the next step's pinned subspace (and, at the last step, from Im(pi_c)).
std::vector<UnitaryOp> adversarial_oracles(const QueryAlgorithm& alg,
                                           const CanonicalAction& canon,
                                           const Projector& pi_c, std::uint64_t seed);

struct AdversaryReport {
  double lhs = 0.0;  // ||Pi_c psi^(T)||^2 under the constructed oracles
  double rhs = 0.0;  // ||Pi_c U_T psi_eff^(T)||^2
  double residual = 0.0;
  double kill_residual = 0.0;        // ||Pi_c U_T (O^(T))^{a_T} psi_perp^(T-1)||
  double max_component_residual = 0.0;  // effective-component equality per step
  double max_orthogonality_residual = 0.0;
  double max_unitarity_defect = 0.0;
  double max_pin_residual = 0.0;  // || O^(t)|0...0> - psi_X ||
};

AdversaryReport verify_adversarial(const QueryAlgorithm& alg,
                                   const CanonicalAction& canon, const Projector& pi_c,
                                   std::uint64_t seed);

// --- query-register recovery (uncomputation + fixed-point) ---

struct RecoverInput {
  UnitaryOp u;  // estimator on [Q][W][W1]; W1 holds a grid index
  int n_q = 0;
  int n_w = 0;
  int n_w1 = 0;
  double eps_grid = 0.0;
  double mu_true = 0.0;
  double fix_eps = 1e-3;
};

struct RecoverReport {
  std::vector<double> outcome_probs;  // p(i) over the W1 grid
  double lambda = 0.0;                // sqrt(sum p(i)^2)
  double flank_weight = 0.0;          // p(i*)^2 + p(i*+1)^2
  bool contract_ok = false;           // flank_weight >= 2/9
  bool contract_violation_flagged = false;
  double form_residual = 0.0;  // good component of V|0> vs sum_i p(i)|i>
  int fix_length = 0;
  double recovered_distance = 0.0;  // recovered state vs ideal target
};

RecoverReport recover_query_register(const RecoverInput& in);

// Estimator whose W1 outcome distribution is `probs` placed from grid index
// `first_index`; garbage on (Q,W) is seeded-random per outcome.
UnitaryOp make_grid_estimator(int n_q, int n_w, int n_w1,
                              const std::vector<double>& probs, int first_index,
                              std::uint64_t seed);

// --- bit oracles and the counting hard instance ---

// O_x|i>|b> = |i>|b xor x_i>; strings shorter than a power of two are padded
// with zeros.
UnitaryOp bit_oracle(const std::vector<int>& x);

// Hadamards on the index wires followed by one bit-oracle call; encodes
// Bernoulli(|x|/n) with the index register as garbage.
rvoracle::Oracle bernoulli_from_bits(const std::vector<int>& x);

struct BlockTrace {
  std::vector<std::complex<double>> s_values;  // S^(0..m)
  std::vector<double> step_bounds;             // 4(l+1)
  int chosen_index = -1;
  double chosen_progress = 0.0;  // accumulated per-step |change| of i_0
  double chosen_bound = 0.0;     // 2m(m+1)/(n-k)
  std::complex<double> end_overlap;
};

struct ProgressTrace {
  int n = 0, k = 0, m = 0, blocks = 0;
  std::vector<BlockTrace> block_traces;
  double final_overlap_abs = 0.0;
  double final_bound = 0.0;  // 1 - 2m(m+1)T/(n-k)
  bool envelope_ok = true;
  bool block_bound_ok = true;
};

ProgressTrace hard_counting_sequence(int n, int k, int m, const QueryAlgorithm& alg);

std::string trace_csv(const ProgressTrace& trace);

// Grover-style distinguisher over O_x with an index register of log2(n) wires
// plus the |-> target wire; `steps` diffusion rounds.
QueryAlgorithm grover_counting_algorithm(int n, int steps);

}  // namespace qnme::adversary
