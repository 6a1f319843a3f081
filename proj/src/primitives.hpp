#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rvoracle.hpp"
#include "statevec.hpp"

namespace qnme::primitives {

using rvoracle::Oracle;
using statevec::Mat;
using statevec::Projector;
using statevec::UnitaryOp;
using statevec::Vec;

// System register used by the mean-to-amplitude circuits, most significant
// wire first: [oracle register][rotation flag][uncompute ancilla].
inline int system_qubits(const Oracle& o) { return o.n_qubits() + 2; }

// U_i: one oracle application followed by the controlled rotation taking
// support value x to sqrt((x-L)/(H-L)) on the flag's |1>.
UnitaryOp encode_rotation(const Oracle& oracle, double lo, double hi);

// V_i = (U^dag ⊗ I)(I ⊗ CNOT)(U ⊗ I); u's last wire is the flag, one fresh
// ancilla is appended. V is an involution.
UnitaryOp uncompute_pair(const UnitaryOp& u);

// Chebyshev phase sequence for fixed-point search; length L is the number of
// a / a^dag applications (odd). Iterate j applies exp(i*target_phases[j]) on
// the target subspace and exp(i*source_phases[j]) on the source state; the
// two lists are the same angles in opposite order.
struct FixedPointPlan {
  int length = 1;
  double delta = 0.0;   // internal error parameter (= eps/2)
  double gamma = 0.0;
  std::vector<double> target_phases;
  std::vector<double> source_phases;
};

FixedPointPlan fixed_point_plan(double eps, double lambda_min);

UnitaryOp fixed_point_search(const UnitaryOp& a, const Projector& pi, double eps,
                             double lambda_min);

// I - 2 s|0...0><0...0| s^dag
UnitaryOp grover_reflection(const UnitaryOp& s);

// --- state-level appliers for the mean-to-amplitude system register ---

// O on the oracle wires (most significant block).
void apply_oracle(const Oracle& o, Vec& amp, bool adjointed);
// Controlled rotation on (index register, flag).
void apply_rotation(const Oracle& o, double lo, double hi, Vec& amp, bool adjointed);
// CNOT from flag onto the appended ancilla.
void apply_flag_copy(Vec& amp);
// Full V application (V is self-adjoint).
void apply_uncompute_pair(const Oracle& o, double lo, double hi, Vec& amp);
// S_i|0...0> on the system register: the fixed-point sequence over V_i.
Vec prepared_state(const Oracle& o, double lo, double hi, const FixedPointPlan& plan);

// --- amplitude estimation ---

struct PrepSlot {
  Vec state;  // the slot's prepared state S_j|0...0> on the system register
};

// One state-preparation circuit per Grover application slot. Slot 0 is the
// initial preparation; slots 1..M-1 feed the phase-estimation Grover steps
// in power order. make_slot is called once per slot, in slot order, and is
// responsible for charging whatever ledger backs it.
struct StatePrepSchedule {
  int n_system = 0;
  int flag_wire = 0;   // wire whose |1> spans the good subspace
  std::function<PrepSlot(int)> make_slot;
  std::int64_t available = -1;  // callable slots; -1 = unbounded
};

struct AmplitudeEstimate {
  double p_tilde = 0.0;
  int M = 0;
  int y = 0;
};

struct AmpEstRun {
  int y = 0;
  double p_tilde = 0.0;
  std::vector<double> distribution;  // exact outcome probabilities P(y)
};

AmpEstRun amplitude_estimation_run(const StatePrepSchedule& schedule, int M,
                                   std::mt19937_64& eng);
AmplitudeEstimate amplitude_estimation(const StatePrepSchedule& schedule, int M,
                                       std::mt19937_64& eng);

// Schedule that repeats one fixed preparer; for a bare Bernoulli amplitude,
// system is a single flag qubit.
StatePrepSchedule ideal_schedule(double p);
StatePrepSchedule fixed_unitary_schedule(const UnitaryOp& s, int flag_wire);

}  // namespace qnme::primitives
