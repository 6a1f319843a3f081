#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace qnme::statevec {

using cxd = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Wire convention: wire 0 is the most significant bit of the basis index,
// so |q0 q1 ... q_{n-1}> sits at index q0*2^(n-1) + q1*2^(n-2) + ... + q_{n-1}.
inline constexpr int kMaxStateQubits = 20;
inline constexpr int kMaxDenseQubits = 14;

inline std::int64_t dim_of(int n_qubits) { return std::int64_t{1} << n_qubits; }

struct StateVector {
  int n_qubits = 0;
  Vec amplitudes;
  bool normalized = true;  // false after projection

  double norm() const { return amplitudes.norm(); }
};

struct UnitaryOp {
  int n_qubits = 0;
  Mat matrix;
};

// Orthonormal columns spanning the image subspace.
struct Projector {
  int n_qubits = 0;
  Mat basis;
};

StateVector zero_state(int n_qubits);
StateVector basis_state(int n_qubits, std::uint64_t index);

StateVector make_state(int n_qubits, Vec amplitudes, bool normalized = true);
UnitaryOp make_unitary(Mat m);                    // checks unitarity (1e-9)
Projector make_projector(int n_qubits, Mat basis);  // checks orthonormality (1e-10)

// Embeds `u` on the given wires of `s`. Wires are distinct positions in s;
// u's wire j acts on s's wire wires[j].
StateVector apply(const UnitaryOp& u, const StateVector& s,
                  const std::vector<int>& wires);
void apply_in_place(const Mat& gate, Vec& amp, int n_qubits,
                    const std::vector<int>& wires);

UnitaryOp controlled(const UnitaryOp& u, int n_controls);
UnitaryOp adjoint(const UnitaryOp& u);
StateVector project(const Projector& p, const StateVector& s);

// Full unitary whose leading columns equal the input block; the rest come
// from Gram-Schmidt on seeded random Gaussian vectors (deterministic per seed).
UnitaryOp complete_to_unitary(const Mat& partial_columns, std::uint64_t seed);

double spectral_norm(const Mat& m);
double op_distance(const UnitaryOp& u, const UnitaryOp& v);
bool is_unitary(const Mat& m, double tol = 1e-9);

// min over global phase of || a - e^{i t} b ||
double state_distance_up_to_phase(const Vec& a, const Vec& b);

UnitaryOp identity_op(int n_qubits);
UnitaryOp pauli_x();
UnitaryOp pauli_z();
UnitaryOp hadamard();
UnitaryOp cnot();

// Projector onto the span of the given computational basis states.
Projector basis_projector(int n_qubits, const std::vector<std::uint64_t>& indices);

Vec random_unit_vector(int dim, std::uint64_t seed);
UnitaryOp random_unitary(int n_qubits, std::uint64_t seed);

}  // namespace qnme::statevec
