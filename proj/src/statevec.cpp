#include "statevec.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "util.hpp"

namespace qnme::statevec {

namespace {

void check_qubit_count(int n_qubits, int lo, int hi, const char* who) {
  if (n_qubits < lo || n_qubits > hi)
    fail(ErrorCode::size, std::string(who) + ": qubit count " +
                              std::to_string(n_qubits) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

Vec random_gaussian_vec(int dim, std::mt19937_64& eng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    double re = g(eng);
    double im = g(eng);
    v(i) = cxd(re, im);
  }
  return v;
}

}  // namespace

StateVector zero_state(int n_qubits) {
  check_qubit_count(n_qubits, 1, kMaxStateQubits, "zero_state");
  StateVector s;
  s.n_qubits = n_qubits;
  s.amplitudes = Vec::Zero(dim_of(n_qubits));
  s.amplitudes(0) = 1.0;
  s.normalized = true;
  return s;
}

StateVector basis_state(int n_qubits, std::uint64_t index) {
  StateVector s = zero_state(n_qubits);
  if (index >= static_cast<std::uint64_t>(dim_of(n_qubits)))
    fail(ErrorCode::size, "basis_state: index out of range");
  s.amplitudes(0) = 0.0;
  s.amplitudes(static_cast<std::int64_t>(index)) = 1.0;
  return s;
}

StateVector make_state(int n_qubits, Vec amplitudes, bool normalized) {
  if (amplitudes.size() != dim_of(n_qubits))
    fail(ErrorCode::shape, "make_state: amplitude length is not 2^n_qubits");
  if (normalized && std::abs(amplitudes.norm() - 1.0) > 1e-10)
    fail(ErrorCode::validation, "make_state: state marked normalized has norm " +
                                    std::to_string(amplitudes.norm()));
  return StateVector{n_qubits, std::move(amplitudes), normalized};
}

UnitaryOp make_unitary(Mat m) {
  if (m.rows() != m.cols()) fail(ErrorCode::shape, "make_unitary: matrix not square");
  int n = 0;
  while (dim_of(n) < m.rows()) ++n;
  if (dim_of(n) != m.rows())
    fail(ErrorCode::shape, "make_unitary: dimension is not a power of two");
  if (!is_unitary(m))
    fail(ErrorCode::validation, "make_unitary: ||U^dag U - I|| exceeds 1e-9");
  return UnitaryOp{n, std::move(m)};
}

Projector make_projector(int n_qubits, Mat basis) {
  if (basis.rows() != dim_of(n_qubits))
    fail(ErrorCode::shape, "make_projector: basis row count mismatch");
  if (basis.cols() > 0) {
    Mat gram = basis.adjoint() * basis;
    gram -= Mat::Identity(basis.cols(), basis.cols());
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
      fail(ErrorCode::validation, "make_projector: columns not orthonormal within 1e-10");
  }
  return Projector{n_qubits, std::move(basis)};
}

void apply_in_place(const Mat& gate, Vec& amp, int n_qubits,
                    const std::vector<int>& wires) {
  const int g = static_cast<int>(wires.size());
  if (gate.rows() != dim_of(g) || gate.cols() != dim_of(g))
    fail(ErrorCode::shape, "apply: gate dimension does not match wire count");
  std::vector<char> seen(n_qubits, 0);
  for (int w : wires) {
    if (w < 0 || w >= n_qubits) fail(ErrorCode::shape, "apply: wire out of range");
    if (seen[w]++) fail(ErrorCode::shape, "apply: duplicate wire");
  }
  const std::int64_t dim = amp.size();
  const std::int64_t gdim = dim_of(g);

  // Fast path: gate on the leading wires (most significant bits, in order).
  bool msb_prefix = true;
  for (int j = 0; j < g; ++j) msb_prefix &= (wires[j] == j);
  if (msb_prefix) {
    Eigen::Map<Mat> view(amp.data(), dim >> g, gdim);
    view = view * gate.transpose();
    return;
  }
  // Fast path: gate on the trailing wires in order (contiguous blocks).
  bool lsb_suffix = true;
  for (int j = 0; j < g; ++j) lsb_suffix &= (wires[j] == n_qubits - g + j);
  if (lsb_suffix) {
    Eigen::Map<Mat> view(amp.data(), gdim, dim >> g);
    view = gate * view;
    return;
  }

  // General path: gather/scatter over the remaining wires.
  std::vector<std::int64_t> stride(g);
  std::int64_t target_mask = 0;
  for (int j = 0; j < g; ++j) {
    stride[j] = std::int64_t{1} << (n_qubits - 1 - wires[j]);
    target_mask |= stride[j];
  }
  Vec sub(gdim), out(gdim);
  std::vector<std::int64_t> offs(gdim);
  for (std::int64_t v = 0; v < gdim; ++v) {
    std::int64_t o = 0;
    for (int j = 0; j < g; ++j)
      if ((v >> (g - 1 - j)) & 1) o |= stride[j];
    offs[v] = o;
  }
  for (std::int64_t base = 0; base < dim; ++base) {
    if (base & target_mask) continue;
    for (std::int64_t v = 0; v < gdim; ++v) sub(v) = amp(base | offs[v]);
    out.noalias() = gate * sub;
    for (std::int64_t v = 0; v < gdim; ++v) amp(base | offs[v]) = out(v);
  }
}

StateVector apply(const UnitaryOp& u, const StateVector& s,
                  const std::vector<int>& wires) {
  if (static_cast<int>(wires.size()) != u.n_qubits)
    fail(ErrorCode::shape, "apply: unitary acts on " + std::to_string(u.n_qubits) +
                               " wires, got " + std::to_string(wires.size()));
  StateVector out = s;
  apply_in_place(u.matrix, out.amplitudes, s.n_qubits, wires);
  return out;
}

UnitaryOp controlled(const UnitaryOp& u, int n_controls) {
  if (n_controls < 1) fail(ErrorCode::validation, "controlled: n_controls must be >= 1");
  if (u.n_qubits + n_controls > kMaxDenseQubits)
    fail(ErrorCode::size, "controlled: dense operator too large");
  const std::int64_t du = dim_of(u.n_qubits);
  const std::int64_t d = dim_of(u.n_qubits + n_controls);
  Mat m = Mat::Identity(d, d);
  m.block(d - du, d - du, du, du) = u.matrix;
  return UnitaryOp{u.n_qubits + n_controls, std::move(m)};
}

UnitaryOp adjoint(const UnitaryOp& u) { return UnitaryOp{u.n_qubits, u.matrix.adjoint()}; }

StateVector project(const Projector& p, const StateVector& s) {
  if (p.basis.rows() != s.amplitudes.size())
    fail(ErrorCode::shape, "project: dimension mismatch");
  StateVector out;
  out.n_qubits = s.n_qubits;
  out.amplitudes = p.basis * (p.basis.adjoint() * s.amplitudes);
  out.normalized = false;
  return out;
}

UnitaryOp complete_to_unitary(const Mat& partial_columns, std::uint64_t seed) {
  const std::int64_t d = partial_columns.rows();
  const std::int64_t k = partial_columns.cols();
  if (k > d) fail(ErrorCode::shape, "complete_to_unitary: more columns than rows");
  if (d <= 0 || (d & (d - 1)) != 0)
    fail(ErrorCode::shape, "complete_to_unitary: dimension is not a power of two");
  Mat gram = partial_columns.adjoint() * partial_columns;
  gram -= Mat::Identity(k, k);
  if (k > 0 && gram.cwiseAbs().maxCoeff() > 1e-8)
    fail(ErrorCode::validation,
         "complete_to_unitary: input columns not orthonormal within 1e-8");

  Mat full(d, d);
  full.leftCols(k) = partial_columns;  // inputs kept bit-for-bit
  auto eng = make_engine(seed);
  std::int64_t col = k;
  while (col < d) {
    Vec v = random_gaussian_vec(static_cast<int>(d), eng);
    // Two projection passes keep orthogonality tight at these dimensions.
    for (int pass = 0; pass < 2; ++pass)
      v -= full.leftCols(col) * (full.leftCols(col).adjoint() * v);
    double nrm = v.norm();
    if (nrm < 1e-6) continue;  // unlucky draw, take the next one
    full.col(col) = v / nrm;
    ++col;
  }
  return UnitaryOp{[&] {
                     int n = 0;
                     while (dim_of(n) < d) ++n;
                     return n;
                   }(),
                   std::move(full)};
}

double spectral_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (m.rows() <= 32 && m.cols() <= 32) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
  }
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

double op_distance(const UnitaryOp& u, const UnitaryOp& v) {
  if (u.n_qubits != v.n_qubits) fail(ErrorCode::shape, "op_distance: dimension mismatch");
  return spectral_norm(u.matrix - v.matrix);
}

bool is_unitary(const Mat& m, double tol) {
  Mat g = m.adjoint() * m;
  g -= Mat::Identity(m.cols(), m.cols());
  return spectral_norm(g) <= tol;
}

double state_distance_up_to_phase(const Vec& a, const Vec& b) {
  cxd ov = a.dot(b);  // <a|b>
  double phase_free = std::abs(ov);
  double d2 = a.squaredNorm() + b.squaredNorm() - 2.0 * phase_free;
  return std::sqrt(std::max(0.0, d2));
}

UnitaryOp identity_op(int n_qubits) {
  return UnitaryOp{n_qubits, Mat::Identity(dim_of(n_qubits), dim_of(n_qubits))};
}

UnitaryOp pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return UnitaryOp{1, m};
}

UnitaryOp pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return UnitaryOp{1, m};
}

UnitaryOp hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  Mat m(2, 2);
  m << s, s, s, -s;
  return UnitaryOp{1, m};
}

UnitaryOp cnot() {
  Mat m = Mat::Zero(4, 4);
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(2, 3) = 1;
  m(3, 2) = 1;
  return UnitaryOp{2, m};
}

Projector basis_projector(int n_qubits, const std::vector<std::uint64_t>& indices) {
  Mat b = Mat::Zero(dim_of(n_qubits), static_cast<std::int64_t>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= static_cast<std::uint64_t>(dim_of(n_qubits)))
      fail(ErrorCode::shape, "basis_projector: index out of range");
    b(static_cast<std::int64_t>(indices[j]), static_cast<std::int64_t>(j)) = 1.0;
  }
  return make_projector(n_qubits, std::move(b));
}

Vec random_unit_vector(int dim, std::uint64_t seed) {
  auto eng = make_engine(seed);
  Vec v;
  do {
    v = random_gaussian_vec(dim, eng);
  } while (v.norm() < 1e-9);
  return v / v.norm();
}

UnitaryOp random_unitary(int n_qubits, std::uint64_t seed) {
  return complete_to_unitary(Mat(dim_of(n_qubits), 0), seed);
}

}  // namespace qnme::statevec
