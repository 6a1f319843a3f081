#include "primitives.hpp"

#include <cmath>
#include <numbers>

#include "util.hpp"

namespace qnme::primitives {

using statevec::cxd;

namespace {

constexpr double kPi = std::numbers::pi;

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void check_range(const Oracle& o, double lo, double hi) {
  if (!(hi > lo)) fail(ErrorCode::range, "encode_rotation: requires H > L");
  for (double x : o.value_table)
    if (x < lo || x > hi)
      fail(ErrorCode::range, "encode_rotation: support value " + fmt_double(x) +
                                 " outside [" + fmt_double(lo) + ", " + fmt_double(hi) + "]");
}

}  // namespace

void apply_oracle(const Oracle& o, Vec& amp, bool adjointed) {
  const std::int64_t odim = std::int64_t{1} << o.n_qubits();
  const std::int64_t rest = amp.size() / odim;
  Eigen::Map<Mat> view(amp.data(), rest, odim);
  if (adjointed)
    view = view * o.unitary.matrix.conjugate();
  else
    view = view * o.unitary.matrix.transpose();
}

void apply_rotation(const Oracle& o, double lo, double hi, Vec& amp, bool adjointed) {
  check_range(o, lo, hi);
  const std::int64_t odim = std::int64_t{1} << o.n_qubits();
  const std::int64_t rest = amp.size() / odim;
  const std::int64_t half = rest / 2;  // flag bit significance
  const std::int64_t gdim = std::int64_t{1} << o.n_garbage;
  for (std::size_t v = 0; v < o.value_table.size(); ++v) {
    double r = (o.value_table[v] - lo) / (hi - lo);
    double c = std::sqrt(1.0 - r);
    double s = std::sqrt(r);
    if (adjointed) s = -s;
    for (std::int64_t g = 0; g < gdim; ++g) {
      std::int64_t base = (static_cast<std::int64_t>(v) * gdim + g) * rest;
      for (std::int64_t t = 0; t < half; ++t) {
        cxd a0 = amp(base + t);
        cxd a1 = amp(base + half + t);
        amp(base + t) = c * a0 - s * a1;
        amp(base + half + t) = s * a0 + c * a1;
      }
    }
  }
}

void apply_flag_copy(Vec& amp) {
  // CNOT with the flag (second-least-significant wire) controlling the ancilla.
  for (std::int64_t base = 0; base < amp.size(); base += 4)
    std::swap(amp(base + 2), amp(base + 3));
}

void apply_uncompute_pair(const Oracle& o, double lo, double hi, Vec& amp) {
  apply_oracle(o, amp, false);
  apply_rotation(o, lo, hi, amp, false);
  apply_flag_copy(amp);
  apply_rotation(o, lo, hi, amp, true);
  apply_oracle(o, amp, true);
}

UnitaryOp encode_rotation(const Oracle& oracle, double lo, double hi) {
  check_range(oracle, lo, hi);
  const int n = oracle.n_qubits() + 1;
  Mat m = kron(oracle.unitary.matrix, Mat::Identity(2, 2));
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    Vec c = m.col(col);
    apply_rotation(oracle, lo, hi, c, false);
    m.col(col) = c;
  }
  return UnitaryOp{n, std::move(m)};
}

UnitaryOp uncompute_pair(const UnitaryOp& u) {
  const int n = u.n_qubits + 1;
  if (n > statevec::kMaxDenseQubits)
    fail(ErrorCode::shape, "uncompute_pair: operator too large");
  const std::int64_t half = std::int64_t{1} << (n - 2);
  Mat cnot_full = Mat::Zero(std::int64_t{1} << n, std::int64_t{1} << n);
  Mat cnot4(4, 4);
  cnot4 << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0;
  for (std::int64_t b = 0; b < half; ++b)
    cnot_full.block(4 * b, 4 * b, 4, 4) = cnot4;
  Mat ui = kron(u.matrix, Mat::Identity(2, 2));
  Mat v = ui.adjoint() * cnot_full * ui;
  return UnitaryOp{n, std::move(v)};
}

FixedPointPlan fixed_point_plan(double eps, double lambda_min) {
  if (!(eps > 0.0 && eps < 1.0))
    fail(ErrorCode::validation, "fixed_point_plan: eps must be in (0,1)");
  if (!(lambda_min > 0.0 && lambda_min <= 1.0))
    fail(ErrorCode::validation, "fixed_point_plan: lambda_min must be in (0,1]");
  FixedPointPlan plan;
  plan.delta = eps / 2.0;
  if (lambda_min >= 1.0 - 1e-12) {
    plan.length = 1;
    plan.gamma = 0.0;
    return plan;
  }
  const double inv = std::acosh(1.0 / plan.delta);
  const double denom = std::acosh(1.0 / std::sqrt(1.0 - lambda_min * lambda_min));
  int L = static_cast<int>(std::ceil(inv / denom));
  if (L < 1) L = 1;
  if (L % 2 == 0) ++L;
  plan.length = L;
  plan.gamma = 1.0 / std::cosh(inv / L);
  const int l = (L - 1) / 2;
  const double root = std::sqrt(1.0 - plan.gamma * plan.gamma);
  std::vector<double> angles(l);
  for (int j = 1; j <= l; ++j)
    angles[j - 1] = 2.0 * (kPi / 2.0 - std::atan(std::tan(2.0 * kPi * j / L) * root));
  plan.source_phases = angles;
  plan.target_phases.assign(angles.rbegin(), angles.rend());
  return plan;
}

UnitaryOp fixed_point_search(const UnitaryOp& a, const Projector& pi, double eps,
                             double lambda_min) {
  if (pi.basis.rows() != a.matrix.rows())
    fail(ErrorCode::shape, "fixed_point_search: projector dimension mismatch");
  FixedPointPlan plan = fixed_point_plan(eps, lambda_min);

  Vec a0 = a.matrix.col(0);
  Vec proj = pi.basis * (pi.basis.adjoint() * a0);
  const double lambda = proj.norm();
  if (lambda < lambda_min * (1.0 - 1e-9))
    fail(ErrorCode::contract, "fixed_point_search: ||Pi a|0>|| = " + fmt_double(lambda) +
                                  " below the promised lambda_min " + fmt_double(lambda_min));
  Vec phi = proj / lambda;

  const std::int64_t d = a.matrix.rows();
  Mat result = a.matrix;
  const int l = (plan.length - 1) / 2;
  for (int j = 0; j < l; ++j) {
    const cxd ta = cxd(1.0, 0.0) - std::polar(1.0, plan.target_phases[j]);
    Mat st = Mat::Identity(d, d) - ta * (pi.basis * pi.basis.adjoint());
    result = st * result;
    result = a.matrix.adjoint() * result;
    result.row(0) *= std::polar(1.0, plan.source_phases[j]);
    result = a.matrix * result;
    result = -result;
  }
  // A free global phase aligns the output with the target state, making the
  // distance contract hold without the up-to-phase caveat.
  cxd overlap = phi.dot(result.col(0));
  if (std::abs(overlap) > 1e-12) result *= std::conj(overlap) / std::abs(overlap);
  return UnitaryOp{a.n_qubits, std::move(result)};
}

UnitaryOp grover_reflection(const UnitaryOp& s) {
  Vec c = s.matrix.col(0);
  Mat m = Mat::Identity(s.matrix.rows(), s.matrix.cols());
  m -= 2.0 * (c * c.adjoint());
  return UnitaryOp{s.n_qubits, std::move(m)};
}

Vec prepared_state(const Oracle& o, double lo, double hi, const FixedPointPlan& plan) {
  const std::int64_t d = std::int64_t{1} << system_qubits(o);
  Vec amp = Vec::Zero(d);
  amp(0) = 1.0;
  apply_uncompute_pair(o, lo, hi, amp);
  const int l = (plan.length - 1) / 2;
  for (int j = 0; j < l; ++j) {
    const cxd pa = std::polar(1.0, plan.target_phases[j]);
    const cxd pb = std::polar(1.0, plan.source_phases[j]);
    amp(0) *= pa;  // target subspace: oracle register and flag at zero
    amp(1) *= pa;
    apply_uncompute_pair(o, lo, hi, amp);  // V = V^dag
    amp(0) *= pb;                          // source |0...0>
    apply_uncompute_pair(o, lo, hi, amp);
    amp = -amp;
  }
  return amp;
}

AmpEstRun amplitude_estimation_run(const StatePrepSchedule& schedule, int M,
                                   std::mt19937_64& eng) {
  if (M < 2 || (M & (M - 1)) != 0)
    fail(ErrorCode::validation, "amplitude_estimation: M must be a power of two >= 2");
  if (schedule.available >= 0 && schedule.available < M)
    fail(ErrorCode::schedule, "amplitude_estimation: schedule exhausted (needs " +
                                  std::to_string(M) + " slots)");
  int t = 0;
  while ((1 << t) < M) ++t;

  PrepSlot s0 = schedule.make_slot(0);
  const std::int64_t d = s0.state.size();
  if (d != (std::int64_t{1} << schedule.n_system))
    fail(ErrorCode::shape, "amplitude_estimation: slot state dimension mismatch");
  const std::int64_t good_bit = std::int64_t{1}
                                << (schedule.n_system - 1 - schedule.flag_wire);

  Mat joint(d, M);
  const double root = 1.0 / std::sqrt(static_cast<double>(M));
  for (int y = 0; y < M; ++y) joint.col(y) = s0.state * root;

  // Ancilla bit b controls 2^b consecutive Grover steps; each step is
  // -(I - 2|s_j><s_j|)(I - 2 Pi_good) with its own slot state s_j.
  int slot = 1;
  for (int b = 0; b < t; ++b) {
    for (int rep = 0; rep < (1 << b); ++rep) {
      Vec s = schedule.make_slot(slot++).state;
      for (int y = 0; y < M; ++y) {
        if (!((y >> b) & 1)) continue;
        auto col = joint.col(y);
        for (std::int64_t i = 0; i < d; ++i)
          if (i & good_bit) col(i) = -col(i);
        cxd inner = s.dot(col);
        col -= 2.0 * inner * s;
        col = -col;
      }
    }
  }

  // Inverse Fourier transform over the ancilla value.
  Mat w(M, M);
  for (int y = 0; y < M; ++y)
    for (int yp = 0; yp < M; ++yp)
      w(y, yp) = std::polar(root, -2.0 * kPi * y * yp / M);
  joint = joint * w;

  AmpEstRun run;
  run.distribution.resize(M);
  double total = 0.0;
  for (int y = 0; y < M; ++y) {
    run.distribution[y] = joint.col(y).squaredNorm();
    total += run.distribution[y];
  }
  for (auto& p : run.distribution) p /= total;

  double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  int y = M - 1;
  double acc = 0.0;
  for (int i = 0; i < M; ++i) {
    acc += run.distribution[i];
    if (u <= acc) {
      y = i;
      break;
    }
  }
  run.y = y;
  double sy = std::sin(kPi * y / M);
  run.p_tilde = sy * sy;
  return run;
}

AmplitudeEstimate amplitude_estimation(const StatePrepSchedule& schedule, int M,
                                       std::mt19937_64& eng) {
  AmpEstRun run = amplitude_estimation_run(schedule, M, eng);
  return AmplitudeEstimate{run.p_tilde, M, run.y};
}

StatePrepSchedule ideal_schedule(double p) {
  if (p < 0.0 || p > 1.0) fail(ErrorCode::validation, "ideal_schedule: p outside [0,1]");
  Vec s(2);
  s << std::sqrt(1.0 - p), std::sqrt(p);
  StatePrepSchedule sched;
  sched.n_system = 1;
  sched.flag_wire = 0;
  sched.make_slot = [s](int) { return PrepSlot{s}; };
  return sched;
}

StatePrepSchedule fixed_unitary_schedule(const UnitaryOp& s, int flag_wire) {
  Vec col = s.matrix.col(0);
  StatePrepSchedule sched;
  sched.n_system = s.n_qubits;
  sched.flag_wire = flag_wire;
  sched.make_slot = [col](int) { return PrepSlot{col}; };
  return sched;
}

}  // namespace qnme::primitives
