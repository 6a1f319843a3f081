#include "adversary.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "primitives.hpp"
#include "util.hpp"

namespace qnme::adversary {

using statevec::cxd;

namespace {

// W-component of (<b|_Q (x) I_W) |psi>.
Vec contract_q(const Vec& psi, const Vec& b, std::int64_t d_w) {
  const std::int64_t d_q = psi.size() / d_w;
  Eigen::Map<const Mat> view(psi.data(), d_w, d_q);
  return view * b.conjugate();
}

Vec kron_qw(const Vec& q_part, const Vec& w_part) {
  Vec out(q_part.size() * w_part.size());
  Eigen::Map<Mat> view(out.data(), w_part.size(), q_part.size());
  for (Eigen::Index q = 0; q < q_part.size(); ++q) view.col(q) = q_part(q) * w_part;
  return out;
}

// Oracle on the Q prefix of a (Q (x) W) state.
void apply_on_q(const Mat& o, Vec& psi, std::int64_t d_w, bool adjointed) {
  const std::int64_t d_q = psi.size() / d_w;
  Eigen::Map<Mat> view(psi.data(), d_w, d_q);
  if (adjointed)
    view = view * o.conjugate();
  else
    view = view * o.transpose();
}

int ceil_log2(std::int64_t n) {
  int k = 0;
  while ((std::int64_t{1} << k) < n) ++k;
  return k;
}

}  // namespace

QueryAlgorithm random_query_algorithm(int n_q, int n_w, int T,
                                      const std::vector<int>& directions,
                                      std::uint64_t seed) {
  QueryAlgorithm alg;
  alg.n_q = n_q;
  alg.n_w = n_w;
  if (!directions.empty() && static_cast<int>(directions.size()) != T)
    fail(ErrorCode::validation, "random_query_algorithm: direction count mismatch");
  for (int t = 0; t <= T; ++t)
    alg.unitaries.push_back(statevec::random_unitary(n_q + n_w, derive_seed(seed, t)));
  for (int t = 0; t < T; ++t) {
    int a = directions.empty() ? ((derive_seed(seed, 1000 + t) & 1) ? 1 : -1)
                               : directions[t];
    if (a != 1 && a != -1)
      fail(ErrorCode::validation, "random_query_algorithm: directions must be +-1");
    alg.directions.push_back(a);
  }
  return alg;
}

Vec CanonicalAction::zero() const {
  Vec z = Vec::Zero(psi_x.size());
  z(0) = 1.0;
  return z;
}

Vec CanonicalAction::phi_beg(int direction) const {
  return direction == 1 ? zero() : psi_x;
}

Vec CanonicalAction::phi_end(int direction) const {
  return direction == 1 ? psi_x : zero();
}

CanonicalAction canonical_from_state(Vec psi_x) {
  if (std::abs(psi_x.norm() - 1.0) > 1e-10)
    fail(ErrorCode::validation, "canonical action: |psi_X> must be a unit state");
  return CanonicalAction{std::move(psi_x)};
}

CanonicalAction canonical_from_oracle(const UnitaryOp& oracle_on_q) {
  return CanonicalAction{oracle_on_q.matrix.col(0)};
}

Vec effective_state(const QueryAlgorithm& alg, const CanonicalAction& canon, int t) {
  if (t < 0 || t > alg.T())
    fail(ErrorCode::validation, "effective_state: t outside [0, T]");
  const std::int64_t d_w = std::int64_t{1} << alg.n_w;
  const std::int64_t dim = std::int64_t{1} << alg.n_total();
  if (t == 0) {
    Vec z = Vec::Zero(dim);
    z(0) = 1.0;
    return z;
  }
  Vec state = alg.unitaries[0].matrix.col(0);
  for (int step = 1; step <= t; ++step) {
    Vec beg = canon.phi_beg(alg.directions[step - 1]);
    Vec end = canon.phi_end(alg.directions[step - 1]);
    Vec w_part = contract_q(state, beg, d_w);
    state = kron_qw(end, w_part);
    if (step < t) state = alg.unitaries[step].matrix * state;
  }
  return state;
}

LowDepthReport build_low_depth(const QueryAlgorithm& alg, const UnitaryOp& oracle_on_q) {
  const int T = alg.T();
  if (oracle_on_q.n_qubits != alg.n_q)
    fail(ErrorCode::shape, "build_low_depth: oracle register mismatch");
  const int total = alg.n_w + (T + 1) * alg.n_q;
  if (total > statevec::kMaxDenseQubits)
    fail(ErrorCode::memory, "build_low_depth: " + std::to_string(total) +
                                " qubits exceed the dense simulation limit");

  // Registers, most significant first: [W][Q_0][Q_1]...[Q_T].
  auto q_wires = [&](int block) {
    std::vector<int> w;
    for (int j = 0; j < alg.n_q; ++j) w.push_back(alg.n_w + block * alg.n_q + j);
    return w;
  };
  std::vector<int> w_wires;
  for (int j = 0; j < alg.n_w; ++j) w_wires.push_back(j);

  auto state = statevec::zero_state(total);
  for (int step = 0; step < T; ++step) {
    if (alg.directions[step] == 1)
      state = statevec::apply(oracle_on_q, state, q_wires(step + 1));
    std::vector<int> uw = q_wires(step);
    uw.insert(uw.end(), w_wires.begin(), w_wires.end());
    state = statevec::apply(alg.unitaries[step], state, uw);
  }
  // Adjoint queries act on the registers that carry |phi_beg^(i)> = |psi_X>,
  // i.e. Q_{i-1}; composing with <0| there realizes the <psi_X| post-selection.
  for (int step = 0; step < T; ++step)
    if (alg.directions[step] == -1)
      state = statevec::apply(statevec::adjoint(oracle_on_q), state, q_wires(step));

  // Post-select Q_0..Q_{T-1} on |0...0>; the survivor lives on (W, Q_T).
  const std::int64_t d_q = std::int64_t{1} << alg.n_q;
  const std::int64_t d_w = std::int64_t{1} << alg.n_w;
  const std::int64_t tail = std::int64_t{1} << ((T + 1) * alg.n_q);
  Vec survivor(d_q * d_w);
  for (std::int64_t w = 0; w < d_w; ++w)
    for (std::int64_t q = 0; q < d_q; ++q)
      survivor(q * d_w + w) = state.amplitudes(w * tail + q);

  auto canon = canonical_from_oracle(oracle_on_q);
  Vec eff = effective_state(alg, canon, T);

  LowDepthReport report;
  report.postselected = survivor;
  report.residual = (survivor - eff).norm();
  report.total_qubits = total;
  for (int a : alg.directions) (a == 1 ? report.forward_queries : report.adjoint_queries)++;
  report.total_queries = report.forward_queries + report.adjoint_queries;
  report.parallel_rounds =
      (report.forward_queries > 0 ? 1 : 0) + (report.adjoint_queries > 0 ? 1 : 0);
  return report;
}

namespace {

struct AdversaryOutcome {
  std::vector<UnitaryOp> oracles;
  AdversaryReport report;
};

AdversaryOutcome build_adversarial(const QueryAlgorithm& alg,
                                   const CanonicalAction& canon, const Projector& pi_c,
                                   std::uint64_t seed) {
  const int T = alg.T();
  const std::int64_t d_q = std::int64_t{1} << alg.n_q;
  const std::int64_t d_w = std::int64_t{1} << alg.n_w;
  const std::int64_t d = d_q * d_w;
  const std::int64_t r = pi_c.basis.cols();
  if (canon.psi_x.size() != d_q) fail(ErrorCode::shape, "adversarial: |psi_X> not on Q");
  if (pi_c.basis.rows() != d) fail(ErrorCode::shape, "adversarial: Pi_c dimension mismatch");
  if (!(d_q > 2 * d_w))
    fail(ErrorCode::validation, "adversarial: requires dim H_Q > 2 dim H_W");
  if (!(d_q >= 2 * r))
    fail(ErrorCode::validation, "adversarial: requires dim H_Q >= 2 dim Im(Pi_c)");
  if (T < 1) fail(ErrorCode::validation, "adversarial: requires T >= 1");

  AdversaryOutcome out;
  auto& rep = out.report;

  // Canonical W-factor chain phi_W^(t).
  Vec phi_w = Vec::Zero(d_w);
  phi_w(0) = 1.0;

  Vec psi = alg.unitaries[0].matrix.col(0);  // psi^(0)
  for (int t = 1; t <= T; ++t) {
    const int a = alg.directions[t - 1];
    Vec beg = canon.phi_beg(a);
    Vec end = canon.phi_end(a);

    // phi_W^(t) from the recursion on U_{t-1} and phi_end^{(t-1)}.
    Vec prev_end = (t == 1) ? canon.zero() : canon.phi_end(alg.directions[t - 2]);
    phi_w = contract_q(alg.unitaries[t - 1].matrix * kron_qw(prev_end, phi_w), beg, d_w);

    Vec w_comp = contract_q(psi, beg, d_w);
    rep.max_component_residual =
        std::max(rep.max_component_residual, (w_comp - phi_w).norm());
    Vec psi_perp = psi - kron_qw(beg, w_comp);
    rep.max_orthogonality_residual = std::max(
        rep.max_orthogonality_residual, contract_q(psi_perp, beg, d_w).norm());

    // Schmidt decomposition of psi_perp across Q | W.
    Mat aperp(d_q, d_w);
    for (std::int64_t q = 0; q < d_q; ++q)
      for (std::int64_t w = 0; w < d_w; ++w) aperp(q, w) = psi_perp(q * d_w + w);
    Eigen::JacobiSVD<Mat> svd(aperp, Eigen::ComputeFullU | Eigen::ComputeFullV);

    Mat domain(d_q, 1);
    domain.col(0) = beg;
    Mat range(d_q, 1);
    range.col(0) = end;

    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) <= 1e-12) break;
      Vec iq = svd.matrixU().col(i);
      Vec iw = svd.matrixV().col(i).conjugate();

      // Constraint rows: orthogonality to already chosen images, plus the
      // next-step steering condition through U_t (or Pi_c at the last step).
      const std::int64_t steer_rows = (t < T) ? d_w : r;
      Mat constraints(range.cols() + steer_rows, d_q);
      for (Eigen::Index c = 0; c < range.cols(); ++c)
        constraints.row(c) = range.col(c).adjoint();
      for (std::int64_t q = 0; q < d_q; ++q) {
        Vec basis_vec = Vec::Zero(d_q);
        basis_vec(q) = 1.0;
        Vec mapped = alg.unitaries[t].matrix * kron_qw(basis_vec, iw);
        if (t < T) {
          Vec next_beg = canon.phi_beg(alg.directions[t]);
          constraints.block(range.cols(), q, d_w, 1) = contract_q(mapped, next_beg, d_w);
        } else {
          constraints.block(range.cols(), q, r, 1) = pi_c.basis.adjoint() * mapped;
        }
      }
      Eigen::JacobiSVD<Mat> null_svd(constraints, Eigen::ComputeFullV);
      const auto& sv = null_svd.singularValues();
      double smallest = sv.size() < d_q ? 0.0 : sv(d_q - 1);
      if (smallest > 1e-8)
        fail(ErrorCode::construction,
             "adversarial: steering intersection is numerically degenerate at step " +
                 std::to_string(t) + " (smallest singular value " + fmt_double(smallest) +
                 ")");
      Vec image = null_svd.matrixV().col(d_q - 1);
      image /= image.norm();

      domain.conservativeResize(Eigen::NoChange, domain.cols() + 1);
      domain.col(domain.cols() - 1) = iq;
      range.conservativeResize(Eigen::NoChange, range.cols() + 1);
      range.col(range.cols() - 1) = image;
    }

    auto dom_full = statevec::complete_to_unitary(domain, derive_seed(seed, 2 * t));
    auto ran_full = statevec::complete_to_unitary(range, derive_seed(seed, 2 * t + 1));
    Mat action = ran_full.matrix * dom_full.matrix.adjoint();  // (O^(t))^{a_t}
    Mat oracle = (a == 1) ? action : Mat(action.adjoint());

    rep.max_unitarity_defect = std::max(
        rep.max_unitarity_defect,
        statevec::spectral_norm(Mat(oracle.adjoint() * oracle) - Mat::Identity(d_q, d_q)));
    rep.max_pin_residual =
        std::max(rep.max_pin_residual, (Vec(oracle.col(0)) - canon.psi_x).norm());

    if (t == T) {
      Vec steered = psi_perp;
      apply_on_q(action, steered, d_w, false);
      steered = alg.unitaries[T].matrix * steered;
      rep.kill_residual = (pi_c.basis.adjoint() * steered).norm();
    }

    apply_on_q(action, psi, d_w, false);
    psi = alg.unitaries[t].matrix * psi;
    out.oracles.push_back(UnitaryOp{alg.n_q, std::move(oracle)});
  }

  rep.lhs = (pi_c.basis.adjoint() * psi).squaredNorm();
  Vec eff = effective_state(alg, canon, T);
  rep.rhs = (pi_c.basis.adjoint() * (alg.unitaries[T].matrix * eff)).squaredNorm();
  rep.residual = std::abs(rep.lhs - rep.rhs);
  return out;
}

}  // namespace

std::vector<UnitaryOp> adversarial_oracles(const QueryAlgorithm& alg,
                                           const CanonicalAction& canon,
                                           const Projector& pi_c, std::uint64_t seed) {
  return build_adversarial(alg, canon, pi_c, seed).oracles;
}

AdversaryReport verify_adversarial(const QueryAlgorithm& alg,
                                   const CanonicalAction& canon, const Projector& pi_c,
                                   std::uint64_t seed) {
  return build_adversarial(alg, canon, pi_c, seed).report;
}

RecoverReport recover_query_register(const RecoverInput& in) {
  const int n_front = in.n_q + in.n_w + in.n_w1;
  const int total = n_front + in.n_w1;
  if (in.u.n_qubits != n_front)
    fail(ErrorCode::shape, "recover_query_register: estimator register mismatch");
  if (total > statevec::kMaxDenseQubits)
    fail(ErrorCode::memory, "recover_query_register: " + std::to_string(total) +
                                " qubits exceed the simulation limit");
  const std::int64_t grid = std::int64_t{1} << in.n_w1;
  const std::int64_t front_dim = std::int64_t{1} << n_front;
  const std::int64_t dim = std::int64_t{1} << total;

  RecoverReport rep;
  rep.outcome_probs.assign(grid, 0.0);
  Vec col0 = in.u.matrix.col(0);
  for (std::int64_t idx = 0; idx < front_dim; ++idx)
    rep.outcome_probs[idx % grid] += std::norm(col0(idx));

  double lambda2 = 0.0;
  for (double p : rep.outcome_probs) lambda2 += p * p;
  rep.lambda = std::sqrt(lambda2);

  const std::int64_t istar =
      static_cast<std::int64_t>(std::floor(in.mu_true / in.eps_grid));
  if (istar < 0 || istar + 1 >= grid)
    fail(ErrorCode::validation, "recover_query_register: mu_true off the grid");
  rep.flank_weight = rep.outcome_probs[istar] * rep.outcome_probs[istar] +
                     rep.outcome_probs[istar + 1] * rep.outcome_probs[istar + 1];
  rep.contract_ok = rep.flank_weight >= 2.0 / 9.0 - 1e-12;
  rep.contract_violation_flagged = !rep.contract_ok;

  // V = (U^dag (x) I)(CNOT_{W1,W2})(U (x) I), applied as a gate sequence.
  // V is an involution, so the iterate never needs a separate V^dag.
  auto apply_v = [&](Vec& psi) {
    Eigen::Map<Mat> view(psi.data(), grid, front_dim);
    view = view * in.u.matrix.transpose();
    for (std::int64_t f = 0; f < front_dim; ++f) {
      std::int64_t w1 = f % grid;
      for (std::int64_t w2 = 0; w2 < grid; ++w2) {
        std::int64_t other = w2 ^ w1;
        if (other > w2) std::swap(psi(f * grid + w2), psi(f * grid + other));
      }
    }
    view = view * in.u.matrix.conjugate();
  };

  Vec vzero = Vec::Zero(dim);
  vzero(0) = 1.0;
  apply_v(vzero);

  // Good component of V|0...0>: front register back at |0...0>.
  Vec good = vzero.segment(0, grid);
  Vec ideal(grid);
  for (std::int64_t i = 0; i < grid; ++i) ideal(i) = rep.outcome_probs[i];
  rep.form_residual = (good - ideal).norm();

  if (rep.lambda < 1e-6) return rep;  // nothing to recover; report only

  auto plan = primitives::fixed_point_plan(in.fix_eps, std::min(1.0, rep.lambda));
  rep.fix_length = plan.length;
  Vec state = Vec::Zero(dim);
  state(0) = 1.0;
  apply_v(state);
  const int l = (plan.length - 1) / 2;
  for (int j = 0; j < l; ++j) {
    const cxd pa = std::polar(1.0, plan.target_phases[j]);
    for (std::int64_t i = 0; i < grid; ++i) state(i) *= pa;
    apply_v(state);
    state(0) *= std::polar(1.0, plan.source_phases[j]);
    apply_v(state);
    state = -state;
  }
  Vec target = Vec::Zero(dim);
  target.segment(0, grid) = ideal / rep.lambda;
  rep.recovered_distance = statevec::state_distance_up_to_phase(target, state);
  return rep;
}

UnitaryOp make_grid_estimator(int n_q, int n_w, int n_w1,
                              const std::vector<double>& probs, int first_index,
                              std::uint64_t seed) {
  const std::int64_t grid = std::int64_t{1} << n_w1;
  const std::int64_t front = std::int64_t{1} << (n_q + n_w);
  if (first_index < 0 ||
      first_index + static_cast<std::int64_t>(probs.size()) > grid)
    fail(ErrorCode::validation, "make_grid_estimator: outcomes off the grid");
  Mat col = Mat::Zero(front * grid, 1);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    Vec garbage = statevec::random_unit_vector(static_cast<int>(front),
                                               derive_seed(seed, j));
    for (std::int64_t f = 0; f < front; ++f)
      col(f * grid + first_index + static_cast<std::int64_t>(j), 0) =
          std::sqrt(probs[j]) * garbage(f);
  }
  return statevec::complete_to_unitary(col, derive_seed(seed, 0xE57));
}

UnitaryOp bit_oracle(const std::vector<int>& x) {
  std::int64_t n = static_cast<std::int64_t>(x.size());
  if (n < 1) fail(ErrorCode::validation, "bit_oracle: empty string");
  std::int64_t padded = 2;
  while (padded < n) padded *= 2;
  const int k = ceil_log2(padded);
  const std::int64_t dim = padded * 2;
  Mat m = Mat::Zero(dim, dim);
  for (std::int64_t i = 0; i < padded; ++i) {
    int xi = (i < n) ? x[static_cast<std::size_t>(i)] : 0;
    for (int b = 0; b < 2; ++b) m(i * 2 + (b ^ xi), i * 2 + b) = 1.0;
  }
  return UnitaryOp{k + 1, std::move(m)};
}

rvoracle::Oracle bernoulli_from_bits(const std::vector<int>& x) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  if (n < 2 || (n & (n - 1)) != 0)
    fail(ErrorCode::validation, "bernoulli_from_bits: string length must be 2^k");
  const int k = ceil_log2(n);
  auto ox = bit_oracle(x);

  Mat h(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  Mat hk = Mat::Ones(1, 1);
  for (int j = 0; j < k; ++j) {
    Mat next(hk.rows() * 2, hk.cols() * 2);
    next.block(0, 0, hk.rows(), hk.cols()) = r * hk;
    next.block(0, hk.cols(), hk.rows(), hk.cols()) = r * hk;
    next.block(hk.rows(), 0, hk.rows(), hk.cols()) = r * hk;
    next.block(hk.rows(), hk.cols(), hk.rows(), hk.cols()) = -r * hk;
    hk = next;
  }
  Mat prep = Mat::Zero(2 * n, 2 * n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      prep(i * 2, j * 2) = hk(i, j);
      prep(i * 2 + 1, j * 2 + 1) = hk(i, j);
    }
  Mat circuit = ox.matrix * prep;

  // Reorder from [index][target] to the oracle convention [value][garbage].
  Mat reordered(2 * n, 2 * n);
  auto to_oracle = [&](std::int64_t circ) {
    std::int64_t i = circ / 2, b = circ % 2;
    return b * n + i;
  };
  for (std::int64_t row = 0; row < 2 * n; ++row)
    for (std::int64_t colj = 0; colj < 2 * n; ++colj)
      reordered(to_oracle(row), to_oracle(colj)) = circuit(row, colj);

  int weight = 0;
  for (int xi : x) weight += (xi != 0);
  double p = static_cast<double>(weight) / static_cast<double>(n);

  rvoracle::Oracle oracle;
  oracle.rv = rvoracle::make_rv({0.0, 1.0}, {1.0 - p, p});
  oracle.n_index = 1;
  oracle.n_garbage = k;
  oracle.unitary = UnitaryOp{k + 1, std::move(reordered)};
  oracle.value_table = {0.0, 1.0};
  return oracle;
}

ProgressTrace hard_counting_sequence(int n, int k, int m, const QueryAlgorithm& alg) {
  if (!(1 <= k && k < n)) fail(ErrorCode::validation, "hard_counting: requires 1 <= k < n");
  if (m < 1) fail(ErrorCode::validation, "hard_counting: requires m >= 1");
  if (2 * m * (m + 1) > n)
    fail(ErrorCode::validation,
         "hard_counting: outside the m = O(sqrt(n)) regime (2m(m+1) > n)");
  std::int64_t padded = 2;
  while (padded < n) padded *= 2;
  const int kq = ceil_log2(padded) + 1;
  if (alg.n_q != kq)
    fail(ErrorCode::validation, "hard_counting: algorithm query register must have " +
                                    std::to_string(kq) + " wires");

  const int blocks = std::max(1, (n - k) / (4 * (m + 1) * (m + 1)));
  if (alg.T() < m * blocks)
    fail(ErrorCode::validation, "hard_counting: algorithm provides too few steps");

  std::vector<int> s(n, 0);
  for (int i = 0; i < k; ++i) s[i] = 1;
  std::vector<int> f_s;
  for (int i = 0; i < n; ++i)
    if (!s[i]) f_s.push_back(i);
  auto o_s = bit_oracle(s);

  std::vector<UnitaryOp> o_cand;
  for (int i : f_s) {
    auto si = s;
    si[i] = 1;
    o_cand.push_back(bit_oracle(si));
  }

  const std::int64_t d_w = std::int64_t{1} << alg.n_w;
  Vec psi_k = alg.unitaries[0].matrix.col(0);
  Vec psi_k1 = psi_k;

  ProgressTrace trace;
  trace.n = n;
  trace.k = k;
  trace.m = m;
  trace.blocks = blocks;

  auto step_state = [&](Vec& v, const UnitaryOp& o, const UnitaryOp& u) {
    apply_on_q(o.matrix, v, d_w, false);
    v = u.matrix * v;
  };

  for (int b = 0; b < blocks; ++b) {
    std::vector<Vec> cand(f_s.size(), psi_k1);
    std::vector<cxd> overlap(f_s.size());
    std::vector<double> progress(f_s.size(), 0.0);

    BlockTrace bt;
    cxd s_val = 0.0;
    for (std::size_t i = 0; i < f_s.size(); ++i) {
      overlap[i] = psi_k.dot(cand[i]);
      s_val += overlap[i];
    }
    bt.s_values.push_back(s_val);

    for (int l = 0; l < m; ++l) {
      const auto& u = alg.unitaries[b * m + l + 1];
      step_state(psi_k, o_s, u);
      cxd s_next = 0.0;
      for (std::size_t i = 0; i < f_s.size(); ++i) {
        step_state(cand[i], o_cand[i], u);
        cxd next = psi_k.dot(cand[i]);
        progress[i] += std::abs(next - overlap[i]);
        overlap[i] = next;
        s_next += next;
      }
      bt.step_bounds.push_back(4.0 * (l + 1));
      if (std::abs(s_next - bt.s_values.back()) > 4.0 * (l + 1) + 1e-9)
        trace.envelope_ok = false;
      bt.s_values.push_back(s_next);
    }

    if (std::abs(bt.s_values.back() - bt.s_values.front()) >
        2.0 * m * (m + 1) + 1e-9)
      trace.block_bound_ok = false;

    std::size_t best = 0;
    for (std::size_t i = 1; i < f_s.size(); ++i)
      if (progress[i] < progress[best]) best = i;
    bt.chosen_index = f_s[best];
    bt.chosen_progress = progress[best];
    bt.chosen_bound = 2.0 * m * (m + 1) / static_cast<double>(n - k);
    bt.end_overlap = overlap[best];
    psi_k1 = cand[best];
    trace.block_traces.push_back(std::move(bt));
  }

  trace.final_overlap_abs = std::abs(psi_k.dot(psi_k1));
  trace.final_bound =
      1.0 - 2.0 * m * (m + 1) * blocks / static_cast<double>(n - k);
  return trace;
}

std::string trace_csv(const ProgressTrace& trace) {
  std::ostringstream out;
  out << "block,l,s_real,s_imag,step_bound,chosen_i0\n";
  for (int b = 0; b < trace.blocks; ++b) {
    const auto& bt = trace.block_traces[static_cast<std::size_t>(b)];
    for (std::size_t l = 0; l < bt.s_values.size(); ++l) {
      out << b << ',' << l << ',' << fmt_double(bt.s_values[l].real()) << ','
          << fmt_double(bt.s_values[l].imag()) << ','
          << (l == 0 ? std::string("0") : fmt_double(bt.step_bounds[l - 1])) << ','
          << bt.chosen_index << '\n';
    }
  }
  return out.str();
}

QueryAlgorithm grover_counting_algorithm(int n, int steps) {
  if (n < 2 || (n & (n - 1)) != 0)
    fail(ErrorCode::validation, "grover_counting_algorithm: n must be a power of two");
  const int k = ceil_log2(n);
  QueryAlgorithm alg;
  alg.n_q = k + 1;
  alg.n_w = 0;

  const double r = 1.0 / std::sqrt(2.0);
  Mat h(2, 2);
  h << r, r, r, -r;
  Mat x(2, 2);
  x << 0, 1, 1, 0;
  Mat prep_idx = Mat::Ones(1, 1);
  for (int j = 0; j < k; ++j) {
    Mat next(prep_idx.rows() * 2, prep_idx.cols() * 2);
    next.block(0, 0, prep_idx.rows(), prep_idx.cols()) = r * prep_idx;
    next.block(0, prep_idx.cols(), prep_idx.rows(), prep_idx.cols()) = r * prep_idx;
    next.block(prep_idx.rows(), 0, prep_idx.rows(), prep_idx.cols()) = r * prep_idx;
    next.block(prep_idx.rows(), prep_idx.cols(), prep_idx.rows(), prep_idx.cols()) =
        -r * prep_idx;
    prep_idx = next;
  }
  Mat minus = h * x;  // |0> -> |->
  Mat u0 = Mat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2)
          u0(i * 2 + b1, j * 2 + b2) = prep_idx(i, j) * minus(b1, b2);
  alg.unitaries.push_back(UnitaryOp{k + 1, u0});

  Mat diff = Mat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < 2; ++b)
        diff(i * 2 + b, j * 2 + b) = 2.0 / n - (i == j ? 1.0 : 0.0);
  for (int t = 0; t < steps; ++t) {
    alg.unitaries.push_back(UnitaryOp{k + 1, diff});
    alg.directions.push_back(1);
  }
  return alg;
}

}  // namespace qnme::adversary
