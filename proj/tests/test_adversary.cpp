#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "adversary.hpp"
#include "util.hpp"

using namespace qnme;
using namespace qnme::adversary;
using statevec::Mat;
using statevec::Vec;

namespace {

QueryAlgorithm identity_algorithm(int n_q, int n_w, int T) {
  QueryAlgorithm alg;
  alg.n_q = n_q;
  alg.n_w = n_w;
  for (int t = 0; t <= T; ++t) alg.unitaries.push_back(statevec::identity_op(n_q + n_w));
  alg.directions.assign(T, 1);
  return alg;
}

}  // namespace

TEST_CASE("effective_state base cases") {
  auto alg = random_query_algorithm(3, 1, 2, {1, -1}, 7);
  auto canon = canonical_from_state(statevec::random_unit_vector(8, 3));
  Vec eff0 = effective_state(alg, canon, 0);
  CHECK(std::abs(eff0(0) - 1.0) < 1e-15);
  CHECK(eff0.norm() == doctest::Approx(1.0));

  auto trivial = identity_algorithm(2, 1, 2);
  Vec z = Vec::Zero(4);
  z(0) = 1.0;
  auto canon_z = canonical_from_state(z);
  Vec eff = effective_state(trivial, canon_z, 2);
  CHECK(std::abs(eff(0) - 1.0) < 1e-12);
  CHECK(eff.norm() == doctest::Approx(1.0));
}

TEST_CASE("effective_state has product form across Q|W") {
  auto alg = random_query_algorithm(3, 1, 2, {1, 1}, 21);
  auto canon = canonical_from_state(statevec::random_unit_vector(8, 4));
  Vec eff = effective_state(alg, canon, 2);
  Mat reshaped(8, 2);
  for (int q = 0; q < 8; ++q)
    for (int w = 0; w < 2; ++w) reshaped(q, w) = eff(q * 2 + w);
  Eigen::JacobiSVD<Mat> svd(reshaped);
  CHECK(svd.singularValues()(1) < 1e-10);  // Schmidt rank 1
}

TEST_CASE("low-depth simulation reproduces the effective state") {
  // T=0: trivial post-selection
  auto alg0 = identity_algorithm(2, 1, 0);
  auto oracle0 = statevec::random_unitary(2, 5);
  auto rep0 = build_low_depth(alg0, oracle0);
  CHECK(rep0.residual < 1e-12);
  CHECK(rep0.total_queries == 0);

  // T=1, forward query
  auto alg1 = random_query_algorithm(3, 1, 1, {1}, 31);
  auto oracle1 = statevec::random_unitary(3, 32);
  auto rep1 = build_low_depth(alg1, oracle1);
  CHECK(rep1.residual < 1e-10);
  CHECK(rep1.total_queries == 1);
  CHECK(rep1.parallel_rounds == 1);

  // T=1, adjoint query
  auto alg1a = random_query_algorithm(3, 1, 1, {-1}, 33);
  auto rep1a = build_low_depth(alg1a, oracle1);
  CHECK(rep1a.residual < 1e-10);

  // mixed directions, n_Q=2, n_W=1
  auto alg2 = random_query_algorithm(2, 1, 2, {1, -1}, 35);
  auto oracle2 = statevec::random_unitary(2, 36);
  auto rep2 = build_low_depth(alg2, oracle2);
  CHECK(rep2.residual < 1e-9);
  CHECK(rep2.total_queries == 2);
  CHECK(rep2.parallel_rounds == 2);

  // three queries, 13 total qubits
  auto alg3 = random_query_algorithm(3, 1, 3, {1, -1, 1}, 37);
  auto oracle3 = statevec::random_unitary(3, 38);
  auto rep3 = build_low_depth(alg3, oracle3);
  CHECK(rep3.residual < 1e-9);
  CHECK(rep3.total_queries == 3);
  CHECK(rep3.parallel_rounds == 2);
  CHECK(rep3.total_qubits == 13);

  CHECK_THROWS_AS(build_low_depth(random_query_algorithm(4, 1, 3, {1, 1, 1}, 39),
                                  statevec::random_unitary(4, 40)),
                  Error);
}

TEST_CASE("low-depth result is completion independent") {
  auto alg = random_query_algorithm(2, 1, 2, {1, -1}, 45);
  Vec psi_x = statevec::random_unit_vector(4, 46);
  Mat col(4, 1);
  col.col(0) = psi_x;
  auto o1 = statevec::complete_to_unitary(col, 100);
  auto o2 = statevec::complete_to_unitary(col, 200);
  auto r1 = build_low_depth(alg, o1);
  auto r2 = build_low_depth(alg, o2);
  CHECK((r1.postselected - r2.postselected).norm() < 1e-12);
  CHECK(r1.residual < 1e-9);
  CHECK(r2.residual < 1e-9);
}

TEST_CASE("adversarial oracles kill the non-effective component") {
  // dim Im(Pi_c) = 1, T = 1, n_Q = 3, n_W = 1
  auto alg = random_query_algorithm(3, 1, 1, {1}, 61);
  auto canon = canonical_from_state(statevec::random_unit_vector(8, 62));
  Mat pc(16, 1);
  pc.col(0) = statevec::random_unit_vector(16, 63);
  auto pi_c = statevec::make_projector(4, pc);
  auto rep = verify_adversarial(alg, canon, pi_c, 64);
  CHECK(rep.residual <= 1e-10);
  CHECK(rep.kill_residual <= 1e-10);
  CHECK(rep.max_unitarity_defect <= 1e-9);
  CHECK(rep.max_pin_residual <= 1e-10);
}

TEST_CASE("adversarial synthesis with zero residual component") {
  // U_0 = I keeps all amplitude on |0...0>_Q (x) W at the first step.
  QueryAlgorithm alg;
  alg.n_q = 3;
  alg.n_w = 1;
  alg.unitaries.push_back(statevec::identity_op(4));
  alg.unitaries.push_back(statevec::random_unitary(4, 71));
  alg.directions = {1};
  auto canon = canonical_from_state(statevec::random_unit_vector(8, 72));
  auto pi_c = statevec::make_projector(4, Mat(statevec::random_unitary(4, 73).matrix.leftCols(1)));
  auto rep = verify_adversarial(alg, canon, pi_c, 74);
  CHECK(rep.residual <= 1e-10);
}

TEST_CASE("adversarial sweep over random instances") {
  double worst = 0.0;
  for (int inst = 0; inst < 6; ++inst) {
    int T = 1 + inst % 3;
    auto alg = random_query_algorithm(4, 1, T, {}, derive_seed(800, inst));
    auto canon =
        canonical_from_state(statevec::random_unit_vector(16, derive_seed(801, inst)));
    int r = 1 + inst % 2;
    Mat basis = statevec::random_unitary(5, derive_seed(802, inst)).matrix.leftCols(r);
    auto pi_c = statevec::make_projector(5, basis);
    auto rep = verify_adversarial(alg, canon, pi_c, derive_seed(803, inst));
    worst = std::max(worst, rep.residual);
    CHECK(rep.max_component_residual <= 1e-10);
    CHECK(rep.max_orthogonality_residual <= 1e-10);
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("adversarial preconditions") {
  auto alg = random_query_algorithm(2, 1, 1, {1}, 90);  // dim Q = 4 = 2 dim W: too small
  auto canon = canonical_from_state(statevec::random_unit_vector(4, 91));
  auto pi_c = statevec::make_projector(3, Mat(statevec::random_unitary(3, 92).matrix.leftCols(1)));
  CHECK_THROWS_AS(verify_adversarial(alg, canon, pi_c, 93), Error);
}

TEST_CASE("recover_query_register deterministic estimator") {
  auto u = make_grid_estimator(2, 1, 2, {1.0}, 1, 7);
  RecoverInput in{u, 2, 1, 2, 0.25, 0.3, 1e-3};  // mu=0.3 -> i*=1
  auto rep = recover_query_register(in);
  CHECK(rep.lambda == doctest::Approx(1.0));
  CHECK(rep.fix_length == 1);
  CHECK(rep.flank_weight == doctest::Approx(1.0));
  CHECK(rep.contract_ok);
  CHECK(rep.form_residual < 1e-10);
  CHECK(rep.recovered_distance < 1e-9);
}

TEST_CASE("recover_query_register two-outcome estimator") {
  auto u = make_grid_estimator(2, 1, 2, {2.0 / 3.0, 1.0 / 3.0}, 1, 8);
  RecoverInput in{u, 2, 1, 2, 0.25, 0.3, 1e-3};
  auto rep = recover_query_register(in);
  CHECK(rep.flank_weight >= 2.0 / 9.0);
  CHECK(rep.contract_ok);
  CHECK(rep.form_residual < 1e-10);
  CHECK(rep.recovered_distance <= 1e-3);
  CHECK(rep.lambda == doctest::Approx(std::sqrt(5.0) / 3.0));
}

TEST_CASE("recover_query_register flags a failing contract without crashing") {
  auto u = make_grid_estimator(2, 1, 2, {0.25, 0.25, 0.25, 0.25}, 0, 9);
  RecoverInput in{u, 2, 1, 2, 0.25, 0.3, 1e-3};
  auto rep = recover_query_register(in);
  CHECK_FALSE(rep.contract_ok);
  CHECK(rep.contract_violation_flagged);
  CHECK(rep.recovered_distance <= 1e-3);  // recovery still runs on measured lambda
}

TEST_CASE("bit oracle examples") {
  auto zero = bit_oracle({0, 0, 0, 0});
  CHECK((zero.matrix - Mat::Identity(8, 8)).norm() < 1e-15);

  auto ones = bit_oracle({1, 1, 1, 1});
  // X on the target wire regardless of index
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(ones.matrix(i * 2 + 1, i * 2) - 1.0) < 1e-15);
    CHECK(std::abs(ones.matrix(i * 2, i * 2 + 1) - 1.0) < 1e-15);
  }

  auto random = bit_oracle({1, 0, 1, 1, 0, 1, 0, 0});
  CHECK(statevec::spectral_norm(random.matrix * random.matrix -
                                Mat::Identity(16, 16)) < 1e-12);
}

TEST_CASE("bernoulli_from_bits") {
  auto all_zero = bernoulli_from_bits({0, 0, 0, 0});
  CHECK(all_zero.rv.mean == doctest::Approx(0.0));
  auto marg0 = all_zero.index_marginal();
  CHECK(marg0[0] == doctest::Approx(1.0));

  auto all_one = bernoulli_from_bits({1, 1, 1, 1});
  CHECK(all_one.index_marginal()[1] == doctest::Approx(1.0));

  auto half = bernoulli_from_bits({0, 0, 1, 1});
  CHECK(half.index_marginal()[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(statevec::is_unitary(half.unitary.matrix));

  CHECK_THROWS_AS(bernoulli_from_bits({1, 0, 1}), Error);
}

TEST_CASE("hard counting with a trivial algorithm") {
  auto alg = identity_algorithm(3, 0, 1);
  auto trace = hard_counting_sequence(4, 2, 1, alg);
  CHECK(trace.blocks == 1);
  CHECK(trace.final_overlap_abs == doctest::Approx(1.0));
  CHECK(trace.envelope_ok);
  CHECK(trace.block_bound_ok);
  CHECK(trace.block_traces[0].chosen_progress == doctest::Approx(0.0));
}

TEST_CASE("hard counting with a random algorithm at n=8") {
  auto alg = random_query_algorithm(4, 0, 1, {1}, 314);
  auto trace = hard_counting_sequence(8, 4, 1, alg);
  CHECK(trace.envelope_ok);
  CHECK(trace.block_bound_ok);
  const auto& bt = trace.block_traces[0];
  CHECK(std::abs(bt.s_values[1] - bt.s_values[0]) <= 4.0 + 1e-9);
  CHECK(bt.chosen_progress <= 1.0 + 1e-9);  // 2m(m+1)/(n-k) = 1
  CHECK(trace.final_overlap_abs >= 0.5);
}

TEST_CASE("hard counting with the Grover distinguisher") {
  auto alg = grover_counting_algorithm(8, 1);
  auto trace = hard_counting_sequence(8, 4, 1, alg);
  CHECK(trace.envelope_ok);
  CHECK(trace.final_overlap_abs >=
        std::max(0.5, trace.final_bound) - 1e-9);
  auto csv = trace_csv(trace);
  CHECK(csv.find("block,l,s_real,s_imag,step_bound,chosen_i0") == 0);
}

TEST_CASE("hard counting parameter regime") {
  auto alg = identity_algorithm(4, 0, 4);
  CHECK_THROWS_AS(hard_counting_sequence(8, 0, 1, alg), Error);
  CHECK_THROWS_AS(hard_counting_sequence(8, 4, 2, alg), Error);  // 2m(m+1)=12 > 8
  CHECK_THROWS_AS(hard_counting_sequence(8, 4, 1, identity_algorithm(3, 0, 1)), Error);
}
