#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "acausal/circuits.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace acausal;

TEST_CASE("circuit builders validate their ingredients", "[circuits]") {
  Rng rng(131);
  const LabeledOperator rho = corpus::density_on({{"A1", 2}, {"B1", 2}, {"E", 2}}, rng);
  const LabeledOperator v = corpus::unitary_on({{"A2", 2}, {"B2", 2}, {"E", 2}}, rng);
  auto proj = corpus::projectors_on({{"E", 2}}, 2, rng);
  REQUIRE_NOTHROW(make_parallel_circuit(rho, v, proj));
  SECTION("incomplete projector family") {
    REQUIRE_THROWS_AS(make_parallel_circuit(rho, v, {proj[0]}), BadParameter);
  }
  SECTION("non-idempotent family member") {
    auto warped = proj;
    warped[0] = 0.7 * warped[0];
    warped[1] = identity_operator({{"E", 2}}) + (-0.7) * proj[0];
    REQUIRE_THROWS_AS(make_parallel_circuit(rho, v, warped), BadParameter);
  }
  SECTION("non-unitary gate") {
    REQUIRE_THROWS_AS(make_parallel_circuit(rho, 0.9 * v, proj), NotUnitary);
  }
  SECTION("non-normalized state") {
    REQUIRE_THROWS_AS(make_parallel_circuit(2.0 * rho, v, proj), BadParameter);
  }
  SECTION("missing party wire") {
    REQUIRE_THROWS_AS(
        make_parallel_circuit(rho.renamed({{"A1", "Q1"}}), v, proj), UnknownLabel);
    REQUIRE_THROWS_AS(
        make_parallel_circuit(rho, v.renamed({{"B2", "Q2"}}), proj), UnknownLabel);
  }
  SECTION("projector on a wire the circuit does not share") {
    const auto alien = corpus::projectors_on({{"F", 2}}, 2, rng);
    REQUIRE_THROWS_AS(make_parallel_circuit(rho, v, alien), UnknownLabel);
  }
  SECTION("environment dimension mismatch") {
    const LabeledOperator v3 = corpus::unitary_on({{"A2", 2}, {"B2", 2}, {"E", 3}}, rng);
    REQUIRE_THROWS_AS(make_parallel_circuit(rho, v3, proj), BadDimension);
  }
}

TEST_CASE("joint tables are normalized nonnegative distributions", "[circuits]") {
  const auto [jA, jB] = corpus::instrument_pair(132);
  SECTION("parallel") {
    const ParallelCircuit c = corpus::generic_parallel(133);
    const JointTable t = brute_force_joint(c, jA, jB);
    REQUIRE(t.n_a == jA.size());
    REQUIRE(t.n_b == jB.size());
    REQUIRE(t.n_mu == 2);
    for (double x : t.p) REQUIRE(x > -1e-12);
    REQUIRE(std::abs(t.total() - 1.0) < 1e-11);
  }
  SECTION("serial") {
    const SerialCircuit c = corpus::generic_serial(134);
    const JointTable t = brute_force_joint(c, jA, jB);
    for (double x : t.p) REQUIRE(x > -1e-12);
    REQUIRE(std::abs(t.total() - 1.0) < 1e-11);
  }
}

TEST_CASE("conditioned operators reproduce the brute-force table", "[circuits]") {
  SECTION("parallel") {
    const ParallelCircuit c = corpus::generic_parallel(135, 3, 3);
    const auto [jA, jB] = corpus::instrument_pair(136);
    const JointTable t = brute_force_joint(c, jA, jB);
    for (int mu = 0; mu < 3; ++mu) {
      const LabeledOperator w_tilde = from_comb(conditioned_choi(c, mu).first);
      for (int i = 0; i < jA.size(); ++i)
        for (int j = 0; j < jB.size(); ++j) {
          const double want = oracles::probability_ref(
              w_tilde, jA.outcomes[static_cast<std::size_t>(i)].op,
              jB.outcomes[static_cast<std::size_t>(j)].op);
          REQUIRE(std::abs(t.at(i, j, mu) - want) < 1e-11);
        }
    }
  }
  SECTION("serial") {
    const SerialCircuit c = corpus::generic_serial(137);
    const auto [jA, jB] = corpus::instrument_pair(138);
    const JointTable t = brute_force_joint(c, jA, jB);
    for (int mu = 0; mu < 2; ++mu) {
      const LabeledOperator w_tilde = from_comb(serial_conditioned_choi(c, mu).first);
      for (int i = 0; i < jA.size(); ++i)
        for (int j = 0; j < jB.size(); ++j) {
          const double want = oracles::probability_ref(
              w_tilde, jA.outcomes[static_cast<std::size_t>(i)].op,
              jB.outcomes[static_cast<std::size_t>(j)].op);
          REQUIRE(std::abs(t.at(i, j, mu) - want) < 1e-11);
        }
    }
  }
}

TEST_CASE("closed-form conditioning agrees with the threaded construction", "[circuits]") {
  for (std::uint64_t seed : {141ull, 142ull}) {
    const ParallelCircuit c = corpus::generic_parallel(seed);
    for (int mu = 0; mu < 2; ++mu) {
      const ConditionedBranch direct = parallel_process_matrix(c, mu);
      auto [w_tilde, p] = conditioned_choi(c, mu);
      REQUIRE(std::abs(direct.p - p) < 1e-12);
      REQUIRE(max_abs_diff(direct.w, permute((1.0 / p) * from_comb(w_tilde),
                                             process_wire_order())) < 1e-11);
    }
  }
}

TEST_CASE("averaged branches recover the deterministic process", "[circuits]") {
  SECTION("parallel average is identity on outputs times the input marginal") {
    const ParallelCircuit c = corpus::generic_parallel(143, 3, 3);
    const LabeledOperator avg = average_process(c);
    const LabeledOperator marg = partial_trace(c.rho, c.anc);
    const LabeledOperator want = permute(
        tensor(identity_operator({{"A2", 2}, {"B2", 2}}), marg), process_wire_order());
    REQUIRE(max_abs_diff(avg, want) < 1e-11);
  }
  SECTION("serial average is the unconditioned comb marginal") {
    const SerialCircuit c = corpus::generic_serial(144);
    const LabeledOperator avg = average_process(c);
    const LabeledOperator want = from_comb(comb_from_circuit(c.rho, c.u, c.v));
    REQUIRE(max_abs_diff(avg, want) < 1e-11);
    REQUIRE(is_valid(ProcessMatrix(avg)).ok);
  }
}

TEST_CASE("instrument sampling separates proper from improper branches", "[circuits]") {
  SECTION("generic conditioning is instrument dependent") {
    const ParallelCircuit c = corpus::generic_parallel(145);
    const ProperReport rep = is_proper(c, 0, 40, 7);
    REQUIRE_FALSE(rep.proper);
    REQUIRE(rep.max_dev > 1e-4);
    REQUIRE(rep.structural_residual > 1e-4);
    REQUIRE(rep.samples.size() == 40);
  }
  SECTION("trivial measurement is proper") {
    const ParallelCircuit c = corpus::trivial_measure_parallel(146);
    const ProperReport rep = is_proper(c, 0, 20, 7);
    REQUIRE(rep.proper);
    REQUIRE(rep.max_dev < 1e-10);
    REQUIRE(rep.structural_residual < 1e-9);
    REQUIRE(std::abs(rep.mean - 1.0) < 1e-10);
  }
  SECTION("output-product gate with measured spectator is proper") {
    const ParallelCircuit c = corpus::product_unitary_parallel(147, 2, false);
    for (int mu = 0; mu < 2; ++mu) {
      const ProperReport rep = is_proper(c, mu, 20, 7);
      REQUIRE(rep.proper);
      REQUIRE(rep.max_dev < 1e-10);
      REQUIRE(rep.structural_residual < 1e-9);
    }
  }
  SECTION("proper branches are valid processes, improper ones are not") {
    const ParallelCircuit good = corpus::proper_product_v_parallel(148);
    REQUIRE(is_proper(good, 0, 20, 7).proper);
    REQUIRE(parallel_process_matrix(good, 0).valid);
    const ParallelCircuit bad = corpus::generic_parallel(149);
    REQUIRE_FALSE(is_proper(bad, 0, 20, 7).proper);
    REQUIRE_FALSE(parallel_process_matrix(bad, 0).valid);
  }
  SECTION("serial branches behave the same way") {
    const SerialCircuit dependent = corpus::product_state_serial(150, 2);
    REQUIRE_FALSE(is_proper(dependent, 0, 30, 7).proper);
    // measured spectator wire: untouched by both step unitaries
    const SerialCircuit clean = corpus::markovian_serial(151, true);
    const ProperReport rep = is_proper(clean, 0, 20, 7);
    REQUIRE(rep.proper);
    REQUIRE(rep.structural_residual < 1e-9);
    REQUIRE(serial_branch(clean, 0).valid);
  }
  SECTION("too few samples is an error") {
    const ParallelCircuit c = corpus::trivial_measure_parallel(152);
    REQUIRE_THROWS_AS(is_proper(c, 0, 1, 7), BadParameter);
    REQUIRE_THROWS_AS(is_proper(c, 5, 20, 7), BadParameter);
  }
}

TEST_CASE("serial embedding of a parallel circuit preserves the physics", "[circuits]") {
  const ParallelCircuit c = corpus::generic_parallel(153);
  const SerialCircuit s = serial_embedding(c);
  const auto [jA, jB] = corpus::instrument_pair(154);
  const JointTable tp = brute_force_joint(c, jA, jB);
  const JointTable ts = brute_force_joint(s, jA, jB);
  REQUIRE(tp.p.size() == ts.p.size());
  for (std::size_t k = 0; k < tp.p.size(); ++k)
    REQUIRE(std::abs(tp.p[k] - ts.p[k]) < 1e-10);
  SECTION("unnormalized branches coincide") {
    for (int mu = 0; mu < 2; ++mu) {
      const auto [wp, pp] = conditioned_choi(c, mu);
      const auto [ws, ps] = serial_conditioned_choi(s, mu);
      REQUIRE(std::abs(pp - ps) < 1e-12);
      REQUIRE(max_abs_diff(permute(from_comb(wp), process_wire_order()),
                           permute(from_comb(ws), process_wire_order())) < 1e-10);
    }
  }
}

TEST_CASE("vanishing outcomes are reported, not divided by", "[circuits]") {
  Rng rng(155);
  const LabeledOperator rho =
      tensor(corpus::density_on({{"A1", 2}, {"B1", 2}}, rng),
             LabeledOperator({{"E", 2}}, ket_projector(basis_ket(2, 0))));
  const LabeledOperator v =
      tensor(identity_operator({{"A2", 2}, {"B2", 2}}), identity_operator({{"E", 2}}));
  std::vector<LabeledOperator> proj;
  proj.push_back(LabeledOperator({{"E", 2}}, ket_projector(basis_ket(2, 0))));
  proj.push_back(LabeledOperator({{"E", 2}}, ket_projector(basis_ket(2, 1))));
  const ParallelCircuit c = make_parallel_circuit(rho, v, proj);
  REQUIRE(std::abs(conditioned_choi(c, 1).second) < 1e-14);
  REQUIRE_THROWS_AS(parallel_process_matrix(c, 1), NullOutcome);
  const auto [jA, jB] = corpus::instrument_pair(156);
  const JointTable t = brute_force_joint(c, jA, jB);
  REQUIRE(std::abs(t.p_mu(1)) < 1e-13);
  REQUIRE(std::abs(t.p_mu(0) - 1.0) < 1e-12);
}

TEST_CASE("memoryless serial circuits build and stay normalized", "[circuits]") {
  for (bool measured : {false, true}) {
    const SerialCircuit c = corpus::markovian_serial(161 + (measured ? 1 : 0), measured);
    const auto [jA, jB] = corpus::instrument_pair(163);
    const JointTable t = brute_force_joint(c, jA, jB);
    REQUIRE(std::abs(t.total() - 1.0) < 1e-10);
    REQUIRE(is_valid(ProcessMatrix(average_process(c))).ok);
  }
}
