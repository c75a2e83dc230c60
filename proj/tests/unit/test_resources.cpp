#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "acausal/neumark.hpp"
#include "acausal/resources.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace acausal;

TEST_CASE("operator expansion rank across a cut", "[resources]") {
  SECTION("swap has full rank, products have rank one") {
    Matrix swap = Matrix::Zero(4, 4);
    swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
    const LabeledOperator s({{"a", 2}, {"b", 2}}, swap);
    REQUIRE(operator_schmidt_rank(s, {"a"}) == oracles::kSwapSchmidtRank);
    Rng rng(181);
    const LabeledOperator prod =
        tensor(LabeledOperator({{"a", 2}}, haar_unitary(2, rng)),
               LabeledOperator({{"b", 2}}, haar_unitary(2, rng)));
    REQUIRE(operator_schmidt_rank(prod, {"a"}) == 1);
  }
  SECTION("controlled flip has rank two") {
    Matrix cx = Matrix::Zero(4, 4);
    cx(0, 0) = cx(1, 1) = cx(2, 3) = cx(3, 2) = 1.0;
    const LabeledOperator g({{"a", 2}, {"b", 2}}, cx);
    REQUIRE(operator_schmidt_rank(g, {"a"}) == 2);
    REQUIRE(operator_schmidt_rank(g, {"b"}) == 2);
  }
  SECTION("cut validation") {
    Rng rng(182);
    const LabeledOperator op({{"a", 2}, {"b", 2}}, random_hermitian(4, rng));
    REQUIRE_THROWS_AS(operator_schmidt_rank(op, {}), BadCut);
    REQUIRE_THROWS_AS(operator_schmidt_rank(op, {"zz"}), BadCut);
    REQUIRE_THROWS_AS(operator_schmidt_rank(op, {"a", "a"}), BadCut);
    REQUIRE_THROWS_AS(operator_schmidt_rank(op, {"a", "b"}), BadCut);
  }
}

TEST_CASE("partial transpose certificate across state cuts", "[resources]") {
  SECTION("entangled pair is certified by the frozen negative eigenvalue") {
    const LabeledOperator pair = maximally_entangled({"a", 2}, {"b", 2}, true);
    const BipartitionReport rep = ppt_check(pair, {"a"});
    REQUIRE_FALSE(rep.ppt);
    REQUIRE(std::abs(rep.min_pt_eigenvalue - oracles::kPhiPlusPtMinEig) < 1e-12);
    REQUIRE(rep.certified == ResourceVerdict::entangled);
    REQUIRE(rep.complement == std::vector<std::string>{"b"});
  }
  SECTION("product state is certified product") {
    Rng rng(183);
    const LabeledOperator prod = tensor(corpus::density_on({{"a", 2}}, rng),
                                        corpus::density_on({{"b", 3}}, rng));
    const BipartitionReport rep = ppt_check(prod, {"a"});
    REQUIRE(rep.ppt);
    REQUIRE(rep.schmidt_rank == 1);
    REQUIRE(rep.certified == ResourceVerdict::product);
  }
  SECTION("small-dimension positivity is decisive even for mixtures") {
    Rng rng(184);
    LabeledOperator mix =
        0.6 * tensor(corpus::density_on({{"a", 2}}, rng), corpus::density_on({{"b", 2}}, rng)) +
        0.4 * tensor(corpus::density_on({{"a", 2}}, rng), corpus::density_on({{"b", 2}}, rng));
    const BipartitionReport rep = ppt_check(mix, {"a"});
    REQUIRE(rep.ppt);
    REQUIRE(rep.schmidt_rank > 1);
    REQUIRE(rep.certified == ResourceVerdict::product);
  }
  SECTION("large-dimension positive cases stay inconclusive") {
    Matrix cc = Matrix::Zero(9, 9);
    cc(0, 0) = 0.5;   // |00><00|
    cc(4, 4) = 0.5;   // |11><11|
    const LabeledOperator state({{"a", 3}, {"b", 3}}, cc);
    const BipartitionReport rep = ppt_check(state, {"a"});
    REQUIRE(rep.ppt);
    REQUIRE(rep.schmidt_rank == 2);
    REQUIRE(rep.certified == ResourceVerdict::inconclusive);
  }
  SECTION("non-state input is rejected") {
    Rng rng(185);
    const LabeledOperator junk({{"a", 2}, {"b", 2}}, random_hermitian(4, rng));
    REQUIRE_THROWS_AS(ppt_check(junk, {"a"}), BadParameter);
  }
}

TEST_CASE("unitary cut verdicts come from the expansion rank", "[resources]") {
  Rng rng(186);
  const LabeledOperator prod =
      tensor(LabeledOperator({{"a", 2}}, haar_unitary(2, rng)),
             LabeledOperator({{"b", 2}, {"c", 2}}, haar_unitary(4, rng)));
  REQUIRE(unitary_cut_report(prod, {"a"}).certified == ResourceVerdict::product);
  REQUIRE(unitary_cut_report(prod, {"b"}).certified == ResourceVerdict::nonlocal);
  const LabeledOperator joint({{"a", 2}, {"b", 2}}, haar_unitary(4, rng));
  REQUIRE(unitary_cut_report(joint, {"a"}).certified == ResourceVerdict::nonlocal);
}

TEST_CASE("structural form checks recognize constructed shapes", "[resources]") {
  Rng rng(187);
  const std::vector<SubsystemLabel> all{{"B2", 2}, {"B1", 2}, {"A2", 2}, {"A1", 2}};
  SECTION("identity forms") {
    const LabeledOperator eta({{"B2", 2}, {"B1", 2}, {"A1", 2}}, random_hermitian(8, rng));
    const LabeledOperator w = tensor(identity_operator({{"A2", 2}}), eta);
    REQUIRE(structural_form_check(w, StructuralForm::identity_on_a2));
    REQUIRE_FALSE(structural_form_check(w, StructuralForm::identity_on_b2));
    const LabeledOperator flat = identity_operator(all);
    REQUIRE(structural_form_check(flat, StructuralForm::identity_on_outputs));
  }
  SECTION("product forms") {
    const LabeledOperator w =
        tensor(LabeledOperator({{"A2", 2}, {"B2", 2}}, random_hermitian(4, rng)),
               LabeledOperator({{"A1", 2}, {"B1", 2}}, random_hermitian(4, rng)));
    REQUIRE(structural_form_check(w, StructuralForm::product_over_outputs));
    const LabeledOperator deep =
        tensor(LabeledOperator({{"B2", 2}, {"B1", 2}, {"A2", 2}}, random_hermitian(8, rng)),
               LabeledOperator({{"A1", 2}}, random_hermitian(2, rng)));
    REQUIRE(structural_form_check(deep, StructuralForm::product_without_a1));
    REQUIRE_FALSE(structural_form_check(ocb_process().op(),
                                        StructuralForm::product_over_outputs));
  }
  SECTION("string names round-trip") {
    for (StructuralForm f :
         {StructuralForm::product_over_outputs, StructuralForm::product_without_a1,
          StructuralForm::identity_on_a2, StructuralForm::identity_on_b2,
          StructuralForm::identity_on_outputs})
      REQUIRE(parse_structural_form(to_string(f)) == f);
    REQUIRE_THROWS_AS(parse_structural_form("banana"), BadForm);
  }
  SECTION("non-Hermitian input is rejected") {
    const LabeledOperator g(all, ginibre(16, 16, rng));
    REQUIRE_THROWS_AS(structural_form_check(g, StructuralForm::identity_on_a2), NotHermitian);
  }
}

TEST_CASE("synthesized circuit carries every probed resource", "[resources]") {
  const SynthesisResult res = synthesize(ocb_process());
  ResourceOptions opt;
  opt.n_samples = 20;
  const ResourceReport rep = resource_report(to_parallel_circuit(res), opt);
  for (const auto& cut : rep.state_cuts)
    REQUIRE(cut.certified == ResourceVerdict::entangled);
  for (const auto& cut : rep.unitary_cuts)
    REQUIRE(cut.certified == ResourceVerdict::nonlocal);
  REQUIRE(rep.resources_sufficient);
  REQUIRE_FALSE(rep.restriction_applies);
  REQUIRE(rep.theorem_consistent);
  REQUIRE(rep.branches.size() == 2);
  for (const auto& b : rep.branches) {
    REQUIRE(b.proper);
    REQUIRE(b.valid);
    REQUIRE(b.verdict == SeparabilityStatus::non_separable);
  }
}

TEST_CASE("product environment invokes the restriction and stays consistent",
          "[resources]") {
  ResourceOptions opt;
  opt.n_samples = 20;
  SECTION("parallel circuit with a factorized environment") {
    const ParallelCircuit c = corpus::product_state_parallel(188, 0, true);
    const ResourceReport rep = resource_report(c, opt);
    bool env_product = false;
    for (const auto& cut : rep.state_cuts)
      if (cut.side == c.anc && cut.certified == ResourceVerdict::product) env_product = true;
    REQUIRE(env_product);
    REQUIRE(rep.restriction_applies);
    REQUIRE_FALSE(rep.resources_sufficient);
    REQUIRE(rep.theorem_consistent);
    for (const auto& b : rep.branches)
      if (b.proper && b.valid) REQUIRE(b.verdict == SeparabilityStatus::separable);
  }
  SECTION("memoryless serial circuit") {
    const SerialCircuit c = corpus::markovian_serial(189, false);
    const ResourceReport rep = resource_report(c, opt);
    REQUIRE(rep.state_cuts.size() == 1);
    REQUIRE(rep.state_cuts[0].certified == ResourceVerdict::product);
    REQUIRE(rep.restriction_applies);
    REQUIRE(rep.theorem_consistent);
    REQUIRE(rep.branches.size() == 1);
    REQUIRE(rep.branches[0].proper);
    REQUIRE(rep.branches[0].verdict == SeparabilityStatus::separable);
  }
}

TEST_CASE("improper branches are reported without a separability verdict",
          "[resources]") {
  ResourceOptions opt;
  opt.n_samples = 20;
  const ParallelCircuit c = corpus::generic_parallel(190);
  const ResourceReport rep = resource_report(c, opt);
  REQUIRE(rep.branches.size() == 2);
  for (const auto& b : rep.branches) {
    REQUIRE_FALSE(b.proper);
    REQUIRE(b.instrument_dependence > 1e-4);
    REQUIRE(b.verdict == SeparabilityStatus::undecided);
  }
  REQUIRE(rep.theorem_consistent);
}

TEST_CASE("vanishing outcomes appear as null branches", "[resources]") {
  Rng rng(191);
  const LabeledOperator rho =
      tensor(corpus::density_on({{"A1", 2}, {"B1", 2}}, rng),
             LabeledOperator({{"E", 2}}, ket_projector(basis_ket(2, 0))));
  const LabeledOperator v = identity_operator({{"A2", 2}, {"B2", 2}, {"E", 2}});
  std::vector<LabeledOperator> proj;
  proj.push_back(LabeledOperator({{"E", 2}}, ket_projector(basis_ket(2, 0))));
  proj.push_back(LabeledOperator({{"E", 2}}, ket_projector(basis_ket(2, 1))));
  ResourceOptions opt;
  opt.n_samples = 10;
  const ResourceReport rep = resource_report(make_parallel_circuit(rho, v, proj), opt);
  REQUIRE(rep.branches.size() == 2);
  REQUIRE_FALSE(rep.branches[0].null_outcome);
  REQUIRE(rep.branches[1].null_outcome);
}
