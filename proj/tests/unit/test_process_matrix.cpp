#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "acausal/process_matrix.hpp"
#include "acausal/rng.hpp"
#include "support/oracles.hpp"

using namespace acausal;

namespace {

LabeledOperator random_four_wire_herm(std::uint64_t seed) {
  Rng rng(seed);
  return LabeledOperator({{"B2", 2}, {"B1", 2}, {"A2", 2}, {"A1", 2}},
                         random_hermitian(16, rng));
}

}  // namespace

TEST_CASE("span projections match the brute-force class expansion", "[process]") {
  for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
    const LabeledOperator h = random_four_wire_herm(seed);
    const Matrix a = span_project(h, Span::a_first).matrix();
    const Matrix b = span_project(h, Span::b_first).matrix();
    const Matrix both = span_project(h, Span::both).matrix();
    const Matrix valid = span_project(h, Span::valid).matrix();
    REQUIRE((a - oracles::class_project_ref(h, oracles::a_first_classes()))
                .cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((b - oracles::class_project_ref(h, oracles::b_first_classes()))
                .cwiseAbs().maxCoeff() < 1e-12);
    std::vector<std::set<std::string>> shared = {
        {}, {"A1"}, {"B1"}, {"A1", "B1"}};
    REQUIRE((both - oracles::class_project_ref(h, shared)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((valid - oracles::class_project_ref(h, oracles::allowed_classes()))
                .cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("valid-span projection is idempotent and fixes valid processes", "[process]") {
  const LabeledOperator h = random_four_wire_herm(104);
  const LabeledOperator once = project_valid(h);
  REQUIRE(max_abs_diff(project_valid(once), once) < 1e-12);
  const ProcessMatrix w = ocb_process();
  REQUIRE(max_abs_diff(project_valid(w.op()), w.op()) < 1e-13);
  Rng rng(105);
  REQUIRE_THROWS_AS(project_valid(LabeledOperator(h.labels(), ginibre(16, 16, rng))),
                    NotHermitian);
}

TEST_CASE("maximally violating process has the frozen two-level spectrum", "[process]") {
  const ProcessMatrix w = ocb_process();
  const ValidityReport rep = is_valid(w);
  REQUIRE(rep.ok);
  REQUIRE(rep.hermiticity_residual < 1e-14);
  REQUIRE(rep.psd_residual < 1e-14);
  REQUIRE(rep.forbidden_term_norm < 1e-14);
  REQUIRE(rep.normalization_residual < 1e-14);
  REQUIRE(std::abs(trace(w.op()).real() - 4.0) < 1e-13);
  const EigResult e = herm_eig(w.op());
  int high = 0, zero = 0;
  for (Eigen::Index k = 0; k < e.values.size(); ++k) {
    if (std::abs(e.values(k) - oracles::kOcbEigHigh) < 1e-12) ++high;
    if (std::abs(e.values(k)) < 1e-12) ++zero;
  }
  REQUIRE(high == oracles::kOcbRank);
  REQUIRE(zero == 16 - oracles::kOcbRank);
  SECTION("d_in and d_out are the wire products") {
    REQUIRE(w.d_in() == 4);
    REQUIRE(w.d_out() == 4);
  }
  SECTION("not inside either ordered span alone") {
    REQUIRE(max_abs(w.op() - span_project(w.op(), Span::a_first)) > 0.1);
    REQUIRE(max_abs(w.op() - span_project(w.op(), Span::b_first)) > 0.1);
  }
}

TEST_CASE("validity report flags each defect separately", "[process]") {
  const ProcessMatrix w = ocb_process();
  SECTION("broken normalization") {
    const ValidityReport rep = is_valid(ProcessMatrix(2.0 * w.op()));
    REQUIRE_FALSE(rep.ok);
    REQUIRE(std::abs(rep.normalization_residual - 0.25) < 1e-13);
  }
  SECTION("forbidden class injection is reported with its family") {
    const PauliBasis p = pauli_basis(2);
    const double eps = 1e-3;
    Matrix bump = kron(kron(kron(p.elements[3], p.elements[0]), p.elements[0]),
                       p.elements[0]);
    const LabeledOperator dirty = w.op() + LabeledOperator(w.op().labels(), eps * bump);
    const ValidityReport rep = is_valid(ProcessMatrix(dirty));
    REQUIRE_FALSE(rep.ok);
    REQUIRE(std::abs(rep.forbidden_term_norm - eps) < 1e-12);
    bool found = false;
    for (const auto& f : rep.family_residuals)
      if (f.first == "B2") {
        found = true;
        REQUIRE(std::abs(f.second - eps) < 1e-12);
      }
    REQUIRE(found);
    REQUIRE(rep.family_residuals.size() == 8);
  }
  SECTION("negative eigenvalue is reported as psd residual") {
    const LabeledOperator dipped =
        w.op() + (-0.1) * identity_operator(w.op().labels());
    const ValidityReport rep = is_valid(ProcessMatrix(dipped));
    REQUIRE_FALSE(rep.ok);
    REQUIRE(std::abs(rep.psd_residual - 0.1) < 1e-12);
  }
  SECTION("non-Hermitian input short-circuits") {
    Matrix skew = Matrix::Zero(16, 16);
    skew(0, 1) = Complex(0.0, 0.5);
    const ValidityReport rep =
        is_valid(ProcessMatrix(w.op() + LabeledOperator(w.op().labels(), skew)));
    REQUIRE_FALSE(rep.ok);
    REQUIRE(rep.hermiticity_residual > 0.1);
  }
}

TEST_CASE("probabilities match the entrywise reference and normalize", "[process]") {
  const std::vector<ProcessMatrix> ws = {ocb_process(), random_valid_process(106)};
  for (const auto& w : ws) {
    const Instrument insA = random_instrument(2, 2, 2, 107, "A2", "A1");
    const Instrument insB = random_instrument(2, 2, 3, 108, "B2", "B1");
    double total = 0.0;
    for (const auto& mA : insA.outcomes)
      for (const auto& mB : insB.outcomes) {
        const double p = probability(w, mA, mB);
        REQUIRE(std::abs(p - oracles::probability_ref(w.op(), mA.op, mB.op)) < 1e-12);
        REQUIRE(p > -1e-12);
        total += p;
      }
    REQUIRE(std::abs(total - 1.0) < 1e-11);
  }
  SECTION("label and dimension validation") {
    const ProcessMatrix w = ocb_process();
    const Instrument bad = random_instrument(2, 2, 2, 109, "X2", "X1");
    const Instrument insB = random_instrument(2, 2, 2, 110, "B2", "B1");
    REQUIRE_THROWS_AS(probability(w, bad.outcomes[0], insB.outcomes[0]), UnknownLabel);
    const Instrument wide = random_instrument(3, 3, 2, 111, "A2", "A1");
    REQUIRE_THROWS_AS(probability(w, wide.outcomes[0], insB.outcomes[0]), BadDimension);
  }
}

TEST_CASE("noisy family interpolates to the flat process", "[process]") {
  REQUIRE(max_abs_diff(noisy_ocb(0.0).op(), ocb_process().op()) < 1e-15);
  for (double gamma : {0.1, 1.0, 10.0}) {
    const ProcessMatrix w = noisy_ocb(gamma);
    REQUIRE(is_valid(w).ok);
    const EigResult e = herm_eig(w.op());
    REQUIRE(std::abs(e.values.maxCoeff() - oracles::noisy_lambda_max_ref(gamma)) < 1e-13);
    REQUIRE(std::abs(trace(w.op()).real() - 4.0) < 1e-12);
  }
  REQUIRE_THROWS_AS(noisy_ocb(-0.5), BadParameter);
}

TEST_CASE("comb marginal is an ordered valid process", "[process]") {
  Rng rng(112);
  const LabeledOperator rho({{"A1", 2}, {"e", 2}}, random_density(4, rng));
  const LabeledOperator u({{"A2", 2}, {"e", 2}}, haar_unitary(4, rng));
  const LabeledOperator v({{"B2", 2}, {"e", 2}}, haar_unitary(4, rng));
  const CombChoi comb = comb_from_circuit(rho, u, v);
  const LabeledOperator w = from_comb(comb);
  REQUIRE(w.names() == process_wire_order());
  REQUIRE(is_valid(ProcessMatrix(w)).ok);
  REQUIRE(max_abs_diff(w, span_project(w, Span::a_first)) < 1e-11);
  const Matrix ref = oracles::class_project_ref(w, oracles::a_first_classes());
  REQUIRE((w.matrix() - ref).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("seeded random processes are valid and reproducible", "[process]") {
  for (std::uint64_t seed : {113ull, 114ull, 115ull}) {
    const ProcessMatrix w = random_valid_process(seed);
    const ValidityReport rep = is_valid(w);
    REQUIRE(rep.ok);
    REQUIRE(std::abs(trace(w.op()).real() - 4.0) < 1e-11);
    const ProcessMatrix again = random_valid_process(seed);
    REQUIRE(max_abs_diff(w.op(), again.op()) == 0.0);
  }
}
