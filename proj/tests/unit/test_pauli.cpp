#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "acausal/pauli.hpp"
#include "acausal/rng.hpp"
#include "support/oracles.hpp"

using namespace acausal;

namespace {

LabeledOperator random_herm(const std::vector<SubsystemLabel>& labels, std::uint64_t seed) {
  Rng rng(seed);
  int d = 1;
  for (const auto& l : labels) d *= l.dim;
  return LabeledOperator(labels, random_hermitian(d, rng));
}

}  // namespace

TEST_CASE("single-wire basis is orthogonal, traceless past identity", "[pauli]") {
  for (int d : {2, 3, 4}) {
    const PauliBasis b = pauli_basis(d);
    REQUIRE(static_cast<int>(b.elements.size()) == d * d);
    REQUIRE((b.elements[0] - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t a = 0; a < b.elements.size(); ++a) {
      const Matrix& sa = b.elements[a];
      REQUIRE((sa - sa.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
      if (a > 0) REQUIRE(std::abs(sa.trace()) < 1e-14);
      for (std::size_t c = 0; c < b.elements.size(); ++c) {
        const Complex overlap = (sa * b.elements[c]).trace();
        const double want = (a == c) ? static_cast<double>(d) : 0.0;
        REQUIRE(std::abs(overlap - want) < 1e-13);
      }
    }
  }
  REQUIRE_THROWS_AS(pauli_basis(1), BadDimension);
}

TEST_CASE("qubit basis elements are the standard spin matrices", "[pauli]") {
  const PauliBasis b = pauli_basis(2);
  Matrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  REQUIRE((b.elements[1] - x).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((b.elements[2] - y).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((b.elements[3] - z).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("coefficient expansion round-trips and satisfies Parseval", "[pauli]") {
  const LabeledOperator op = random_herm({{"a", 2}, {"b", 3}}, 31);
  const PauliCoefficients c = pauli_coefficients(op);
  REQUIRE(c.sizes == std::vector<int>{4, 9});
  REQUIRE(c.w.size() == 36);

  SECTION("identity coefficient is the normalized trace") {
    REQUIRE(std::abs(c.w[c.index({0, 0})] - trace(op).real() / 6.0) < 1e-13);
  }
  SECTION("reconstruction inverts the expansion") {
    REQUIRE(max_abs_diff(pauli_reconstruct(c), op) < 1e-12);
  }
  SECTION("sum of squared coefficients matches the Hilbert-Schmidt norm") {
    double s = 0.0;
    for (double v : c.w) s += v * v;
    const double hs = (op.matrix() * op.matrix()).trace().real() / 6.0;
    REQUIRE(std::abs(s - hs) < 1e-12);
  }
}

TEST_CASE("flat index runs last wire fastest", "[pauli]") {
  const LabeledOperator op = random_herm({{"a", 2}, {"b", 2}}, 32);
  const PauliCoefficients c = pauli_coefficients(op);
  const PauliBasis b = pauli_basis(2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Matrix term = oracles::kron_ref(b.elements[static_cast<std::size_t>(i)],
                                            b.elements[static_cast<std::size_t>(j)]);
      const double want = (op.matrix() * term).trace().real() / 4.0;
      REQUIRE(std::abs(c.w[c.index({i, j})] - want) < 1e-13);
      REQUIRE(c.index({i, j}) == static_cast<std::size_t>(i * 4 + j));
    }
  }
}

TEST_CASE("expansion rejects non-Hermitian input", "[pauli]") {
  Rng rng(33);
  const LabeledOperator bad({{"a", 2}}, ginibre(2, 2, rng));
  REQUIRE_THROWS_AS(pauli_coefficients(bad), NotHermitian);
}
