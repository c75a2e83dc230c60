#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acausal/comb.hpp"
#include "acausal/labeled_operator.hpp"
#include "acausal/pauli.hpp"
#include "acausal/rng.hpp"

namespace acausal {

// Two-party process matrix on canonical wires [B2, B1, A2, A1]: A1/B1 are the
// party inputs, A2/B2 the party outputs. Joint probabilities of CP branches
// mA, mB are tr[W (mA^T x mB^T)]. No validity is enforced here; see is_valid.
class ProcessMatrix {
 public:
  ProcessMatrix() = default;

  explicit ProcessMatrix(LabeledOperator op) : op_(permute(op, process_wire_order())) {}

  const LabeledOperator& op() const { return op_; }
  int dim_of(const std::string& name) const { return op_.dim_of(name); }
  int d_in() const { return op_.dim_of("A1") * op_.dim_of("B1"); }
  int d_out() const { return op_.dim_of("A2") * op_.dim_of("B2"); }

 private:
  LabeledOperator op_;
};

// ---------------------------------------------------------------------------
// Term-class structure. Expanding W in the product operator basis, each term
// is classified by the set of wires carrying a non-identity factor. The
// classes compatible with fixed order A-first are exactly those surviving the
// causal-order trace conditions on 1_{B2} x comb; likewise with the parties
// swapped. A process matrix is a valid (normalized) resource iff it is PSD,
// its terms lie in the union of the two ordered spans, and its identity
// coefficient is 1/(d_A1 d_B1).
//
// All span projections below are built from wire "depolarizations"
// D_w = 1_w x tr_w(.)/d_w, so they apply to any wire dimensions:
//   span(A first)  = D_B2 - D_B2 D_B1 + D_B2 D_B1 D_A2
//   span(B first)  = D_A2 - D_A2 D_A1 + D_A2 D_A1 D_B2
//   intersection   = D_B2 D_A2
//   valid          = span(A first) + span(B first) - intersection
// ---------------------------------------------------------------------------

enum class Span { a_first, b_first, both, valid };

inline LabeledOperator span_project(const LabeledOperator& w, Span which) {
  auto D = [&](const LabeledOperator& x, const char* n) { return trace_and_replace(x, n); };
  auto a_first = [&](const LabeledOperator& x) {
    const LabeledOperator t = D(x, "B2");
    const LabeledOperator tt = D(t, "B1");
    return t - tt + D(tt, "A2");
  };
  auto b_first = [&](const LabeledOperator& x) {
    const LabeledOperator t = D(x, "A2");
    const LabeledOperator tt = D(t, "A1");
    return t - tt + D(tt, "B2");
  };
  switch (which) {
    case Span::a_first:
      return a_first(w);
    case Span::b_first:
      return b_first(w);
    case Span::both:
      return D(D(w, "B2"), "A2");
    case Span::valid:
    default:
      return a_first(w) + b_first(w) - D(D(w, "B2"), "A2");
  }
}

// Remove every term class that would allow signaling incompatible with both
// orders. Requires a Hermitian input; idempotent; leaves valid W unchanged.
inline LabeledOperator project_valid(const LabeledOperator& w_raw) {
  const Matrix& m = w_raw.matrix();
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw NotHermitian("projection needs a Hermitian operator");
  const LabeledOperator w = permute(w_raw, process_wire_order());
  return span_project(w, Span::valid);
}

struct ValidityReport {
  bool ok = false;
  double hermiticity_residual = 0.0;
  double psd_residual = 0.0;
  double forbidden_term_norm = 0.0;     // largest coefficient outside the valid span
  double normalization_residual = 0.0;  // identity coefficient vs 1/(d_A1 d_B1)
  // Largest coefficient magnitude per forbidden class family, as
  // (wire-set description, value) pairs.
  std::vector<std::pair<std::string, double>> family_residuals;
};

namespace detail {

// Wire set of a term-class index (names of wires with a non-identity factor).
inline std::string class_name(bool b2, bool b1, bool a2, bool a1) {
  std::string s;
  if (b2) s += "B2 ";
  if (b1) s += "B1 ";
  if (a2) s += "A2 ";
  if (a1) s += "A1 ";
  if (s.empty()) return "identity";
  s.pop_back();
  return s;
}

inline bool class_allowed(bool b2, bool b1, bool a2, bool a1) {
  const bool a_first = !b2 && !(a2 && !b1);
  const bool b_first = !a2 && !(b2 && !a1);
  (void)a1;
  return a_first || b_first;
}

}  // namespace detail

inline ValidityReport is_valid(const ProcessMatrix& w, double tol = 1e-9) {
  ValidityReport rep;
  const Matrix& m = w.op().matrix();
  rep.hermiticity_residual = (m - m.adjoint()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(((m + m.adjoint()) / 2.0).eval());
  rep.psd_residual = std::max(0.0, -es.eigenvalues().minCoeff());

  if (rep.hermiticity_residual <= kHermitianTol) {
    const PauliCoefficients c = pauli_coefficients(w.op());
    std::vector<std::pair<std::string, double>> families;
    for (int b2 = 0; b2 < 2; ++b2)
      for (int b1 = 0; b1 < 2; ++b1)
        for (int a2 = 0; a2 < 2; ++a2)
          for (int a1 = 0; a1 < 2; ++a1)
            if (!detail::class_allowed(b2, b1, a2, a1))
              families.emplace_back(detail::class_name(b2, b1, a2, a1), 0.0);
    // scan all coefficients, bucketing by wire class
    std::vector<int> idx(4, 0);
    for (std::size_t flat = 0; flat < c.w.size(); ++flat) {
      std::size_t r = flat;
      for (int k = 3; k >= 0; --k) {
        idx[static_cast<std::size_t>(k)] = static_cast<int>(r % static_cast<std::size_t>(c.sizes[static_cast<std::size_t>(k)]));
        r /= static_cast<std::size_t>(c.sizes[static_cast<std::size_t>(k)]);
      }
      const bool b2 = idx[0] > 0, b1 = idx[1] > 0, a2 = idx[2] > 0, a1 = idx[3] > 0;
      if (detail::class_allowed(b2, b1, a2, a1)) continue;
      const double mag = std::abs(c.w[flat]);
      rep.forbidden_term_norm = std::max(rep.forbidden_term_norm, mag);
      const std::string name = detail::class_name(b2, b1, a2, a1);
      for (auto& f : families)
        if (f.first == name) f.second = std::max(f.second, mag);
    }
    rep.family_residuals = std::move(families);
    rep.normalization_residual = std::abs(c.w[0] - 1.0 / w.d_in());
  } else {
    rep.forbidden_term_norm = rep.hermiticity_residual;
    rep.normalization_residual = rep.hermiticity_residual;
  }

  rep.ok = rep.hermiticity_residual <= tol && rep.psd_residual <= tol &&
           rep.forbidden_term_norm <= tol && rep.normalization_residual <= tol;
  return rep;
}

// Joint probability of CP branches mA ([A2, A1]) and mB ([B2, B1]).
inline double probability(const ProcessMatrix& w, const ChoiOperator& mA,
                          const ChoiOperator& mB) {
  if (mA.out_label().name != "A2" || mA.in_label().name != "A1" ||
      mB.out_label().name != "B2" || mB.in_label().name != "B1")
    throw UnknownLabel("party maps must be labeled [A2, A1] and [B2, B1]");
  if (mA.out_dim() != w.dim_of("A2") || mA.in_dim() != w.dim_of("A1") ||
      mB.out_dim() != w.dim_of("B2") || mB.in_dim() != w.dim_of("B1"))
    throw BadDimension("party map dims do not match the process matrix");
  LabeledOperator weight = tensor(transposed(mA.op), transposed(mB.op));
  weight = permute(weight, w.op().names());
  return (w.op().matrix() * weight.matrix()).trace().real();
}

// The two-party process with indefinite causal order achieving the maximal
// violation of causal inequalities with qubit wires.
inline ProcessMatrix ocb_process() {
  const PauliBasis p = pauli_basis(2);
  const Matrix& id = p.elements[0];
  const Matrix& sx = p.elements[1];
  const Matrix& sz = p.elements[3];
  const double r = 1.0 / std::sqrt(2.0);
  Matrix w = kron(kron(kron(id, id), id), id);
  w += r * kron(kron(kron(id, sz), sz), id);   // B1, A2 correlated
  w += r * kron(kron(kron(sz, sx), id), sz);   // B2, B1, A1 correlated
  w /= 4.0;
  return ProcessMatrix(LabeledOperator(
      {{"B2", 2}, {"B1", 2}, {"A2", 2}, {"A1", 2}}, std::move(w)));
}

// Convex mixture of the maximally violating process with white noise:
// W(gamma) = [gamma/(d_A2 d_B2) * 1 + W] / (1 + gamma).
inline ProcessMatrix noisy_ocb(double gamma) {
  if (!(gamma >= 0.0)) throw BadParameter("noise weight must be >= 0");
  const ProcessMatrix w = ocb_process();
  const LabeledOperator id = identity_operator(w.op().labels());
  const LabeledOperator mixed =
      (1.0 / (1.0 + gamma)) * ((gamma / 4.0) * id + w.op());
  return ProcessMatrix(mixed);
}

// Drop the final output of a comb-like operator: W = tr_f(Upsilon). The
// result is reordered to canonical process wires when they are all present.
inline LabeledOperator from_comb(const LabeledOperator& upsilon) {
  LabeledOperator w = partial_trace(upsilon, {"f"});
  bool canonical = true;
  for (const auto& n : process_wire_order())
    if (!w.has_label(n)) canonical = false;
  if (canonical && w.labels().size() == 4) w = permute(w, process_wire_order());
  return w;
}

inline LabeledOperator from_comb(const CombChoi& comb) { return from_comb(comb.op); }

// Seeded random valid process matrix on qubit wires: a random Hermitian
// operator projected onto the valid span, shifted to be PSD, and rescaled to
// the required identity coefficient.
inline ProcessMatrix random_valid_process(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<SubsystemLabel> labels{{"B2", 2}, {"B1", 2}, {"A2", 2}, {"A1", 2}};
  LabeledOperator h(labels, random_hermitian(16, rng));
  LabeledOperator p = project_valid(h);
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.matrix());
  const double lo = es.eigenvalues().minCoeff();
  const double shift = std::max(0.0, -lo) + 0.25 + 0.75 * rng.uniform();
  LabeledOperator w = p + shift * identity_operator(labels);
  const double id_coeff = trace(w).real() / 16.0;
  w = (1.0 / (4.0 * id_coeff)) * w;
  return ProcessMatrix(std::move(w));
}

}  // namespace acausal
