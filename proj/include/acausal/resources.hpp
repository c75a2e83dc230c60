#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "acausal/circuits.hpp"
#include "acausal/separability.hpp"

namespace acausal {

// Resource diagnostics: which bipartitions of a circuit's state carry
// entanglement, which of its unitaries couple across a cut, and whether the
// observed causal structure of the conditioned branches is consistent with
// the restriction "no entanglement or no coupling implies no indefinite
// causal order".

// `product` certifies the resource absent across the cut (factorizing or,
// for low-dimensional states, separable); `entangled` / `nonlocal` certify
// it present for states / unitaries respectively.
enum class ResourceVerdict { entangled, nonlocal, inconclusive, product };

inline std::string to_string(ResourceVerdict v) {
  switch (v) {
    case ResourceVerdict::entangled: return "entangled";
    case ResourceVerdict::nonlocal: return "nonlocal";
    case ResourceVerdict::inconclusive: return "inconclusive";
    case ResourceVerdict::product: return "product";
  }
  return "inconclusive";
}

struct BipartitionReport {
  std::vector<std::string> side;
  std::vector<std::string> complement;
  bool ppt = true;
  double min_pt_eigenvalue = 0.0;
  int schmidt_rank = 1;
  ResourceVerdict certified = ResourceVerdict::inconclusive;
};

namespace detail {

inline std::vector<std::string> cut_complement(const LabeledOperator& op,
                                               const std::vector<std::string>& side) {
  if (side.empty()) throw BadCut("cut must name at least one wire");
  std::set<std::string> seen;
  for (const auto& n : side) {
    if (!op.has_label(n)) throw BadCut("cut names unknown wire '" + n + "'");
    if (!seen.insert(n).second) throw BadCut("cut repeats wire '" + n + "'");
  }
  std::vector<std::string> complement;
  for (const auto& l : op.labels())
    if (!seen.count(l.name)) complement.push_back(l.name);
  if (complement.empty()) throw BadCut("cut must leave a nonempty complement");
  return complement;
}

}  // namespace detail

// Number of terms in the minimal expansion op = sum_k s_k L_k x R_k across
// the cut: the rank of the realigned matrix. Singular values below
// tol * sigma_max count as zero.
inline int operator_schmidt_rank(const LabeledOperator& op, const std::vector<std::string>& side,
                                 double tol = 1e-10) {
  const std::vector<std::string> complement = detail::cut_complement(op, side);
  std::vector<std::string> order = side;
  order.insert(order.end(), complement.begin(), complement.end());
  const LabeledOperator p = permute(op, order);
  Eigen::Index ds = 1, dc = 1;
  for (const auto& n : side) ds *= op.dim_of(n);
  for (const auto& n : complement) dc *= op.dim_of(n);
  Matrix r(ds * ds, dc * dc);
  for (Eigen::Index is = 0; is < ds; ++is)
    for (Eigen::Index js = 0; js < ds; ++js)
      for (Eigen::Index ic = 0; ic < dc; ++ic)
        for (Eigen::Index jc = 0; jc < dc; ++jc)
          r(is * ds + js, ic * dc + jc) = p.matrix()(is * dc + ic, js * dc + jc);
  Eigen::JacobiSVD<Matrix> svd(r);
  const RealVector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > tol * sv(0)) ++rank;
  return rank;
}

// One-sided entanglement certificate: a negative partial-transpose
// eigenvalue proves entanglement across the cut; a positive one is decisive
// only in 2x2 and 2x3, or when the operator factorizes exactly.
inline BipartitionReport ppt_check(const LabeledOperator& state,
                                   const std::vector<std::string>& side) {
  BipartitionReport rep;
  rep.side = side;
  rep.complement = detail::cut_complement(state, side);
  detail::check_state(state, 1e-8, "state");
  const LabeledOperator pt = partial_transpose(state, side);
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      ((pt.matrix() + pt.matrix().adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
  rep.min_pt_eigenvalue = es.eigenvalues().minCoeff();
  rep.ppt = rep.min_pt_eigenvalue >= -1e-9;
  rep.schmidt_rank = operator_schmidt_rank(state, side);
  int ds = 1, dc = 1;
  for (const auto& n : rep.side) ds *= state.dim_of(n);
  for (const auto& n : rep.complement) dc *= state.dim_of(n);
  if (!rep.ppt)
    rep.certified = ResourceVerdict::entangled;
  else if (rep.schmidt_rank == 1)
    rep.certified = ResourceVerdict::product;
  else if ((ds == 2 && dc == 2) || (ds == 2 && dc == 3) || (ds == 3 && dc == 2))
    rep.certified = ResourceVerdict::product;
  else
    rep.certified = ResourceVerdict::inconclusive;
  return rep;
}

// Schmidt rank 1 across the cut proves the unitary is a product of local
// factors; rank above 1 proves it is not (up to the rank tolerance).
inline BipartitionReport unitary_cut_report(const LabeledOperator& u,
                                            const std::vector<std::string>& side,
                                            double tol = 1e-10) {
  BipartitionReport rep;
  rep.side = side;
  rep.complement = detail::cut_complement(u, side);
  rep.schmidt_rank = operator_schmidt_rank(u, side, tol);
  rep.certified =
      rep.schmidt_rank == 1 ? ResourceVerdict::product : ResourceVerdict::nonlocal;
  return rep;
}

// Named output shapes a conditioned branch can be tested against.
enum class StructuralForm {
  product_over_outputs,  // W = Theta_{A2 B2} x rho_{A1 B1}
  product_without_a1,    // W = omega_{B2 B1 A2} x rho_{A1}
  identity_on_a2,        // W = 1_{A2} x eta
  identity_on_b2,        // W = 1_{B2} x eta
  identity_on_outputs,   // W = 1_{A2 B2} x eta
};

inline StructuralForm parse_structural_form(const std::string& s) {
  if (s == "product-over-outputs") return StructuralForm::product_over_outputs;
  if (s == "product-without-a1") return StructuralForm::product_without_a1;
  if (s == "identity-on-a2") return StructuralForm::identity_on_a2;
  if (s == "identity-on-b2") return StructuralForm::identity_on_b2;
  if (s == "identity-on-outputs") return StructuralForm::identity_on_outputs;
  throw BadForm("unknown structural form '" + s + "'");
}

inline std::string to_string(StructuralForm f) {
  switch (f) {
    case StructuralForm::product_over_outputs: return "product-over-outputs";
    case StructuralForm::product_without_a1: return "product-without-a1";
    case StructuralForm::identity_on_a2: return "identity-on-a2";
    case StructuralForm::identity_on_b2: return "identity-on-b2";
    case StructuralForm::identity_on_outputs: return "identity-on-outputs";
  }
  throw BadForm("unknown structural form");
}

inline bool structural_form_check(const LabeledOperator& w, StructuralForm form,
                                  double tol = 1e-9) {
  if ((w.matrix() - w.matrix().adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw NotHermitian("form check needs a Hermitian operator");
  switch (form) {
    case StructuralForm::product_over_outputs:
      return operator_schmidt_rank(w, {"A2", "B2"}) == 1;
    case StructuralForm::product_without_a1:
      return operator_schmidt_rank(w, {"B2", "B1", "A2"}) == 1;
    case StructuralForm::identity_on_a2:
      return max_abs_diff(w, trace_and_replace(w, "A2")) < tol;
    case StructuralForm::identity_on_b2:
      return max_abs_diff(w, trace_and_replace(w, "B2")) < tol;
    case StructuralForm::identity_on_outputs:
      return max_abs_diff(w, trace_and_replace(trace_and_replace(w, "A2"), "B2")) < tol;
  }
  throw BadForm("unknown structural form");
}

struct BranchDiagnostics {
  int mu = 0;
  bool null_outcome = false;
  double p = 0.0;
  bool proper = false;
  double instrument_dependence = 0.0;
  bool valid = false;
  SeparabilityStatus verdict = SeparabilityStatus::undecided;
};

struct ResourceOptions {
  int n_samples = 100;
  std::uint64_t seed = 1;
  double proper_tol = 1e-8;
  SeparabilityOptions separability{};
};

struct ResourceReport {
  std::vector<BipartitionReport> state_cuts;
  std::vector<BipartitionReport> unitary_cuts;
  std::vector<BranchDiagnostics> branches;
  // Every probed cut of state and unitaries carries its resource.
  bool resources_sufficient = false;
  // Some cut is certified resource-free, so indefinite causal order is ruled
  // out for every proper branch.
  bool restriction_applies = false;
  // Under the restriction, no proper branch was found causally non-separable.
  bool theorem_consistent = true;
};

namespace detail {

template <typename Circuit, typename BranchFn>
void diagnose_branches(const Circuit& c, const ResourceOptions& opt, BranchFn branch_of,
                       ResourceReport& rep) {
  for (int mu = 0; mu < static_cast<int>(c.projectors.size()); ++mu) {
    BranchDiagnostics d;
    d.mu = mu;
    ConditionedBranch b;
    try {
      b = branch_of(mu);
    } catch (const NullOutcome&) {
      d.null_outcome = true;
      rep.branches.push_back(std::move(d));
      continue;
    }
    d.p = b.p;
    d.valid = b.valid;
    const ProperReport pr = is_proper(c, mu, opt.n_samples, opt.seed, opt.proper_tol);
    d.proper = pr.proper;
    d.instrument_dependence = pr.max_dev;
    if (d.proper && d.valid) {
      try {
        d.verdict = is_causally_separable(ProcessMatrix(b.w), opt.separability).status;
      } catch (const InvalidProcessMatrix&) {
        d.verdict = SeparabilityStatus::undecided;
      }
    }
    rep.branches.push_back(std::move(d));
  }

  bool all_present = true;
  bool any_absent = false;
  for (const auto& cut : rep.state_cuts) {
    if (cut.certified != ResourceVerdict::entangled) all_present = false;
    if (cut.certified == ResourceVerdict::product) any_absent = true;
  }
  for (const auto& cut : rep.unitary_cuts) {
    if (cut.certified != ResourceVerdict::nonlocal) all_present = false;
    if (cut.certified == ResourceVerdict::product) any_absent = true;
  }
  rep.resources_sufficient = all_present;
  rep.restriction_applies = any_absent;
  rep.theorem_consistent = true;
  if (rep.restriction_applies)
    for (const auto& d : rep.branches)
      if (d.proper && d.verdict == SeparabilityStatus::non_separable)
        rep.theorem_consistent = false;
}

}  // namespace detail

// Cuts probed for a parallel circuit: each party's input against the rest of
// the state, the ancilla block against both inputs, and each output (and the
// output pair) of V against the rest.
inline ResourceReport resource_report(const ParallelCircuit& c,
                                      const ResourceOptions& opt = {}) {
  ResourceReport rep;
  rep.state_cuts.push_back(ppt_check(c.rho, {"A1"}));
  rep.state_cuts.push_back(ppt_check(c.rho, {"B1"}));
  rep.state_cuts.push_back(ppt_check(c.rho, c.anc));
  rep.unitary_cuts.push_back(unitary_cut_report(c.v, {"A2"}));
  rep.unitary_cuts.push_back(unitary_cut_report(c.v, {"B2"}));
  rep.unitary_cuts.push_back(unitary_cut_report(c.v, {"A2", "B2"}));
  detail::diagnose_branches(c, opt, [&](int mu) { return parallel_process_matrix(c, mu); },
                            rep);
  return rep;
}

// Cuts probed for a serial circuit: the lone input against the ancillas, and
// each unitary's party wire against the ancillas it shares.
inline ResourceReport resource_report(const SerialCircuit& c, const ResourceOptions& opt = {}) {
  ResourceReport rep;
  rep.state_cuts.push_back(ppt_check(c.rho, {"A1"}));
  rep.unitary_cuts.push_back(unitary_cut_report(c.u, {"A2"}));
  rep.unitary_cuts.push_back(unitary_cut_report(c.v, {"B2"}));
  detail::diagnose_branches(c, opt, [&](int mu) { return serial_branch(c, mu); }, rep);
  return rep;
}

}  // namespace acausal
