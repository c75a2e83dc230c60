#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acausal/choi.hpp"
#include "acausal/labeled_operator.hpp"
#include "acausal/rng.hpp"

namespace acausal {

// Which party acts first in a causally ordered two-slot circuit.
enum class SlotOrder { AB, BA };

inline std::string to_string(SlotOrder o) { return o == SlotOrder::AB ? "AB" : "BA"; }

// Choi matrix of a two-slot circuit fragment with a final output, on wires
// [f, B2, B1, A2, A1]. A1/B1 enter the parties, A2/B2 come back, f is the
// final output. For order AB the first slot is Alice's.
struct CombChoi {
  LabeledOperator op;
  SlotOrder order = SlotOrder::AB;
};

// Choi matrix of a joint two-party operation with possible classical or
// quantum memory from the first party to the second, on [B2, B1, A2, A1].
struct CorrelatedOp {
  LabeledOperator op;
};

inline const std::vector<std::string>& comb_wire_order() {
  static const std::vector<std::string> order{"f", "B2", "B1", "A2", "A1"};
  return order;
}

inline const std::vector<std::string>& process_wire_order() {
  static const std::vector<std::string> order{"B2", "B1", "A2", "A1"};
  return order;
}

struct CausalOrderReport {
  bool ok = false;
  double first_residual = 0.0;   // tr_f comb deviates from 1_(late out) x rest
  double second_residual = 0.0;  // nested marginal deviates from 1_(early out) x state
  double trace_residual = 0.0;   // innermost state deviates from unit trace
  double psd_residual = 0.0;
};

namespace detail {

inline void require_wires(const LabeledOperator& op, const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (!op.has_label(n)) throw UnknownLabel("expected wire '" + n + "'");
}

inline std::vector<std::string> env_names(const LabeledOperator& op,
                                          const std::vector<std::string>& system) {
  std::set<std::string> sys(system.begin(), system.end());
  std::vector<std::string> out;
  for (const auto& l : op.labels())
    if (!sys.count(l.name)) out.push_back(l.name);
  return out;
}

inline void check_unitary(const LabeledOperator& u, double tol, const std::string& who) {
  const Matrix& m = u.matrix();
  const double r = (m * m.adjoint() - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
  if (r > tol) throw NotUnitary(who + " deviates from unitarity by " + std::to_string(r));
}

inline void check_state(const LabeledOperator& rho, double tol, const std::string& who) {
  if (std::abs(trace(rho).real() - 1.0) > tol || std::abs(trace(rho).imag()) > tol)
    throw BadParameter(who + " must have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      ((rho.matrix() + rho.matrix().adjoint()) / 2.0).eval());
  if (es.eigenvalues().minCoeff() < -1e-9) throw NotPSD(who + " is not PSD");
  if ((rho.matrix() - rho.matrix().adjoint()).cwiseAbs().maxCoeff() > 1e-9)
    throw NotHermitian(who + " is not Hermitian");
}

}  // namespace detail

inline CausalOrderReport check_causal_order(const CombChoi& comb, SlotOrder order,
                                            double tol = 1e-9) {
  detail::require_wires(comb.op, comb_wire_order());
  const bool ab = (order == SlotOrder::AB);
  const std::string late_out = ab ? "B2" : "A2";   // output of the second slot
  const std::string late_in = ab ? "B1" : "A1";    // input of the second slot
  const std::string early_out = ab ? "A2" : "B2";  // output of the first slot
  const std::string early_in = ab ? "A1" : "B1";

  CausalOrderReport rep;
  const LabeledOperator t = partial_trace(comb.op, {"f"});
  rep.first_residual = max_abs(t - trace_and_replace(t, late_out));
  const LabeledOperator t1 =
      (1.0 / comb.op.dim_of(late_out)) * partial_trace(t, {late_out});
  const LabeledOperator t2 = partial_trace(t1, {late_in});
  rep.second_residual = max_abs(t2 - trace_and_replace(t2, early_out));
  const LabeledOperator rho =
      (1.0 / comb.op.dim_of(early_out)) * partial_trace(t2, {early_out});
  rep.trace_residual = std::abs(trace(rho) - Complex(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      ((comb.op.matrix() + comb.op.matrix().adjoint()) / 2.0).eval());
  rep.psd_residual = std::max(0.0, -es.eigenvalues().minCoeff());
  rep.ok = rep.first_residual <= tol && rep.second_residual <= tol &&
           rep.trace_residual <= tol && rep.psd_residual <= tol;
  return rep;
}

// Wrap a user-supplied operator as a comb, validating the causal-order trace
// conditions at `tol`.
inline CombChoi make_comb(LabeledOperator op, SlotOrder order, double tol = 1e-9) {
  detail::require_wires(op, comb_wire_order());
  if (op.labels().size() != comb_wire_order().size())
    throw UnknownLabel("comb must live on exactly the five named wires");
  CombChoi comb{permute(op, comb_wire_order()), order};
  const CausalOrderReport rep = check_causal_order(comb, order, tol);
  if (!rep.ok) {
    std::ostringstream ss;
    ss << "operator violates the causal-order conditions (residuals " << rep.first_residual
       << ", " << rep.second_residual << ", trace " << rep.trace_residual << ", psd "
       << rep.psd_residual << ")";
    throw BadParameter(ss.str());
  }
  return comb;
}

// Choi matrix of the circuit rho_{A1,env} -> U (on A2, env; output B1, env)
// -> V (on B2, env; output f, env), with the environment traced out at the
// end. The slots between the unitaries are where the parties act.
inline CombChoi comb_from_circuit(const LabeledOperator& rho, const LabeledOperator& u,
                                  const LabeledOperator& v) {
  detail::require_wires(rho, {"A1"});
  detail::require_wires(u, {"A2"});
  detail::require_wires(v, {"B2"});
  const auto env = detail::env_names(rho, {"A1"});
  if (detail::env_names(u, {"A2"}) != env || detail::env_names(v, {"B2"}) != env) {
    // allow any internal order of the environment wires
    auto sorted = [](std::vector<std::string> v) { std::sort(v.begin(), v.end()); return v; };
    if (sorted(detail::env_names(u, {"A2"})) != sorted(env) ||
        sorted(detail::env_names(v, {"B2"})) != sorted(env))
      throw UnknownLabel("state and unitaries must share the same environment wires");
  }
  for (const auto& n : env) {
    if (u.dim_of(n) != rho.dim_of(n) || v.dim_of(n) != rho.dim_of(n))
      throw BadDimension("environment wire '" + n + "' dimension mismatch");
  }
  detail::check_state(rho, 1e-9, "initial state");
  detail::check_unitary(u, 1e-9, "first unitary");
  detail::check_unitary(v, 1e-9, "second unitary");

  const int dA2 = u.dim_of("A2");
  const int dB2 = v.dim_of("B2");
  LabeledOperator s = tensor(maximally_entangled({"_cA2", dA2}, {"A2", dA2}, false), rho);
  s = apply_sandwich(s, u.renamed({{"A2", "_cA2"}}), {{"_cA2", "B1"}});
  s = tensor(maximally_entangled({"_cB2", dB2}, {"B2", dB2}, false), s);
  s = apply_sandwich(s, v.renamed({{"B2", "_cB2"}}), {{"_cB2", "f"}});
  s = partial_trace(s, env);
  return CombChoi{permute(s, comb_wire_order()), SlotOrder::AB};
}

// Output state of the comb when the parties apply CP maps with Choi matrices
// mA (wires [A2, A1]) and mB ([B2, B1]):
// rho' = tr_{slots}[(1_f x mA^T x mB^T) comb].
inline LabeledOperator apply_comb(const CombChoi& comb, const ChoiOperator& mA,
                                  const ChoiOperator& mB) {
  if (mA.out_label().name != "A2" || mA.in_label().name != "A1" ||
      mB.out_label().name != "B2" || mB.in_label().name != "B1")
    throw UnknownLabel("party maps must be labeled [A2, A1] and [B2, B1]");
  for (const auto& n : process_wire_order())
    if (comb.op.dim_of(n) != (n[0] == 'A' ? (n == "A2" ? mA.out_dim() : mA.in_dim())
                                          : (n == "B2" ? mB.out_dim() : mB.in_dim())))
      throw BadDimension("party map dims do not match the comb on wire '" + n + "'");
  const SubsystemLabel f = comb.op.labels()[static_cast<std::size_t>(comb.op.position("f"))];
  LabeledOperator weight =
      tensor(identity_operator({f}), tensor(transposed(mA.op), transposed(mB.op)));
  weight = permute(weight, comb.op.names());
  const LabeledOperator prod(comb.op.labels(), weight.matrix() * comb.op.matrix());
  return partial_trace(prod, process_wire_order());
}

// Joint probability of CP branches mA, mB: p = tr[(mA^T x mB^T) tr_f comb].
inline double outcome_probability(const CombChoi& comb, const ChoiOperator& mA,
                                  const ChoiOperator& mB) {
  const LabeledOperator out = apply_comb(comb, mA, mB);
  return trace(out).real();
}

// Comb of a process with no memory: prepare rho at A1, send A2 through the
// channel `lambda` into B1, send B2 through `xi` into f.
inline CombChoi markovian_comb(const ChoiOperator& lambda, const ChoiOperator& xi,
                               const LabeledOperator& rho) {
  if (lambda.out_label().name != "B1" || lambda.in_label().name != "A2")
    throw UnknownLabel("intermediate channel must be labeled [B1, A2]");
  if (xi.out_label().name != "f" || xi.in_label().name != "B2")
    throw UnknownLabel("final channel must be labeled [f, B2]");
  if (rho.labels().size() != 1 || rho.labels()[0].name != "A1")
    throw UnknownLabel("initial state must live on wire A1");
  if (!is_cptp(lambda, 1e-9) || !is_cptp(xi, 1e-9))
    throw NotCPTP("memoryless comb needs CPTP step channels");
  detail::check_state(rho, 1e-9, "initial state");
  LabeledOperator op = tensor(tensor(xi.op, lambda.op), rho);
  return CombChoi{permute(op, comb_wire_order()), SlotOrder::AB};
}

struct CorrelatedDims {
  int a1 = 2, a2 = 2, b1 = 2, b2 = 2;
  int memory = 2;
};

// Residuals of the defining conditions of a correlated two-party operation:
// tr_{B2} M = 1_{B1} x N with tr_{A2} N = 1_{A1}, and M PSD.
struct CorrelatedOpReport {
  double late_residual = 0.0;
  double early_residual = 0.0;
  double psd_residual = 0.0;
};

inline CorrelatedOpReport correlated_op_report(const CorrelatedOp& m) {
  detail::require_wires(m.op, process_wire_order());
  CorrelatedOpReport rep;
  const LabeledOperator t = partial_trace(m.op, {"B2"});
  rep.late_residual = max_abs(t - trace_and_replace(t, "B1"));
  const LabeledOperator n = (1.0 / m.op.dim_of("B1")) * partial_trace(t, {"B1"});
  const LabeledOperator n2 = partial_trace(n, {"A2"});
  rep.early_residual =
      max_abs(n2 - identity_operator({n2.labels().at(0)}));
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      ((m.op.matrix() + m.op.matrix().adjoint()) / 2.0).eval());
  rep.psd_residual = std::max(0.0, -es.eigenvalues().minCoeff());
  return rep;
}

// Haar-seeded correlated operation: Alice applies a random unitary on her
// slot plus a memory register, the memory is handed to Bob, who applies a
// second random unitary, and the memory is discarded. memory = 1 gives a
// product of two independent CPTP maps.
inline CorrelatedOp random_correlated_op(const CorrelatedDims& d, std::uint64_t seed) {
  if (d.a1 < 1 || d.a2 < 1 || d.b1 < 1 || d.b2 < 1 || d.memory < 1)
    throw BadDimension("correlated op dims must be positive");
  if (d.a1 != d.a2 || d.b1 != d.b2)
    throw BadDimension("square party unitaries need matching in/out dims");
  Rng rng(seed);
  const Vector mem0 = haar_ket(d.memory, rng);
  const Matrix g1 = haar_unitary(d.a1 * d.memory, rng);
  const Matrix g2 = haar_unitary(d.b1 * d.memory, rng);

  LabeledOperator s = tensor(maximally_entangled({"_uA1", d.a1}, {"A1", d.a1}, false),
                             LabeledOperator({{"M", d.memory}}, ket_projector(mem0)));
  s = apply_sandwich(s, LabeledOperator({{"_uA1", d.a1}, {"M", d.memory}}, g1),
                     {{"_uA1", "A2"}});
  s = tensor(maximally_entangled({"_uB1", d.b1}, {"B1", d.b1}, false), s);
  s = apply_sandwich(s, LabeledOperator({{"_uB1", d.b1}, {"M", d.memory}}, g2),
                     {{"_uB1", "B2"}});
  s = partial_trace(s, {"M"});
  return CorrelatedOp{permute(s, process_wire_order())};
}

}  // namespace acausal
