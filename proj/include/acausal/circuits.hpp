#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "acausal/choi.hpp"
#include "acausal/comb.hpp"
#include "acausal/process_matrix.hpp"

namespace acausal {

// Circuit-with-measurement models. Both kinds hold a fixed initial state, one
// or two global unitaries, and a complete projective family on the ancilla
// wires; conditioning on one projector outcome induces a (possibly improper)
// two-party process matrix on the slot wires.

// Both parties act in parallel on the initial state; V then couples their
// outputs to the ancillas and the projectors are measured.
//   rho: [A1, B1, anc...]   V: [A2, B2, anc...]   projectors: [anc...]
struct ParallelCircuit {
  LabeledOperator rho;
  LabeledOperator v;
  std::vector<LabeledOperator> projectors;
  std::vector<std::string> anc;
};

// Alice acts first; U carries her output through the ancillas to Bob's input;
// V carries Bob's output to the final wire f.
//   rho: [A1, anc...]   U: [A2, anc...] -> [B1, anc...]   V: [B2, anc...] -> [f, anc...]
struct SerialCircuit {
  LabeledOperator rho;
  LabeledOperator u;
  LabeledOperator v;
  std::vector<LabeledOperator> projectors;
  std::vector<std::string> anc;
};

namespace detail {

inline void check_projectors(const std::vector<LabeledOperator>& proj,
                             const std::vector<std::string>& anc,
                             const LabeledOperator& reference) {
  if (proj.empty()) throw BadParameter("need at least one projector");
  std::vector<SubsystemLabel> anc_labels;
  for (const auto& n : anc)
    anc_labels.push_back(reference.labels()[static_cast<std::size_t>(reference.position(n))]);
  Eigen::Index d = 1;
  for (const auto& l : anc_labels) d *= l.dim;
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& p : proj) {
    auto sorted = [](std::vector<std::string> v) { std::sort(v.begin(), v.end()); return v; };
    if (sorted(p.names()) != sorted(anc))
      throw UnknownLabel("projectors must act exactly on the ancilla wires");
    std::vector<std::string> order;
    for (const auto& l : anc_labels) order.push_back(l.name);
    const Matrix m = permute(p, order).matrix();
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
      throw NotHermitian("projector is not Hermitian");
    if ((m * m - m).cwiseAbs().maxCoeff() > 1e-8)
      throw BadParameter("projector is not idempotent");
    sum += m;
  }
  if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw BadParameter("projectors do not sum to the identity");
}

}  // namespace detail

inline ParallelCircuit make_parallel_circuit(LabeledOperator rho, LabeledOperator v,
                                             std::vector<LabeledOperator> projectors) {
  for (const auto& n : {"A1", "B1"})
    if (!rho.has_label(n)) throw UnknownLabel(std::string("state needs wire '") + n + "'");
  for (const auto& n : {"A2", "B2"})
    if (!v.has_label(n)) throw UnknownLabel(std::string("unitary needs wire '") + n + "'");
  ParallelCircuit c;
  c.anc = detail::env_names(rho, {"A1", "B1"});
  auto sorted = [](std::vector<std::string> v) { std::sort(v.begin(), v.end()); return v; };
  if (sorted(detail::env_names(v, {"A2", "B2"})) != sorted(c.anc))
    throw UnknownLabel("state and unitary must share the same ancilla wires");
  for (const auto& n : c.anc)
    if (rho.dim_of(n) != v.dim_of(n))
      throw BadDimension("ancilla wire '" + n + "' dimension mismatch");
  detail::check_state(rho, 1e-9, "initial state");
  detail::check_unitary(v, 1e-9, "circuit unitary");
  detail::check_projectors(projectors, c.anc, rho);
  c.rho = std::move(rho);
  c.v = std::move(v);
  c.projectors = std::move(projectors);
  return c;
}

inline SerialCircuit make_serial_circuit(LabeledOperator rho, LabeledOperator u,
                                         LabeledOperator v,
                                         std::vector<LabeledOperator> projectors) {
  if (!rho.has_label("A1")) throw UnknownLabel("state needs wire 'A1'");
  if (!u.has_label("A2")) throw UnknownLabel("first unitary needs wire 'A2'");
  if (!v.has_label("B2")) throw UnknownLabel("second unitary needs wire 'B2'");
  SerialCircuit c;
  c.anc = detail::env_names(rho, {"A1"});
  auto sorted = [](std::vector<std::string> v) { std::sort(v.begin(), v.end()); return v; };
  if (sorted(detail::env_names(u, {"A2"})) != sorted(c.anc) ||
      sorted(detail::env_names(v, {"B2"})) != sorted(c.anc))
    throw UnknownLabel("state and unitaries must share the same ancilla wires");
  for (const auto& n : c.anc)
    if (rho.dim_of(n) != u.dim_of(n) || rho.dim_of(n) != v.dim_of(n))
      throw BadDimension("ancilla wire '" + n + "' dimension mismatch");
  detail::check_state(rho, 1e-9, "initial state");
  detail::check_unitary(u, 1e-9, "first unitary");
  detail::check_unitary(v, 1e-9, "second unitary");
  detail::check_projectors(projectors, c.anc, rho);
  c.rho = std::move(rho);
  c.u = std::move(u);
  c.v = std::move(v);
  c.projectors = std::move(projectors);
  return c;
}

// Joint outcome table p(i, j, mu) for one instrument pair.
struct JointTable {
  int n_a = 0, n_b = 0, n_mu = 0;
  std::vector<double> p;

  double& at(int i, int j, int mu) {
    return p[static_cast<std::size_t>((i * n_b + j) * n_mu + mu)];
  }
  double at(int i, int j, int mu) const {
    return p[static_cast<std::size_t>((i * n_b + j) * n_mu + mu)];
  }
  double p_mu(int mu) const {
    double s = 0.0;
    for (int i = 0; i < n_a; ++i)
      for (int j = 0; j < n_b; ++j) s += at(i, j, mu);
    return s;
  }
  double total() const {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
  }
};

namespace detail {

inline void check_instrument_dims(const Instrument& ins, int d_in, int d_out,
                                  const std::string& who) {
  if (ins.outcomes.empty()) throw BadKraus(who + " has no outcomes");
  if (ins.in_dim() != d_in || ins.out_dim() != d_out)
    throw BadDimension(who + " dims do not match the circuit slots");
  if (instrument_completeness_residual(ins) > 1e-8)
    throw NotCPTP(who + " branches do not sum to a trace-preserving map");
}

inline double projector_expectation(const LabeledOperator& state, const LabeledOperator& proj,
                                    const std::vector<std::string>& ident_names) {
  std::vector<SubsystemLabel> id_labels;
  for (const auto& n : ident_names)
    id_labels.push_back(state.labels()[static_cast<std::size_t>(state.position(n))]);
  LabeledOperator weight = tensor(identity_operator(id_labels), proj);
  weight = permute(weight, state.names());
  return (weight.matrix() * state.matrix()).trace().real();
}

}  // namespace detail

// Density-operator simulation of one run: Kraus branches applied wire by
// wire, then the global unitaries, then the projective measurement.
inline JointTable brute_force_joint(const ParallelCircuit& c, const Instrument& jA,
                                    const Instrument& jB) {
  detail::check_instrument_dims(jA, c.rho.dim_of("A1"), c.v.dim_of("A2"), "Alice instrument");
  detail::check_instrument_dims(jB, c.rho.dim_of("B1"), c.v.dim_of("B2"), "Bob instrument");
  JointTable t;
  t.n_a = jA.size();
  t.n_b = jB.size();
  t.n_mu = static_cast<int>(c.projectors.size());
  t.p.assign(static_cast<std::size_t>(t.n_a * t.n_b * t.n_mu), 0.0);
  const SubsystemLabel a2{"A2", c.v.dim_of("A2")};
  const SubsystemLabel b2{"B2", c.v.dim_of("B2")};
  for (int i = 0; i < t.n_a; ++i) {
    const auto krausA = kraus_from_choi(jA.outcomes[static_cast<std::size_t>(i)]);
    const LabeledOperator sA = apply_kraus_channel(c.rho, krausA, "A1", a2);
    for (int j = 0; j < t.n_b; ++j) {
      const auto krausB = kraus_from_choi(jB.outcomes[static_cast<std::size_t>(j)]);
      LabeledOperator s = apply_kraus_channel(sA, krausB, "B1", b2);
      s = apply_sandwich(s, c.v);
      for (int mu = 0; mu < t.n_mu; ++mu)
        t.at(i, j, mu) = detail::projector_expectation(
            s, c.projectors[static_cast<std::size_t>(mu)], {"A2", "B2"});
    }
  }
  return t;
}

inline JointTable brute_force_joint(const SerialCircuit& c, const Instrument& jA,
                                    const Instrument& jB) {
  detail::check_instrument_dims(jA, c.rho.dim_of("A1"), c.u.dim_of("A2"), "Alice instrument");
  detail::check_instrument_dims(jB, c.u.dim_of("A2"), c.v.dim_of("B2"), "Bob instrument");
  JointTable t;
  t.n_a = jA.size();
  t.n_b = jB.size();
  t.n_mu = static_cast<int>(c.projectors.size());
  t.p.assign(static_cast<std::size_t>(t.n_a * t.n_b * t.n_mu), 0.0);
  const SubsystemLabel a2{"A2", c.u.dim_of("A2")};
  const SubsystemLabel b2{"B2", c.v.dim_of("B2")};
  for (int i = 0; i < t.n_a; ++i) {
    const auto krausA = kraus_from_choi(jA.outcomes[static_cast<std::size_t>(i)]);
    LabeledOperator sA = apply_kraus_channel(c.rho, krausA, "A1", a2);
    sA = apply_sandwich(sA, c.u, {{"A2", "B1"}});
    for (int j = 0; j < t.n_b; ++j) {
      const auto krausB = kraus_from_choi(jB.outcomes[static_cast<std::size_t>(j)]);
      LabeledOperator s = apply_kraus_channel(sA, krausB, "B1", b2);
      s = apply_sandwich(s, c.v, {{"B2", "f"}});
      for (int mu = 0; mu < t.n_mu; ++mu)
        t.at(i, j, mu) = detail::projector_expectation(
            s, c.projectors[static_cast<std::size_t>(mu)], {"f"});
    }
  }
  return t;
}

// Unnormalized conditioned Choi operator of the circuit on [f, B2, B1, A2, A1]
// (f collects the unmeasured final wires), plus the outcome probability
// p(mu) = tr / (d_A2 d_B2), which is instrument independent iff the branch is
// a proper process.
inline std::pair<LabeledOperator, double> conditioned_choi(const ParallelCircuit& c, int mu) {
  if (mu < 0 || mu >= static_cast<int>(c.projectors.size()))
    throw BadParameter("no such outcome");
  const int dA2 = c.v.dim_of("A2");
  const int dB2 = c.v.dim_of("B2");
  LabeledOperator s = tensor(maximally_entangled({"_cA2", dA2}, {"A2", dA2}, false),
                             tensor(maximally_entangled({"_cB2", dB2}, {"B2", dB2}, false),
                                    c.rho));
  s = apply_sandwich(s, c.v.renamed({{"A2", "_cA2"}, {"B2", "_cB2"}}));
  s = apply_sandwich(s, c.projectors[static_cast<std::size_t>(mu)]);
  s = partial_trace(s, c.anc);
  s = merge_labels(s, {"_cA2", "_cB2"}, "f");
  s = permute(s, comb_wire_order());
  const double p = trace(s).real() / (dA2 * dB2);
  return {std::move(s), p};
}

inline std::pair<LabeledOperator, double> serial_conditioned_choi(const SerialCircuit& c,
                                                                  int mu) {
  if (mu < 0 || mu >= static_cast<int>(c.projectors.size()))
    throw BadParameter("no such outcome");
  const int dA2 = c.u.dim_of("A2");
  const int dB2 = c.v.dim_of("B2");
  LabeledOperator s = tensor(maximally_entangled({"_cA2", dA2}, {"A2", dA2}, false), c.rho);
  s = apply_sandwich(s, c.u.renamed({{"A2", "_cA2"}}), {{"_cA2", "B1"}});
  s = tensor(maximally_entangled({"_cB2", dB2}, {"B2", dB2}, false), s);
  s = apply_sandwich(s, c.v.renamed({{"B2", "_cB2"}}), {{"_cB2", "f"}});
  s = apply_sandwich(s, c.projectors[static_cast<std::size_t>(mu)]);
  s = partial_trace(s, c.anc);
  s = permute(s, comb_wire_order());
  const double p = trace(s).real() / (dA2 * dB2);
  return {std::move(s), p};
}

struct ConditionedBranch {
  LabeledOperator w;  // normalized conditioned process on [B2, B1, A2, A1]
  double p = 0.0;     // outcome probability under uninformative instruments
  ValidityReport validity;
  bool valid = false;
  // Largest sampled deviation of p(mu) across instrument pairs; NaN unless sampled.
  double instrument_dependence = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline ConditionedBranch branch_from_unnormalized(LabeledOperator w_tilde, double p) {
  if (p < 1e-12) throw NullOutcome("outcome has vanishing probability");
  ConditionedBranch b;
  b.w = permute((1.0 / p) * from_comb(w_tilde), process_wire_order());
  b.p = p;
  b.validity = is_valid(ProcessMatrix(b.w), 1e-8);
  b.valid = b.validity.ok;
  return b;
}

}  // namespace detail

// Conditioned process matrix via the closed form: Gamma = V^dag (1 x P_mu) V,
// then contraction with the partially transposed initial state. Agrees with
// the conditioned Choi construction; kept because it mirrors how the branch
// is usually analyzed.
inline ConditionedBranch parallel_process_matrix(const ParallelCircuit& c, int mu) {
  if (mu < 0 || mu >= static_cast<int>(c.projectors.size()))
    throw BadParameter("no such outcome");
  const SubsystemLabel a2{"A2", c.v.dim_of("A2")};
  const SubsystemLabel b2{"B2", c.v.dim_of("B2")};
  LabeledOperator padded =
      permute(tensor(identity_operator({a2, b2}), c.projectors[static_cast<std::size_t>(mu)]),
              c.v.names());
  const LabeledOperator gamma(c.v.labels(),
                              c.v.matrix().adjoint() * padded.matrix() * c.v.matrix());

  const SubsystemLabel a1{"A1", c.rho.dim_of("A1")};
  const SubsystemLabel b1{"B1", c.rho.dim_of("B1")};
  const LabeledOperator rho_t1 = partial_transpose(c.rho, {"A1", "B1"});
  std::vector<std::string> full;
  for (const auto& n : {"A1", "B1", "A2", "B2"}) full.push_back(n);
  for (const auto& n : c.anc) full.push_back(n);
  const LabeledOperator g_ext = permute(tensor(identity_operator({a1, b1}), gamma), full);
  const LabeledOperator r_ext = permute(tensor(identity_operator({a2, b2}), rho_t1), full);
  LabeledOperator prod(g_ext.labels(), g_ext.matrix() * r_ext.matrix());
  LabeledOperator w_t = partial_trace(prod, c.anc);
  LabeledOperator w_tilde = permute(transposed(w_t), process_wire_order());

  const double p = trace(w_tilde).real() / (a2.dim * b2.dim);
  if (p < 1e-12) throw NullOutcome("outcome has vanishing probability");
  ConditionedBranch b;
  b.w = (1.0 / p) * w_tilde;
  b.p = p;
  b.validity = is_valid(ProcessMatrix(b.w), 1e-8);
  b.valid = b.validity.ok;
  return b;
}

inline ConditionedBranch serial_branch(const SerialCircuit& c, int mu) {
  auto [w_tilde, p] = serial_conditioned_choi(c, mu);
  return detail::branch_from_unnormalized(std::move(w_tilde), p);
}

// Sum over outcomes of the unnormalized conditioned processes. For parallel
// circuits completeness of the projectors forces 1_{A2 B2} x rho_{A1 B1};
// for serial circuits it is the deterministic comb marginal.
inline LabeledOperator average_process(const ParallelCircuit& c) {
  LabeledOperator acc = from_comb(conditioned_choi(c, 0).first);
  for (int mu = 1; mu < static_cast<int>(c.projectors.size()); ++mu)
    acc = acc + from_comb(conditioned_choi(c, mu).first);
  return permute(acc, process_wire_order());
}

inline LabeledOperator average_process(const SerialCircuit& c) {
  LabeledOperator acc = from_comb(serial_conditioned_choi(c, 0).first);
  for (int mu = 1; mu < static_cast<int>(c.projectors.size()); ++mu)
    acc = acc + from_comb(serial_conditioned_choi(c, mu).first);
  return permute(acc, process_wire_order());
}

struct ProperReport {
  bool proper = false;
  double max_dev = 0.0;  // largest |p_k(mu) - mean| over sampled instrument pairs
  double mean = 0.0;
  std::vector<double> samples;
  // Exact certificate: forbidden-class norm of the unnormalized branch. Zero
  // iff p(mu) is instrument independent for all instruments.
  double structural_residual = 0.0;
};

namespace detail {

// p(mu) depends on the instruments only through their total channels, so one
// propagation of each sampled channel pair suffices.
inline double outcome_prob_for_pair_impl(const ParallelCircuit& c, const Instrument& jA,
                                         const Instrument& jB, int mu) {
  const SubsystemLabel a2{"A2", c.v.dim_of("A2")};
  const SubsystemLabel b2{"B2", c.v.dim_of("B2")};
  LabeledOperator s =
      apply_kraus_channel(c.rho, kraus_from_choi(instrument_total(jA)), "A1", a2);
  s = apply_kraus_channel(s, kraus_from_choi(instrument_total(jB)), "B1", b2);
  s = apply_sandwich(s, c.v);
  return projector_expectation(s, c.projectors[static_cast<std::size_t>(mu)], {"A2", "B2"});
}

inline double outcome_prob_for_pair_impl(const SerialCircuit& c, const Instrument& jA,
                                         const Instrument& jB, int mu) {
  const SubsystemLabel a2{"A2", c.u.dim_of("A2")};
  const SubsystemLabel b2{"B2", c.v.dim_of("B2")};
  LabeledOperator s =
      apply_kraus_channel(c.rho, kraus_from_choi(instrument_total(jA)), "A1", a2);
  s = apply_sandwich(s, c.u, {{"A2", "B1"}});
  s = apply_kraus_channel(s, kraus_from_choi(instrument_total(jB)), "B1", b2);
  s = apply_sandwich(s, c.v, {{"B2", "f"}});
  return projector_expectation(s, c.projectors[static_cast<std::size_t>(mu)], {"f"});
}

template <typename Circuit>
ProperReport is_proper_impl(const Circuit& c, int mu, int n_samples, std::uint64_t seed,
                            double tol, int dA1, int dA2, int dB1, int dB2,
                            const LabeledOperator& w_tilde) {
  if (n_samples < 2) throw BadParameter("need at least two instrument samples");
  ProperReport rep;
  rep.samples.reserve(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k) {
    const std::uint64_t base = seed + static_cast<std::uint64_t>(k);
    const Instrument jA = random_instrument(dA1, dA2, 2, base * 2 + 1, "A2", "A1");
    const Instrument jB = random_instrument(dB1, dB2, 2, base * 2 + 2, "B2", "B1");
    rep.samples.push_back(outcome_prob_for_pair_impl(c, jA, jB, mu));
  }
  double sum = 0.0;
  for (double s : rep.samples) sum += s;
  rep.mean = sum / n_samples;
  for (double s : rep.samples) rep.max_dev = std::max(rep.max_dev, std::abs(s - rep.mean));
  rep.proper = rep.max_dev < tol;

  const double p = trace(w_tilde).real() / (dA2 * dB2);
  const ValidityReport v =
      is_valid(ProcessMatrix((1.0 / std::max(p, 1e-12)) * w_tilde), 1e-9);
  rep.structural_residual = v.forbidden_term_norm;
  return rep;
}

}  // namespace detail

// Decide whether outcome mu induces a proper process: sample seeded random
// instrument pairs and require p(mu) to be constant across them.
inline ProperReport is_proper(const ParallelCircuit& c, int mu, int n_samples = 100,
                              std::uint64_t seed = 1, double tol = 1e-8) {
  if (mu < 0 || mu >= static_cast<int>(c.projectors.size()))
    throw BadParameter("no such outcome");
  const LabeledOperator w_tilde = from_comb(conditioned_choi(c, mu).first);
  return detail::is_proper_impl(c, mu, n_samples, seed, tol, c.rho.dim_of("A1"),
                                c.v.dim_of("A2"), c.rho.dim_of("B1"), c.v.dim_of("B2"),
                                w_tilde);
}

inline ProperReport is_proper(const SerialCircuit& c, int mu, int n_samples = 100,
                              std::uint64_t seed = 1, double tol = 1e-8) {
  if (mu < 0 || mu >= static_cast<int>(c.projectors.size()))
    throw BadParameter("no such outcome");
  const LabeledOperator w_tilde = from_comb(serial_conditioned_choi(c, mu).first);
  return detail::is_proper_impl(c, mu, n_samples, seed, tol, c.rho.dim_of("A1"),
                                c.u.dim_of("A2"), c.u.dim_of("A2"), c.v.dim_of("B2"),
                                w_tilde);
}

// Every parallel circuit embeds into the serial form: Bob's input is parked
// in the ancilla space, the first unitary merely swaps it with Alice's
// output, and the projectors ignore the parked wire.
inline SerialCircuit serial_embedding(const ParallelCircuit& c) {
  const int dA2 = c.v.dim_of("A2");
  const int dB1 = c.rho.dim_of("B1");
  if (dA2 != dB1)
    throw BadDimension("embedding needs Alice's output dim to match Bob's input dim");
  // U = SWAP between A2 and the parked wire, extended by identity elsewhere.
  Matrix swap = Matrix::Zero(static_cast<Eigen::Index>(dA2) * dB1,
                             static_cast<Eigen::Index>(dA2) * dB1);
  for (int a = 0; a < dA2; ++a)
    for (int b = 0; b < dB1; ++b)
      swap(static_cast<Eigen::Index>(a) * dB1 + b, static_cast<Eigen::Index>(b) * dA2 + a) = 1.0;
  LabeledOperator u({{"A2", dA2}, {"_hold", dB1}}, std::move(swap));
  for (const auto& n : c.anc) {
    const SubsystemLabel l{n, c.rho.dim_of(n)};
    u = tensor(u, identity_operator({l}));
  }
  // After the swap the parked wire carries Alice's output; V acts on it as A2.
  LabeledOperator v = c.v.renamed({{"A2", "_hold"}});
  LabeledOperator rho = c.rho.renamed({{"B1", "_hold"}});
  std::vector<LabeledOperator> projectors;
  const SubsystemLabel hold{"_hold", dA2};
  for (const auto& p : c.projectors) projectors.push_back(tensor(p, identity_operator({hold})));
  return make_serial_circuit(std::move(rho), std::move(u), std::move(v), std::move(projectors));
}

}  // namespace acausal
