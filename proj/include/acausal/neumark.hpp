#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acausal/circuits.hpp"
#include "acausal/process_matrix.hpp"

namespace acausal {

// Probabilistic circuit realization of an arbitrary process matrix. The
// parties' input wires are fed halves of maximally entangled pairs; the
// global unitary
//   V = sqrt(X) x |0><0|_R - sqrt(1 - X) x |0><1|_R
//     + sqrt(1 - X) x |1><0|_R + sqrt(X) x |1><1|_R
// with X = alpha W^T acts on the outputs and the kept pair halves; outcome
// R = 0 heralds success. The square roots commute (they share X's
// eigenbasis), which makes V exactly unitary. Success probability is
// alpha / d_in, maximal at alpha = 1 / lambda_max(W).
struct SynthesisResult {
  LabeledOperator initial_state;  // [A1, B1, E1, E2, R]
  LabeledOperator v;              // [B2, E2, A2, E1, R]
  std::string projector_label = "R";
  double p_succ = 0.0;
  double lambda_max = 0.0;
  double alpha = 0.0;
};

namespace detail {

// X's wires in circuit naming: the process wires with the party inputs
// renamed to the kept entangled-pair halves.
inline LabeledOperator synthesis_target(const ProcessMatrix& w, double alpha) {
  const LabeledOperator x = alpha * transposed(w.op());
  return x.renamed({{"B1", "E2"}, {"A1", "E1"}});
}

// sqrt(X) and sqrt(1 - X) evaluated in one shared eigenbasis, so the two
// roots commute to machine precision.
inline std::pair<Matrix, Matrix> commuting_roots(const Matrix& x) {
  const EigResult eig = herm_eig(LabeledOperator({{"_x", static_cast<int>(x.rows())}}, x));
  const Eigen::Index n = x.rows();
  RealVector root = RealVector::Zero(n);
  RealVector coroot = RealVector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lam = eig.values(k);
    if (lam < -1e-9) throw NotPSD("synthesis target has a negative eigenvalue");
    if (lam > 1.0 + 1e-9)
      throw BadParameter("alpha exceeds the invertibility bound 1 / lambda_max");
    root(k) = std::sqrt(std::max(lam, 0.0));
    coroot(k) = std::sqrt(std::max(1.0 - lam, 0.0));
  }
  Matrix sx = eig.vectors * root.asDiagonal() * eig.vectors.adjoint();
  Matrix cx = eig.vectors * coroot.asDiagonal() * eig.vectors.adjoint();
  sx = (sx + sx.adjoint()).eval() / 2.0;
  cx = (cx + cx.adjoint()).eval() / 2.0;
  return {std::move(sx), std::move(cx)};
}

}  // namespace detail

inline double success_probability(const ProcessMatrix& w, double alpha) {
  if (alpha <= 0.0) throw BadParameter("alpha must be positive");
  return alpha / w.d_in();
}

inline SynthesisResult synthesize(const ProcessMatrix& w,
                                  std::optional<double> alpha = std::nullopt) {
  SynthesisResult res;
  const EigResult eig = herm_eig(transposed(w.op()));
  res.lambda_max = eig.values(0);
  if (res.lambda_max < 1e-12)
    throw DegenerateProcess("process has no positive eigenvalue to normalize against");
  res.alpha = alpha.value_or(1.0 / res.lambda_max);
  if (res.alpha <= 0.0) throw BadParameter("alpha must be positive");
  if (res.alpha * res.lambda_max > 1.0 + 1e-9)
    throw BadParameter("alpha exceeds the invertibility bound 1 / lambda_max");
  res.p_succ = success_probability(w, res.alpha);

  const LabeledOperator x = detail::synthesis_target(w, res.alpha);
  auto [sx, cx] = detail::commuting_roots(x.matrix());
  Matrix k00 = Matrix::Zero(2, 2), k01 = Matrix::Zero(2, 2);
  Matrix k10 = Matrix::Zero(2, 2), k11 = Matrix::Zero(2, 2);
  k00(0, 0) = 1.0;
  k01(0, 1) = 1.0;
  k10(1, 0) = 1.0;
  k11(1, 1) = 1.0;
  Matrix vm = kron(sx, k00) - kron(cx, k01) + kron(cx, k10) + kron(sx, k11);
  std::vector<SubsystemLabel> v_labels = x.labels();
  v_labels.push_back({res.projector_label, 2});
  res.v = LabeledOperator(v_labels, std::move(vm));

  const int dA1 = w.dim_of("A1");
  const int dB1 = w.dim_of("B1");
  res.initial_state =
      tensor(maximally_entangled({"A1", dA1}, {"E1", dA1}, true),
             tensor(maximally_entangled({"B1", dB1}, {"E2", dB1}, true),
                    LabeledOperator({{res.projector_label, 2}},
                                    ket_projector(basis_ket(2, 0)))));
  return res;
}

struct DilationReport {
  double unitarity_residual = 0.0;   // max |V V^dag - 1|
  double block_residual = 0.0;       // max |<0|V|0>_R - sqrt(X)|
  double complement_min_eig = 0.0;   // smallest eigenvalue of 1 - X
};

inline DilationReport verify_dilation(const SynthesisResult& res, const ProcessMatrix& w) {
  DilationReport rep;
  const Matrix& vm = res.v.matrix();
  rep.unitarity_residual =
      (vm * vm.adjoint() - Matrix::Identity(vm.rows(), vm.cols())).cwiseAbs().maxCoeff();

  const LabeledOperator x = detail::synthesis_target(w, res.alpha);
  // <0|V|0>_R: R is the last label of V, hence the fastest index.
  const Eigen::Index d = x.matrix().rows();
  Matrix block = Matrix::Zero(d, d);
  LabeledOperator v_aligned = permute(res.v, [&] {
    std::vector<std::string> order = x.names();
    order.push_back(res.projector_label);
    return order;
  }());
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) block(r, c) = v_aligned.matrix()(2 * r, 2 * c);
  rep.block_residual = (block - psd_sqrt(x).matrix()).cwiseAbs().maxCoeff();

  const EigResult eig = herm_eig(x);
  rep.complement_min_eig = 1.0 - eig.values(0);
  return rep;
}

// Process conditioned on the failure outcome R = 1:
//   W_sharp = (1 - alpha W) / (d_in - alpha),
// the unique process with p_succ W + (1 - p_succ) W_sharp = 1 / d_in.
inline ProcessMatrix complementary_process(const SynthesisResult& res, const ProcessMatrix& w) {
  if (res.p_succ >= 1.0 - 1e-12)
    throw NoComplement("synthesis succeeds with certainty; the failure branch is empty");
  const LabeledOperator id = identity_operator(w.op().labels());
  return ProcessMatrix((1.0 / (w.d_in() - res.alpha)) * (id + (-res.alpha) * w.op()));
}

inline ParallelCircuit to_parallel_circuit(const SynthesisResult& res) {
  std::vector<LabeledOperator> projectors;
  const SubsystemLabel e1 = res.v.labels()[static_cast<std::size_t>(res.v.position("E1"))];
  const SubsystemLabel e2 = res.v.labels()[static_cast<std::size_t>(res.v.position("E2"))];
  for (int mu = 0; mu < 2; ++mu)
    projectors.push_back(tensor(identity_operator({e1, e2}),
                                LabeledOperator({{res.projector_label, 2}},
                                                ket_projector(basis_ket(2, mu)))));
  return make_parallel_circuit(res.initial_state, res.v, std::move(projectors));
}

inline JointTable simulate_synthesized(const SynthesisResult& res, const Instrument& jA,
                                       const Instrument& jB) {
  return brute_force_joint(to_parallel_circuit(res), jA, jB);
}

}  // namespace acausal
