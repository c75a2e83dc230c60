#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "acausal/labeled_operator.hpp"
#include "acausal/rng.hpp"

namespace acausal {

// Kraus representation of a completely positive map between two named wires.
struct KrausMap {
  SubsystemLabel in_label;
  SubsystemLabel out_label;
  std::vector<Matrix> kraus;  // each out_dim x in_dim
};

// Choi representation on labels [out, in]. The convention is unnormalized:
// the identity channel has Choi sum_nm |nn><mm| with trace d, and a map is
// trace preserving iff tr_out(M) = 1_in.
struct ChoiOperator {
  LabeledOperator op;

  const SubsystemLabel& out_label() const { return op.labels().at(0); }
  const SubsystemLabel& in_label() const { return op.labels().at(1); }
  int out_dim() const { return out_label().dim; }
  int in_dim() const { return in_label().dim; }

  ChoiOperator renamed(const std::string& out_name, const std::string& in_name) const {
    return ChoiOperator{op.renamed({{out_label().name, out_name}, {in_label().name, in_name}})};
  }
};

// One measurement device: CP branches indexed by outcome, summing to a CPTP map.
struct Instrument {
  std::vector<ChoiOperator> outcomes;

  int size() const { return static_cast<int>(outcomes.size()); }
  int in_dim() const { return outcomes.at(0).in_dim(); }
  int out_dim() const { return outcomes.at(0).out_dim(); }
};

namespace detail {

inline void check_kraus_shapes(const KrausMap& m) {
  if (m.kraus.empty()) throw BadKraus("empty Kraus list");
  for (const auto& k : m.kraus)
    if (k.rows() != m.out_label.dim || k.cols() != m.in_label.dim)
      throw BadKraus("Kraus matrix shape does not match declared wire dims");
}

}  // namespace detail

// Choi matrix of a CP map from its Kraus operators. The map must be trace
// non-increasing: sum_k K^dag K <= 1 (tolerance 1e-8).
inline ChoiOperator choi_from_kraus(const KrausMap& m) {
  detail::check_kraus_shapes(m);
  const int d_in = m.in_label.dim;
  const int d_out = m.out_label.dim;
  Matrix gram = Matrix::Zero(d_in, d_in);
  for (const auto& k : m.kraus) gram += k.adjoint() * k;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.eigenvalues().maxCoeff() > 1.0 + 1e-8)
    throw BadKraus("Kraus operators exceed trace preservation");
  Matrix choi = Matrix::Zero(static_cast<Eigen::Index>(d_out) * d_in,
                             static_cast<Eigen::Index>(d_out) * d_in);
  for (const auto& k : m.kraus) {
    Vector v(static_cast<Eigen::Index>(d_out) * d_in);
    for (int i = 0; i < d_out; ++i)
      for (int n = 0; n < d_in; ++n) v(static_cast<Eigen::Index>(i) * d_in + n) = k(i, n);
    choi += v * v.adjoint();
  }
  return ChoiOperator{LabeledOperator({m.out_label, m.in_label}, std::move(choi))};
}

// Action of a Choi matrix on a state: rho' = tr_in[(1_out x rho^T) M].
inline LabeledOperator apply_choi(const ChoiOperator& m, const LabeledOperator& rho) {
  if (rho.labels().size() != 1) throw BadDimension("apply_choi expects a single-wire state");
  if (rho.dim() != m.in_dim()) throw BadDimension("state dim does not match channel input");
  const LabeledOperator rho_t =
      transposed(rho).renamed({{rho.labels()[0].name, m.in_label().name}});
  const LabeledOperator padded = tensor(identity_operator({m.out_label()}), rho_t);
  const LabeledOperator prod(m.op.labels(), padded.matrix() * m.op.matrix());
  return partial_trace(prod, {m.in_label().name});
}

// Complete positivity plus trace preservation, both at the given tolerance.
inline bool is_cptp(const ChoiOperator& m, double tol = 1e-10) {
  const Matrix& mat = m.op.matrix();
  if ((mat - mat.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(((mat + mat.adjoint()) / 2.0).eval());
  if (es.eigenvalues().minCoeff() < -tol) return false;
  const LabeledOperator marg = partial_trace(m.op, {m.out_label().name});
  return (marg.matrix() - Matrix::Identity(m.in_dim(), m.in_dim())).cwiseAbs().maxCoeff() <= tol;
}

// Kraus operators from a Choi matrix via its eigendecomposition. Eigenvalues
// below rel_threshold * max are dropped.
inline std::vector<Matrix> kraus_from_choi(const ChoiOperator& m, double rel_threshold = 1e-12) {
  const EigResult e = herm_eig(m.op);
  const double top = e.values.maxCoeff();
  if (e.values.minCoeff() < -1e-8)
    throw NotPSD("Choi matrix has a significantly negative eigenvalue");
  std::vector<Matrix> out;
  const int d_in = m.in_dim();
  const int d_out = m.out_dim();
  for (Eigen::Index k = 0; k < e.values.size(); ++k) {
    const double lam = e.values(k);
    if (lam <= 0.0 || lam < rel_threshold * std::max(top, 0.0)) continue;
    Matrix kr(d_out, d_in);
    for (int i = 0; i < d_out; ++i)
      for (int n = 0; n < d_in; ++n)
        kr(i, n) = std::sqrt(lam) * e.vectors(static_cast<Eigen::Index>(i) * d_in + n, k);
    out.push_back(std::move(kr));
  }
  if (out.empty()) out.push_back(Matrix::Zero(d_out, d_in));
  return out;
}

inline ChoiOperator instrument_total(const Instrument& ins) {
  if (ins.outcomes.empty()) throw BadKraus("instrument has no outcomes");
  LabeledOperator acc = ins.outcomes[0].op;
  for (std::size_t k = 1; k < ins.outcomes.size(); ++k) acc = acc + ins.outcomes[k].op;
  return ChoiOperator{std::move(acc)};
}

// Largest deviation of the summed instrument from trace preservation.
inline double instrument_completeness_residual(const Instrument& ins) {
  const ChoiOperator total = instrument_total(ins);
  const LabeledOperator marg = partial_trace(total.op, {total.out_label().name});
  const int d = total.in_dim();
  return (marg.matrix() - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

inline ChoiOperator unitary_channel(const Matrix& u, const SubsystemLabel& out,
                                    const SubsystemLabel& in) {
  return choi_from_kraus(KrausMap{in, out, {u}});
}

inline ChoiOperator identity_channel(const SubsystemLabel& out, const SubsystemLabel& in) {
  if (out.dim != in.dim) throw BadDimension("identity channel needs equal dims");
  return unitary_channel(Matrix::Identity(in.dim, in.dim), out, in);
}

// rho -> 1_out/d_out * tr(rho). Choi is 1_out/d_out x 1_in.
inline ChoiOperator depolarizing_channel(const SubsystemLabel& out, const SubsystemLabel& in) {
  std::vector<Matrix> kraus;
  const double s = 1.0 / std::sqrt(static_cast<double>(out.dim));
  for (int i = 0; i < out.dim; ++i)
    for (int j = 0; j < in.dim; ++j) {
      Matrix k = Matrix::Zero(out.dim, in.dim);
      k(i, j) = s;
      kraus.push_back(std::move(k));
    }
  return choi_from_kraus(KrausMap{in, out, kraus});
}

// Haar-seeded instrument with n_outcomes CP branches summing to a CPTP map.
// Built from a random isometry into out x ancilla, with ancilla indices
// assigned to outcomes round-robin.
inline Instrument random_instrument(int d_in, int d_out, int n_outcomes, std::uint64_t seed,
                                    const std::string& out_name = "X2",
                                    const std::string& in_name = "X1") {
  if (d_in < 1 || d_out < 1) throw BadDimension("instrument dims must be positive");
  if (n_outcomes < 1) throw BadDimension("instrument needs at least one outcome");
  Rng rng(seed);
  int m = (d_in + d_out * n_outcomes - 1) / (d_out * n_outcomes);
  if (m < 1) m = 1;
  const int d_anc = n_outcomes * m;
  const int d_total = d_out * d_anc;
  const Matrix u = haar_unitary(d_total, rng);
  const Matrix iso = u.leftCols(d_in);  // columns orthonormal
  const SubsystemLabel in{in_name, d_in};
  const SubsystemLabel out{out_name, d_out};
  Instrument ins;
  for (int mu = 0; mu < n_outcomes; ++mu) {
    std::vector<Matrix> kraus;
    for (int a = mu; a < d_anc; a += n_outcomes) {
      Matrix k(d_out, d_in);
      for (int i = 0; i < d_out; ++i)
        for (int n = 0; n < d_in; ++n)
          k(i, n) = iso(static_cast<Eigen::Index>(i) * d_anc + a, n);
      kraus.push_back(std::move(k));
    }
    ins.outcomes.push_back(choi_from_kraus(KrausMap{in, out, kraus}));
  }
  return ins;
}

// Projective measurement in `basis` followed by preparation of preps[m].
inline Instrument measure_prepare_instrument(const std::vector<Vector>& basis,
                                             const std::vector<Matrix>& preps,
                                             const SubsystemLabel& out,
                                             const SubsystemLabel& in) {
  if (basis.empty() || basis.size() != preps.size())
    throw BadBasis("need one preparation per basis vector");
  for (const auto& b : basis)
    if (b.size() != in.dim) throw BadBasis("basis vector dimension mismatch");
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const Complex g = basis[i].adjoint() * basis[j];
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - want) > 1e-10) throw BadBasis("basis is not orthonormal");
    }
  if (static_cast<int>(basis.size()) != in.dim)
    throw BadBasis("basis must be complete");
  Instrument ins;
  for (std::size_t m = 0; m < basis.size(); ++m) {
    const Matrix& rho = preps[m];
    if (rho.rows() != out.dim || rho.cols() != out.dim)
      throw BadBasis("preparation dimension mismatch");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(rho.trace().real() - 1.0) > 1e-9)
      throw BadBasis("preparation is not a unit-trace Hermitian state");
    // Choi of rho_m tr(<b_m| . |b_m>) is rho_m (x) conj(|b_m><b_m|).
    const Matrix proj = ket_projector(basis[m]).conjugate();
    LabeledOperator op = tensor(LabeledOperator({out}, rho), LabeledOperator({in}, proj));
    ins.outcomes.push_back(ChoiOperator{std::move(op)});
  }
  return ins;
}

// Unitary dilation of a CPTP map with equal input and output dimension:
// U(|psi> x |0>) = sum_k K_k|psi> x |k>. The remaining columns are completed
// deterministically by Gram-Schmidt over the canonical basis.
inline Matrix stinespring_unitary(const ChoiOperator& m, int* env_dim = nullptr) {
  if (m.in_dim() != m.out_dim())
    throw BadDimension("dilation here needs equal input/output dims");
  if (!is_cptp(m, 1e-9)) throw NotCPTP("dilation needs a CPTP Choi matrix");
  const auto kraus = kraus_from_choi(m);
  const int d = m.in_dim();
  const int r = static_cast<int>(kraus.size());
  const int D = d * r;
  if (env_dim) *env_dim = r;
  Matrix u = Matrix::Zero(D, D);
  std::vector<Vector> cols;
  for (int n = 0; n < d; ++n) {
    Vector v = Vector::Zero(D);
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i) * r + k) = kraus[static_cast<std::size_t>(k)](i, n);
    u.col(static_cast<Eigen::Index>(n) * r) = v;
    cols.push_back(std::move(v));
  }
  int filled = d;
  for (int cand = 0; cand < D && filled < D; ++cand) {
    Vector v = Vector::Zero(D);
    v(cand) = 1.0;
    for (const auto& c : cols) v -= (c.adjoint() * v)(0, 0) * c;
    const double nrm = v.norm();
    if (nrm < 1e-8) continue;
    v /= nrm;
    for (const auto& c : cols) v -= (c.adjoint() * v)(0, 0) * c;  // second pass for stability
    v /= v.norm();
    // place in the next free (n, a != 0) slot
    int slot = -1;
    for (int n = 0; n < d && slot < 0; ++n)
      for (int a = 1; a < r; ++a) {
        const Eigen::Index col = static_cast<Eigen::Index>(n) * r + a;
        if (u.col(col).norm() == 0.0) {
          slot = static_cast<int>(col);
          break;
        }
      }
    u.col(slot) = v;
    cols.push_back(std::move(v));
    ++filled;
  }
  if (filled != D) throw Error("unitary completion failed");
  return u;
}

}  // namespace acausal
