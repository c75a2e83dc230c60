#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "acausal/errors.hpp"

namespace acausal {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Absolute tolerance below which an operator counts as Hermitian.
inline constexpr double kHermitianTol = 1e-10;
// Eigenvalues above -kPsdTol are clamped to zero when taking square roots.
inline constexpr double kPsdTol = 1e-10;

// A named, dimensioned tensor factor of a composite Hilbert space.
struct SubsystemLabel {
  std::string name;
  int dim = 1;
  friend bool operator==(const SubsystemLabel&, const SubsystemLabel&) = default;
};

// Kronecker product; the row index of the result is i_a * rows(b) + i_b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Dense square operator on an ordered list of named subsystems. The row index
// runs over the labels in row-major order (earlier labels most significant).
// Values are immutable once constructed; every operation returns a new value.
class LabeledOperator {
 public:
  LabeledOperator() : mat_(Matrix::Zero(1, 1)) {}

  LabeledOperator(std::vector<SubsystemLabel> labels, Matrix entries)
      : labels_(std::move(labels)), mat_(std::move(entries)) {
    Eigen::Index d = 1;
    std::set<std::string> seen;
    for (const auto& l : labels_) {
      if (l.dim < 1) throw BadDimension("label '" + l.name + "' has dim " + std::to_string(l.dim));
      if (!seen.insert(l.name).second) throw LabelCollision("duplicate label '" + l.name + "'");
      d *= l.dim;
    }
    if (mat_.rows() != d || mat_.cols() != d) {
      std::ostringstream ss;
      ss << "matrix is " << mat_.rows() << "x" << mat_.cols() << " but labels give dim " << d;
      throw BadDimension(ss.str());
    }
    if (!mat_.allFinite()) throw BadDimension("matrix has non-finite entries");
  }

  const std::vector<SubsystemLabel>& labels() const { return labels_; }
  const Matrix& matrix() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }

  // Position of a label by name, or -1 if absent.
  int find(const std::string& name) const {
    for (std::size_t k = 0; k < labels_.size(); ++k)
      if (labels_[k].name == name) return static_cast<int>(k);
    return -1;
  }

  bool has_label(const std::string& name) const { return find(name) >= 0; }

  int position(const std::string& name) const {
    int k = find(name);
    if (k < 0) throw UnknownLabel("no label '" + name + "'");
    return k;
  }

  int dim_of(const std::string& name) const { return labels_[position(name)].dim; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto& l : labels_) out.push_back(l.name);
    return out;
  }

  // Same entries under new label names. Unmapped names are kept.
  LabeledOperator renamed(const std::map<std::string, std::string>& mapping) const {
    auto nl = labels_;
    for (auto& l : nl) {
      auto it = mapping.find(l.name);
      if (it != mapping.end()) l.name = it->second;
    }
    return LabeledOperator(std::move(nl), mat_);
  }

 private:
  std::vector<SubsystemLabel> labels_;
  Matrix mat_;
};

namespace detail {

// stride[k] = product of dims after position k (row-major index layout).
inline std::vector<Eigen::Index> row_strides(const std::vector<SubsystemLabel>& labels) {
  std::vector<Eigen::Index> s(labels.size());
  Eigen::Index acc = 1;
  for (int k = static_cast<int>(labels.size()) - 1; k >= 0; --k) {
    s[static_cast<std::size_t>(k)] = acc;
    acc *= labels[static_cast<std::size_t>(k)].dim;
  }
  return s;
}

// Flat offsets for every multi-index over the labels at `positions`,
// measured with the strides of the full label list.
inline std::vector<Eigen::Index> subindex_offsets(const std::vector<SubsystemLabel>& labels,
                                                  const std::vector<int>& positions) {
  const auto strides = row_strides(labels);
  Eigen::Index count = 1;
  for (int p : positions) count *= labels[static_cast<std::size_t>(p)].dim;
  std::vector<Eigen::Index> offsets(static_cast<std::size_t>(count), 0);
  std::vector<int> idx(positions.size(), 0);
  for (Eigen::Index r = 0; r < count; ++r) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < positions.size(); ++k)
      off += idx[k] * strides[static_cast<std::size_t>(positions[k])];
    offsets[static_cast<std::size_t>(r)] = off;
    for (int k = static_cast<int>(positions.size()) - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++idx[ku] < labels[static_cast<std::size_t>(positions[ku])].dim) break;
      idx[ku] = 0;
    }
  }
  return offsets;
}

inline std::vector<int> resolve_positions(const LabeledOperator& op,
                                          const std::vector<std::string>& names) {
  std::vector<int> out;
  std::set<int> seen;
  out.reserve(names.size());
  for (const auto& n : names) {
    int p = op.position(n);
    if (!seen.insert(p).second) throw LabelCollision("label '" + n + "' listed twice");
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

inline LabeledOperator identity_operator(std::vector<SubsystemLabel> labels) {
  Eigen::Index d = 1;
  for (const auto& l : labels) d *= l.dim;
  return LabeledOperator(std::move(labels), Matrix::Identity(d, d));
}

// Tensor product; the factors' label lists are concatenated.
inline LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  std::vector<SubsystemLabel> labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  return LabeledOperator(std::move(labels), kron(a.matrix(), b.matrix()));
}

// Reorder subsystems. `order` must list every label name exactly once.
inline LabeledOperator permute(const LabeledOperator& op, const std::vector<std::string>& order) {
  const auto& L = op.labels();
  const std::size_t n = L.size();
  if (order.size() != n)
    throw BadPermutation("order lists " + std::to_string(order.size()) + " of " +
                         std::to_string(n) + " labels");
  std::vector<int> src(n);
  std::vector<char> used(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    int i = op.find(order[k]);
    if (i < 0) throw BadPermutation("unknown label '" + order[k] + "' in permutation");
    if (used[static_cast<std::size_t>(i)]) throw BadPermutation("label '" + order[k] + "' listed twice");
    used[static_cast<std::size_t>(i)] = 1;
    src[k] = i;
  }
  bool ident = true;
  for (std::size_t k = 0; k < n; ++k)
    if (src[k] != static_cast<int>(k)) ident = false;
  if (ident) return op;

  const auto old_strides = detail::row_strides(L);
  std::vector<SubsystemLabel> nl(n);
  for (std::size_t k = 0; k < n; ++k) nl[k] = L[static_cast<std::size_t>(src[k])];

  const Eigen::Index D = op.dim();
  std::vector<Eigen::Index> map(static_cast<std::size_t>(D));
  std::vector<int> idx(n, 0);
  for (Eigen::Index r = 0; r < D; ++r) {
    Eigen::Index old = 0;
    for (std::size_t k = 0; k < n; ++k)
      old += idx[k] * old_strides[static_cast<std::size_t>(src[k])];
    map[static_cast<std::size_t>(r)] = old;
    for (int k = static_cast<int>(n) - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++idx[ku] < nl[ku].dim) break;
      idx[ku] = 0;
    }
  }
  Matrix out(D, D);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j)
      out(i, j) = op.matrix()(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
  return LabeledOperator(std::move(nl), std::move(out));
}

// Trace out the named subsystems; the remaining labels keep their order.
// Tracing every label yields a scalar (1x1 operator with no labels).
inline LabeledOperator partial_trace(const LabeledOperator& op,
                                     const std::vector<std::string>& over) {
  const auto traced = detail::resolve_positions(op, over);
  std::set<int> traced_set(traced.begin(), traced.end());
  std::vector<int> kept;
  std::vector<SubsystemLabel> kept_labels;
  for (std::size_t k = 0; k < op.labels().size(); ++k) {
    if (!traced_set.count(static_cast<int>(k))) {
      kept.push_back(static_cast<int>(k));
      kept_labels.push_back(op.labels()[k]);
    }
  }
  const auto koff = detail::subindex_offsets(op.labels(), kept);
  const auto toff = detail::subindex_offsets(op.labels(), traced);
  const auto DK = static_cast<Eigen::Index>(koff.size());
  Matrix out = Matrix::Zero(DK, DK);
  for (Eigen::Index i = 0; i < DK; ++i)
    for (Eigen::Index j = 0; j < DK; ++j) {
      Complex acc = 0.0;
      for (auto t : toff)
        acc += op.matrix()(koff[static_cast<std::size_t>(i)] + t,
                           koff[static_cast<std::size_t>(j)] + t);
      out(i, j) = acc;
    }
  return LabeledOperator(std::move(kept_labels), std::move(out));
}

// Transpose only the named subsystems.
inline LabeledOperator partial_transpose(const LabeledOperator& op,
                                         const std::vector<std::string>& over) {
  const auto pos = detail::resolve_positions(op, over);
  const auto& L = op.labels();
  const auto strides = detail::row_strides(L);
  const Eigen::Index D = op.dim();

  // digit[k][r]: component of flat index r on label k.
  std::vector<std::vector<Eigen::Index>> digit(L.size(), std::vector<Eigen::Index>(static_cast<std::size_t>(D)));
  for (std::size_t k = 0; k < L.size(); ++k)
    for (Eigen::Index r = 0; r < D; ++r)
      digit[k][static_cast<std::size_t>(r)] = (r / strides[k]) % L[k].dim;

  Matrix out(D, D);
  for (Eigen::Index r = 0; r < D; ++r)
    for (Eigen::Index c = 0; c < D; ++c) {
      Eigen::Index r2 = r, c2 = c;
      for (int p : pos) {
        auto pu = static_cast<std::size_t>(p);
        const Eigen::Index dr = digit[pu][static_cast<std::size_t>(r)];
        const Eigen::Index dc = digit[pu][static_cast<std::size_t>(c)];
        r2 += (dc - dr) * strides[pu];
        c2 += (dr - dc) * strides[pu];
      }
      out(r2, c2) = op.matrix()(r, c);
    }
  return LabeledOperator(op.labels(), std::move(out));
}

inline LabeledOperator transposed(const LabeledOperator& op) {
  return LabeledOperator(op.labels(), op.matrix().transpose());
}

inline LabeledOperator conjugated(const LabeledOperator& op) {
  return LabeledOperator(op.labels(), op.matrix().conjugate());
}

inline Complex trace(const LabeledOperator& op) { return op.matrix().trace(); }

inline double max_abs(const LabeledOperator& op) { return op.matrix().cwiseAbs().maxCoeff(); }

inline double frobenius_norm(const LabeledOperator& op) { return op.matrix().norm(); }

// Largest entry-wise deviation; b is permuted to a's label order first.
inline double max_abs_diff(const LabeledOperator& a, const LabeledOperator& b) {
  const LabeledOperator bp = permute(b, a.names());
  if (a.labels() != bp.labels()) throw BadDimension("operators live on different spaces");
  return (a.matrix() - bp.matrix()).cwiseAbs().maxCoeff();
}

inline LabeledOperator operator+(const LabeledOperator& a, const LabeledOperator& b) {
  const LabeledOperator bp = permute(b, a.names());
  if (a.labels() != bp.labels()) throw BadDimension("operators live on different spaces");
  return LabeledOperator(a.labels(), a.matrix() + bp.matrix());
}

inline LabeledOperator operator-(const LabeledOperator& a, const LabeledOperator& b) {
  const LabeledOperator bp = permute(b, a.names());
  if (a.labels() != bp.labels()) throw BadDimension("operators live on different spaces");
  return LabeledOperator(a.labels(), a.matrix() - bp.matrix());
}

inline LabeledOperator operator*(double s, const LabeledOperator& a) {
  return LabeledOperator(a.labels(), s * a.matrix());
}

inline LabeledOperator operator*(Complex s, const LabeledOperator& a) {
  return LabeledOperator(a.labels(), s * a.matrix());
}

struct EigResult {
  RealVector values;  // descending
  Matrix vectors;     // columns, matching order
};

// Eigendecomposition of a Hermitian operator (checked at kHermitianTol).
inline EigResult herm_eig(const LabeledOperator& op) {
  const Matrix& m = op.matrix();
  const double h = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (h > kHermitianTol) {
    std::ostringstream ss;
    ss << "operator is not Hermitian (deviation " << h << ")";
    throw NotHermitian(ss.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(((m + m.adjoint()) / 2.0).eval());
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  EigResult out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

// Positive-semidefinite square root. Eigenvalues in [-kPsdTol, 0) are
// clamped to zero; anything lower throws.
inline LabeledOperator psd_sqrt(const LabeledOperator& op) {
  EigResult e = herm_eig(op);
  const double lo = e.values.minCoeff();
  if (lo < -kPsdTol) {
    std::ostringstream ss;
    ss << "operator is not PSD (min eigenvalue " << lo << ")";
    throw NotPSD(ss.str());
  }
  const RealVector roots = e.values.cwiseMax(0.0).cwiseSqrt();
  Matrix s = e.vectors * roots.asDiagonal() * e.vectors.adjoint();
  s = ((s + s.adjoint()) / 2.0).eval();
  return LabeledOperator(op.labels(), std::move(s));
}

// B rho B^dag where B acts on a subset of rho's wires, identified by name.
// The result keeps the state's wire order.
// `rename` relabels wires of the result (used when B maps a wire to a new role).
inline LabeledOperator apply_sandwich(const LabeledOperator& state, const LabeledOperator& op,
                                      const std::map<std::string, std::string>& rename = {}) {
  std::vector<std::string> order = op.names();
  for (const auto& n : order) {
    if (!state.has_label(n)) throw UnknownLabel("state has no wire '" + n + "'");
    if (state.dim_of(n) != op.dim_of(n))
      throw BadDimension("wire '" + n + "' dimension mismatch");
  }
  std::set<std::string> front(order.begin(), order.end());
  for (const auto& l : state.labels())
    if (!front.count(l.name)) order.push_back(l.name);
  LabeledOperator s = permute(state, order);
  const Eigen::Index rest = s.dim() / op.dim();
  const Matrix big = kron(op.matrix(), Matrix::Identity(rest, rest));
  Matrix out = big * s.matrix() * big.adjoint();
  LabeledOperator result = permute(LabeledOperator(s.labels(), std::move(out)), state.names());
  return rename.empty() ? result : result.renamed(rename);
}

inline LabeledOperator apply_unitary(const LabeledOperator& state, const LabeledOperator& u,
                                     const std::map<std::string, std::string>& rename = {}) {
  return apply_sandwich(state, u, rename);
}

// sum_k (K_k x 1) rho (K_k x 1)^dag on the wire `in_name`, which is replaced
// by `out_label`. Kraus matrices may be rectangular (out_dim x in_dim).
inline LabeledOperator apply_kraus_channel(const LabeledOperator& state,
                                           const std::vector<Matrix>& kraus,
                                           const std::string& in_name,
                                           const SubsystemLabel& out_label) {
  if (kraus.empty()) throw BadKraus("empty Kraus list");
  const int d_in = state.dim_of(in_name);
  for (const auto& k : kraus)
    if (k.rows() != out_label.dim || k.cols() != d_in)
      throw BadKraus("Kraus matrix shape does not match the wire dimensions");
  std::vector<std::string> order{in_name};
  for (const auto& l : state.labels())
    if (l.name != in_name) order.push_back(l.name);
  LabeledOperator s = permute(state, order);
  const Eigen::Index rest = s.dim() / d_in;
  const Matrix id_rest = Matrix::Identity(rest, rest);
  Matrix out = Matrix::Zero(out_label.dim * rest, out_label.dim * rest);
  for (const auto& k : kraus) {
    const Matrix big = kron(k, id_rest);
    out += big * s.matrix() * big.adjoint();
  }
  auto labels = s.labels();
  labels[0] = out_label;
  return LabeledOperator(std::move(labels), std::move(out));
}

inline Vector basis_ket(int dim, int i) {
  Vector v = Vector::Zero(dim);
  v(i) = 1.0;
  return v;
}

inline Matrix ket_projector(const Vector& v) { return v * v.adjoint(); }

// |Phi><Phi| with |Phi> = sum_n |nn>, optionally normalized to unit trace.
inline LabeledOperator maximally_entangled(const SubsystemLabel& a, const SubsystemLabel& b,
                                           bool normalized) {
  if (a.dim != b.dim) throw BadDimension("entangled pair needs equal dims");
  const int d = a.dim;
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(d) * d);
  for (int n = 0; n < d; ++n) phi(static_cast<Eigen::Index>(n) * d + n) = 1.0;
  Matrix m = phi * phi.adjoint();
  if (normalized) m /= static_cast<double>(d);
  return LabeledOperator({a, b}, std::move(m));
}

// Fuse adjacent labels into one. The named group is brought to the front
// (in the given order); the fused wire keeps row-major index layout, so no
// entries move after the permutation.
inline LabeledOperator merge_labels(const LabeledOperator& op,
                                    const std::vector<std::string>& group,
                                    const std::string& merged_name) {
  if (group.empty()) throw BadPermutation("empty merge group");
  std::vector<std::string> order = group;
  std::set<std::string> in_group(group.begin(), group.end());
  if (in_group.size() != group.size()) throw LabelCollision("merge group repeats a label");
  for (const auto& l : op.labels())
    if (!in_group.count(l.name)) order.push_back(l.name);
  LabeledOperator s = permute(op, order);
  int fused = 1;
  for (const auto& n : group) fused *= s.dim_of(n);
  std::vector<SubsystemLabel> labels{{merged_name, fused}};
  for (std::size_t k = group.size(); k < s.labels().size(); ++k) labels.push_back(s.labels()[k]);
  return LabeledOperator(std::move(labels), s.matrix());
}

// Replace the named wire by its normalized identity: 1_w (x) tr_w(op) / d_w,
// with the wire kept in place.
inline LabeledOperator trace_and_replace(const LabeledOperator& op, const std::string& name) {
  const int pos = op.position(name);
  const SubsystemLabel lab = op.labels()[static_cast<std::size_t>(pos)];
  const auto orig = op.names();
  LabeledOperator rest = partial_trace(op, {name});
  LabeledOperator id = (1.0 / lab.dim) * identity_operator({lab});
  return permute(tensor(id, rest), orig);
}

}  // namespace acausal
