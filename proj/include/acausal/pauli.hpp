#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "acausal/labeled_operator.hpp"

namespace acausal {

// Hermitian operator basis for one subsystem: element 0 is the identity, the
// rest are traceless, and tr(s_a s_b) = d * delta_ab. For d = 2 this is
// {1, sigma_x, sigma_y, sigma_z}; higher dimensions use the rescaled
// generalized Gell-Mann construction.
struct PauliBasis {
  int dim = 0;
  std::vector<Matrix> elements;
};

inline PauliBasis pauli_basis(int d) {
  if (d < 2) throw BadDimension("basis needs dim >= 2, got " + std::to_string(d));
  PauliBasis b;
  b.dim = d;
  b.elements.push_back(Matrix::Identity(d, d));
  const double scale = std::sqrt(d / 2.0);
  const Complex i(0.0, 1.0);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      Matrix sym = Matrix::Zero(d, d);
      sym(j, k) = 1.0;
      sym(k, j) = 1.0;
      b.elements.push_back(scale * sym);
      Matrix asym = Matrix::Zero(d, d);
      asym(j, k) = -i;
      asym(k, j) = i;
      b.elements.push_back(scale * asym);
    }
  }
  for (int l = 1; l < d; ++l) {
    Matrix diag = Matrix::Zero(d, d);
    for (int j = 0; j < l; ++j) diag(j, j) = 1.0;
    diag(l, l) = -static_cast<double>(l);
    diag *= std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
    b.elements.push_back(scale * diag);
  }
  return b;
}

// Real expansion coefficients of a Hermitian multi-wire operator in the
// product basis: op = sum_I w_I * (s_{I_0} x s_{I_1} x ...), where
// w_I = tr(op * B_I) / dim(op). Index I runs last wire fastest.
struct PauliCoefficients {
  std::vector<SubsystemLabel> labels;
  std::vector<int> sizes;  // d_k^2 per wire
  std::vector<double> w;   // flattened, row-major over `sizes`

  std::size_t index(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k)
      flat = flat * static_cast<std::size_t>(sizes[k]) + static_cast<std::size_t>(idx[k]);
    return flat;
  }
};

namespace detail {

inline std::vector<PauliBasis> per_wire_bases(const std::vector<SubsystemLabel>& labels) {
  std::vector<PauliBasis> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(pauli_basis(l.dim));
  return out;
}

// Visit the full product basis in row-major index order.
template <typename F>
void for_each_product_term(const std::vector<PauliBasis>& bases, F&& visit) {
  const std::size_t n = bases.size();
  std::vector<int> idx(n, 0);
  bool done = false;
  while (!done) {
    Matrix term = bases[0].elements[static_cast<std::size_t>(idx[0])];
    for (std::size_t k = 1; k < n; ++k)
      term = kron(term, bases[k].elements[static_cast<std::size_t>(idx[k])]);
    visit(idx, term);
    done = true;
    for (int k = static_cast<int>(n) - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++idx[ku] < static_cast<int>(bases[ku].elements.size())) {
        done = false;
        break;
      }
      idx[ku] = 0;
    }
  }
}

}  // namespace detail

inline PauliCoefficients pauli_coefficients(const LabeledOperator& op) {
  const Matrix& m = op.matrix();
  const double h = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (h > kHermitianTol) throw NotHermitian("coefficients need a Hermitian operator");
  if (op.labels().empty()) throw BadDimension("operator has no subsystems");
  PauliCoefficients out;
  out.labels = op.labels();
  const auto bases = detail::per_wire_bases(op.labels());
  std::size_t total = 1;
  for (const auto& b : bases) {
    out.sizes.push_back(static_cast<int>(b.elements.size()));
    total *= b.elements.size();
  }
  out.w.resize(total);
  const double D = static_cast<double>(op.dim());
  std::size_t flat = 0;
  detail::for_each_product_term(bases, [&](const std::vector<int>&, const Matrix& term) {
    out.w[flat++] = (m * term).trace().real() / D;
  });
  return out;
}

inline LabeledOperator pauli_reconstruct(const PauliCoefficients& c) {
  const auto bases = detail::per_wire_bases(c.labels);
  Eigen::Index D = 1;
  for (const auto& l : c.labels) D *= l.dim;
  Matrix m = Matrix::Zero(D, D);
  std::size_t flat = 0;
  detail::for_each_product_term(bases, [&](const std::vector<int>&, const Matrix& term) {
    m += c.w[flat++] * term;
  });
  return LabeledOperator(c.labels, std::move(m));
}

}  // namespace acausal
