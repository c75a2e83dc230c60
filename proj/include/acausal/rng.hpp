#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "acausal/labeled_operator.hpp"

namespace acausal {

// Deterministic random source. The generator is the standardized mt19937_64
// engine; uniform and normal variates are derived here rather than through
// std::*_distribution, whose output is implementation-defined. Identical
// seeds therefore give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  Complex cnormal() { return Complex(normal(), normal()); }

  // Uniform integer in [0, n).
  int below(int n) { return static_cast<int>(uniform() * n); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline Matrix ginibre(int rows, int cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.cnormal();
  return g;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
// diagonal of R fixed, which removes the QR gauge freedom.
inline Matrix haar_unitary(int d, Rng& rng) {
  const Matrix g = ginibre(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k) {
    const Complex rkk = r(k, k);
    const double a = std::abs(rkk);
    q.col(k) *= (a > 0.0) ? rkk / a : Complex(1.0, 0.0);
  }
  return q;
}

inline Vector haar_ket(int d, Rng& rng) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.cnormal();
  return v / v.norm();
}

// Random density matrix GG^dag / tr(GG^dag); rank 0 means full rank.
inline Matrix random_density(int d, Rng& rng, int rank = 0) {
  if (rank <= 0 || rank > d) rank = d;
  const Matrix g = ginibre(d, rank, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return ((rho + rho.adjoint()) / 2.0).eval();
}

inline Matrix random_hermitian(int d, Rng& rng) {
  const Matrix g = ginibre(d, d, rng);
  return ((g + g.adjoint()) / 2.0).eval();
}

// Complete projective family: a Haar rotation of a partition of the
// computational basis into n_outcomes groups of near-equal size.
inline std::vector<Matrix> random_projector_family(int d, int n_outcomes, Rng& rng) {
  if (n_outcomes < 1 || n_outcomes > d)
    throw BadDimension("need 1 <= n_outcomes <= dim");
  const Matrix q = haar_unitary(d, rng);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n_outcomes));
  int start = 0;
  for (int m = 0; m < n_outcomes; ++m) {
    const int size = d / n_outcomes + (m < d % n_outcomes ? 1 : 0);
    Matrix p = Matrix::Zero(d, d);
    for (int k = start; k < start + size; ++k) p += q.col(k) * q.col(k).adjoint();
    out.push_back(((p + p.adjoint()) / 2.0).eval());
    start += size;
  }
  return out;
}

}  // namespace acausal
