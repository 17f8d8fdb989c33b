#pragma once

#include "l1min/numerics.hpp"
#include "l1min/synth.hpp"

#include <cstdint>

namespace l1min::testing {

inline Matrix random_matrix(Index r, Index c, synth::Rng& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

inline Vector random_vector(Index n, synth::Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

/// Well-conditioned SPD: G^T G + n I.
inline Matrix random_spd(Index n, synth::Rng& rng) {
  const Matrix g = random_matrix(n, n, rng);
  return g.transpose() * g + static_cast<double>(n) * Matrix::Identity(n, n);
}

/// Square matrix with orthonormal columns.
inline Matrix random_orthonormal(Index n, synth::Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline double rel_err(const Vector& a, const Vector& b) {
  const double base = b.norm();
  return base > 0.0 ? (a - b).norm() / base : (a - b).norm();
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace l1min::testing
