#include "l1min/numerics.hpp"

#include "l1min/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace l1min {

Vector soft_threshold(const Vector& u, double a) {
  if (!(a >= 0.0)) {
    throw InvalidArgument("soft_threshold: threshold must be nonnegative, got " +
                          std::to_string(a));
  }
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    const double mag = std::abs(u[i]) - a;
    out[i] = mag > 0.0 ? std::copysign(mag, u[i]) : 0.0;
  }
  return out;
}

Vector soft_threshold(const Vector& u, double a, const Vector& weights) {
  if (!(a >= 0.0)) {
    throw InvalidArgument("soft_threshold: threshold must be nonnegative");
  }
  if (weights.size() != u.size()) {
    throw InvalidArgument("soft_threshold: weight vector length mismatch");
  }
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    const double mag = std::abs(u[i]) - a * weights[i];
    out[i] = mag > 0.0 ? std::copysign(mag, u[i]) : 0.0;
  }
  return out;
}

Vector project_box_linf(const Vector& z) { return z.cwiseMax(-1.0).cwiseMin(1.0); }

// ---------------------------------------------------------------------------
// CholFactor

CholFactor CholFactor::factorize(const Matrix& spd) {
  if (spd.rows() != spd.cols()) {
    throw InvalidArgument("CholFactor::factorize: matrix is not square");
  }
  CholFactor f;
  if (spd.rows() == 0) return f;
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("CholFactor::factorize: matrix is not positive definite");
  }
  f.r_ = llt.matrixU();
  if (!(f.min_diagonal() > 0.0)) {
    throw NotPositiveDefinite("CholFactor::factorize: zero pivot");
  }
  return f;
}

CholFactor CholFactor::from_upper(Matrix upper) {
  if (upper.rows() != upper.cols()) {
    throw InvalidArgument("CholFactor::from_upper: factor is not square");
  }
  CholFactor f;
  f.r_ = upper.triangularView<Eigen::Upper>();
  if (f.dim() > 0 && !(f.min_diagonal() > 0.0)) {
    throw NotPositiveDefinite("CholFactor::from_upper: diagonal must be positive");
  }
  return f;
}

Matrix CholFactor::reconstruct() const { return r_.transpose() * r_; }

double CholFactor::min_diagonal() const {
  if (dim() == 0) return std::numeric_limits<double>::infinity();
  return r_.diagonal().minCoeff();
}

void CholFactor::rank1(const Vector& v, int sign) {
  if (sign != 1 && sign != -1) {
    throw InvalidArgument("CholFactor::rank1: sign must be +1 or -1");
  }
  if (v.size() != dim()) {
    throw InvalidArgument("CholFactor::rank1: vector length does not match factor");
  }
  // Work on a copy so a failed downdate leaves the factor untouched.
  Matrix r = r_;
  Vector x = v;
  const Index n = dim();
  for (Index k = 0; k < n; ++k) {
    const double rkk = r(k, k);
    const double rr = rkk * rkk + sign * x[k] * x[k];
    if (!(rr > 0.0) || !std::isfinite(rr)) {
      throw NotPositiveDefinite("CholFactor::rank1: downdate loses positive definiteness");
    }
    const double rnew = std::sqrt(rr);
    const double c = rnew / rkk;
    const double s = x[k] / rkk;
    r(k, k) = rnew;
    for (Index j = k + 1; j < n; ++j) {
      r(k, j) = (r(k, j) + sign * s * x[j]) / c;
      x[j] = c * x[j] - s * r(k, j);
    }
  }
  r_ = std::move(r);
}

void CholFactor::append(const Vector& cross, double diag) {
  const Index k = dim();
  if (cross.size() != k) {
    throw InvalidArgument("CholFactor::append: cross-term length mismatch");
  }
  Vector col(k);
  if (k > 0) {
    col = r_.transpose().triangularView<Eigen::Lower>().solve(cross);
  }
  const double rr = diag - col.squaredNorm();
  if (!(rr > 0.0) || !std::isfinite(rr)) {
    throw NotPositiveDefinite("CholFactor::append: new column is linearly dependent");
  }
  Matrix grown = Matrix::Zero(k + 1, k + 1);
  grown.topLeftCorner(k, k) = r_;
  grown.topRightCorner(k, 1) = col;
  grown(k, k) = std::sqrt(rr);
  r_ = std::move(grown);
}

void CholFactor::remove(Index j) {
  const Index k = dim();
  if (j < 0 || j >= k) {
    throw InvalidArgument("CholFactor::remove: index out of range");
  }
  const Index tail = k - j - 1;
  Matrix shrunk = Matrix::Zero(k - 1, k - 1);
  shrunk.topLeftCorner(j, j) = r_.topLeftCorner(j, j);
  shrunk.topRightCorner(j, tail) = r_.topRightCorner(j, tail);
  if (tail > 0) {
    // Trailing block absorbs the deleted row: R33'^T R33' = R33^T R33 + r23 r23^T.
    CholFactor trailing;
    trailing.r_ = r_.bottomRightCorner(tail, tail);
    trailing.rank1(r_.row(j).tail(tail).transpose(), +1);
    shrunk.bottomRightCorner(tail, tail) = trailing.r_;
  }
  r_ = std::move(shrunk);
}

Vector CholFactor::solve(const Vector& rhs) const {
  if (rhs.size() != dim()) {
    throw InvalidArgument("CholFactor::solve: right-hand side length mismatch");
  }
  if (dim() == 0) return Vector(0);
  Vector y = r_.transpose().triangularView<Eigen::Lower>().solve(rhs);
  return r_.triangularView<Eigen::Upper>().solve(y);
}

CholFactor chol_rank1(const CholFactor& factor, const Vector& v, int sign) {
  CholFactor out = factor;
  out.rank1(v, sign);
  return out;
}

// ---------------------------------------------------------------------------
// PCG

PcgResult pcg_solve(const LinearMap& op, const Vector& rhs,
                    const std::optional<Vector>& inverse_diagonal, double tol,
                    int max_iter, const std::optional<Vector>& x0) {
  const Index n = rhs.size();
  if (inverse_diagonal && inverse_diagonal->size() != n) {
    throw InvalidArgument("pcg_solve: preconditioner length mismatch");
  }
  auto precondition = [&](const Vector& r) -> Vector {
    if (!inverse_diagonal) return r;
    return inverse_diagonal->cwiseProduct(r);
  };
  PcgResult out;
  out.x = x0 ? *x0 : Vector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  Vector r = rhs - (x0 ? op(out.x) : Vector::Zero(n));
  double best_res = r.norm();
  Vector best_x = out.x;
  if (best_res <= tol * rhs_norm) {
    out.converged = true;
    out.relative_residual = best_res / rhs_norm;
    return out;
  }
  Vector z = precondition(r);
  Vector p = z;
  double rz = r.dot(z);
  Vector x = out.x;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector q = op(p);
    const double curvature = p.dot(q);
    if (!std::isfinite(curvature) || !std::isfinite(rz)) {
      throw NumericalBreakdown("pcg_solve: non-finite value encountered");
    }
    if (curvature <= 0.0) break;
    const double alpha = rz / curvature;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    out.iterations = it;
    const double res = r.norm();
    if (!std::isfinite(res)) {
      throw NumericalBreakdown("pcg_solve: non-finite residual");
    }
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }
    if (res <= tol * rhs_norm) {
      out.converged = true;
      break;
    }
    z = precondition(r);
    const double rz_next = r.dot(z);
    if (rz == 0.0) break;
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  out.x = std::move(best_x);
  out.relative_residual = best_res / rhs_norm;
  return out;
}

// ---------------------------------------------------------------------------
// Power iteration

namespace {

constexpr std::uint64_t kPowerIterationSeed = 0x5eed5eed12345ULL;

Vector power_start(Index n) {
  std::mt19937_64 gen(kPowerIterationSeed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    // 53-bit uniform in [0, 1), mapped to [0.5, 1.5) so no entry is zero.
    v[i] = 0.5 + static_cast<double>(gen() >> 11) * 0x1.0p-53;
  }
  return v / v.norm();
}

}  // namespace

double spectral_norm_sq(const LinearMap& apply, const LinearMap& adjoint, Index cols,
                        double tol, int max_iter) {
  if (cols <= 0) throw InvalidArgument("spectral_norm_sq: empty operator");
  Vector v = power_start(cols);
  double estimate = 0.0;
  // The Rayleigh quotient moves slower than its error when the spectral gap
  // is small, so the stopping test is two orders tighter than tol.
  const double stop = 1e-2 * tol;
  for (int it = 0; it < max_iter; ++it) {
    const Vector av = apply(v);
    const double next = av.squaredNorm();
    Vector w = adjoint(av);
    const double wn = w.norm();
    // Treated as a zero operator; the start vector is generic enough that a
    // nonzero A mapping it to zero is not a practical concern.
    if (wn == 0.0) throw InvalidArgument("spectral_norm_sq: zero operator");
    if (!std::isfinite(wn)) throw NumericalBreakdown("spectral_norm_sq: non-finite");
    v = w / wn;
    if (it > 0 && std::abs(next - estimate) <= stop * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // One last Rayleigh quotient with the updated vector.
  return std::max(estimate, apply(v).squaredNorm());
}

double spectral_norm_sq(const Matrix& a, double tol, int max_iter) {
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    throw InvalidArgument("spectral_norm_sq: zero matrix");
  }
  return spectral_norm_sq([&](const Vector& x) -> Vector { return a * x; },
                          [&](const Vector& r) -> Vector { return a.transpose() * r; },
                          a.cols(), tol, max_iter);
}

Vector spd_solve(const Matrix& spd, const Vector& rhs) {
  return CholFactor::factorize(spd).solve(rhs);
}

}  // namespace l1min
