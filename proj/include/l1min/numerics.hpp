#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace l1min {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// Dense d x n dictionary. Storage is column-major; CSV files are row-major.
using Matrix = Eigen::MatrixXd;

/// Componentwise sgn(u) * max(|u| - a, 0). Throws InvalidArgument for a < 0.
Vector soft_threshold(const Vector& u, double a);

/// Same map applied with a per-coordinate threshold a * weights(i).
/// A zero weight leaves that coordinate untouched.
Vector soft_threshold(const Vector& u, double a, const Vector& weights);

/// Clamp every entry to [-1, 1], the projection onto the unit l-infinity ball.
Vector project_box_linf(const Vector& z);

/// Upper-triangular Cholesky factor R with R^T R = M.
///
/// Besides full factorization it supports the O(k^2) edits an active-set
/// method needs: symmetric rank-1 update/downdate, appending a row/column
/// and deleting one. Deletion is a rank-1 update of the trailing block, so
/// nothing here refactors from scratch except factorize().
class CholFactor {
 public:
  CholFactor() = default;

  /// Factor an SPD matrix. Throws NotPositiveDefinite on failure.
  static CholFactor factorize(const Matrix& spd);
  /// Wrap an existing upper factor (diagonal must be strictly positive).
  static CholFactor from_upper(Matrix upper);

  Index dim() const { return r_.rows(); }
  const Matrix& upper() const { return r_; }
  /// R^T R.
  Matrix reconstruct() const;

  /// R^T R += sign * v v^T in place. sign must be +1 or -1.
  void rank1(const Vector& v, int sign);

  /// Grow M to [[M, cross], [cross^T, diag]].
  void append(const Vector& cross, double diag);
  /// Drop row/column j of M.
  void remove(Index j);

  /// Solve R^T R x = rhs.
  Vector solve(const Vector& rhs) const;

  double min_diagonal() const;

 private:
  Matrix r_;
};

/// Functional form of CholFactor::rank1: returns R' with R'^T R' = R^T R +/- v v^T.
CholFactor chol_rank1(const CholFactor& factor, const Vector& v, int sign);

struct PcgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
};

using LinearMap = std::function<Vector(const Vector&)>;

/// Preconditioned conjugate gradients for an SPD operator.
///
/// Stops when ||op(x) - rhs|| <= tol * ||rhs||. On zero or negative curvature,
/// or when the iteration budget runs out, returns the best iterate seen with
/// converged = false. Throws NumericalBreakdown if non-finite values appear.
PcgResult pcg_solve(const LinearMap& op, const Vector& rhs,
                    const std::optional<Vector>& inverse_diagonal, double tol,
                    int max_iter, const std::optional<Vector>& x0 = std::nullopt);

/// Power-iteration estimate of the largest eigenvalue of A^T A (= ||A||_2^2).
/// Deterministic start vector. Throws InvalidArgument for a zero matrix.
double spectral_norm_sq(const Matrix& a, double tol = 1e-6, int max_iter = 1000);

/// The same estimate for an operator given only through products.
double spectral_norm_sq(const LinearMap& apply, const LinearMap& adjoint, Index cols,
                        double tol = 1e-6, int max_iter = 1000);

/// Solve a small dense SPD system with a fresh factorization.
Vector spd_solve(const Matrix& spd, const Vector& rhs);

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace l1min
