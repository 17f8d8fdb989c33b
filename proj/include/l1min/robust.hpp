#pragma once

#include "l1min/homotopy.hpp"
#include "l1min/linear_operator.hpp"
#include "l1min/model.hpp"
#include "l1min/solvers.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace l1min {

/// [A, s I] applied implicitly; width n + d.
///
/// With s = 1 / weight the coefficient t on the identity block stands for the
/// error e = s t, so ||t||_1 = weight * ||e||_1.
class ExtendedDictionary final : public LinearOperator {
 public:
  explicit ExtendedDictionary(const Matrix& a, double identity_scale = 1.0);

  Index rows() const override { return a_->rows(); }
  Index cols() const override { return a_->cols() + a_->rows(); }
  void apply_to(const Vector& x, Vector& out) const override;
  void adjoint_to(const Vector& r, Vector& out) const override;
  Vector column(Index j) const override;
  Matrix weighted_gram(const Vector& w) const override;
  Vector column_norms_sq() const override;

  const Matrix& base() const { return *a_; }
  double identity_scale() const { return scale_; }

 private:
  const Matrix* a_;
  double scale_;
};

/// I - B (B^T B)^{-1} B^T, the projector onto the complement of range(B).
class ComplementProjector final : public LinearOperator {
 public:
  /// Throws IllConditioned when B is numerically rank deficient.
  explicit ComplementProjector(const Matrix& b);

  Index rows() const override { return q_.rows(); }
  Index cols() const override { return q_.rows(); }
  void apply_to(const Vector& x, Vector& out) const override;
  void adjoint_to(const Vector& r, Vector& out) const override { apply_to(r, out); }
  Vector column(Index j) const override;
  Matrix weighted_gram(const Vector& w) const override;
  Vector column_norms_sq() const override;

  /// Least-squares coefficients argmin_w ||B w - v||.
  Vector least_squares(const Vector& v) const;

 private:
  Matrix q_;  // orthonormal basis of range(B)
  Matrix r_;  // B = q_ r_
};

struct CabResult {
  Vector x;  // length n
  Vector e;  // length d
  SolverResult result;
};

/// Cross-and-bouquet recovery: minimize ||x||_1 + weight ||e||_1 subject to
/// (or regularized against) b = A x + e. Homotopy runs to lambda = 0 unless
/// config.lambda is set.
CabResult cab_solve(const Matrix& a, const Vector& b, Algorithm solver,
                    const SolverConfig& config, double weight = 1.0);

/// Sum of x_j^2 over each group.
Vector group_energy(const Vector& x, const std::vector<Index>& labels, Index groups);
/// Group with the largest energy; ties go to the lower index.
Index identify_group(const Vector& x, const std::vector<Index>& labels, Index groups);

struct AlignmentProblem {
  Matrix B;
  Vector b;
  std::optional<Vector> ground_truth_w;
  std::optional<Vector> ground_truth_e;

  /// Throws InvalidArgument unless d > m and sizes agree, IllConditioned if
  /// B is rank deficient.
  void validate() const;
};

/// Gaussian B (d x m, unit columns), w0 ~ N(0, I), and `corrupted` entries of
/// B w0 hit by gross errors of magnitude U[1, 2] and random sign.
AlignmentProblem gen_alignment_problem(Index d, Index m, Index corrupted, std::uint64_t seed);

struct AlignResult {
  Vector w;
  Vector e;
  SolverResult result;  // result.x = [w; e]
};

/// 1/2 ||b - B w - e||^2 + lambda ||e||_1.
double align_objective(const AlignmentProblem& p, const Vector& w, const Vector& e, double lambda);
/// ||B^T (b - B w - e)||_inf.
double align_w_residual(const AlignmentProblem& p, const Vector& w, const Vector& e);
/// KKT residual of the e-block against the residual b - B w - e.
double align_e_kkt(const AlignmentProblem& p, const Vector& w, const Vector& e, double lambda);
/// max |c| with c = b - B B^+ b; every lambda at or above it gives e = 0.
double align_lambda_max(const AlignmentProblem& p);

/// Log-barrier Newton method on (w, e, u), then a support polish.
AlignResult align_gp_solve(const AlignmentProblem& p, double lambda, const SolverConfig& config);
/// Path in lambda from align_lambda_max down to config.lambda (default 1e-2 of the start).
AlignResult align_homotopy_solve(const AlignmentProblem& p, const SolverConfig& config,
                                 std::vector<Breakpoint>* path = nullptr);
/// Iterative shrinkage on [B, I]; the w block is never thresholded.
AlignResult align_ist_solve(const AlignmentProblem& p, double lambda, const SolverConfig& config);
/// Augmented Lagrangian for min ||e||_1 s.t. B w + e = b.
AlignResult align_palm_solve(const AlignmentProblem& p, const SolverConfig& config);

/// Lambda used by align_homotopy_solve when config.lambda is unset.
double align_default_lambda(const AlignmentProblem& p);

}  // namespace l1min
