#pragma once

#include "l1min/numerics.hpp"

#include <span>

namespace l1min {

/// A d x n dictionary known through its action.
///
/// Solvers only touch the dictionary through this interface so structured
/// dictionaries such as [A, I] never need to be materialized.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  /// out = M x
  virtual void apply_to(const Vector& x, Vector& out) const = 0;
  /// out = M^T r
  virtual void adjoint_to(const Vector& r, Vector& out) const = 0;
  /// Column j of M as a dense vector.
  virtual Vector column(Index j) const = 0;
  /// M diag(w) M^T, a d x d matrix.
  virtual Matrix weighted_gram(const Vector& w) const = 0;

  /// Columns idx of M as a dense d x |idx| block.
  virtual Matrix columns(std::span<const Index> idx) const;
  /// Squared l2 norm of every column.
  virtual Vector column_norms_sq() const;

  Vector apply(const Vector& x) const {
    Vector out;
    apply_to(x, out);
    return out;
  }
  Vector adjoint(const Vector& r) const {
    Vector out;
    adjoint_to(r, out);
    return out;
  }
};

/// Non-owning view of a dense matrix. The matrix must outlive the view.
class DenseView final : public LinearOperator {
 public:
  explicit DenseView(const Matrix& a) : a_(&a) {}

  Index rows() const override { return a_->rows(); }
  Index cols() const override { return a_->cols(); }
  void apply_to(const Vector& x, Vector& out) const override;
  void adjoint_to(const Vector& r, Vector& out) const override;
  Vector column(Index j) const override { return a_->col(j); }
  Matrix weighted_gram(const Vector& w) const override;
  Matrix columns(std::span<const Index> idx) const override;
  Vector column_norms_sq() const override;

  const Matrix& matrix() const { return *a_; }

 private:
  const Matrix* a_;
};

/// ||M||_2^2 by power iteration on M^T M.
double spectral_norm_sq(const LinearOperator& op, double tol = 1e-6, int max_iter = 1000);

}  // namespace l1min
