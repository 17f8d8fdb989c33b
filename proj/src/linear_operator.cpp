#include "l1min/linear_operator.hpp"

#include "l1min/errors.hpp"

namespace l1min {

Matrix LinearOperator::columns(std::span<const Index> idx) const {
  Matrix out(rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Index>(k)) = column(idx[k]);
  }
  return out;
}

Vector LinearOperator::column_norms_sq() const {
  Vector out(cols());
  for (Index j = 0; j < cols(); ++j) out[j] = column(j).squaredNorm();
  return out;
}

void DenseView::apply_to(const Vector& x, Vector& out) const {
  if (x.size() != a_->cols()) {
    throw InvalidArgument("DenseView::apply: vector length does not match columns");
  }
  out.noalias() = (*a_) * x;
}

void DenseView::adjoint_to(const Vector& r, Vector& out) const {
  if (r.size() != a_->rows()) {
    throw InvalidArgument("DenseView::adjoint: vector length does not match rows");
  }
  out.noalias() = a_->transpose() * r;
}

Matrix DenseView::weighted_gram(const Vector& w) const {
  if (w.size() != a_->cols()) {
    throw InvalidArgument("DenseView::weighted_gram: weight length mismatch");
  }
  const Matrix scaled = (*a_) * w.cwiseSqrt().asDiagonal();
  Matrix g = Matrix::Zero(a_->rows(), a_->rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  return g.selfadjointView<Eigen::Lower>();
}

Matrix DenseView::columns(std::span<const Index> idx) const {
  Matrix out(a_->rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Index>(k)) = a_->col(idx[k]);
  }
  return out;
}

Vector DenseView::column_norms_sq() const { return a_->colwise().squaredNorm().transpose(); }

double spectral_norm_sq(const LinearOperator& op, double tol, int max_iter) {
  return spectral_norm_sq([&](const Vector& x) { return op.apply(x); },
                          [&](const Vector& r) { return op.adjoint(r); }, op.cols(), tol,
                          max_iter);
}

}  // namespace l1min
