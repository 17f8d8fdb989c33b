#pragma once

#include "l1min/model.hpp"

#include <functional>

namespace l1min {

/// [A, -A] as an operator on split vectors [x+; x-] of length 2n.
class SplitOperator final : public LinearOperator {
 public:
  explicit SplitOperator(const LinearOperator& a) : a_(&a) {}

  Index rows() const override { return a_->rows(); }
  Index cols() const override { return 2 * a_->cols(); }
  void apply_to(const Vector& x, Vector& out) const override;
  void adjoint_to(const Vector& r, Vector& out) const override;
  Vector column(Index j) const override;
  /// A diag(w+ + w-) A^T: only a d x d product.
  Matrix weighted_gram(const Vector& w) const override;

 private:
  const LinearOperator* a_;
};

/// Primal-dual iterate of min c^T x s.t. A x = b, x >= 0.
struct PdipaState {
  Vector x;
  Vector y;
  Vector z;
  double mu = 0.0;
};

struct NewtonStep {
  Vector dx;
  Vector dy;
  Vector dz;
};

/// Newton direction for the perturbed KKT system with infeasibility terms:
///   A dx = b - A x,  A^T dy + dz = c - A^T y - z,  Z dx + X dz = mu_hat 1 - X Z 1.
/// Solved through the Schur complement A X Z^-1 A^T. Throws IllConditioned
/// when that matrix cannot be factored.
NewtonStep newton_kkt_step(const PdipaState& state, const LinearOperator& a, const Vector& b,
                           const Vector& c, double mu_hat);

struct LpResult {
  PdipaState state;
  int iterations = 0;
  bool converged = false;
  double primal_infeasibility = 0.0;  // ||A x - b|| / (1 + ||b||)
  double dual_infeasibility = 0.0;    // ||A^T y + z - c|| / (1 + ||c||)
  double gap = 0.0;                   // c^T x - b^T y
  std::vector<std::string> warnings;
};

using PdipaObserver = std::function<void(const PdipaState&)>;

/// Infeasible-start path-following method from x = z = 1, y = 0.
LpResult pdipa_lp(const LinearOperator& a, const Vector& b, const Vector& c,
                  const SolverConfig& config, const PdipaObserver& observer = {});

/// min ||x||_1 s.t. A x = b through the split LP on [A, -A].
SolverResult pdipa_solve(const ProblemInstance& problem, const SolverConfig& config);
SolverResult pdipa_solve(const OperatorProblem& problem, const SolverConfig& config,
                         const PdipaObserver& observer = {});

}  // namespace l1min
