#pragma once

#include "l1min/model.hpp"

#include <functional>

namespace l1min {

/// g_i = grad_i where z_i > 0 or grad_i < 0, zero elsewhere.
Vector gpsr_direction(const Vector& z, const Vector& grad);

/// g^T g / g^T B g for the split quadratic, with B applied through A only.
/// Flat curvature (g^T B g <= floor * g^T g) returns opts.alpha_max.
double gpsr_step_size(const Vector& g, const LinearOperator& a, const GpsrOptions& opts = {});

/// Q(z) = 1/2 ||b - A(z+ - z-)||^2 + lambda 1^T z for z = [z+; z-].
double gpsr_objective(const Vector& z, const OperatorProblem& problem, double lambda);

SolverResult gpsr_solve(const ProblemInstance& problem, double lambda, const SolverConfig& config);
/// Observer sees the split iterate z = [z+; z-] after every accepted step.
using SplitObserver = std::function<void(const Vector&)>;
SolverResult gpsr_solve(const OperatorProblem& problem, double lambda, const SolverConfig& config,
                        const SplitObserver& observer = {});

/// Point on the barrier domain -u < x < u.
struct BarrierIterate {
  Vector x;
  Vector u;
  double t = 1.0;
};

/// t (1/2 ||A x - b||^2 + lambda 1^T u) - sum log(u + x) - sum log(u - x);
/// +inf outside the domain.
double barrier_objective(const BarrierIterate& it, const OperatorProblem& problem, double lambda);

/// Observer sees every accepted barrier iterate.
using BarrierObserver = std::function<void(const BarrierIterate&)>;

SolverResult tnipm_solve(const ProblemInstance& problem, double lambda, const SolverConfig& config);
SolverResult tnipm_solve(const OperatorProblem& problem, double lambda, const SolverConfig& config,
                         const BarrierObserver& observer = {});

/// Re-solve the lasso optimality system on the support and signs of x:
/// A_S^T A_S x_S = A_S^T b - lambda s. Returns x unchanged unless the
/// candidate keeps its signs and lowers the KKT residual.
Vector polish_support(const Vector& x, const OperatorProblem& problem, double lambda,
                      bool* accepted = nullptr);

}  // namespace l1min
