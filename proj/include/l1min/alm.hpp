#pragma once

#include "l1min/model.hpp"

#include <functional>

namespace l1min {

/// Outer iterate of the primal method.
struct AlmState {
  Vector x;
  Vector y;
  double mu = 1.0;
  double rho = 2.0;
  double tau = 1.0;
};

using AlmObserver = std::function<void(const AlmState&)>;

/// min ||x||_1 s.t. A x = b by the augmented Lagrangian with a FISTA inner solver.
/// With config.lambda set, min lambda ||x||_1 + 1/2 ||b - A x||^2 instead,
/// through the split A x + r = b.
SolverResult palm_solve(const ProblemInstance& problem, const SolverConfig& config);
SolverResult palm_solve(const OperatorProblem& problem, const SolverConfig& config,
                        const AlmObserver& observer = {});

struct DalmState {
  Vector x;
  Vector y;
  Vector z;
  double beta = 1.0;
};

using DalmObserver = std::function<void(const DalmState&)>;

/// Least-squares multiplier step: (beta A A^T + lambda I) y = beta A z_next - (A x - b).
/// gram_chol must factor A A^T + (lambda / beta) I.
Vector dual_y_solve(const CholFactor& gram_chol, const LinearOperator& a, const Vector& x,
                    const Vector& z_next, const Vector& b, double beta);

/// Factor A A^T + shift I once; throws IllConditioned when it is singular.
CholFactor factor_row_gram(const LinearOperator& a, double shift = 0.0);

/// min ||x||_1 s.t. A x = b by augmented Lagrangian iterations on the dual
/// max b^T y s.t. ||A^T y||_inf <= 1. With config.lambda set the dual gains
/// the term -lambda/2 ||y||^2 and the primal becomes the Lagrangian form.
SolverResult dalm_solve(const ProblemInstance& problem, const SolverConfig& config);
SolverResult dalm_solve(const OperatorProblem& problem, const SolverConfig& config,
                        const DalmObserver& observer = {});

}  // namespace l1min
