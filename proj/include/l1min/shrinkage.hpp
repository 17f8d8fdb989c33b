#pragma once

#include "l1min/model.hpp"

#include <vector>

namespace l1min {

/// Decreasing lambda sequence ending at lambda_target.
struct ContinuationSchedule {
  double lambda_start = 1.0;
  double beta = 0.5;
  double lambda_target = 1.0;

  void validate() const;
  /// Geometric by beta from lambda_start; when that reaches the target in
  /// fewer than min_stages steps the stages are spread evenly in log scale
  /// instead. The last entry is always lambda_target.
  std::vector<double> stages(int min_stages) const;
};

/// lambda_start = 0.9 ||A^T b||_inf (or opts.lambda_start), clipped to >= target.
ContinuationSchedule default_schedule(const OperatorProblem& problem, double lambda_target,
                                      const IstOptions& opts);

/// (s^T g) / (s^T s) clamped to [alpha_min, alpha_max]; g is a gradient difference.
double bb_alpha(const Vector& s, const Vector& g, double alpha_min = 1e-30,
                double alpha_max = 1e30);

/// (1 + sqrt(4 t^2 + 1)) / 2.
double fista_t_next(double t);

struct BacktrackResult {
  double L = 0.0;
  Vector x_next;
  int j = 0;
};

/// Smallest L = eta^j L_prev whose quadratic model majorizes F at the prox
/// point. Throws NumericalBreakdown after 100 increases.
BacktrackResult backtrack_L(const Vector& y, double L_prev, double eta, double lambda,
                            const OperatorProblem& problem);

SolverResult ist_solve(const ProblemInstance& problem, const ContinuationSchedule& schedule,
                       const SolverConfig& config);
SolverResult ist_solve(const OperatorProblem& problem, const ContinuationSchedule& schedule,
                       const SolverConfig& config);
/// Default schedule down to config.lambda (or the default lambda).
SolverResult ist_solve(const OperatorProblem& problem, const SolverConfig& config);

SolverResult fista_solve(const ProblemInstance& problem, const SolverConfig& config);
SolverResult fista_solve(const OperatorProblem& problem, const SolverConfig& config);

}  // namespace l1min
