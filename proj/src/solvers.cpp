#include "l1min/solvers.hpp"

#include "l1min/alm.hpp"
#include "l1min/errors.hpp"
#include "l1min/gradient_projection.hpp"
#include "l1min/homotopy.hpp"
#include "l1min/pdipa.hpp"
#include "l1min/shrinkage.hpp"

#include <string>

namespace l1min {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pdipa: return "pdipa";
    case Algorithm::homotopy: return "homotopy";
    case Algorithm::gpsr: return "gpsr";
    case Algorithm::tnipm: return "tnipm";
    case Algorithm::ist: return "ist";
    case Algorithm::fista: return "fista";
    case Algorithm::palm: return "palm";
    case Algorithm::dalm: return "dalm";
  }
  return "unknown";
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::pdipa, Algorithm::homotopy, Algorithm::gpsr, Algorithm::tnipm,
          Algorithm::ist,   Algorithm::fista,    Algorithm::palm, Algorithm::dalm};
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "gp") return Algorithm::gpsr;
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(name) +
                        "' (expected pdipa, homotopy, gp, gpsr, tnipm, ist, fista, palm or dalm)");
}

bool is_equality_form(Algorithm a) {
  return a == Algorithm::pdipa || a == Algorithm::palm || a == Algorithm::dalm;
}

SolverResult run_solver(Algorithm a, const OperatorProblem& problem, const SolverConfig& config) {
  if (problem.b.size() != problem.op.rows()) {
    throw InvalidArgument("dimension mismatch: dictionary has " + std::to_string(problem.op.rows()) +
                          " rows but b has length " + std::to_string(problem.b.size()));
  }
  const double lambda = config.lambda.value_or(default_lambda(problem));
  // A^T b = 0: zero is optimal for every lambda.
  if (!config.lambda && !(lambda > 0.0) && !is_equality_form(a)) {
    SolverResult res;
    res.algorithm = std::string(to_string(a));
    res.x = Vector::Zero(problem.op.cols());
    res.converged = true;
    res.lambda = lambda;
    return res;
  }
  SolverConfig cfg = config;
  cfg.lambda = lambda;
  switch (a) {
    case Algorithm::pdipa: return pdipa_solve(problem, config);
    case Algorithm::homotopy: return homotopy_solve(problem, lambda, config);
    case Algorithm::gpsr: return gpsr_solve(problem, lambda, config);
    case Algorithm::tnipm: return tnipm_solve(problem, lambda, config);
    case Algorithm::ist: return ist_solve(problem, cfg);
    case Algorithm::fista: return fista_solve(problem, cfg);
    case Algorithm::palm: return palm_solve(problem, config);
    case Algorithm::dalm: return dalm_solve(problem, config);
  }
  throw InvalidArgument("unknown algorithm");
}

SolverResult run_solver(Algorithm a, const ProblemInstance& problem, const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return run_solver(a,
                    OperatorProblem{view, problem.b,
                                    problem.ground_truth ? &*problem.ground_truth : nullptr},
                    config);
}

}  // namespace l1min
