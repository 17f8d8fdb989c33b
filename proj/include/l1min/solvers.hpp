#pragma once

#include "l1min/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace l1min {

enum class Algorithm { pdipa, homotopy, gpsr, tnipm, ist, fista, palm, dalm };

std::string_view to_string(Algorithm a);
/// Accepts the names above plus "gp" for gpsr. Throws InvalidArgument.
Algorithm parse_algorithm(std::string_view name);
std::vector<Algorithm> all_algorithms();

/// Solvers whose default problem is the equality-constrained one. pdipa
/// ignores lambda; palm and dalm switch to the Lagrangian form only when
/// config.lambda is set explicitly.
bool is_equality_form(Algorithm a);

/// Run one solver. Lagrangian solvers use config.lambda or default_lambda().
SolverResult run_solver(Algorithm a, const OperatorProblem& problem, const SolverConfig& config);
SolverResult run_solver(Algorithm a, const ProblemInstance& problem, const SolverConfig& config);

}  // namespace l1min
