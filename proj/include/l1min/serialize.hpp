#pragma once

#include "l1min/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>

namespace l1min {

using Json = nlohmann::ordered_json;

Json vector_to_json(const Vector& v);
/// Throws InvalidArgument unless j is an array of numbers.
Vector vector_from_json(const Json& j);

/// Every field, nested option blocks included. Unset lambda is null.
Json config_to_json(const SolverConfig& config);
/// Missing keys keep their defaults; unknown keys and wrong types throw InvalidArgument.
SolverConfig config_from_json(const Json& j);

/// Result document with keys in this order: algo, n, d, lambda, iterations,
/// converged, wall_time_seconds, x, objective, kkt_residual, config_echo,
/// seed, warnings. NaN numbers are written as null.
///
/// objective is 1/2 ||b - A x||^2 + lambda ||x||_1 for Lagrangian results and
/// ||x||_1 otherwise; kkt_residual is null for equality-constrained results.
Json result_to_json(const SolverResult& result, const OperatorProblem& problem,
                    const SolverConfig& config, std::optional<std::uint64_t> seed);

/// Finite numbers as-is, NaN and infinities as null.
Json number_or_null(double v);

}  // namespace l1min
