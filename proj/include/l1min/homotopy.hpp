#pragma once

#include "l1min/model.hpp"
#include "l1min/numerics.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace l1min {

/// Working state of the solution path at one breakpoint.
struct PathState {
  Vector x;
  /// Active set in insertion order; chol factors A_I^T A_I in this order.
  std::vector<Index> support;
  double lambda = 0.0;
  /// c = A^T (b - A x).
  Vector c;
  CholFactor chol;
};

struct BreakpointGammas {
  double gamma_plus = std::numeric_limits<double>::infinity();
  Index i_plus = -1;
  double gamma_minus = std::numeric_limits<double>::infinity();
  Index i_minus = -1;
};

struct Breakpoint {
  enum class Event { start, add, remove, target };
  double lambda = 0.0;
  Index support_size = 0;
  double objective = 0.0;
  Event event = Event::start;
  Index index = -1;
};

const char* to_string(Breakpoint::Event e);

/// Direction of the path: d_I solves A_I^T A_I d_I = sgn(c_I), zero elsewhere.
Vector update_direction(const PathState& state, const LinearOperator& a);

/// Step lengths to the next entering and leaving events. a_dir = A^T A d.
BreakpointGammas breakpoint_gammas(const PathState& state, const Vector& d,
                                   const LinearOperator& a);
BreakpointGammas breakpoint_gammas(const PathState& state, const Vector& d, const Vector& a_dir,
                                   Index skip_entering = -1);

using PathObserver = std::function<void(const PathState&)>;

struct HomotopyRun {
  SolverResult result;
  std::vector<Breakpoint> path;
  /// Dense refactorizations of A_I^T A_I forced by degenerate supports.
  int refactorizations = 0;
};

/// Follow the path from lambda = ||A^T b||_inf down to target_lambda.
/// The observer, when set, sees the state after every breakpoint.
HomotopyRun homotopy_path(const OperatorProblem& problem, double target_lambda,
                          const SolverConfig& config, const PathObserver& observer = {});

SolverResult homotopy_solve(const ProblemInstance& problem, double target_lambda,
                            const SolverConfig& config);
SolverResult homotopy_solve(const OperatorProblem& problem, double target_lambda,
                            const SolverConfig& config);

/// CSV columns: lambda,support_size,objective,event,index
void write_path_csv(std::ostream& out, const std::vector<Breakpoint>& path);

}  // namespace l1min
