#pragma once

#include "l1min/linear_operator.hpp"
#include "l1min/numerics.hpp"

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace l1min {

/// A dense sparse-recovery instance: dictionary A (d x n), observation b and
/// optionally the generating signal and noise level.
struct ProblemInstance {
  Matrix A;
  Vector b;
  std::optional<Vector> ground_truth;
  std::optional<double> noise_sigma;

  Index d() const { return A.rows(); }
  Index n() const { return A.cols(); }

  /// Throws InvalidArgument when dimensions disagree or entries are not finite.
  void validate() const;
};

/// A dictionary given as an operator plus its observation. Pointers are
/// non-owning and must outlive the call they are passed to.
struct OperatorProblem {
  const LinearOperator& op;
  const Vector& b;
  const Vector* ground_truth = nullptr;
};

struct StoppingRule {
  enum class Kind { relative_objective, relative_estimate, ground_truth_distance, kkt_residual };

  Kind kind = Kind::relative_estimate;
  double threshold = 1e-6;
};

std::string_view to_string(StoppingRule::Kind kind);
StoppingRule::Kind parse_stopping_kind(std::string_view name);

// Algorithm-specific constants. Defaults are the values documented in README.

struct PdipaOptions {
  double centering = 0.1;        // mu_hat = centering * x^T z / (2n)
  double step_fraction = 0.99;   // fraction-to-boundary factor
  double feasibility_tol = 1e-8; // relative primal and dual infeasibility
  double gap_tol = 1e-9;         // duality gap relative to 1 + |c^T x|
};

struct GpsrOptions {
  double alpha_max = 1e8;
  double curvature_floor = 1e-14;  // g^T B g <= floor * g^T g counts as flat
  int max_halvings = 50;
};

struct TnipmOptions {
  double t_growth = 10.0;
  double decrement_threshold = 0.5;  // Newton decrement that triggers t growth
  double pcg_tol = 1e-6;
  int pcg_max_iter = 500;
  int max_backtracks = 100;
  double armijo = 0.01;
  double backtrack = 0.5;
  bool polish = true;
};

struct HomotopyOptions {
  double tie_tol = 1e-12;
  double solve_residual_tol = 1e-6;
  double ridge = 1e-12;
};

struct IstOptions {
  double alpha0 = 1.0;
  double alpha_min = 1e-30;
  double alpha_max = 1e30;
  int max_doublings = 50;
  std::optional<double> lambda_start;  // default 0.9 ||A^T b||_inf
  double beta = 0.5;
  int min_stages = 5;
  double stage_tol = 1e-3;  // relative change ending an intermediate stage
  /// Per-coordinate multipliers of lambda; zero leaves a coordinate unpenalized.
  std::optional<Vector> weights;
};

struct FistaOptions {
  double L0 = 1.0;
  double eta = 1.5;
  double beta = 0.5;
  std::optional<double> lambda_start;  // default 0.9 ||A^T b||_inf
  bool continuation = true;
  bool exact_lipschitz = false;  // L = 1.01 ||A||^2, no backtracking
};

struct PalmOptions {
  double mu0 = 1.0;
  double rho = 2.0;
  int inner_max_iter = 200;
  double inner_tol_scale = 1e-2;  // inner loop stops at change <= scale / mu_k
};

struct DalmOptions {
  double beta = 1.0;
  bool cg_step = false;  // one CG step for the y-update instead of the exact solve
};

struct SolverConfig {
  /// Multiplier of the Lagrangian objective; unset means default_lambda().
  std::optional<double> lambda;
  double tol = 1e-6;
  int max_iter = 5000;
  StoppingRule stopping{};
  bool record_trace = true;

  PdipaOptions pdipa{};
  GpsrOptions gpsr{};
  TnipmOptions tnipm{};
  HomotopyOptions homotopy{};
  IstOptions ist{};
  FistaOptions fista{};
  PalmOptions palm{};
  DalmOptions dalm{};

  /// Throws InvalidArgument unless max_iter >= 1, tol > 0 and the stopping
  /// threshold is positive.
  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double residual_norm = 0.0;
  Index support_size = 0;
};

struct SolverResult {
  std::string algorithm;
  Vector x;
  int iterations = 0;
  double wall_time_seconds = 0.0;
  bool converged = false;
  /// lambda the result minimizes for; NaN for equality-constrained solvers.
  double lambda = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceEntry> trace;
  std::vector<std::string> warnings;
};

/// 1/2 ||b - A x||^2 + lambda ||x||_1.
double objective(const Vector& x, const ProblemInstance& problem, double lambda);
double objective(const Vector& x, const OperatorProblem& problem, double lambda);

/// Largest violation of A^T (b - A x) in lambda * d||x||_1. Zero iff x is optimal.
double kkt_residual(const Vector& x, const ProblemInstance& problem, double lambda);
double kkt_residual(const Vector& x, const OperatorProblem& problem, double lambda);
/// Same certificate given the correlation c = A^T (b - A x) directly.
double kkt_residual_from_correlation(const Vector& x, const Vector& c, double lambda);
/// Weighted penalty lambda * sum w_i |x_i|; coordinates with w_i = 0 need c_i = 0.
double kkt_residual_from_correlation(const Vector& x, const Vector& c, double lambda,
                                     const Vector& weights);

/// 1e-2 ||A^T b||_inf.
double default_lambda(const ProblemInstance& problem);
double default_lambda(const OperatorProblem& problem);

Index support_size(const Vector& x);

/// One entry of the history a stopping rule looks at.
struct Snapshot {
  Vector x;
  double objective = 0.0;
  /// kkt_residual / lambda; only read by the kkt-residual rule.
  double relative_kkt = std::numeric_limits<double>::quiet_NaN();
};

/// True iff the rule's quantity at the newest snapshot is below its threshold.
/// Relative rules need two snapshots and return false with fewer. The
/// ground-truth rule throws InvalidArgument when ground_truth is null.
bool check_stop(std::span<const Snapshot> history, const StoppingRule& rule,
                const Vector* ground_truth);

/// Keeps the last two snapshots and evaluates the configured rule.
class StopMonitor {
 public:
  StopMonitor(const StoppingRule& rule, const OperatorProblem& problem, double lambda);
  /// The monitor keeps a pointer to the problem, so temporaries are refused.
  StopMonitor(const StoppingRule& rule, OperatorProblem&& problem, double lambda) = delete;

  /// Record an iterate; returns true when the rule fires.
  bool update(const Vector& x, double objective);
  /// Same, with the correlation A^T (b - A x) already at hand.
  bool update(const Vector& x, double objective, const Vector& correlation);
  /// Same, with kkt_residual / lambda already at hand.
  bool update_relative_kkt(const Vector& x, double objective, double relative_kkt);

  void reset();
  const StoppingRule& rule() const { return rule_; }

 private:
  bool push(Snapshot s);

  StoppingRule rule_;
  const OperatorProblem* problem_;
  double lambda_;
  std::vector<Snapshot> history_;
};

/// Monotonic wall clock for solver bodies.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace l1min
