#include "l1min/model.hpp"

#include "l1min/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace l1min {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + " contains non-finite entries");
}

double relative_change(double prev, double cur) {
  const double diff = std::abs(cur - prev);
  if (diff == 0.0) return 0.0;
  if (prev == 0.0) return std::numeric_limits<double>::infinity();
  return diff / std::abs(prev);
}

}  // namespace

void ProblemInstance::validate() const {
  if (b.size() != A.rows()) {
    throw InvalidArgument("dimension mismatch: A is " + std::to_string(A.rows()) + "x" +
                          std::to_string(A.cols()) + " but b has length " +
                          std::to_string(b.size()));
  }
  if (ground_truth && ground_truth->size() != A.cols()) {
    throw InvalidArgument("dimension mismatch: ground truth has length " +
                          std::to_string(ground_truth->size()) + " but A has " +
                          std::to_string(A.cols()) + " columns");
  }
  if (!A.allFinite()) throw InvalidArgument("A contains non-finite entries");
  require_finite(b, "b");
  if (noise_sigma && !(*noise_sigma >= 0.0)) {
    throw InvalidArgument("noise sigma must be nonnegative");
  }
}

std::string_view to_string(StoppingRule::Kind kind) {
  switch (kind) {
    case StoppingRule::Kind::relative_objective: return "relative-objective";
    case StoppingRule::Kind::relative_estimate: return "relative-estimate";
    case StoppingRule::Kind::ground_truth_distance: return "ground-truth-distance";
    case StoppingRule::Kind::kkt_residual: return "kkt-residual";
  }
  return "unknown";
}

StoppingRule::Kind parse_stopping_kind(std::string_view name) {
  for (auto kind : {StoppingRule::Kind::relative_objective, StoppingRule::Kind::relative_estimate,
                    StoppingRule::Kind::ground_truth_distance, StoppingRule::Kind::kkt_residual}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown stopping rule '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (!(stopping.threshold > 0.0)) throw InvalidArgument("stopping threshold must be positive");
  if (lambda && !(*lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
}

double objective(const Vector& x, const OperatorProblem& problem, double lambda) {
  if (x.size() != problem.op.cols()) {
    throw InvalidArgument("objective: x has length " + std::to_string(x.size()) + ", expected " +
                          std::to_string(problem.op.cols()));
  }
  if (problem.b.size() != problem.op.rows()) {
    throw InvalidArgument("objective: b length does not match dictionary rows");
  }
  const Vector r = problem.b - problem.op.apply(x);
  return 0.5 * r.squaredNorm() + lambda * x.lpNorm<1>();
}

double objective(const Vector& x, const ProblemInstance& problem, double lambda) {
  DenseView view(problem.A);
  return objective(x, OperatorProblem{view, problem.b}, lambda);
}

double kkt_residual_from_correlation(const Vector& x, const Vector& c, double lambda) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x[i] != 0.0 ? std::abs(c[i] - lambda * sign_of(x[i]))
                                 : std::max(std::abs(c[i]) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

double kkt_residual_from_correlation(const Vector& x, const Vector& c, double lambda,
                                     const Vector& weights) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double t = lambda * weights[i];
    const double v = x[i] != 0.0 ? std::abs(c[i] - t * sign_of(x[i]))
                                 : std::max(std::abs(c[i]) - t, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

double kkt_residual(const Vector& x, const OperatorProblem& problem, double lambda) {
  if (x.size() != problem.op.cols()) throw InvalidArgument("kkt_residual: x length mismatch");
  const Vector c = problem.op.adjoint(problem.b - problem.op.apply(x));
  return kkt_residual_from_correlation(x, c, lambda);
}

double kkt_residual(const Vector& x, const ProblemInstance& problem, double lambda) {
  DenseView view(problem.A);
  return kkt_residual(x, OperatorProblem{view, problem.b}, lambda);
}

double default_lambda(const OperatorProblem& problem) {
  return 1e-2 * problem.op.adjoint(problem.b).lpNorm<Eigen::Infinity>();
}

double default_lambda(const ProblemInstance& problem) {
  return 1e-2 * (problem.A.transpose() * problem.b).lpNorm<Eigen::Infinity>();
}

Index support_size(const Vector& x) { return (x.array() != 0.0).count(); }

bool check_stop(std::span<const Snapshot> history, const StoppingRule& rule,
                const Vector* ground_truth) {
  using Kind = StoppingRule::Kind;
  if (rule.kind == Kind::ground_truth_distance && ground_truth == nullptr) {
    throw InvalidArgument("ground-truth-distance stopping rule requires a ground truth");
  }
  if (history.empty()) return false;
  const Snapshot& cur = history.back();
  switch (rule.kind) {
    case Kind::relative_objective: {
      if (history.size() < 2) return false;
      return relative_change(history[history.size() - 2].objective, cur.objective) <
             rule.threshold;
    }
    case Kind::relative_estimate: {
      if (history.size() < 2) return false;
      const Vector& prev = history[history.size() - 2].x;
      const double diff = (cur.x - prev).norm();
      if (diff == 0.0) return true;
      const double base = prev.norm();
      return base > 0.0 && diff / base < rule.threshold;
    }
    case Kind::ground_truth_distance: {
      const double base = ground_truth->norm();
      const double dist = (cur.x - *ground_truth).norm();
      return base > 0.0 ? dist / base < rule.threshold : dist < rule.threshold;
    }
    case Kind::kkt_residual:
      return std::isfinite(cur.relative_kkt) && cur.relative_kkt < rule.threshold;
  }
  return false;
}

StopMonitor::StopMonitor(const StoppingRule& rule, const OperatorProblem& problem, double lambda)
    : rule_(rule), problem_(&problem), lambda_(lambda) {
  if (rule_.kind == StoppingRule::Kind::ground_truth_distance && problem.ground_truth == nullptr) {
    throw InvalidArgument("ground-truth-distance stopping rule requires a ground truth");
  }
  history_.reserve(2);
}

void StopMonitor::reset() { history_.clear(); }

bool StopMonitor::push(Snapshot s) {
  if (history_.size() == 2) history_.erase(history_.begin());
  history_.push_back(std::move(s));
  return check_stop(history_, rule_, problem_->ground_truth);
}

bool StopMonitor::update(const Vector& x, double objective_value, const Vector& correlation) {
  Snapshot s{x, objective_value};
  if (rule_.kind == StoppingRule::Kind::kkt_residual) {
    if (lambda_ > 0.0) {
      s.relative_kkt = kkt_residual_from_correlation(x, correlation, lambda_) / lambda_;
    } else {
      // Equality-constrained solvers: relative primal residual stands in.
      const double bn = problem_->b.norm();
      const double r = (problem_->b - problem_->op.apply(x)).norm();
      s.relative_kkt = bn > 0.0 ? r / bn : r;
    }
  }
  return push(std::move(s));
}

bool StopMonitor::update_relative_kkt(const Vector& x, double objective_value,
                                      double relative_kkt) {
  Snapshot s{x, objective_value, relative_kkt};
  return push(std::move(s));
}

bool StopMonitor::update(const Vector& x, double objective_value) {
  if (rule_.kind == StoppingRule::Kind::kkt_residual && lambda_ > 0.0) {
    const Vector c = problem_->op.adjoint(problem_->b - problem_->op.apply(x));
    return update(x, objective_value, c);
  }
  return update(x, objective_value, Vector());
}

}  // namespace l1min
