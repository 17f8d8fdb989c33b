#include "l1min/alm.hpp"

#include "l1min/errors.hpp"
#include "l1min/shrinkage.hpp"

#include <algorithm>
#include <cmath>

namespace l1min {

namespace {

void check_dims(const OperatorProblem& p, const char* who) {
  if (p.b.size() != p.op.rows()) {
    throw InvalidArgument(std::string(who) + ": b has length " + std::to_string(p.b.size()) +
                          " but the dictionary has " + std::to_string(p.op.rows()) + " rows");
  }
}

double rel_residual(const Vector& r, double bnorm) { return bnorm > 0.0 ? r.norm() / bnorm : r.norm(); }

}  // namespace

SolverResult palm_solve(const OperatorProblem& problem, const SolverConfig& config,
                        const AlmObserver& observer) {
  config.validate();
  check_dims(problem, "palm");
  const PalmOptions& opts = config.palm;
  if (!(opts.mu0 > 0.0)) throw InvalidArgument("palm: mu0 must be positive");
  if (!(opts.rho > 1.0)) throw InvalidArgument("palm: rho must exceed 1");
  const LinearOperator& a = problem.op;
  const Vector& b = problem.b;
  const double bnorm = b.norm();
  const double lam = config.lambda.value_or(0.0);
  if (!(lam >= 0.0) || !std::isfinite(lam)) throw InvalidArgument("palm: lambda must be >= 0");
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "palm";
  if (config.lambda) res.lambda = lam;
  AlmState s;
  s.x = Vector::Zero(a.cols());
  s.y = Vector::Zero(a.rows());
  s.mu = opts.mu0;
  s.rho = opts.rho;
  if (bnorm == 0.0) {
    res.x = s.x;
    res.converged = true;
    return res;
  }
  s.tau = 1.01 * spectral_norm_sq(a);
  Vector ax = Vector::Zero(a.rows());
  if (config.record_trace) res.trace.push_back({0, 0.0, bnorm, 0});
  StopMonitor monitor(config.stopping, problem, lam);

  int k = 0;
  while (k < config.max_iter) {
    ++k;
    // Inner problem: min ||x||_1 + mu_eff/2 ||A x - v||^2 with v = b + y / mu;
    // the split variable r has been minimized out.
    const Vector v = b + s.y / s.mu;
    const double mu_eff = s.mu / (1.0 + lam * s.mu);
    const double inner_tol = opts.inner_tol_scale / s.mu;
    Vector x = s.x;
    Vector axk = ax;
    Vector w = x;
    Vector aw = axk;
    double t = 1.0;
    for (int j = 0; j < opts.inner_max_iter; ++j) {
      const Vector grad = a.adjoint(aw - v);
      Vector xn = soft_threshold(w - grad / s.tau, 1.0 / (mu_eff * s.tau));
      Vector axn = a.apply(xn);
      const double t_next = fista_t_next(t);
      const double m = (t - 1.0) / t_next;
      const double change = (xn - x).norm();
      w = xn + m * (xn - x);
      aw = axn + m * (axn - axk);
      x = std::move(xn);
      axk = std::move(axn);
      t = t_next;
      if (change <= inner_tol * std::max(1.0, x.norm())) break;
    }
    s.x = std::move(x);
    ax = std::move(axk);
    const Vector split = (lam * mu_eff) * (v - ax);
    const Vector r = b - ax - split;
    s.y += s.mu * r;
    if (observer) observer(s);
    const double obj = config.lambda ? 0.5 * (b - ax).squaredNorm() + lam * s.x.lpNorm<1>()
                                     : s.x.lpNorm<1>();
    if (config.record_trace) res.trace.push_back({k, obj, (b - ax).norm(), support_size(s.x)});
    const bool feasible = rel_residual(r, bnorm) <= config.tol;
    const bool rule = monitor.update(s.x, obj);
    s.mu *= s.rho;
    if (feasible && rule) {
      res.converged = true;
      break;
    }
  }
  res.x = s.x;
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult palm_solve(const ProblemInstance& problem, const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return palm_solve(OperatorProblem{view, problem.b,
                                    problem.ground_truth ? &*problem.ground_truth : nullptr},
                    config);
}

CholFactor factor_row_gram(const LinearOperator& a, double shift) {
  Matrix g = a.weighted_gram(Vector::Ones(a.cols()));
  g.diagonal().array() += shift;
  try {
    return CholFactor::factorize(g);
  } catch (const NotPositiveDefinite&) {
    throw IllConditioned("dalm: A A^T is singular (rank of A below its row count)");
  }
}

Vector dual_y_solve(const CholFactor& gram_chol, const LinearOperator& a, const Vector& x,
                    const Vector& z_next, const Vector& b, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("dual_y_solve: beta must be positive");
  if (gram_chol.dim() != a.rows()) throw InvalidArgument("dual_y_solve: factor size mismatch");
  const Vector rhs = a.apply(z_next) - (a.apply(x) - b) / beta;
  return gram_chol.solve(rhs);
}

SolverResult dalm_solve(const OperatorProblem& problem, const SolverConfig& config,
                        const DalmObserver& observer) {
  config.validate();
  check_dims(problem, "dalm");
  const DalmOptions& opts = config.dalm;
  if (!(opts.beta > 0.0)) throw InvalidArgument("dalm: beta must be positive");
  const LinearOperator& a = problem.op;
  const Vector& b = problem.b;
  const double bnorm = b.norm();
  const double lam = config.lambda.value_or(0.0);
  if (!(lam >= 0.0) || !std::isfinite(lam)) throw InvalidArgument("dalm: lambda must be >= 0");
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "dalm";
  if (config.lambda) res.lambda = lam;
  DalmState s;
  s.beta = opts.beta;
  s.x = Vector::Zero(a.cols());
  s.y = Vector::Zero(a.rows());
  s.z = Vector::Zero(a.cols());
  if (bnorm == 0.0) {
    res.x = s.x;
    res.converged = true;
    return res;
  }
  const CholFactor gram = factor_row_gram(a, lam / s.beta);
  Vector aty = a.adjoint(s.y);
  Vector ax = Vector::Zero(a.rows());
  if (config.record_trace) res.trace.push_back({0, 0.0, bnorm, 0});
  StopMonitor monitor(config.stopping, problem, lam);

  int k = 0;
  while (k < config.max_iter) {
    ++k;
    s.z = project_box_linf(aty + s.x / s.beta);
    const Vector az = a.apply(s.z);
    if (opts.cg_step) {
      // One conjugate-gradient step from y_k on (beta A A^T + lambda I) y = beta A z - (A x - b).
      const Vector rhs = s.beta * az - (ax - b);
      const Vector g = rhs - s.beta * a.apply(aty) - lam * s.y;
      const Vector atg = a.adjoint(g);
      const double curv = s.beta * atg.squaredNorm() + lam * g.squaredNorm();
      if (curv > 0.0) s.y += (g.squaredNorm() / curv) * g;
    } else {
      s.y = gram.solve(az - (ax - b) / s.beta);
    }
    aty = a.adjoint(s.y);
    s.x -= s.beta * (s.z - aty);
    ax = a.apply(s.x);
    if (observer) observer(s);
    const Vector r = b - ax;
    const double l1 = s.x.lpNorm<1>();
    // Scaled primal ||x||_1 + ||r||^2 / (2 lambda) against the dual b^T y - lambda/2 ||y||^2.
    const double primal = lam > 0.0 ? l1 + r.squaredNorm() / (2.0 * lam) : l1;
    const double dual = b.dot(s.y) - 0.5 * lam * s.y.squaredNorm();
    const double obj = config.lambda ? lam * primal : l1;
    if (config.record_trace) res.trace.push_back({k, obj, r.norm(), support_size(s.x)});
    const double gap = std::abs(primal - dual);
    const bool feasible = rel_residual(r - lam * s.y, bnorm) <= config.tol &&
                          (s.z - aty).lpNorm<Eigen::Infinity>() <= config.tol &&
                          gap <= config.tol * std::max(1.0, primal);
    const bool rule = monitor.update(s.x, obj);
    if (feasible && rule) {
      res.converged = true;
      break;
    }
  }
  res.x = s.x;
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult dalm_solve(const ProblemInstance& problem, const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return dalm_solve(OperatorProblem{view, problem.b,
                                    problem.ground_truth ? &*problem.ground_truth : nullptr},
                    config);
}

}  // namespace l1min
