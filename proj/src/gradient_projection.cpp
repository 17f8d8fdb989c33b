#include "l1min/gradient_projection.hpp"

#include "l1min/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace l1min {

namespace {

void check_problem(const OperatorProblem& p, double lambda, const char* who) {
  if (p.b.size() != p.op.rows()) {
    throw InvalidArgument(std::string(who) + ": b has length " + std::to_string(p.b.size()) +
                          " but the dictionary has " + std::to_string(p.op.rows()) + " rows");
  }
  if (!(lambda > 0.0)) throw InvalidArgument(std::string(who) + ": lambda must be positive");
}

OperatorProblem view_of(const ProblemInstance& p, const DenseView& view) {
  return OperatorProblem{view, p.b, p.ground_truth ? &*p.ground_truth : nullptr};
}

}  // namespace

// ---------------------------------------------------------------------------
// GPSR

Vector gpsr_direction(const Vector& z, const Vector& grad) {
  if (z.size() != grad.size()) throw InvalidArgument("gpsr_direction: length mismatch");
  Vector g(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    g[i] = (z[i] > 0.0 || grad[i] < 0.0) ? grad[i] : 0.0;
  }
  return g;
}

double gpsr_step_size(const Vector& g, const LinearOperator& a, const GpsrOptions& opts) {
  const Index n = a.cols();
  if (g.size() != 2 * n) throw InvalidArgument("gpsr_step_size: g must have length 2n");
  const double gg = g.squaredNorm();
  if (gg == 0.0) return opts.alpha_max;
  const Vector w = g.head(n) - g.tail(n);
  const double gbg = a.apply(w).squaredNorm();
  if (gbg <= opts.curvature_floor * gg) return opts.alpha_max;
  return std::min(gg / gbg, opts.alpha_max);
}

double gpsr_objective(const Vector& z, const OperatorProblem& problem, double lambda) {
  const Index n = problem.op.cols();
  if (z.size() != 2 * n) throw InvalidArgument("gpsr_objective: z must have length 2n");
  const Vector r = problem.b - problem.op.apply(z.head(n) - z.tail(n));
  return 0.5 * r.squaredNorm() + lambda * z.sum();
}

SolverResult gpsr_solve(const OperatorProblem& problem, double lambda,
                        const SolverConfig& config, const SplitObserver& observer) {
  config.validate();
  check_problem(problem, lambda, "gpsr");
  const GpsrOptions& opts = config.gpsr;
  const LinearOperator& a = problem.op;
  const Index n = a.cols();
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "gpsr";
  res.lambda = lambda;
  Vector z = Vector::Zero(2 * n);
  Vector ax = Vector::Zero(a.rows());
  Vector r = problem.b;
  Vector c = a.adjoint(r);
  double q = 0.5 * r.squaredNorm();
  if (config.record_trace) res.trace.push_back({0, q, r.norm(), 0});
  StopMonitor monitor(config.stopping, problem, lambda);
  if (observer) observer(z);

  int k = 0;
  while (k < config.max_iter) {
    ++k;
    Vector grad(2 * n);
    grad.head(n) = lambda - c.array();
    grad.tail(n) = lambda + c.array();
    const Vector g = gpsr_direction(z, grad);
    if (g.squaredNorm() == 0.0) {
      res.converged = true;  // projected gradient vanishes
      break;
    }
    double alpha = gpsr_step_size(g, a, opts);
    Vector z_new, ax_new;
    double q_new = q;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      z_new = (z - alpha * g).cwiseMax(0.0);
      ax_new = a.apply(z_new.head(n) - z_new.tail(n));
      q_new = 0.5 * (problem.b - ax_new).squaredNorm() + lambda * z_new.sum();
      if (!std::isfinite(q_new)) throw NumericalBreakdown("gpsr: non-finite objective");
      if (q_new <= q) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No descent along the projected path: stationary to working precision.
      const Vector x = z.head(n) - z.tail(n);
      res.converged = kkt_residual_from_correlation(x, c, lambda) <= config.tol * lambda;
      break;
    }
    z = std::move(z_new);
    ax = std::move(ax_new);
    r = problem.b - ax;
    c = a.adjoint(r);
    q = q_new;
    if (observer) observer(z);
    const Vector x = z.head(n) - z.tail(n);
    const double obj = 0.5 * r.squaredNorm() + lambda * x.lpNorm<1>();
    if (config.record_trace) res.trace.push_back({k, obj, r.norm(), support_size(x)});
    if (monitor.update(x, obj, c) &&
        kkt_residual_from_correlation(x, c, lambda) <= config.tol * lambda) {
      res.converged = true;
      break;
    }
  }
  res.x = z.head(n) - z.tail(n);
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult gpsr_solve(const ProblemInstance& problem, double lambda,
                        const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return gpsr_solve(view_of(problem, view), lambda, config);
}

// ---------------------------------------------------------------------------
// Truncated-Newton interior point

double barrier_objective(const BarrierIterate& it, const OperatorProblem& problem,
                         double lambda) {
  double phi = 0.0;
  for (Index i = 0; i < it.x.size(); ++i) {
    const double lo = it.u[i] + it.x[i];
    const double hi = it.u[i] - it.x[i];
    if (!(lo > 0.0 && hi > 0.0)) return std::numeric_limits<double>::infinity();
    phi -= std::log(lo) + std::log(hi);
  }
  const Vector r = problem.op.apply(it.x) - problem.b;
  return it.t * (0.5 * r.squaredNorm() + lambda * it.u.sum()) + phi;
}

Vector polish_support(const Vector& x, const OperatorProblem& problem, double lambda,
                      bool* accepted) {
  if (accepted) *accepted = false;
  const LinearOperator& a = problem.op;
  const double xmax = x.lpNorm<Eigen::Infinity>();
  if (xmax == 0.0) return x;
  double best_kkt = kkt_residual(x, problem, lambda);
  Vector best = x;
  std::vector<Index> previous;
  for (double rel : {1e-2, 1e-3, 1e-4, 1e-6}) {
    std::vector<Index> s;
    for (Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > rel * xmax) s.push_back(i);
    }
    if (s == previous || static_cast<Index>(s.size()) > a.rows()) continue;
    previous = s;
    const Matrix as = a.columns(s);
    Vector signs(static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) signs[static_cast<Index>(k)] = sign_of(x[s[k]]);
    Vector xs;
    try {
      xs = spd_solve(as.transpose() * as, as.transpose() * problem.b - lambda * signs);
    } catch (const NotPositiveDefinite&) {
      continue;
    }
    if ((xs.array() * signs.array()).minCoeff() <= 0.0) continue;
    Vector cand = Vector::Zero(x.size());
    for (std::size_t k = 0; k < s.size(); ++k) cand[s[k]] = xs[static_cast<Index>(k)];
    const double kkt = kkt_residual(cand, problem, lambda);
    if (kkt < best_kkt) {
      best_kkt = kkt;
      best = std::move(cand);
      if (accepted) *accepted = true;
    }
  }
  return best;
}

SolverResult tnipm_solve(const OperatorProblem& problem, double lambda,
                         const SolverConfig& config, const BarrierObserver& observer) {
  config.validate();
  check_problem(problem, lambda, "tnipm");
  const TnipmOptions& opts = config.tnipm;
  const LinearOperator& a = problem.op;
  const Index n = a.cols();
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "tnipm";
  res.lambda = lambda;
  BarrierIterate it{Vector::Zero(n), Vector::Ones(n), 1.0 / lambda};
  Vector ax = Vector::Zero(a.rows());
  const Vector col_sq = a.column_norms_sq();
  if (config.record_trace) res.trace.push_back({0, 0.5 * problem.b.squaredNorm(), problem.b.norm(), 0});

  auto value = [&](const Vector& x, const Vector& u, const Vector& axv, double t) {
    double phi = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double lo = u[i] + x[i];
      const double hi = u[i] - x[i];
      if (!(lo > 0.0 && hi > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(lo) + std::log(hi);
    }
    return t * (0.5 * (axv - problem.b).squaredNorm() + lambda * u.sum()) + phi;
  };

  int k = 0;
  Vector pcg_warm = Vector::Zero(2 * n);
  while (k < config.max_iter) {
    const Vector r = problem.b - ax;
    const double obj = 0.5 * r.squaredNorm() + lambda * it.x.lpNorm<1>();
    const Vector corr = a.adjoint(r);
    // Dual point nu = s (A x - b), scaled into the feasible set |A^T nu| <= lambda.
    const double cmax = corr.lpNorm<Eigen::Infinity>();
    const double scale = cmax > lambda ? lambda / cmax : 1.0;
    const double dual = -0.5 * scale * scale * r.squaredNorm() + scale * r.dot(problem.b);
    // Either gap estimate triggers a test of the polished point.
    const double gap_tol = config.tol * (1.0 + obj);
    if (obj - dual <= gap_tol || 2.0 * static_cast<double>(n) / it.t <= gap_tol) {
      if (!opts.polish) {
        res.x = it.x;
        res.converged = true;
        break;
      }
      const Vector cand = polish_support(it.x, problem, lambda, nullptr);
      if (kkt_residual(cand, problem, lambda) <= config.tol * lambda) {
        res.x = cand;
        res.converged = true;
        break;
      }
    }
    ++k;
    const double t = it.t;
    const Vector grad_f = -corr;
    const Vector q1 = (it.u + it.x).cwiseInverse();
    const Vector q2 = (it.u - it.x).cwiseInverse();
    Vector g(2 * n);
    g.head(n) = t * grad_f - q1 + q2;
    g.tail(n) = (t * lambda) - q1.array() - q2.array();
    const Vector d1 = q1.cwiseAbs2() + q2.cwiseAbs2();
    const Vector d2 = q1.cwiseAbs2() - q2.cwiseAbs2();
    const LinearMap hess = [&](const Vector& p) -> Vector {
      Vector out(2 * n);
      const Vector px = p.head(n);
      const Vector pu = p.tail(n);
      out.head(n) = t * a.adjoint(a.apply(px)) + d1.cwiseProduct(px) + d2.cwiseProduct(pu);
      out.tail(n) = d2.cwiseProduct(px) + d1.cwiseProduct(pu);
      return out;
    };
    Vector inv_diag(2 * n);
    inv_diag.head(n) = (t * col_sq + d1).cwiseInverse();
    inv_diag.tail(n) = d1.cwiseInverse();
    const PcgResult pcg = pcg_solve(hess, -g, inv_diag, opts.pcg_tol, opts.pcg_max_iter, pcg_warm);
    Vector step = pcg.x;
    double slope = g.dot(step);
    if (!(slope < 0.0)) {
      // Inexact direction lost descent; fall back to the preconditioned gradient.
      step = -inv_diag.cwiseProduct(g);
      slope = g.dot(step);
    }
    pcg_warm = step;
    const double decrement = std::sqrt(std::max(-slope, 0.0));

    const Vector dx = step.head(n);
    const Vector du = step.tail(n);
    const Vector adx = a.apply(dx);
    const double f0 = value(it.x, it.u, ax, t);
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_backtracks; ++ls) {
      const Vector xn = it.x + s * dx;
      const Vector un = it.u + s * du;
      const double fn = value(xn, un, ax + s * adx, t);
      if (fn <= f0 + opts.armijo * s * slope) {
        it.x = xn;
        it.u = un;
        ax += s * adx;
        accepted = true;
        break;
      }
      s *= opts.backtrack;
    }
    if (!accepted) {
      throw NumericalError("tnipm: line search exhausted inside the barrier domain");
    }
    if (observer) observer(it);
    if (config.record_trace) {
      const Vector rn = problem.b - ax;
      res.trace.push_back({k, 0.5 * rn.squaredNorm() + lambda * it.x.lpNorm<1>(), rn.norm(),
                           support_size(it.x)});
    }
    if (decrement <= opts.decrement_threshold) {
      it.t *= opts.t_growth;
      pcg_warm.setZero();
    }
  }
  if (!res.converged) res.x = it.x;
  if (opts.polish) {
    bool accepted = res.converged && res.x != it.x;
    if (!res.converged) res.x = polish_support(it.x, problem, lambda, &accepted);
    if (accepted && !res.trace.empty()) {
      const Vector rn = problem.b - a.apply(res.x);
      res.trace.back() = {k, 0.5 * rn.squaredNorm() + lambda * res.x.lpNorm<1>(), rn.norm(),
                          support_size(res.x)};
    }
  }
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult tnipm_solve(const ProblemInstance& problem, double lambda,
                         const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return tnipm_solve(view_of(problem, view), lambda, config);
}

}  // namespace l1min
