#include "l1min/shrinkage.hpp"

#include "l1min/errors.hpp"
#include "l1min/gradient_projection.hpp"

#include <algorithm>
#include <cmath>

namespace l1min {

namespace {

constexpr int kMaxBacktracks = 100;

struct ProxStep {
  double L;
  Vector x;
  Vector ax;
  int j;
};

// Backtracking on L given y, A y and grad f(y) = A^T (A y - b).
ProxStep backtrack_core(const LinearOperator& a, const Vector& y, const Vector& ay,
                        const Vector& grad, double L_prev, double eta, double lambda) {
  double L = L_prev;
  for (int j = 0; j <= kMaxBacktracks; ++j) {
    Vector x = soft_threshold(y - grad / L, lambda / L);
    const Vector delta = x - y;
    const Vector a_delta = a.apply(delta);
    // For a quadratic f, F(x) <= Q_L(x, y) reduces to ||A delta||^2 <= L ||delta||^2.
    if (!a_delta.allFinite()) throw NumericalBreakdown("backtrack_L: non-finite product");
    if (a_delta.squaredNorm() <= L * delta.squaredNorm()) {
      return {L, std::move(x), ay + a_delta, j};
    }
    L *= eta;
  }
  throw NumericalBreakdown("backtrack_L: no acceptable L after 100 increases");
}

double weighted_l1(const Vector& x, const std::optional<Vector>& w) {
  return w ? w->cwiseProduct(x).lpNorm<1>() : x.lpNorm<1>();
}

double relative_kkt(const Vector& x, const Vector& c, double lambda,
                    const std::optional<Vector>& w) {
  const double k = w ? kkt_residual_from_correlation(x, c, lambda, *w)
                     : kkt_residual_from_correlation(x, c, lambda);
  return k / lambda;
}

double inf_norm_atb(const OperatorProblem& p) {
  return p.b.size() == 0 ? 0.0 : p.op.adjoint(p.b).lpNorm<Eigen::Infinity>();
}

void check_dims(const OperatorProblem& p, const char* who) {
  if (p.b.size() != p.op.rows()) {
    throw InvalidArgument(std::string(who) + ": b has length " + std::to_string(p.b.size()) +
                          " but the dictionary has " + std::to_string(p.op.rows()) + " rows");
  }
}

OperatorProblem view_of(const ProblemInstance& p, const DenseView& view) {
  return OperatorProblem{view, p.b, p.ground_truth ? &*p.ground_truth : nullptr};
}

}  // namespace

void ContinuationSchedule::validate() const {
  if (!(lambda_target > 0.0)) throw InvalidArgument("continuation: target lambda must be > 0");
  if (!(lambda_start >= lambda_target)) {
    throw InvalidArgument("continuation: lambda_start must be >= lambda_target");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("continuation: beta must lie in (0, 1)");
}

std::vector<double> ContinuationSchedule::stages(int min_stages) const {
  validate();
  std::vector<double> out;
  if (lambda_start == lambda_target) return {lambda_target};
  for (double lam = lambda_start; lam > lambda_target; lam *= beta) out.push_back(lam);
  if (static_cast<int>(out.size()) < min_stages) {
    out.clear();
    const double ratio = lambda_target / lambda_start;
    for (int i = 0; i < min_stages; ++i) {
      out.push_back(lambda_start * std::pow(ratio, static_cast<double>(i) / min_stages));
    }
  }
  out.push_back(lambda_target);
  return out;
}

ContinuationSchedule default_schedule(const OperatorProblem& problem, double lambda_target,
                                      const IstOptions& opts) {
  ContinuationSchedule s;
  s.lambda_target = lambda_target;
  s.beta = opts.beta;
  s.lambda_start = std::max(opts.lambda_start.value_or(0.9 * inf_norm_atb(problem)),
                            lambda_target);
  return s;
}

double bb_alpha(const Vector& s, const Vector& g, double alpha_min, double alpha_max) {
  const double ss = s.squaredNorm();
  if (ss == 0.0) return alpha_min;
  const double a = s.dot(g) / ss;
  if (!std::isfinite(a)) return alpha_max;
  return std::clamp(a, alpha_min, alpha_max);
}

double fista_t_next(double t) { return 0.5 * (1.0 + std::sqrt(4.0 * t * t + 1.0)); }

BacktrackResult backtrack_L(const Vector& y, double L_prev, double eta, double lambda,
                            const OperatorProblem& problem) {
  if (!(L_prev > 0.0)) throw InvalidArgument("backtrack_L: L_prev must be positive");
  if (!(eta > 1.0)) throw InvalidArgument("backtrack_L: eta must exceed 1");
  const Vector ay = problem.op.apply(y);
  const Vector grad = problem.op.adjoint(ay - problem.b);
  ProxStep step = backtrack_core(problem.op, y, ay, grad, L_prev, eta, lambda);
  return {step.L, std::move(step.x), step.j};
}

// ---------------------------------------------------------------------------
// IST with Barzilai-Borwein steps and continuation

SolverResult ist_solve(const OperatorProblem& problem, const ContinuationSchedule& schedule,
                       const SolverConfig& config) {
  config.validate();
  check_dims(problem, "ist");
  const IstOptions& opts = config.ist;
  const LinearOperator& a = problem.op;
  const Index n = a.cols();
  if (opts.weights && opts.weights->size() != n) {
    throw InvalidArgument("ist: weight vector length does not match columns");
  }
  const std::vector<double> stages = schedule.stages(opts.min_stages);
  const double lambda = schedule.lambda_target;
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "ist";
  res.lambda = lambda;
  Vector x = Vector::Zero(n);
  Vector r = problem.b;  // b - A x
  Vector c = a.adjoint(r);
  double alpha = opts.alpha0;
  auto objective_at = [&](const Vector& resid, const Vector& xx, double lam) {
    return 0.5 * resid.squaredNorm() + lam * weighted_l1(xx, opts.weights);
  };
  if (config.record_trace) res.trace.push_back({0, objective_at(r, x, lambda), r.norm(), 0});

  StopMonitor monitor(config.stopping, problem, lambda);
  double lipschitz = 0.0;
  bool lipschitz_tried = false;
  int iter = 0;
  for (std::size_t si = 0; si < stages.size() && iter < config.max_iter; ++si) {
    const double lam = stages[si];
    const bool final_stage = si + 1 == stages.size();
    double f = objective_at(r, x, lam);
    while (iter < config.max_iter) {
      ++iter;
      bool accepted = false;
      Vector x_new, r_new;
      double f_new = f;
      for (int tries = 0; tries <= opts.max_doublings; ++tries) {
        const Vector u = x + c / alpha;  // x - grad / alpha
        x_new = opts.weights ? soft_threshold(u, lam / alpha, *opts.weights)
                             : soft_threshold(u, lam / alpha);
        r_new = problem.b - a.apply(x_new);
        f_new = objective_at(r_new, x_new, lam);
        if (!std::isfinite(f_new)) throw NumericalBreakdown("ist: non-finite objective");
        if (f_new < f) {
          accepted = true;
          break;
        }
        alpha = std::min(2.0 * alpha, opts.alpha_max);
      }
      if (!accepted && !lipschitz_tried) {
        // Doubling could not undo a tiny BB estimate; the Lipschitz step
        // always descends unless x is already stationary.
        lipschitz_tried = true;
        if (lipschitz == 0.0) lipschitz = 1.01 * spectral_norm_sq(a);
        alpha = lipschitz;
        --iter;
        continue;
      }
      lipschitz_tried = false;
      if (!accepted) {
        // No strict descent left at this lambda: x is a numerical fixed point.
        if (final_stage) {
          bool polished = false;
          if (!opts.weights) {
            Vector xp = polish_support(x, problem, lam, &polished);
            if (polished) {
              x = std::move(xp);
              r = problem.b - a.apply(x);
              c = a.adjoint(r);
              if (config.record_trace && res.trace.size() > 1) {
                res.trace.back() = {res.trace.back().iteration, objective_at(r, x, lambda), r.norm(), support_size(x)};
              }
            }
          }
          res.converged = relative_kkt(x, c, lam, opts.weights) <= config.tol;
        }
        break;
      }
      const Vector s = x_new - x;
      const Vector c_new = a.adjoint(r_new);
      alpha = bb_alpha(s, c - c_new, opts.alpha_min, opts.alpha_max);
      const double change = s.norm() / std::max(x_new.norm(), 1e-300);
      x = std::move(x_new);
      r = std::move(r_new);
      c = c_new;
      f = f_new;
      if (config.record_trace) {
        res.trace.push_back({iter, objective_at(r, x, lambda), r.norm(), support_size(x)});
      }
      if (!final_stage) {
        if (change <= opts.stage_tol) break;
        continue;
      }
      const bool stop =
          config.stopping.kind == StoppingRule::Kind::kkt_residual
              ? monitor.update_relative_kkt(x, f, relative_kkt(x, c, lam, opts.weights))
              : monitor.update(x, f, c);
      if (stop && relative_kkt(x, c, lam, opts.weights) <= config.tol) {
        res.converged = true;
        break;
      }
    }
    if (final_stage || res.converged) break;
  }
  res.x = std::move(x);
  res.iterations = iter;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult ist_solve(const OperatorProblem& problem, const SolverConfig& config) {
  const double lambda = config.lambda.value_or(default_lambda(problem));
  if (!(lambda > 0.0)) {
    // b orthogonal to every column: zero is the answer.
    SolverResult res;
    res.algorithm = "ist";
    res.x = Vector::Zero(problem.op.cols());
    res.converged = true;
    res.lambda = lambda;
    return res;
  }
  return ist_solve(problem, default_schedule(problem, lambda, config.ist), config);
}

SolverResult ist_solve(const ProblemInstance& problem, const ContinuationSchedule& schedule,
                       const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return ist_solve(view_of(problem, view), schedule, config);
}

// ---------------------------------------------------------------------------
// FISTA

SolverResult fista_solve(const OperatorProblem& problem, const SolverConfig& config) {
  config.validate();
  check_dims(problem, "fista");
  const FistaOptions& opts = config.fista;
  if (!(opts.eta > 1.0)) throw InvalidArgument("fista: eta must exceed 1");
  if (!(opts.L0 > 0.0)) throw InvalidArgument("fista: L0 must be positive");
  if (!(opts.beta > 0.0 && opts.beta < 1.0)) throw InvalidArgument("fista: beta must lie in (0, 1)");
  const LinearOperator& a = problem.op;
  const Index n = a.cols();
  const double lambda_bar = config.lambda.value_or(default_lambda(problem));
  if (!(lambda_bar >= 0.0)) throw InvalidArgument("fista: lambda must be nonnegative");
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "fista";
  res.lambda = lambda_bar;
  double lam = lambda_bar;
  if (opts.continuation) {
    lam = std::max(opts.lambda_start.value_or(0.9 * inf_norm_atb(problem)), lambda_bar);
  }
  double L = opts.L0;
  if (opts.exact_lipschitz) L = 1.01 * spectral_norm_sq(a);

  Vector x = Vector::Zero(n);
  Vector ax = Vector::Zero(a.rows());
  Vector y = x;
  Vector ay = ax;
  double t = 1.0;
  auto objective_of = [&](const Vector& ax_, const Vector& x_) {
    return 0.5 * (problem.b - ax_).squaredNorm() + lambda_bar * x_.lpNorm<1>();
  };
  if (config.record_trace) {
    res.trace.push_back({0, objective_of(ax, x), problem.b.norm(), 0});
  }
  StopMonitor monitor(config.stopping, problem, lambda_bar);
  const bool need_corr =
      config.stopping.kind == StoppingRule::Kind::kkt_residual && lambda_bar > 0.0;

  int k = 0;
  while (k < config.max_iter) {
    ++k;
    const Vector grad = a.adjoint(ay - problem.b);
    ProxStep step;
    if (opts.exact_lipschitz) {
      Vector xn = soft_threshold(y - grad / L, lam / L);
      Vector an = ay + a.apply(xn - y);
      step = {L, std::move(xn), std::move(an), 0};
    } else {
      step = backtrack_core(a, y, ay, grad, L, opts.eta, lam);
      L = step.L;
    }
    const double t_next = fista_t_next(t);
    const double momentum = (t - 1.0) / t_next;
    y = step.x + momentum * (step.x - x);
    ay = step.ax + momentum * (step.ax - ax);
    x = std::move(step.x);
    ax = std::move(step.ax);
    t = t_next;
    const bool at_target = lam == lambda_bar;
    lam = std::max(opts.beta * lam, lambda_bar);

    const Vector r = problem.b - ax;
    const double obj = 0.5 * r.squaredNorm() + lambda_bar * x.lpNorm<1>();
    if (!std::isfinite(obj)) throw NumericalBreakdown("fista: non-finite objective");
    if (config.record_trace) res.trace.push_back({k, obj, r.norm(), support_size(x)});
    if (!at_target) continue;
    Vector c;
    if (need_corr) c = a.adjoint(r);
    const bool stop = need_corr ? monitor.update(x, obj, c) : monitor.update(x, obj);
    if (!stop) continue;
    if (!need_corr) c = a.adjoint(r);
    if (lambda_bar == 0.0 ||
        kkt_residual_from_correlation(x, c, lambda_bar) <= config.tol * lambda_bar) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult fista_solve(const ProblemInstance& problem, const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return fista_solve(view_of(problem, view), config);
}

}  // namespace l1min
