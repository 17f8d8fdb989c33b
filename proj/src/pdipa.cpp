#include "l1min/pdipa.hpp"

#include "l1min/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace l1min {

void SplitOperator::apply_to(const Vector& x, Vector& out) const {
  const Index n = a_->cols();
  if (x.size() != 2 * n) throw InvalidArgument("SplitOperator::apply: length mismatch");
  a_->apply_to(x.head(n) - x.tail(n), out);
}

void SplitOperator::adjoint_to(const Vector& r, Vector& out) const {
  const Vector half = a_->adjoint(r);
  out.resize(2 * half.size());
  out.head(half.size()) = half;
  out.tail(half.size()) = -half;
}

Vector SplitOperator::column(Index j) const {
  const Index n = a_->cols();
  return j < n ? a_->column(j) : Vector(-a_->column(j - n));
}

Matrix SplitOperator::weighted_gram(const Vector& w) const {
  const Index n = a_->cols();
  if (w.size() != 2 * n) throw InvalidArgument("SplitOperator::weighted_gram: length mismatch");
  return a_->weighted_gram(w.head(n) + w.tail(n));
}

NewtonStep newton_kkt_step(const PdipaState& s, const LinearOperator& a, const Vector& b,
                           const Vector& c, double mu_hat) {
  const Index m = a.cols();
  if (s.x.size() != m || s.z.size() != m || s.y.size() != a.rows() || c.size() != m ||
      b.size() != a.rows()) {
    throw InvalidArgument("newton_kkt_step: state dimensions do not match the operator");
  }
  if (!(s.x.minCoeff() > 0.0 && s.z.minCoeff() > 0.0)) {
    throw InvalidArgument("newton_kkt_step: state must be strictly interior");
  }
  const Vector rp = b - a.apply(s.x);
  const Vector rd = c - a.adjoint(s.y) - s.z;
  const Vector zinv = s.z.cwiseInverse();
  const Vector dvec = s.x.cwiseProduct(zinv);
  const Vector comp = (mu_hat - s.x.array() * s.z.array()).matrix();  // mu_hat 1 - X Z 1
  const Vector rhs = rp - a.apply(zinv.cwiseProduct(comp)) + a.apply(dvec.cwiseProduct(rd));
  Matrix schur = a.weighted_gram(dvec);
  CholFactor chol;
  const double scale = std::max(schur.diagonal().maxCoeff(), std::numeric_limits<double>::min());
  for (double shift = 0.0;; shift = shift == 0.0 ? 1e-14 * scale : 100.0 * shift) {
    if (shift > 1e-6 * scale) {
      throw IllConditioned("pdipa: Schur complement A D A^T is numerically singular");
    }
    try {
      chol = CholFactor::factorize(shift == 0.0 ? schur : Matrix(schur + shift * Matrix::Identity(schur.rows(), schur.cols())));
      break;
    } catch (const NotPositiveDefinite&) {
    }
  }
  NewtonStep step;
  step.dy = chol.solve(rhs);
  step.dz = rd - a.adjoint(step.dy);
  step.dx = zinv.cwiseProduct(comp) - dvec.cwiseProduct(step.dz);
  if (!step.dx.allFinite() || !step.dy.allFinite() || !step.dz.allFinite()) {
    throw IllConditioned("pdipa: Newton direction is not finite");
  }
  return step;
}

namespace {

double max_step(const Vector& v, const Vector& dv, double fraction) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -fraction * v[i] / dv[i]);
  }
  return alpha;
}

}  // namespace

LpResult pdipa_lp(const LinearOperator& a, const Vector& b, const Vector& c,
                  const SolverConfig& config, const PdipaObserver& observer) {
  config.validate();
  const PdipaOptions& opts = config.pdipa;
  const Index m = a.cols();
  if (b.size() != a.rows()) {
    throw InvalidArgument("pdipa: b has length " + std::to_string(b.size()) +
                          " but the constraint matrix has " + std::to_string(a.rows()) + " rows");
  }
  if (c.size() != m) throw InvalidArgument("pdipa: cost vector length mismatch");
  LpResult out;
  PdipaState& s = out.state;
  s.x = Vector::Ones(m);
  s.z = Vector::Ones(m);
  s.y = Vector::Zero(a.rows());
  const double bnorm = b.norm();
  const double cnorm = c.norm();
  auto measure = [&] {
    s.mu = s.x.dot(s.z) / static_cast<double>(m);
    const double cx = c.dot(s.x);
    out.primal_infeasibility = (b - a.apply(s.x)).norm() / (1.0 + bnorm);
    out.dual_infeasibility = (c - a.adjoint(s.y) - s.z).norm() / (1.0 + cnorm);
    out.gap = cx - b.dot(s.y);
    return out.primal_infeasibility <= opts.feasibility_tol &&
           out.dual_infeasibility <= opts.feasibility_tol &&
           std::abs(out.gap) <= opts.gap_tol * (1.0 + std::abs(cx)) &&
           s.mu <= opts.gap_tol * (1.0 + std::abs(cx));
  };
  bool done = measure();
  if (observer) observer(s);
  while (!done) {
    if (out.iterations >= config.max_iter) return out;
    ++out.iterations;
    const double mu_hat = opts.centering * s.mu;
    NewtonStep step;
    try {
      step = newton_kkt_step(s, a, b, c, mu_hat);
    } catch (const IllConditioned&) {
      // Near the solution the Schur complement can lose definiteness in
      // floating point; the current iterate is the best available.
      out.warnings.push_back("Schur complement became singular; returning current iterate");
      return out;
    }
    const double ap = max_step(s.x, step.dx, opts.step_fraction);
    const double ad = max_step(s.z, step.dz, opts.step_fraction);
    s.x += ap * step.dx;
    s.y += ad * step.dy;
    s.z += ad * step.dz;
    done = measure();
    if (observer) observer(s);
  }
  out.converged = true;
  return out;
}

SolverResult pdipa_solve(const OperatorProblem& problem, const SolverConfig& config,
                         const PdipaObserver& observer) {
  Stopwatch clock;
  const Index n = problem.op.cols();
  SplitOperator split(problem.op);
  SolverResult res;
  res.algorithm = "pdipa";
  int seen = 0;
  const PdipaObserver record = [&](const PdipaState& s) {
    if (config.record_trace) {
      const Vector x = s.x.head(n) - s.x.tail(n);
      const Vector r = problem.b - problem.op.apply(x);
      res.trace.push_back({seen, x.lpNorm<1>(), r.norm(), support_size(x)});
    }
    ++seen;
    if (observer) observer(s);
  };
  const LpResult lp = pdipa_lp(split, problem.b, Vector::Ones(2 * n), config, record);
  res.x = lp.state.x.head(n) - lp.state.x.tail(n);
  res.iterations = lp.iterations;
  res.converged = lp.converged;
  res.warnings = lp.warnings;
  res.wall_time_seconds = clock.seconds();
  return res;
}

SolverResult pdipa_solve(const ProblemInstance& problem, const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  return pdipa_solve(OperatorProblem{view, problem.b}, config);
}

}  // namespace l1min
