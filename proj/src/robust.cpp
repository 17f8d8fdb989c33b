#include "l1min/robust.hpp"

#include "l1min/errors.hpp"
#include "l1min/gradient_projection.hpp"
#include "l1min/shrinkage.hpp"
#include "l1min/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace l1min {

ExtendedDictionary::ExtendedDictionary(const Matrix& a, double identity_scale)
    : a_(&a), scale_(identity_scale) {
  if (!(identity_scale > 0.0) || !std::isfinite(identity_scale)) {
    throw InvalidArgument("ExtendedDictionary: identity scale must be positive");
  }
}

void ExtendedDictionary::apply_to(const Vector& x, Vector& out) const {
  if (x.size() != cols()) {
    throw InvalidArgument("ExtendedDictionary::apply: vector length does not match columns");
  }
  out.noalias() = (*a_) * x.head(a_->cols());
  out += scale_ * x.tail(a_->rows());
}

void ExtendedDictionary::adjoint_to(const Vector& r, Vector& out) const {
  if (r.size() != rows()) {
    throw InvalidArgument("ExtendedDictionary::adjoint: vector length does not match rows");
  }
  out.resize(cols());
  out.head(a_->cols()).noalias() = a_->transpose() * r;
  out.tail(a_->rows()) = scale_ * r;
}

Vector ExtendedDictionary::column(Index j) const {
  if (j < 0 || j >= cols()) throw InvalidArgument("ExtendedDictionary::column: index out of range");
  if (j < a_->cols()) return a_->col(j);
  Vector out = Vector::Zero(a_->rows());
  out[j - a_->cols()] = scale_;
  return out;
}

Matrix ExtendedDictionary::weighted_gram(const Vector& w) const {
  if (w.size() != cols()) {
    throw InvalidArgument("ExtendedDictionary::weighted_gram: weight length mismatch");
  }
  Matrix g = DenseView(*a_).weighted_gram(w.head(a_->cols()));
  g.diagonal() += scale_ * scale_ * w.tail(a_->rows());
  return g;
}

Vector ExtendedDictionary::column_norms_sq() const {
  Vector out(cols());
  out.head(a_->cols()) = a_->colwise().squaredNorm().transpose();
  out.tail(a_->rows()).setConstant(scale_ * scale_);
  return out;
}

ComplementProjector::ComplementProjector(const Matrix& b) {
  if (b.cols() == 0 || b.rows() <= b.cols()) {
    throw InvalidArgument("ComplementProjector: B must be tall (d > m)");
  }
  Eigen::HouseholderQR<Matrix> qr(b);
  q_ = qr.householderQ() * Matrix::Identity(b.rows(), b.cols());
  r_ = qr.matrixQR().topRows(b.cols()).triangularView<Eigen::Upper>();
  const Vector diag = r_.diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 1e-12 * std::max(diag.maxCoeff(), 1e-300))) {
    throw IllConditioned("B is numerically rank deficient");
  }
}

void ComplementProjector::apply_to(const Vector& x, Vector& out) const {
  if (x.size() != q_.rows()) {
    throw InvalidArgument("ComplementProjector::apply: vector length mismatch");
  }
  const Vector coef = q_.transpose() * x;
  out = x;
  out.noalias() -= q_ * coef;
}

Vector ComplementProjector::column(Index j) const {
  if (j < 0 || j >= q_.rows()) throw InvalidArgument("ComplementProjector::column: index out of range");
  Vector out = -(q_ * q_.row(j).transpose());
  out[j] += 1.0;
  return out;
}

Matrix ComplementProjector::weighted_gram(const Vector& w) const {
  if (w.size() != q_.rows()) {
    throw InvalidArgument("ComplementProjector::weighted_gram: weight length mismatch");
  }
  Matrix p = -(q_ * q_.transpose());
  p.diagonal().array() += 1.0;
  return p * w.asDiagonal() * p;
}

Vector ComplementProjector::column_norms_sq() const {
  // P is an orthogonal projector, so ||P e_j||^2 = P_jj.
  return (1.0 - q_.rowwise().squaredNorm().array()).matrix();
}

Vector ComplementProjector::least_squares(const Vector& v) const {
  return r_.triangularView<Eigen::Upper>().solve(q_.transpose() * v);
}

// ---------------------------------------------------------------- CAB

CabResult cab_solve(const Matrix& a, const Vector& b, Algorithm solver,
                    const SolverConfig& config, double weight) {
  if (b.size() != a.rows()) {
    throw InvalidArgument("cab: A has " + std::to_string(a.rows()) + " rows but b has length " +
                          std::to_string(b.size()));
  }
  if (!(weight > 0.0)) throw InvalidArgument("cab: weight must be positive");
  const ExtendedDictionary ext(a, 1.0 / weight);
  SolverConfig cfg = config;
  if (solver == Algorithm::homotopy && !cfg.lambda) cfg.lambda = 0.0;
  CabResult out;
  out.result = run_solver(solver, OperatorProblem{ext, b}, cfg);
  const Vector& w = out.result.x;
  out.x = w.head(a.cols());
  out.e = w.tail(a.rows()) / weight;
  return out;
}

Vector group_energy(const Vector& x, const std::vector<Index>& labels, Index groups) {
  if (static_cast<Index>(labels.size()) != x.size()) {
    throw InvalidArgument("group_energy: one label per coefficient required");
  }
  Vector out = Vector::Zero(groups);
  for (Index j = 0; j < x.size(); ++j) {
    const Index g = labels[static_cast<std::size_t>(j)];
    if (g < 0 || g >= groups) throw InvalidArgument("group_energy: label out of range");
    out[g] += x[j] * x[j];
  }
  return out;
}

Index identify_group(const Vector& x, const std::vector<Index>& labels, Index groups) {
  const Vector energy = group_energy(x, labels, groups);
  Index best = 0;
  for (Index g = 1; g < groups; ++g) {
    if (energy[g] > energy[best]) best = g;
  }
  return best;
}

// ---------------------------------------------------------------- alignment

void AlignmentProblem::validate() const {
  if (B.rows() != b.size()) {
    throw InvalidArgument("alignment: B has " + std::to_string(B.rows()) +
                          " rows but b has length " + std::to_string(b.size()));
  }
  if (B.cols() < 1 || B.rows() <= B.cols()) {
    throw InvalidArgument("alignment: B must have more rows than columns");
  }
  if (!B.allFinite() || !b.allFinite()) throw InvalidArgument("alignment: non-finite input");
  ComplementProjector check(B);
  (void)check;
}

AlignmentProblem gen_alignment_problem(Index d, Index m, Index corrupted, std::uint64_t seed) {
  if (d <= m || m < 1) throw InvalidArgument("gen_alignment_problem: need d > m >= 1");
  if (corrupted < 0 || corrupted > d) {
    throw InvalidArgument("gen_alignment_problem: corrupted count out of range");
  }
  AlignmentProblem p;
  p.B = synth::gen_gaussian_dict(d, m, synth::derive_seed({seed, 1}));
  synth::Rng rng(synth::derive_seed({seed, 2}));
  Vector w(m);
  for (Index i = 0; i < m; ++i) w[i] = rng.normal();
  Vector e = Vector::Zero(d);
  synth::Rng pick(synth::derive_seed({seed, 3}));
  for (Index i : pick.sample_indices(d, corrupted)) {
    const double mag = pick.uniform(1.0, 2.0);
    e[i] = pick.uniform() < 0.5 ? -mag : mag;
  }
  p.b = p.B * w + e;
  p.ground_truth_w = std::move(w);
  p.ground_truth_e = std::move(e);
  return p;
}

double align_objective(const AlignmentProblem& p, const Vector& w, const Vector& e, double lambda) {
  return 0.5 * (p.b - p.B * w - e).squaredNorm() + lambda * e.lpNorm<1>();
}

double align_w_residual(const AlignmentProblem& p, const Vector& w, const Vector& e) {
  return (p.B.transpose() * (p.b - p.B * w - e)).lpNorm<Eigen::Infinity>();
}

double align_e_kkt(const AlignmentProblem& p, const Vector& w, const Vector& e, double lambda) {
  return kkt_residual_from_correlation(e, p.b - p.B * w - e, lambda);
}

double align_lambda_max(const AlignmentProblem& p) {
  const ComplementProjector proj(p.B);
  return proj.apply(p.b).lpNorm<Eigen::Infinity>();
}

double align_default_lambda(const AlignmentProblem& p) { return 1e-2 * align_lambda_max(p); }

namespace {

AlignResult finish(Vector w, Vector e, SolverResult res) {
  AlignResult out;
  res.x.resize(w.size() + e.size());
  res.x << w, e;
  out.w = std::move(w);
  out.e = std::move(e);
  out.result = std::move(res);
  return out;
}

/// e = 0 and least-squares w; optimal whenever lambda >= align_lambda_max.
AlignResult trivial_solution(const AlignmentProblem& p, const ComplementProjector& proj,
                             const char* algo, double lambda) {
  SolverResult res;
  res.algorithm = algo;
  res.lambda = lambda;
  res.converged = true;
  Vector e = Vector::Zero(p.b.size());
  return finish(proj.least_squares(p.b), std::move(e), std::move(res));
}

void check_lambda(double lambda, const char* who) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument(std::string(who) + ": lambda must be positive and finite");
  }
}

}  // namespace

AlignResult align_gp_solve(const AlignmentProblem& p, double lambda, const SolverConfig& config) {
  config.validate();
  p.validate();
  check_lambda(lambda, "align_gp");
  const ComplementProjector proj(p.B);
  if (proj.apply(p.b).lpNorm<Eigen::Infinity>() <= lambda) {
    return trivial_solution(p, proj, "align_gp", lambda);
  }
  Stopwatch clock;
  const Matrix& B = p.B;
  const Vector& b = p.b;
  const Index d = B.rows();
  const double dd = static_cast<double>(d);
  const TnipmOptions& opts = config.tnipm;

  SolverResult res;
  res.algorithm = "align_gp";
  res.lambda = lambda;
  Vector w = proj.least_squares(b);
  Vector e = Vector::Zero(d);
  Vector u = Vector::Constant(d, std::max(1.0, (b - B * w).lpNorm<Eigen::Infinity>()));
  double t = 2.0 * dd / std::max(align_objective(p, w, e, lambda) + lambda * u.sum(), 1e-300);

  auto value = [&](const Vector& wv, const Vector& ev, const Vector& uv, double tt) {
    double phi = 0.0;
    for (Index i = 0; i < d; ++i) {
      const double lo = uv[i] + ev[i];
      const double hi = uv[i] - ev[i];
      if (!(lo > 0.0) || !(hi > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(lo) + std::log(hi);
    }
    return tt * (0.5 * (b - B * wv - ev).squaredNorm() + lambda * uv.sum()) + phi;
  };

  if (config.record_trace) {
    const Vector r0 = b - B * w;
    res.trace.push_back({0, align_objective(p, w, e, lambda), r0.norm(), 0});
  }
  int k = 0;
  while (k < config.max_iter) {
    ++k;
    const Vector r = b - B * w - e;
    const Vector q1 = (u + e).cwiseInverse();
    const Vector q2 = (u - e).cwiseInverse();
    const Vector gw = -t * (B.transpose() * r);
    const Vector ge = -t * r - q1 + q2;
    const Vector gu = Vector::Constant(d, t * lambda) - q1 - q2;
    const Vector d1 = q1.cwiseAbs2() + q2.cwiseAbs2();
    const Vector d2 = q1.cwiseAbs2() - q2.cwiseAbs2();
    // Eliminate u, then e; what is left is an m x m system in w.
    // d1 - d2^2 / d1 written without cancellation.
    const Vector h = (4.0 * q1.cwiseAbs2().cwiseProduct(q2.cwiseAbs2())).cwiseQuotient(d1);
    const Vector ediag = (Vector::Constant(d, t) + h);
    const Vector he = -ge + d2.cwiseProduct(gu).cwiseQuotient(d1);
    const Vector keep = h.cwiseQuotient(ediag);
    const Matrix schur = t * (B.transpose() * keep.asDiagonal() * B);
    Eigen::LLT<Matrix> llt(schur);
    if (llt.info() != Eigen::Success) throw IllConditioned("align_gp: singular Newton system");
    const Vector dw = llt.solve(-gw - t * (B.transpose() * he.cwiseQuotient(ediag)));
    const Vector de = (he - t * (B * dw)).cwiseQuotient(ediag);
    const Vector du = (-gu - d2.cwiseProduct(de)).cwiseQuotient(d1);

    const double decrement_sq = -(gw.dot(dw) + ge.dot(de) + gu.dot(du));
    if (!std::isfinite(decrement_sq)) throw NumericalBreakdown("align_gp: non-finite Newton step");
    const double obj = align_objective(p, w, e, lambda);
    if (decrement_sq / 2.0 <= 1e-10) {
      if (2.0 * dd / t <= config.tol * 1e-2 * (1.0 + obj)) {
        res.converged = true;
        break;
      }
      t *= opts.t_growth;
      continue;
    }
    const double f0 = value(w, e, u, t);
    double s = 1.0;
    int bt = 0;
    while (bt < opts.max_backtracks) {
      const double f1 = value(w + s * dw, e + s * de, u + s * du, t);
      if (f1 <= f0 - opts.armijo * s * decrement_sq) break;
      s *= opts.backtrack;
      ++bt;
    }
    if (bt == opts.max_backtracks) {
      res.warnings.push_back("line search failed");
      break;
    }
    w += s * dw;
    e += s * de;
    u += s * du;
    if (config.record_trace) {
      res.trace.push_back({k, align_objective(p, w, e, lambda), (b - B * w - e).norm(),
                           support_size(e)});
    }
  }

  // Snap to the exact solution on the detected support.
  const Vector pb = proj.apply(b);
  bool accepted = false;
  e = polish_support(e, OperatorProblem{proj, pb}, lambda, &accepted);
  w = proj.least_squares(b - e);
  if (accepted && config.record_trace && !res.trace.empty()) {
    res.trace.back() = {k, align_objective(p, w, e, lambda), (b - B * w - e).norm(),
                        support_size(e)};
  }
  const double kkt = align_e_kkt(p, w, e, lambda);
  if (kkt <= config.tol * lambda) res.converged = true;
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return finish(std::move(w), std::move(e), std::move(res));
}

AlignResult align_homotopy_solve(const AlignmentProblem& p, const SolverConfig& config,
                                 std::vector<Breakpoint>* path) {
  config.validate();
  p.validate();
  const ComplementProjector proj(p.B);
  const Vector pb = proj.apply(p.b);
  const double lambda = config.lambda.value_or(1e-2 * pb.lpNorm<Eigen::Infinity>());
  if (!(lambda >= 0.0)) throw InvalidArgument("align_homotopy: lambda must be >= 0");
  Stopwatch clock;
  // With w eliminated through B^T (b - B w - e) = 0 the residual is P (b - e),
  // so the path in e is an ordinary path on the dictionary P.
  HomotopyRun run = homotopy_path(OperatorProblem{proj, pb}, lambda, config);
  if (path) *path = run.path;
  SolverResult res = std::move(run.result);
  res.algorithm = "align_homotopy";
  res.lambda = lambda;
  Vector e = res.x;
  Vector w = proj.least_squares(p.b - e);
  res.wall_time_seconds = clock.seconds();
  return finish(std::move(w), std::move(e), std::move(res));
}

AlignResult align_ist_solve(const AlignmentProblem& p, double lambda, const SolverConfig& config) {
  config.validate();
  p.validate();
  check_lambda(lambda, "align_ist");
  const ComplementProjector proj(p.B);
  const double lambda_max = proj.apply(p.b).lpNorm<Eigen::Infinity>();
  if (lambda_max <= lambda) return trivial_solution(p, proj, "align_ist", lambda);
  const Index m = p.B.cols();
  const Index d = p.B.rows();
  const ExtendedDictionary ext(p.B);
  SolverConfig cfg = config;
  cfg.lambda = lambda;
  Vector weights(m + d);
  weights << Vector::Zero(m), Vector::Ones(d);
  cfg.ist.weights = std::move(weights);
  if (!cfg.ist.lambda_start) cfg.ist.lambda_start = lambda_max;
  SolverResult res = ist_solve(OperatorProblem{ext, p.b}, cfg);
  res.algorithm = "align_ist";
  Vector w = res.x.head(m);
  Vector e = res.x.tail(d);
  return finish(std::move(w), std::move(e), std::move(res));
}

AlignResult align_palm_solve(const AlignmentProblem& p, const SolverConfig& config) {
  config.validate();
  p.validate();
  const PalmOptions& opts = config.palm;
  if (!(opts.mu0 > 0.0)) throw InvalidArgument("align_palm: mu0 must be positive");
  if (!(opts.rho > 1.0)) throw InvalidArgument("align_palm: rho must exceed 1");
  const ComplementProjector proj(p.B);
  const Matrix& B = p.B;
  const Vector& b = p.b;
  const Index m = B.cols();
  const Index d = B.rows();
  const double bnorm = b.norm();
  Stopwatch clock;

  SolverResult res;
  res.algorithm = "align_palm";
  Vector w = proj.least_squares(b);
  Vector e = Vector::Zero(d);
  Vector y = Vector::Zero(d);
  if (bnorm == 0.0) {
    res.converged = true;
    return finish(std::move(w), std::move(e), std::move(res));
  }
  // Scale mu to the data so the first shrinkage is not a no-op.
  double mu = opts.mu0 / std::max((b - B * w).lpNorm<Eigen::Infinity>(), 1e-300);
  const ExtendedDictionary ext(B);
  const OperatorProblem stacked_problem{ext, b};
  StopMonitor monitor(config.stopping, stacked_problem, 0.0);
  Vector stacked(m + d);
  if (config.record_trace) res.trace.push_back({0, 0.0, (b - B * w).norm(), 0});

  int k = 0;
  while (k < config.max_iter) {
    ++k;
    // Minimize ||e||_1 + mu/2 ||b + y/mu - B w - e||^2 by alternating exact block updates.
    const Vector v = b + y / mu;
    for (int j = 0; j < opts.inner_max_iter; ++j) {
      const Vector e_next = soft_threshold(v - B * w, 1.0 / mu);
      const Vector w_next = proj.least_squares(v - e_next);
      const double change = (e_next - e).norm() + (B * (w_next - w)).norm();
      e = e_next;
      w = w_next;
      if (change <= opts.inner_tol_scale / mu * std::max(1.0, e.norm())) break;
    }
    const Vector r = b - B * w - e;
    y += mu * r;
    mu *= opts.rho;
    const double l1 = e.lpNorm<1>();
    if (config.record_trace) res.trace.push_back({k, l1, r.norm(), support_size(e)});
    stacked << w, e;
    const bool rule = monitor.update(stacked, l1);
    if (r.norm() / bnorm <= config.tol && rule) {
      res.converged = true;
      break;
    }
  }
  res.iterations = k;
  res.wall_time_seconds = clock.seconds();
  return finish(std::move(w), std::move(e), std::move(res));
}

}  // namespace l1min
