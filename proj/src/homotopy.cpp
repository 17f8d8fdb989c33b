#include "l1min/homotopy.hpp"

#include "l1min/errors.hpp"
#include "l1min/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace l1min {

namespace {

Vector support_signs(const PathState& s) {
  Vector out(static_cast<Index>(s.support.size()));
  for (std::size_t k = 0; k < s.support.size(); ++k) {
    out[static_cast<Index>(k)] = sign_of(s.c[s.support[k]]);
  }
  return out;
}

// Active-set bookkeeping shared by the main loop.
class ActiveSet {
 public:
  ActiveSet(const LinearOperator& a, const HomotopyOptions& opts, PathState& state,
            SolverResult& result, int& refactorizations)
      : a_(a), opts_(opts), s_(state), result_(result), refactorizations_(refactorizations) {
    cols_.resize(a.rows(), 0);
  }

  const Matrix& columns() const { return cols_; }

  void add(Index j) {
    const Vector col = a_.column(j);
    const Index k = cols_.cols();
    cols_.conservativeResize(Eigen::NoChange, k + 1);
    cols_.col(k) = col;
    s_.support.push_back(j);
    const Vector cross = cols_.leftCols(k).transpose() * col;
    try {
      s_.chol.append(cross, col.squaredNorm());
    } catch (const NotPositiveDefinite&) {
      refactor();
    }
  }

  void remove_at(std::size_t pos) {
    const auto k = static_cast<Index>(pos);
    const Index tail = cols_.cols() - k - 1;
    if (tail > 0) cols_.middleCols(k, tail) = cols_.rightCols(tail).eval();
    cols_.conservativeResize(Eigen::NoChange, cols_.cols() - 1);
    s_.support.erase(s_.support.begin() + static_cast<std::ptrdiff_t>(pos));
    try {
      s_.chol.remove(k);
    } catch (const NotPositiveDefinite&) {
      refactor();
    }
  }

  /// Fresh factorization of A_I^T A_I; ridge on failure.
  void refactor() {
    ++refactorizations_;
    Matrix gram = cols_.transpose() * cols_;
    try {
      s_.chol = CholFactor::factorize(gram);
      return;
    } catch (const NotPositiveDefinite&) {
    }
    const double ridge = opts_.ridge * std::max(gram.trace(), 1.0);
    gram.diagonal().array() += ridge;
    try {
      s_.chol = CholFactor::factorize(gram);
    } catch (const NotPositiveDefinite&) {
      throw DegenerateSupport("homotopy: active-set Gram matrix is singular even with ridge");
    }
    const std::string msg = "degenerate support: ridge added to Gram matrix";
    if (std::find(result_.warnings.begin(), result_.warnings.end(), msg) ==
        result_.warnings.end()) {
      result_.warnings.push_back(msg);
    }
  }

 private:
  const LinearOperator& a_;
  const HomotopyOptions& opts_;
  PathState& s_;
  SolverResult& result_;
  int& refactorizations_;
  Matrix cols_;
};

double path_objective(const Vector& r, const Vector& x, double lambda) {
  return 0.5 * r.squaredNorm() + lambda * x.lpNorm<1>();
}

}  // namespace

const char* to_string(Breakpoint::Event e) {
  switch (e) {
    case Breakpoint::Event::start: return "start";
    case Breakpoint::Event::add: return "add";
    case Breakpoint::Event::remove: return "remove";
    case Breakpoint::Event::target: return "target";
  }
  return "unknown";
}

Vector update_direction(const PathState& state, const LinearOperator& a) {
  Vector d = Vector::Zero(a.cols());
  if (state.support.empty()) return d;
  if (state.chol.dim() != static_cast<Index>(state.support.size())) {
    throw InvalidArgument("update_direction: factor does not match the support");
  }
  const Vector d_i = state.chol.solve(support_signs(state));
  if (!d_i.allFinite()) throw DegenerateSupport("update_direction: singular A_I^T A_I");
  for (std::size_t k = 0; k < state.support.size(); ++k) {
    d[state.support[k]] = d_i[static_cast<Index>(k)];
  }
  return d;
}

BreakpointGammas breakpoint_gammas(const PathState& state, const Vector& d, const Vector& a_dir,
                                   Index skip_entering) {
  BreakpointGammas g;
  const Index n = state.x.size();
  std::vector<char> active(static_cast<std::size_t>(n), 0);
  for (Index i : state.support) active[static_cast<std::size_t>(i)] = 1;
  const double lam = state.lambda;
  for (Index i = 0; i < n; ++i) {
    if (active[static_cast<std::size_t>(i)]) {
      if (d[i] == 0.0) continue;
      const double r = -state.x[i] / d[i];
      if (r > 0.0 && std::isfinite(r) && r < g.gamma_minus) {
        g.gamma_minus = r;
        g.i_minus = i;
      }
    } else {
      if (i == skip_entering) continue;
      for (double r : {(lam - state.c[i]) / (1.0 - a_dir[i]),
                       (lam + state.c[i]) / (1.0 + a_dir[i])}) {
        if (r > 0.0 && std::isfinite(r) && r < g.gamma_plus) {
          g.gamma_plus = r;
          g.i_plus = i;
        }
      }
    }
  }
  return g;
}

BreakpointGammas breakpoint_gammas(const PathState& state, const Vector& d,
                                   const LinearOperator& a) {
  return breakpoint_gammas(state, d, a.adjoint(a.apply(d)));
}

HomotopyRun homotopy_path(const OperatorProblem& problem, double target_lambda,
                          const SolverConfig& config, const PathObserver& observer) {
  config.validate();
  if (!(target_lambda >= 0.0)) throw InvalidArgument("homotopy: target lambda must be >= 0");
  const LinearOperator& a = problem.op;
  const Vector& b = problem.b;
  if (b.size() != a.rows()) {
    throw InvalidArgument("homotopy: b has length " + std::to_string(b.size()) +
                          " but the dictionary has " + std::to_string(a.rows()) + " rows");
  }
  const HomotopyOptions& opts = config.homotopy;
  Stopwatch clock;
  HomotopyRun run;
  SolverResult& res = run.result;
  res.algorithm = "homotopy";
  res.lambda = target_lambda;

  PathState s;
  s.x = Vector::Zero(a.cols());
  s.c = a.adjoint(b);
  Index first = 0;
  s.lambda = a.cols() > 0 ? s.c.cwiseAbs().maxCoeff(&first) : 0.0;

  auto record = [&](Breakpoint::Event ev, Index idx, int iteration, const Vector& r) {
    const double obj = path_objective(r, s.x, s.lambda);
    run.path.push_back({s.lambda, static_cast<Index>(s.support.size()), obj, ev, idx});
    if (config.record_trace) {
      res.trace.push_back({iteration, obj, r.norm(), static_cast<Index>(s.support.size())});
    }
  };

  Vector r = b;
  if (s.lambda <= target_lambda || s.lambda == 0.0) {
    // Zero is already optimal.
    s.lambda = std::max(target_lambda, s.lambda);
    record(Breakpoint::Event::target, -1, 0, r);
    res.x = s.x;
    res.converged = true;
    res.wall_time_seconds = clock.seconds();
    return run;
  }

  // Events this close to the target are roundoff; the target step wins.
  const double target_tie = 1e-10 * s.lambda;
  ActiveSet active(a, opts, s, res, run.refactorizations);
  active.add(first);
  record(Breakpoint::Event::start, first, 0, r);
  if (observer) observer(s);

  Index last_removed = -1;
  int iteration = 0;
  while (true) {
    if (iteration >= config.max_iter) break;
    ++iteration;

    Vector signs = support_signs(s);
    Vector d_i = s.chol.solve(signs);
    Vector v = active.columns() * d_i;
    Vector a_dir = a.adjoint(v);
    // Verify the direction against A_I^T A_I d_I = sgn(c_I) using a_dir.
    auto solve_residual = [&] {
      double worst = 0.0;
      for (std::size_t k = 0; k < s.support.size(); ++k) {
        worst = std::max(worst,
                         std::abs(a_dir[s.support[k]] - signs[static_cast<Index>(k)]));
      }
      return worst;
    };
    if (!d_i.allFinite() || solve_residual() > opts.solve_residual_tol) {
      active.refactor();
      d_i = s.chol.solve(signs);
      v = active.columns() * d_i;
      a_dir = a.adjoint(v);
      if (!d_i.allFinite()) throw DegenerateSupport("homotopy: direction is not finite");
    }
    Vector d = Vector::Zero(a.cols());
    for (std::size_t k = 0; k < s.support.size(); ++k) {
      d[s.support[k]] = d_i[static_cast<Index>(k)];
    }

    const BreakpointGammas g = breakpoint_gammas(s, d, a_dir, last_removed);
    const double gamma_target = s.lambda - target_lambda;
    const double gamma_event = std::min(g.gamma_plus, g.gamma_minus);

    if (gamma_target <= gamma_event + target_tie) {
      s.x += gamma_target * d;
      if (std::abs(g.gamma_minus - gamma_target) <= target_tie) s.x[g.i_minus] = 0.0;
      s.lambda = target_lambda;
      r = b - active.columns() * s.x(s.support);
      s.c = a.adjoint(r);
      record(Breakpoint::Event::target, -1, iteration, r);
      if (observer) observer(s);
      res.converged = true;
      break;
    }

    s.x += gamma_event * d;
    s.lambda -= gamma_event;
    last_removed = -1;
    Breakpoint::Event ev;
    Index idx;
    if (g.gamma_minus <= g.gamma_plus + opts.tie_tol) {
      idx = g.i_minus;
      ev = Breakpoint::Event::remove;
      s.x[idx] = 0.0;
      const auto pos = static_cast<std::size_t>(
          std::find(s.support.begin(), s.support.end(), idx) - s.support.begin());
      active.remove_at(pos);
      last_removed = idx;
    } else {
      idx = g.i_plus;
      ev = Breakpoint::Event::add;
      active.add(idx);
    }
    r = b - active.columns() * s.x(s.support);
    if (ev == Breakpoint::Event::remove && s.support.empty()) r = b;
    s.c = a.adjoint(r);
    record(ev, idx, iteration, r);
    if (observer) observer(s);
    if (s.support.empty()) {
      // Path returned to zero; only possible for degenerate data.
      res.warnings.push_back("active set emptied before reaching the target");
      break;
    }
  }

  res.x = s.x;
  res.iterations = iteration;
  res.wall_time_seconds = clock.seconds();
  if (!res.converged) res.lambda = s.lambda;
  return run;
}

SolverResult homotopy_solve(const OperatorProblem& problem, double target_lambda,
                            const SolverConfig& config) {
  return homotopy_path(problem, target_lambda, config).result;
}

SolverResult homotopy_solve(const ProblemInstance& problem, double target_lambda,
                            const SolverConfig& config) {
  problem.validate();
  DenseView view(problem.A);
  const Vector* gt = problem.ground_truth ? &*problem.ground_truth : nullptr;
  return homotopy_solve(OperatorProblem{view, problem.b, gt}, target_lambda, config);
}

void write_path_csv(std::ostream& out, const std::vector<Breakpoint>& path) {
  out << "lambda,support_size,objective,event,index\n";
  for (const Breakpoint& bp : path) {
    out << format_double(bp.lambda) << ',' << bp.support_size << ','
        << format_double(bp.objective) << ',' << to_string(bp.event) << ',' << bp.index
        << '\n';
  }
}

}  // namespace l1min
