#include <doctest.h>

#include "l1min/errors.hpp"
#include "l1min/homotopy.hpp"
#include "l1min/linear_operator.hpp"
#include "l1min/numerics.hpp"
#include "l1min/shrinkage.hpp"
#include "l1min/synth.hpp"
#include "support.hpp"

using namespace l1min;
using l1min::testing::random_matrix;
using l1min::testing::random_orthonormal;
using l1min::testing::random_spd;
using l1min::testing::random_vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ProblemInstance gaussian(Index d, Index n, Index k, std::uint64_t seed) {
  synth::GenSpec spec;
  spec.d = d;
  spec.n = n;
  spec.k = k;
  spec.seed = seed;
  return synth::gen_problem(spec);
}

double lambda_max(const ProblemInstance& p) { return (p.A.transpose() * p.b).cwiseAbs().maxCoeff(); }

ContinuationSchedule single_stage(double lambda) {
  ContinuationSchedule s;
  s.lambda_start = lambda;
  s.lambda_target = lambda;
  return s;
}

SolverConfig tight() {
  SolverConfig c;
  c.tol = 1e-10;
  c.stopping.kind = StoppingRule::Kind::kkt_residual;
  c.stopping.threshold = 1e-10;
  c.max_iter = 100000;
  return c;
}

}  // namespace

TEST_CASE("bb_alpha examples") {
  CHECK(bb_alpha(vec({1, 1}), vec({2, 4})) == doctest::Approx(3.0));
  CHECK(bb_alpha(vec({1, 0}), vec({0, 1})) == 1e-30);
  CHECK(bb_alpha(vec({1, 0}), vec({0, 1}), 1e-3) == 1e-3);
  synth::Rng rng(1);
  const Matrix h = random_spd(6, rng);
  const Vector x0 = random_vector(6, rng);
  const Vector x1 = x0 - 0.01 * h * x0;
  const Vector s = x1 - x0;
  CHECK(bb_alpha(s, h * x1 - h * x0) == doctest::Approx(s.dot(h * s) / s.squaredNorm()));
}

TEST_CASE("fista_t_next examples") {
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(fista_t_next(1.0) == doctest::Approx(golden));
  const double t2 = fista_t_next(golden);
  CHECK(t2 == doctest::Approx(2.193527085331054).epsilon(1e-12));
  CHECK(t2 * t2 - t2 <= golden * golden * (1.0 + 1e-15));
  CHECK(t2 > golden);
}

TEST_CASE("backtrack_L examples") {
  Matrix a(1, 1);
  a << 2.0;
  DenseView view(a);
  const Vector b = Vector::Ones(1);
  const OperatorProblem p{view, b};
  const BacktrackResult r = backtrack_L(Vector::Zero(1), 1.0, 2.0, 0.1, p);
  CHECK(r.L == doctest::Approx(4.0));
  CHECK(r.j == 2);
  CHECK(r.x_next[0] == doctest::Approx(0.475));

  const BacktrackResult big = backtrack_L(Vector::Zero(1), 10.0, 2.0, 0.1, p);
  CHECK(big.j == 0);
  CHECK(big.L == 10.0);
}

TEST_CASE("ContinuationSchedule validation and stages") {
  ContinuationSchedule s;
  s.lambda_start = 1.0;
  s.lambda_target = 2.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s.lambda_target = 0.01;
  s.beta = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s.beta = 0.5;
  const std::vector<double> st = s.stages(5);
  CHECK(st.front() == 1.0);
  CHECK(st.back() == 0.01);
  CHECK(st.size() >= 5);
  for (std::size_t i = 1; i < st.size(); ++i) CHECK(st[i] < st[i - 1]);
}

TEST_CASE("ist and fista on orthonormal A reproduce soft thresholding") {
  synth::Rng rng(2);
  ProblemInstance p;
  p.A = random_orthonormal(10, rng);
  p.b = random_vector(10, rng);
  const double lam = 0.25;
  const Vector want = soft_threshold(p.A.transpose() * p.b, lam);
  SolverConfig c;
  c.lambda = lam;
  const SolverResult ist = ist_solve(p, single_stage(lam), c);
  const SolverResult fista = fista_solve(p, c);
  CHECK(ist.converged);
  CHECK(fista.converged);
  CHECK((ist.x - want).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((fista.x - want).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("zero data gives the zero solution") {
  synth::Rng rng(3);
  ProblemInstance p;
  p.A = random_matrix(6, 9, rng);
  p.b = Vector::Zero(6);
  SolverConfig c;
  c.lambda = 0.1;
  CHECK(ist_solve(p, single_stage(0.1), c).x.isZero());
  CHECK(fista_solve(p, c).x.isZero());
}

TEST_CASE("100x200 instance: ist and fista agree with homotopy") {
  const ProblemInstance p = gaussian(100, 200, 10, 21);
  const double lam = 1e-2 * lambda_max(p);
  SolverConfig c;
  c.lambda = lam;
  DenseView view(p.A);
  const OperatorProblem op{view, p.b};
  const double fh = objective(homotopy_solve(op, lam, c).x, p, lam);
  CHECK(testing::rel_diff(objective(ist_solve(op, c).x, p, lam), fh) <= 1e-5);
  CHECK(testing::rel_diff(objective(fista_solve(op, c).x, p, lam), fh) <= 1e-5);
}

TEST_CASE("fista with exact L meets the O(1/k^2) bound on a 50x100 instance") {
  const ProblemInstance p = gaussian(50, 100, 5, 31);
  const double lam = 1e-2 * lambda_max(p);
  DenseView view(p.A);
  const OperatorProblem op{view, p.b};
  SolverConfig ref;
  ref.lambda = lam;
  ref.fista.continuation = false;
  ref.fista.exact_lipschitz = true;
  ref.max_iter = 100000;
  ref.tol = 1e-300;
  ref.stopping.threshold = 1e-300;
  const SolverResult star = fista_solve(op, ref);
  const double f_star = objective(star.x, p, lam);
  SolverConfig c = ref;
  c.max_iter = 500;
  c.record_trace = true;
  const SolverResult run = fista_solve(op, c);
  REQUIRE(run.trace.size() == 501);
  const double L = 1.01 * spectral_norm_sq(view);
  const double dist = star.x.squaredNorm();
  for (std::size_t k = 1; k < run.trace.size(); ++k) {
    const double kk = static_cast<double>(k);
    CHECK(run.trace[k].objective - f_star <= 2.0 * L * dist / ((kk + 1.0) * (kk + 1.0)));
  }
}

TEST_CASE("fista rejects bad parameters") {
  const ProblemInstance p = gaussian(5, 10, 2, 1);
  SolverConfig c;
  c.fista.eta = 1.0;
  CHECK_THROWS_AS(fista_solve(p, c), InvalidArgument);
  c = SolverConfig{};
  c.fista.beta = 1.5;
  CHECK_THROWS_AS(fista_solve(p, c), InvalidArgument);
}

TEST_CASE("property: gradient of the data term matches central differences") {
  synth::Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + static_cast<Index>(rng.below(8));
    const Index n = 1 + static_cast<Index>(rng.below(8));
    ProblemInstance p;
    p.A = random_matrix(d, n, rng);
    p.b = random_vector(d, rng);
    const Vector x = random_vector(n, rng);
    const Vector grad = p.A.transpose() * (p.A * x - p.b);
    Vector fd(n);
    const double h = 1e-5;
    for (Index i = 0; i < n; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (objective(xp, p, 0.0) - objective(xm, p, 0.0)) / (2.0 * h);
    }
    CHECK((fd - grad).norm() <= 1e-6 * std::max(1.0, grad.norm()));
  }
}

TEST_CASE("property: fista t-sequence satisfies t_k^2 - t_k <= t_{k-1}^2") {
  synth::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    double t = 1.0 + rng.uniform(0.0, 100.0) * static_cast<double>(trial % 2);
    for (int k = 0; k < 50; ++k) {
      const double next = fista_t_next(t);
      CHECK(next > t);
      CHECK(next * next - next <= t * t * (1.0 + 1e-14));
      t = next;
    }
  }
}

TEST_CASE("property: backtracking acceptance holds and L never decreases") {
  synth::Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const Index d = 2 + static_cast<Index>(rng.below(10));
    const Index n = 2 + static_cast<Index>(rng.below(15));
    const Matrix a = random_matrix(d, n, rng);
    const Vector b = random_vector(d, rng);
    DenseView view(a);
    const OperatorProblem p{view, b};
    const Vector y = random_vector(n, rng);
    const double lam = rng.uniform(0.0, 1.0);
    const double L_prev = rng.uniform(1e-3, 10.0);
    const BacktrackResult r = backtrack_L(y, L_prev, 1.5, lam, p);
    CHECK(r.L >= L_prev);
    const Vector ry = a * y - b;
    const Vector grad = a.transpose() * ry;
    const Vector dx = r.x_next - y;
    const double f_next = 0.5 * (a * r.x_next - b).squaredNorm();
    const double q = 0.5 * ry.squaredNorm() + grad.dot(dx) + 0.5 * r.L * dx.squaredNorm();
    CHECK(f_next <= q + 1e-12 * (1.0 + std::abs(q)));
    CHECK((r.x_next - soft_threshold(y - grad / r.L, lam / r.L)).norm() <= 1e-12 * (1.0 + r.x_next.norm()));
  }
}

TEST_CASE("property: ist objective strictly decreases at fixed lambda") {
  synth::Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const Index d = 5 + static_cast<Index>(rng.below(15));
    const ProblemInstance p = gaussian(d, 2 * d, 1 + static_cast<Index>(rng.below(3)), rng.below(1u << 30));
    const double lam = rng.uniform(1e-2, 0.5) * lambda_max(p);
    SolverConfig c;
    c.record_trace = true;
    c.ist.min_stages = 1;
    const SolverResult r = ist_solve(p, single_stage(lam), c);
    bool strict = true;
    for (std::size_t i = 1; i < r.trace.size(); ++i) strict = strict && r.trace[i].objective < r.trace[i - 1].objective;
    CHECK(strict);
  }
}

TEST_CASE("property: returned solutions are fixed points of the shrinkage map") {
  synth::Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    const Index d = 5 + static_cast<Index>(rng.below(15));
    const ProblemInstance p = gaussian(d, 2 * d, 1 + static_cast<Index>(rng.below(3)), rng.below(1u << 30));
    const double lam = rng.uniform(1e-2, 0.5) * lambda_max(p);
    DenseView view(p.A);
    const OperatorProblem op{view, p.b};
    SolverConfig c = tight();
    c.lambda = lam;
    const double L = spectral_norm_sq(view);
    for (const SolverResult& r : {ist_solve(op, c), fista_solve(op, c)}) {
      const Vector x = r.x;
      const Vector mapped = soft_threshold(x - p.A.transpose() * (p.A * x - p.b) / L, lam / L);
      CHECK(kkt_residual(mapped, p, lam) <= 1e-8 * lam);
      CHECK((mapped - x).norm() <= 1e-8 * (1.0 + x.norm()));
    }
  }
}
