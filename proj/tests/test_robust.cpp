#include <doctest.h>

#include "l1min/bench.hpp"
#include "l1min/errors.hpp"
#include "l1min/numerics.hpp"
#include "l1min/robust.hpp"
#include "l1min/synth.hpp"
#include "support.hpp"

#include <Eigen/LU>

#include <algorithm>

using namespace l1min;
using l1min::testing::random_matrix;
using l1min::testing::random_vector;

namespace {

Matrix dense_extended(const Matrix& a, double s) {
  Matrix m(a.rows(), a.cols() + a.rows());
  m << a, s * Matrix::Identity(a.rows(), a.rows());
  return m;
}

std::vector<Index> support_of(const Vector& x, double tol) {
  std::vector<Index> s;
  for (Index i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) > tol) s.push_back(i);
  return s;
}

SolverConfig align_config() {
  SolverConfig c;
  c.max_iter = 20000;
  c.stopping.kind = StoppingRule::Kind::kkt_residual;
  return c;
}

}  // namespace

TEST_CASE("ExtendedDictionary matches the dense [A, sI]") {
  synth::Rng rng(1);
  const Matrix a = random_matrix(5, 7, rng);
  const ExtendedDictionary ext(a, 0.5);
  const Matrix dense = dense_extended(a, 0.5);
  CHECK(ext.rows() == 5);
  CHECK(ext.cols() == 12);
  const Vector w = random_vector(12, rng), r = random_vector(5, rng);
  CHECK((ext.apply(w) - dense * w).norm() <= 1e-12);
  CHECK((ext.adjoint(r) - dense.transpose() * r).norm() <= 1e-12);
  for (Index j : {0, 6, 7, 11}) CHECK((ext.column(j) - dense.col(j)).norm() == 0.0);
  const Vector wt = random_vector(12, rng).cwiseAbs();
  CHECK((ext.weighted_gram(wt) - dense * wt.asDiagonal() * dense.transpose()).norm() <= 1e-12);
  CHECK((ext.column_norms_sq() - dense.colwise().squaredNorm().transpose()).norm() <= 1e-12);
}

TEST_CASE("ComplementProjector matches the dense projector") {
  synth::Rng rng(2);
  const Matrix b = random_matrix(9, 3, rng);
  const ComplementProjector p(b);
  const Matrix dense = Matrix::Identity(9, 9) - b * (b.transpose() * b).inverse() * b.transpose();
  const Vector v = random_vector(9, rng);
  CHECK((p.apply(v) - dense * v).norm() <= 1e-12);
  CHECK((p.column(4) - dense.col(4)).norm() <= 1e-12);
  CHECK((p.column_norms_sq() - dense.colwise().squaredNorm().transpose()).norm() <= 1e-12);
  const Vector wt = random_vector(9, rng).cwiseAbs();
  CHECK((p.weighted_gram(wt) - dense * wt.asDiagonal() * dense).norm() <= 1e-10);
  CHECK((p.least_squares(b * Vector::Ones(3)) - Vector::Ones(3)).norm() <= 1e-12);

  Matrix rank1(4, 2);
  rank1 << 1, 2, 2, 4, 3, 6, 4, 8;
  CHECK_THROWS_AS(ComplementProjector{rank1}, IllConditioned);
}

TEST_CASE("cab_solve with no corruption is plain l1 recovery") {
  synth::GenSpec spec;
  spec.d = 40;
  spec.n = 80;
  spec.k = 4;
  spec.seed = 3;
  const ProblemInstance p = synth::gen_problem(spec);
  const CabResult r = cab_solve(p.A, p.b, Algorithm::homotopy, SolverConfig{});
  CHECK(r.x.size() == 80);
  CHECK(r.e.size() == 40);
  CHECK(r.e.lpNorm<1>() <= 1e-6 * p.b.lpNorm<1>());
  CHECK(testing::rel_err(r.x, *p.ground_truth) <= 1e-6);
}

TEST_CASE("cab_solve with pure corruption puts everything in e") {
  synth::Rng rng(4);
  const Matrix a = synth::gen_gaussian_dict(60, 80, 5);
  Vector e0 = Vector::Zero(60);
  for (Index i : rng.sample_indices(60, 3)) e0[i] = rng.uniform(1.0, 2.0);
  for (Algorithm alg : {Algorithm::homotopy, Algorithm::pdipa, Algorithm::dalm}) {
    const CabResult r = cab_solve(a, e0, alg, SolverConfig{});
    CHECK(r.x.norm() <= 1e-4);
    CHECK(testing::rel_err(r.e, e0) <= 1e-4);
  }
}

TEST_CASE("cab_solve identifies the active group under 40% corruption") {
  bench::CorruptionSweepOptions o;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const bench::CorruptionTrial t = bench::gen_corruption_trial(o, 0.4, seed);
    const CabResult r = cab_solve(t.A, t.b, Algorithm::homotopy, SolverConfig{});
    if (identify_group(r.x, t.labels, o.groups) == t.group) ++hits;
  }
  CHECK(hits >= 90);
}

TEST_CASE("cab_solve weight scales the error penalty") {
  synth::GenSpec spec;
  spec.d = 30;
  spec.n = 50;
  spec.k = 3;
  spec.seed = 6;
  ProblemInstance p = synth::gen_problem(spec);
  p.b[0] += 5.0;
  const CabResult cheap = cab_solve(p.A, p.b, Algorithm::homotopy, SolverConfig{}, 0.5);
  const CabResult dear = cab_solve(p.A, p.b, Algorithm::homotopy, SolverConfig{}, 50.0);
  CHECK((p.A * cheap.x + cheap.e - p.b).norm() <= 1e-8);
  CHECK((p.A * dear.x + dear.e - p.b).norm() <= 1e-8);
  CHECK(dear.e.lpNorm<1>() <= cheap.e.lpNorm<1>());
  CHECK_THROWS_AS(cab_solve(p.A, Vector::Zero(3), Algorithm::homotopy, SolverConfig{}), InvalidArgument);
}

TEST_CASE("group_energy and identify_group") {
  const std::vector<Index> labels{0, 0, 1, 1, 2};
  Vector x(5);
  x << 1.0, 1.0, 0.0, -2.0, 1.0;
  const Vector g = group_energy(x, labels, 3);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
  CHECK(g[2] == 1.0);
  CHECK(identify_group(x, labels, 3) == 1);
  x << 1.0, 1.0, 0.0, std::sqrt(2.0), 0.0;
  CHECK(identify_group(Vector::Zero(5), labels, 3) == 0);
}

TEST_CASE("alignment problem generation and validation") {
  const AlignmentProblem p = gen_alignment_problem(120, 11, 12, 1);
  CHECK(p.B.rows() == 120);
  CHECK(p.B.cols() == 11);
  CHECK(support_of(*p.ground_truth_e, 0.0).size() == 12);
  CHECK((p.B * *p.ground_truth_w + *p.ground_truth_e - p.b).norm() <= 1e-12);
  for (Index i = 0; i < 120; ++i) {
    const double e = std::abs((*p.ground_truth_e)[i]);
    CHECK((e == 0.0 || (e >= 1.0 && e <= 2.0)));
  }
  AlignmentProblem bad = p;
  bad.B = p.B.leftCols(1).replicate(1, 2);
  CHECK_THROWS_AS(bad.validate(), IllConditioned);
  bad = p;
  bad.b = Vector::Zero(5);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(gen_alignment_problem(5, 6, 1, 0), InvalidArgument);
}

TEST_CASE("align solvers with clean data return least squares") {
  AlignmentProblem p = gen_alignment_problem(60, 5, 0, 2);
  const SolverConfig c = align_config();
  const double lam = 0.1;
  const Vector w_ls = p.B.colPivHouseholderQr().solve(p.b);
  for (const AlignResult& r : {align_gp_solve(p, lam, c), align_ist_solve(p, lam, c)}) {
    CHECK(testing::rel_err(r.w, w_ls) <= 1e-8);
    CHECK(r.e.norm() <= 1e-8);
  }
  SolverConfig hc = c;
  hc.lambda = lam;
  std::vector<Breakpoint> path;
  const AlignResult h = align_homotopy_solve(p, hc, &path);
  CHECK(h.e.isZero());
  CHECK(testing::rel_err(h.w, w_ls) <= 1e-10);
  CHECK(path.size() <= 2);
}

TEST_CASE("align_gp_solve on the two-row example matches a grid search") {
  AlignmentProblem p;
  p.B = Matrix::Ones(2, 1);
  p.b = Vector(2);
  p.b << 1.0, 5.0;
  const double lam = 1.0;
  std::vector<double> grid_w, grid_f;
  for (int i = 0; i <= 100000; ++i) {
    const double w = -2.0 + 10.0 * i / 100000.0;
    const Vector e = soft_threshold(p.b - p.B * Vector::Constant(1, w), lam);
    grid_w.push_back(w);
    grid_f.push_back(align_objective(p, Vector::Constant(1, w), e, lam));
  }
  const double best = *std::min_element(grid_f.begin(), grid_f.end());
  // The minimizers form an interval; here every w in [2, 4] is optimal.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < grid_w.size(); ++i) {
    if (grid_f[i] <= best + 1e-12) {
      lo = std::min(lo, grid_w[i]);
      hi = std::max(hi, grid_w[i]);
    }
  }
  CHECK(lo == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(hi == doctest::Approx(4.0).epsilon(1e-3));
  const AlignResult r = align_gp_solve(p, lam, align_config());
  CHECK(r.w[0] >= lo - 1e-4);
  CHECK(r.w[0] <= hi + 1e-4);
  CHECK(align_objective(p, r.w, r.e, lam) <= best + 1e-8);
}

TEST_CASE("align_homotopy starts at the least-squares residual and finds the corruption") {
  const AlignmentProblem p = gen_alignment_problem(120, 11, 5, 3);
  const Vector w_ls = p.B.colPivHouseholderQr().solve(p.b);
  CHECK(align_lambda_max(p) == doctest::Approx((p.b - p.B * w_ls).cwiseAbs().maxCoeff()));
  SolverConfig c = align_config();
  c.lambda = 1e-3 * align_lambda_max(p);
  std::vector<Breakpoint> path;
  const AlignResult r = align_homotopy_solve(p, c, &path);
  REQUIRE_FALSE(path.empty());
  CHECK(path.front().lambda == doctest::Approx(align_lambda_max(p)));
  CHECK(support_of(r.e, 1e-8) == support_of(*p.ground_truth_e, 0.0));
}

TEST_CASE("align_ist agrees with align_gp and recovers w") {
  const AlignmentProblem p = gen_alignment_problem(120, 11, 12, 4);
  const double lam = 1e-3 * align_lambda_max(p);
  const SolverConfig c = align_config();
  const AlignResult gp = align_gp_solve(p, lam, c);
  const AlignResult ist = align_ist_solve(p, lam, c);
  CHECK(testing::rel_diff(align_objective(p, ist.w, ist.e, lam), align_objective(p, gp.w, gp.e, lam)) <= 1e-5);
  CHECK(testing::rel_err(gp.w, *p.ground_truth_w) <= 1e-2);
  const AlignResult palm = align_palm_solve(p, c);
  CHECK(testing::rel_err(palm.w, *p.ground_truth_w) <= 1e-2);
}

TEST_CASE("property: ExtendedDictionary adjoint consistency") {
  synth::Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + static_cast<Index>(rng.below(12));
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Matrix a = random_matrix(d, n, rng);
    const ExtendedDictionary ext(a, rng.uniform(0.1, 3.0));
    const Vector w = random_vector(n + d, rng), r = random_vector(d, rng);
    const double lhs = ext.apply(w).dot(r), rhs = w.dot(ext.adjoint(r));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("property: align solvers are optimal and agree") {
  synth::Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const Index d = 30 + static_cast<Index>(rng.below(30));
    const Index m = 2 + static_cast<Index>(rng.below(5));
    const Index corrupted = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d / 8)));
    const AlignmentProblem p = gen_alignment_problem(d, m, corrupted, rng.below(1u << 30));
    const double lam = rng.uniform(1e-3, 0.5) * align_lambda_max(p);
    SolverConfig c = align_config();
    const AlignResult gp = align_gp_solve(p, lam, c);
    const AlignResult ist = align_ist_solve(p, lam, c);
    c.lambda = lam;
    const AlignResult h = align_homotopy_solve(p, c);
    for (const AlignResult* r : {&gp, &ist, &h}) {
      CHECK(align_w_residual(p, r->w, r->e) <= 10.0 * c.tol);
      CHECK(align_e_kkt(p, r->w, r->e, lam) <= 10.0 * c.tol * lam);
    }
    const double fh = align_objective(p, h.w, h.e, lam);
    CHECK(testing::rel_diff(align_objective(p, gp.w, gp.e, lam), fh) <= 1e-4);
    CHECK(testing::rel_diff(align_objective(p, ist.w, ist.e, lam), fh) <= 1e-4);
  }
}

TEST_CASE("property: cab homotopy with no corruption leaves e empty") {
  synth::Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    synth::GenSpec spec;
    spec.d = 15 + static_cast<Index>(rng.below(15));
    spec.n = spec.d + 10;
    spec.k = 1 + static_cast<Index>(rng.below(3));
    spec.seed = rng.below(1u << 30);
    const ProblemInstance p = synth::gen_problem(spec);
    const CabResult r = cab_solve(p.A, p.b, Algorithm::homotopy, SolverConfig{});
    CHECK(r.e.lpNorm<1>() <= 1e-6 * p.b.lpNorm<1>());
  }
}
