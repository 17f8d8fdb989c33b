#include <doctest.h>

#include "l1min/bench.hpp"
#include "l1min/errors.hpp"
#include "l1min/robust.hpp"
#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

using namespace l1min;
using namespace l1min::bench;

namespace {

// Pearson correlation of ranks, with ranks found by counting.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        if (w < v[i]) less += 1.0;
        if (w == v[i]) equal += 1.0;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

PhaseGrid planted_grid(const std::vector<double>& rho, const std::vector<double>& delta) {
  PhaseGrid g;
  g.rho_values = rho;
  g.delta_values = delta;
  g.success_rate = Matrix::Zero(static_cast<Index>(rho.size()), static_cast<Index>(delta.size()));
  return g;
}

std::string phase_csv(const PhaseGrid& g) {
  std::ostringstream s;
  write_phase_csv(s, g);
  return s.str();
}

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream s;
  write_sweep_csv(s, r);
  return s.str();
}

}  // namespace

TEST_CASE("unit_grid and spearman examples") {
  CHECK(unit_grid(4) == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  CHECK_THROWS_AS(unit_grid(0), InvalidArgument);
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {1, 1, 1}) != spearman({1, 2, 3}, {1, 1, 1}));
  CHECK_THROWS_AS(spearman({1.0}, {2.0}), InvalidArgument);
}

TEST_CASE("parallel_for runs every item and rethrows the first failure by index") {
  std::vector<int> hits(37, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

  std::atomic<int> ran{0};
  try {
    parallel_for(20, 3, [&](std::size_t i) {
      ++ran;
      if (i == 5 || i == 11) throw std::runtime_error("item " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "item 5");
  }
  CHECK(ran == 20);
  CHECK_THROWS_AS(parallel_for(3, 0, [](std::size_t) {}), InvalidArgument);
}

TEST_CASE("interpolate_success_contour examples") {
  PhaseGrid g = planted_grid({0.1, 0.2}, {0.5, 0.6});
  g.success_rate << 1.0, 1.0,
                    0.9, 1.0;
  const auto c = interpolate_success_contour(g, 0.95);
  REQUIRE(c.size() == 1);
  CHECK(c[0].first == 0.5);
  CHECK(c[0].second == doctest::Approx(0.15));
  CHECK_THROWS_AS(interpolate_success_contour(g, 1.0), InvalidArgument);
  g.success_rate.resize(1, 2);
  CHECK_THROWS_AS(interpolate_success_contour(g, 0.5), InvalidArgument);
}

TEST_CASE("run_phase_grid examples") {
  PhaseOptions opts;
  opts.n = 200;
  opts.rho_values = {0.02, 0.6};
  opts.delta_values = {0.2, 0.5};
  opts.trials = 20;
  opts.base_seed = 42;
  const PhaseGrid g = run_phase_grid(Algorithm::homotopy, opts, SolverConfig{});
  CHECK(g.success_rate(0, 1) >= 0.95);
  CHECK(g.success_rate(1, 0) <= 0.05);
  CHECK(g.success_rate(1, 1) <= 0.05);
  CHECK((g.success_rate.array() >= 0.0).all());
  CHECK((g.success_rate.array() <= 1.0).all());

  opts.trials = 0;
  CHECK_THROWS_AS(run_phase_grid(Algorithm::homotopy, opts, SolverConfig{}), InvalidArgument);
  opts.trials = 1;
  opts.rho_values = {0.5, 0.4};
  CHECK_THROWS_AS(run_phase_grid(Algorithm::homotopy, opts, SolverConfig{}), InvalidArgument);
}

TEST_CASE("phase CSV layout") {
  PhaseGrid g = planted_grid({0.5}, {0.25, 1.0});
  g.solver = "fista";
  g.n = 8;
  g.trials_per_cell = 3;
  g.success_rate << 1.0, 2.0 / 3.0;
  CHECK(phase_csv(g) ==
        "solver,n,rho,delta,k,d,trials,success_rate\n"
        "fista,8,0.5,0.25,4,2,3,1\n"
        "fista,8,0.5,1,4,8,3,0.66666666666666663\n");
}

TEST_CASE("noise sweep without noise: every solver recovers in an easy regime") {
  NoiseSweepOptions opts;
  opts.mode = SweepMode::vary_d;
  opts.n = 100;
  opts.k = 4;
  opts.sigma = 0.0;
  opts.axis = {80};
  opts.trials = 3;
  opts.base_seed = 3;
  const SweepResult r = run_noise_sweep(all_algorithms(), opts, SolverConfig{});
  REQUIRE(r.rows.size() == all_algorithms().size());
  for (const SweepRow& row : r.rows) {
    INFO(row.solver);
    CHECK(row.mean_rel_error <= 1e-3);
  }
}

TEST_CASE("noise sweep rows do not depend on which other solvers run or on jobs") {
  NoiseSweepOptions opts;
  opts.mode = SweepMode::vary_k;
  opts.n = 80;
  opts.d = 50;
  opts.sigma = 0.01;
  opts.axis = {0.05, 0.1};
  opts.trials = 3;
  opts.base_seed = 8;
  const SweepResult alone = run_noise_sweep({Algorithm::homotopy}, opts, SolverConfig{});
  opts.jobs = 3;
  const SweepResult both =
      run_noise_sweep({Algorithm::fista, Algorithm::homotopy}, opts, SolverConfig{});
  const auto a = alone.for_solver("homotopy");
  const auto b = both.for_solver("homotopy");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].axis == b[i].axis);
    CHECK(a[i].mean_rel_error == b[i].mean_rel_error);
    CHECK(a[i].mean_iterations == b[i].mean_iterations);
  }
  CHECK(alone.axis_name == "rho");
  CHECK(sweep_csv(alone).starts_with(
      "rho,solver,trials,mean_rel_error,mean_iterations,converged_rate,identification_rate\n"));
}

TEST_CASE("corruption sweep: clean data is identified, heavy corruption is near chance") {
  CorruptionSweepOptions opts;
  opts.levels = {0.0, 0.9};
  opts.trials = 50;
  opts.base_seed = 17;
  const SweepResult r = run_corruption_sweep({Algorithm::homotopy}, opts, SolverConfig{});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.axis_name == "corruption");
  CHECK(r.rows[0].identification_rate >= 0.99);
  CHECK(r.rows[1].identification_rate <= 2.0 / static_cast<double>(opts.groups));
}

TEST_CASE("gen_corruption_trial builds one active group") {
  CorruptionSweepOptions opts;
  const CorruptionTrial t = gen_corruption_trial(opts, 0.25, 99);
  CHECK(t.A.rows() == opts.d);
  CHECK(t.A.cols() == opts.n);
  CHECK(std::abs(t.x0.norm() - 1.0) <= 1e-12);
  for (Index j = 0; j < opts.n; ++j) {
    CHECK((t.x0[j] != 0.0) == (t.labels[static_cast<std::size_t>(j)] == t.group));
  }
  CHECK(static_cast<Index>(t.mask.size()) == 20);
  CHECK(identify_group(t.x0, t.labels, opts.groups) == t.group);
  CHECK_THROWS_AS(gen_corruption_trial(opts, 1.5, 1), InvalidArgument);
}

TEST_CASE("property: spearman matches a counting oracle") {
  synth::Rng rng(30);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(20);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Small integer values force ties.
      x[i] = static_cast<double>(rng.below(6));
      y[i] = t % 2 ? rng.normal() : static_cast<double>(rng.below(4));
    }
    const double s = spearman(x, y);
    const double o = spearman_oracle(x, y);
    if (std::isnan(o)) {
      CHECK(std::isnan(s));
    } else {
      CHECK(s == doctest::Approx(o).epsilon(1e-12));
      CHECK(std::abs(s) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("property: a planted linear crossing is recovered exactly") {
  synth::Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const int nr = 3 + static_cast<int>(rng.below(14));
    const int nd = 1 + static_cast<int>(rng.below(6));
    const std::vector<double> rho = unit_grid(nr);
    const double h = 1.0 / nr;
    const double level = rng.uniform(0.05, 0.95);
    PhaseGrid g = planted_grid(rho, unit_grid(nd));
    std::vector<double> planted(static_cast<std::size_t>(nd));
    for (int j = 0; j < nd; ++j) {
      const double c = rng.uniform(rho.front() + 1e-3, rho.back() - 1e-3);
      planted[static_cast<std::size_t>(j)] = c;
      const double slope = 0.5 * std::min(level, 1.0 - level) / h;
      for (int i = 0; i < nr; ++i) {
        g.success_rate(i, j) = std::clamp(level + slope * (c - rho[static_cast<std::size_t>(i)]), 0.0, 1.0);
      }
    }
    const auto contour = interpolate_success_contour(g, level);
    REQUIRE(static_cast<int>(contour.size()) == nd);
    for (int j = 0; j < nd; ++j) {
      CHECK(contour[static_cast<std::size_t>(j)].first == g.delta_values[static_cast<std::size_t>(j)]);
      CHECK(contour[static_cast<std::size_t>(j)].second ==
            doctest::Approx(planted[static_cast<std::size_t>(j)]).epsilon(1e-10));
    }
    // Columns that never drop below the level are omitted.
    g.success_rate.setOnes();
    CHECK(interpolate_success_contour(g, level).empty());
  }
}

TEST_CASE("property: phase grids are identical across job counts and reruns") {
  synth::Rng rng(32);
  for (int t = 0; t < 100; ++t) {
    PhaseOptions opts;
    opts.n = 20 + static_cast<Index>(rng.below(20));
    opts.rho_values = {0.1, 0.3};
    opts.delta_values = {0.4, 0.8};
    opts.trials = 2;
    opts.base_seed = rng.below(1u << 30);
    const Algorithm a = t % 2 ? Algorithm::homotopy : Algorithm::pdipa;
    const std::string one = phase_csv(run_phase_grid(a, opts, SolverConfig{}));
    opts.jobs = 1 + static_cast<int>(rng.below(4));
    CHECK(phase_csv(run_phase_grid(a, opts, SolverConfig{})) == one);
  }
}
