#include <doctest.h>

#include "l1min/errors.hpp"
#include "l1min/synth.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace l1min;
using namespace l1min::synth;

namespace {

Index nonzeros(const Vector& x) { return static_cast<Index>((x.array() != 0.0).count()); }

double mean_offdiag(const Matrix& g, bool absolute) {
  double s = 0.0;
  const Index n = g.rows();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) s += absolute ? std::abs(g(i, j)) : g(i, j);
  return s / static_cast<double>(n * (n - 1));
}

}  // namespace

TEST_CASE("Rng is a fixed, documented stream") {
  // First output of std::mt19937_64 with the default seed is fixed by the standard.
  std::mt19937_64 ref(5489u);
  Rng rng(5489u);
  CHECK(rng.uniform() == static_cast<double>(ref() >> 11) * 0x1.0p-53);
  CHECK(kGeneratorName == "mt19937_64+box-muller/v1");
}

TEST_CASE("mix64 matches the SplitMix64 reference outputs") {
  // Reference stream of SplitMix64 seeded with 0: state advances by the golden gamma.
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(mix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
  CHECK(derive_seed({7, 0, 0}) == derive_seed({7, 0, 0}));
}

TEST_CASE("gen_gaussian_dict examples") {
  const Matrix a = gen_gaussian_dict(30, 50, 9);
  for (Index j = 0; j < a.cols(); ++j) CHECK(std::abs(a.col(j).norm() - 1.0) <= 1e-12);
  const Matrix b = gen_gaussian_dict(30, 50, 9);
  CHECK((a.array() == b.array()).all());
  CHECK((a.array() != gen_gaussian_dict(30, 50, 10).array()).any());
  const Matrix s = gen_gaussian_dict(1, 1, 3);
  CHECK(std::abs(s(0, 0)) == 1.0);
  CHECK_THROWS_AS(gen_gaussian_dict(0, 3, 1), InvalidArgument);
}

TEST_CASE("gen_sparse_signal examples") {
  const Vector x = gen_sparse_signal(100, 7, 4);
  CHECK(nonzeros(x) == 7);
  CHECK(std::abs(x.norm() - 1.0) <= 1e-12);
  const Vector full = gen_sparse_signal(12, 12, 4);
  CHECK(nonzeros(full) == 12);
  CHECK(std::abs(full.norm() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(gen_sparse_signal(5, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_sparse_signal(5, 6, 1), InvalidArgument);
}

TEST_CASE("add_noise examples") {
  const Vector b = Vector::LinSpaced(5, -1.0, 1.0);
  CHECK(add_noise(b, 0.0, 3) == b);
  CHECK_THROWS_AS(add_noise(b, -0.1, 3), InvalidArgument);

  const double sigma = 0.1;
  const Vector e = add_noise(Vector::Zero(1000000), sigma, 77);
  const double mean = e.mean();
  const double var = (e.array() - mean).square().sum() / static_cast<double>(e.size() - 1);
  CHECK(std::abs(mean) <= 4.0 * sigma / 1e3);
  CHECK(std::abs(var - sigma * sigma) <= 0.02 * sigma * sigma);
}

TEST_CASE("corrupt_entries examples") {
  const Vector b = Vector::Zero(100);
  const Corruption none = corrupt_entries(b, 0.0, 0.0, 255.0, 1);
  CHECK(none.mask.empty());
  CHECK(none.b == b);

  const Corruption all = corrupt_entries(Vector::Constant(50, -1.0), 1.0, 0.0, 255.0, 1);
  CHECK(all.mask.size() == 50);
  CHECK((all.b.array() >= 0.0).all());

  const Corruption some = corrupt_entries(b, 0.4, 0.0, 255.0, 2);
  CHECK(some.mask.size() == 40);
  CHECK_THROWS_AS(corrupt_entries(b, 1.5, 0.0, 1.0, 1), InvalidArgument);
}

TEST_CASE("gen_bouquet_dict examples") {
  const Bouquet hi = gen_bouquet_dict(100, 140, 20, 0.99, 5);
  const Matrix ghi = hi.A.transpose() * hi.A;
  CHECK(mean_offdiag(ghi, false) >= 0.9);

  const Bouquet lo = gen_bouquet_dict(100, 140, 20, 0.01, 5);
  CHECK(mean_offdiag(lo.A.transpose() * lo.A, true) <= 2.0 / std::sqrt(100.0));

  std::vector<Index> sizes(20, 0);
  for (Index g : hi.labels) ++sizes[static_cast<std::size_t>(g)];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), Index{0}) == 140);

  CHECK_THROWS_AS(gen_bouquet_dict(10, 5, 6, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_bouquet_dict(10, 5, 2, 1.0, 1), InvalidArgument);
}

TEST_CASE("gen_problem builds b from the dictionary and signal") {
  GenSpec spec;
  spec.n = 40;
  spec.d = 20;
  spec.k = 3;
  spec.seed = 11;
  const ProblemInstance p = gen_problem(spec);
  REQUIRE(p.ground_truth.has_value());
  CHECK((p.b - p.A * *p.ground_truth).norm() <= 1e-14);
  spec.noise_sigma = 0.5;
  const ProblemInstance q = gen_problem(spec);
  CHECK((q.A.array() == p.A.array()).all());
  CHECK((q.b - p.b).norm() > 0.1);
  spec.k = 41;
  CHECK_THROWS_AS(gen_problem(spec), InvalidArgument);
}

TEST_CASE("property: generators are pure functions of their arguments") {
  Rng meta(20);
  for (int t = 0; t < 100; ++t) {
    const std::uint64_t seed = meta.below(1u << 30);
    const Index d = 1 + static_cast<Index>(meta.below(20));
    const Index n = 1 + static_cast<Index>(meta.below(30));
    const Index k = 1 + static_cast<Index>(meta.below(static_cast<std::uint64_t>(n)));
    CHECK((gen_gaussian_dict(d, n, seed).array() == gen_gaussian_dict(d, n, seed).array()).all());
    CHECK((gen_sparse_signal(n, k, seed).array() == gen_sparse_signal(n, k, seed).array()).all());
    const Vector b = Vector::LinSpaced(d, 0.0, 1.0);
    CHECK((add_noise(b, 0.3, seed).array() == add_noise(b, 0.3, seed).array()).all());
    const Corruption c1 = corrupt_entries(b, 0.5, -1.0, 1.0, seed);
    const Corruption c2 = corrupt_entries(b, 0.5, -1.0, 1.0, seed);
    CHECK(c1.mask == c2.mask);
    CHECK((c1.b.array() == c2.b.array()).all());
    const Index groups = 1 + static_cast<Index>(meta.below(static_cast<std::uint64_t>(n)));
    const Bouquet q1 = gen_bouquet_dict(d, n, groups, 0.7, seed);
    const Bouquet q2 = gen_bouquet_dict(d, n, groups, 0.7, seed);
    CHECK((q1.A.array() == q2.A.array()).all());
    CHECK(q1.labels == q2.labels);
  }
}

TEST_CASE("property: unit columns, exact sparsity and unit signals") {
  Rng meta(21);
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + static_cast<Index>(meta.below(40));
    const Index n = 1 + static_cast<Index>(meta.below(60));
    const Index k = 1 + static_cast<Index>(meta.below(static_cast<std::uint64_t>(n)));
    const std::uint64_t seed = meta.below(1u << 30);
    const Matrix a = gen_gaussian_dict(d, n, seed);
    CHECK((a.colwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
    const Vector x = gen_sparse_signal(n, k, seed);
    CHECK(nonzeros(x) == k);
    CHECK(std::abs(x.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("property: corruption touches exactly the masked entries") {
  Rng meta(22);
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + static_cast<Index>(meta.below(80));
    const double fraction = meta.uniform();
    const Vector b = testing::random_vector(d, meta);
    const Corruption c = corrupt_entries(b, fraction, 10.0, 20.0, meta.below(1u << 30));
    CHECK(static_cast<Index>(c.mask.size()) ==
          static_cast<Index>(std::floor(fraction * static_cast<double>(d))));
    CHECK(std::is_sorted(c.mask.begin(), c.mask.end()));
    CHECK(std::set<Index>(c.mask.begin(), c.mask.end()).size() == c.mask.size());
    std::vector<bool> hit(static_cast<std::size_t>(d), false);
    for (Index i : c.mask) {
      hit[static_cast<std::size_t>(i)] = true;
      CHECK(c.b[i] >= 10.0);
      CHECK(c.b[i] <= 20.0);
    }
    for (Index i = 0; i < d; ++i)
      if (!hit[static_cast<std::size_t>(i)]) CHECK(c.b[i] == b[i]);
  }
}

TEST_CASE("property: bouquet columns correlate more within a group than across") {
  Rng meta(23);
  for (int t = 0; t < 100; ++t) {
    const Index d = 40 + static_cast<Index>(meta.below(60));
    const Index groups = 2 + static_cast<Index>(meta.below(8));
    const Index n = groups * (2 + static_cast<Index>(meta.below(5)));
    const double coherence = meta.uniform(0.3, 0.95);
    const Bouquet q = gen_bouquet_dict(d, n, groups, coherence, meta.below(1u << 30));
    CHECK((q.A.colwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
    const Matrix g = q.A.transpose() * q.A;
    double within = 0.0, across = 0.0;
    long nw = 0, na = 0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        if (q.labels[static_cast<std::size_t>(i)] == q.labels[static_cast<std::size_t>(j)]) {
          within += g(i, j);
          ++nw;
        } else {
          across += g(i, j);
          ++na;
        }
      }
    }
    CHECK(within / static_cast<double>(nw) > across / static_cast<double>(na));
    CHECK(q.labels.front() == 0);
    CHECK(q.labels.back() == groups - 1);
    CHECK(std::is_sorted(q.labels.begin(), q.labels.end()));
  }
}

TEST_CASE("property: Rng helpers stay in range") {
  Rng rng(24);
  for (int t = 0; t < 500; ++t) {
    const std::uint64_t bound = 1 + rng.below(1000);
    CHECK(rng.below(bound) < bound);
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const Index n = 1 + static_cast<Index>(rng.below(50));
    const Index k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n) + 1));
    const std::vector<Index> s = rng.sample_indices(n, k);
    CHECK(static_cast<Index>(s.size()) == k);
    CHECK(std::set<Index>(s.begin(), s.end()).size() == s.size());
    for (Index i : s) CHECK((i >= 0 && i < n));
  }
}
