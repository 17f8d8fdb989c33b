#include "l1min/synth.hpp"

#include "l1min/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace l1min::synth {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("Rng::below: empty range");
  // Rejection sampling on the largest multiple of bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return v % bound;
}

std::vector<Index> Rng::sample_indices(Index n, Index k) {
  if (k < 0 || k > n) throw InvalidArgument("sample_indices: need 0 <= k <= n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates.
  for (Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Index>(below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

void GenSpec::validate() const {
  if (d < 1) throw InvalidArgument("GenSpec: d must be at least 1");
  if (n < 1) throw InvalidArgument("GenSpec: n must be at least 1");
  if (k < 0 || k > n) throw InvalidArgument("GenSpec: need 0 <= k <= n");
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("GenSpec: noise sigma must be nonnegative");
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0)) {
    throw InvalidArgument("GenSpec: corruption fraction must lie in [0, 1]");
  }
}

Matrix gen_gaussian_dict(Index d, Index n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw InvalidArgument("gen_gaussian_dict: d and n must be positive");
  Rng rng(seed);
  Matrix a(d, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < d; ++i) a(i, j) = rng.normal();
    const double norm = a.col(j).norm();
    a.col(j) /= norm;
  }
  return a;
}

Vector gen_sparse_signal(Index n, Index k, std::uint64_t seed) {
  if (k < 1 || k > n) {
    throw InvalidArgument("gen_sparse_signal: need 1 <= k <= n, got k=" + std::to_string(k) +
                          " n=" + std::to_string(n));
  }
  Rng rng(seed);
  Vector x = Vector::Zero(n);
  for (Index i : rng.sample_indices(n, k)) {
    double v = 0.0;
    while (v == 0.0) v = rng.normal();
    x[i] = v;
  }
  x /= x.norm();
  return x;
}

Vector add_noise(const Vector& b, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_noise: sigma must be nonnegative");
  if (sigma == 0.0) return b;
  Rng rng(seed);
  Vector out = b;
  for (Index i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
  return out;
}

Corruption corrupt_entries(const Vector& b, double fraction, double lo, double hi,
                           std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("corrupt_entries: fraction must lie in [0, 1]");
  }
  const auto count = static_cast<Index>(std::floor(fraction * static_cast<double>(b.size())));
  Rng rng(seed);
  Corruption out{b, rng.sample_indices(b.size(), count)};
  for (Index i : out.mask) out.b[i] = rng.uniform(lo, hi);
  std::sort(out.mask.begin(), out.mask.end());
  return out;
}

Bouquet gen_bouquet_dict(Index d, Index n, Index groups, double coherence, std::uint64_t seed) {
  if (!(coherence > 0.0 && coherence < 1.0)) {
    throw InvalidArgument("gen_bouquet_dict: coherence must lie in (0, 1)");
  }
  if (groups < 1 || groups > n) throw InvalidArgument("gen_bouquet_dict: need 1 <= groups <= n");
  if (d < 1) throw InvalidArgument("gen_bouquet_dict: d must be positive");
  constexpr double kPerturbation = 0.3;
  Rng rng(seed);
  auto unit_gaussian = [&](bool nonnegative) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) {
      const double g = rng.normal();
      v[i] = nonnegative ? std::abs(g) : g;
    }
    return Vector(v / v.norm());
  };
  // Nonnegative mean direction, like images sharing an average face.
  const Vector mean = unit_gaussian(true);
  std::vector<Vector> group_dirs;
  group_dirs.reserve(static_cast<std::size_t>(groups));
  for (Index g = 0; g < groups; ++g) group_dirs.push_back(unit_gaussian(false));

  Bouquet out;
  out.groups = groups;
  out.A.resize(d, n);
  out.labels.resize(static_cast<std::size_t>(n));
  const double spread = std::sqrt(1.0 - coherence * coherence);
  for (Index j = 0; j < n; ++j) {
    // Contiguous near-equal blocks: group sizes differ by at most one.
    const Index g = (j * groups) / n;
    out.labels[static_cast<std::size_t>(j)] = g;
    Vector offset = group_dirs[static_cast<std::size_t>(g)] + kPerturbation * unit_gaussian(false);
    offset /= offset.norm();
    Vector col = coherence * mean + spread * offset;
    out.A.col(j) = col / col.norm();
  }
  return out;
}

ProblemInstance gen_problem(const GenSpec& spec) {
  spec.validate();
  ProblemInstance p;
  p.A = gen_gaussian_dict(spec.d, spec.n, derive_seed({spec.seed, 1}));
  p.ground_truth = gen_sparse_signal(spec.n, spec.k, derive_seed({spec.seed, 2}));
  p.b = p.A * (*p.ground_truth);
  if (spec.noise_sigma > 0.0) {
    p.b = add_noise(p.b, spec.noise_sigma, derive_seed({spec.seed, 3}));
  }
  p.noise_sigma = spec.noise_sigma;
  return p;
}

}  // namespace l1min::synth
