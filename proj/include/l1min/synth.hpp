#pragma once

#include "l1min/model.hpp"
#include "l1min/numerics.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace l1min::synth {

/// Name recorded in output metadata. Bump the suffix whenever a generator
/// changes the numbers it produces for a given seed.
inline constexpr std::string_view kGeneratorName = "mt19937_64+box-muller/v1";

/// std::mt19937_64 with distributions written out explicitly; the standard
/// library's distributions are implementation-defined, these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by the Box-Muller transform (both outputs used).
  double normal();
  /// Uniform integer in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound);
  /// k distinct indices from [0, n), in the order drawn.
  std::vector<Index> sample_indices(Index n, Index k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// Stable combination of several integers into one seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

struct GenSpec {
  Index n = 200;
  Index d = 100;
  Index k = 10;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  double corruption_fraction = 0.0;

  void validate() const;
};

/// i.i.d. N(0,1) entries, every column scaled to unit l2 norm.
Matrix gen_gaussian_dict(Index d, Index n, std::uint64_t seed);

/// Exactly k nonzeros on a uniformly random support, N(0,1) values, unit l2 norm.
Vector gen_sparse_signal(Index n, Index k, std::uint64_t seed);

/// b + e with e_i ~ N(0, sigma^2).
Vector add_noise(const Vector& b, double sigma, std::uint64_t seed);

struct Corruption {
  Vector b;
  /// Sorted indices of the replaced entries.
  std::vector<Index> mask;
};

/// Replace floor(fraction * d) uniformly chosen entries by U[lo, hi] draws.
Corruption corrupt_entries(const Vector& b, double fraction, double lo, double hi,
                           std::uint64_t seed);

struct Bouquet {
  Matrix A;
  /// Group of each column, 0-based; groups are contiguous and near-equal in size.
  std::vector<Index> labels;
  Index groups = 0;
};

/// Columns = coherence * shared mean direction + sqrt(1 - coherence^2) *
/// (group direction + small perturbation), renormalized to unit norm.
/// Columns of one group are far more correlated with each other than with
/// other groups; all columns lean towards the shared mean.
Bouquet gen_bouquet_dict(Index d, Index n, Index groups, double coherence, std::uint64_t seed);

/// Gaussian dictionary, k-sparse unit signal, b = A x0 (+ noise when sigma > 0).
ProblemInstance gen_problem(const GenSpec& spec);

}  // namespace l1min::synth
