#pragma once

#include "l1min/model.hpp"
#include "l1min/solvers.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace l1min::bench {

/// Run fn(0) .. fn(count - 1) on `jobs` threads. Every item runs even if
/// another throws; the first exception by index is rethrown afterwards.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

/// count evenly spaced values i / count for i = 1..count.
std::vector<double> unit_grid(int count);

/// Spearman rank correlation with average ranks for ties. NaN if either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Solve for exact recovery: homotopy runs to lambda = 0, other Lagrangian
/// solvers use 1e-4 ||A^T b||_inf unless config.lambda is set.
SolverResult solve_noise_free(Algorithm a, const ProblemInstance& problem, const SolverConfig& config);

struct PhaseGrid {
  std::string solver;
  Index n = 0;
  std::vector<double> rho_values;
  std::vector<double> delta_values;
  Matrix success_rate;  // |rho| x |delta|
  int trials_per_cell = 0;
  std::uint64_t base_seed = 0;
  double success_tol = 1e-3;
  double wall_time_seconds = 0.0;  // solver time summed over all trials
};

struct PhaseOptions {
  Index n = 200;
  std::vector<double> rho_values = unit_grid(16);
  std::vector<double> delta_values = unit_grid(16);
  int trials = 20;
  double success_tol = 1e-3;
  std::uint64_t base_seed = 0;
  int jobs = 1;
};

/// k = round(rho n) (at least 1), d = round(delta n) (at least 1); success when
/// ||x* - x0|| / ||x0|| <= success_tol. A solver exception counts as a failure.
PhaseGrid run_phase_grid(Algorithm solver, const PhaseOptions& opts, const SolverConfig& config);

/// Per delta column, the rho where the success rate crosses `level`, linearly
/// interpolated between the bracketing grid points. Columns never crossing are omitted.
std::vector<std::pair<double, double>> interpolate_success_contour(const PhaseGrid& grid,
                                                                   double level);

struct SweepRow {
  double axis = 0.0;
  std::string solver;
  int trials = 0;
  double mean_wall_time = 0.0;
  double mean_rel_error = 0.0;
  double mean_iterations = 0.0;
  double converged_rate = 0.0;
  /// Fraction of trials whose active group was identified; corruption sweeps only.
  double identification_rate = 0.0;
};

struct SweepResult {
  std::string axis_name;  // "d", "rho" or "corruption"
  std::vector<SweepRow> rows;  // axis-major, solvers in the order given
  int trials = 0;

  /// Rows for one solver in axis order.
  std::vector<SweepRow> for_solver(const std::string& solver) const;
};

enum class SweepMode { vary_d, vary_k };

struct NoiseSweepOptions {
  SweepMode mode = SweepMode::vary_d;
  Index n = 400;
  Index k = 40;                  // vary-d
  Index d = 300;                 // vary-k
  double sigma = 0.01;
  /// d values (vary-d) or k/n values (vary-k). Empty means the defaults.
  std::vector<double> axis;
  int trials = 20;
  std::uint64_t base_seed = 0;
  int jobs = 1;
};

std::vector<double> default_noise_axis(SweepMode mode);

/// Every solver sees the same instances. With sigma > 0 every solver except
/// pdipa minimizes the Lagrangian form with lambda = sigma unless config.lambda is set.
SweepResult run_noise_sweep(const std::vector<Algorithm>& solvers, const NoiseSweepOptions& opts,
                            const SolverConfig& config);

struct CorruptionSweepOptions {
  Index d = 80;
  Index n = 140;
  Index groups = 20;
  double coherence = 0.9;
  /// Corrupted entries are replaced by U[0, magnitude * max |b|].
  double magnitude = 3.0;
  std::vector<double> levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  int trials = 100;
  std::uint64_t base_seed = 0;
  int jobs = 1;
};

struct CorruptionTrial {
  Matrix A;
  std::vector<Index> labels;
  Index group = 0;
  Vector x0;
  Vector b;  // corrupted
  std::vector<Index> mask;
};

/// Bouquet dictionary, one active group with coefficients U[0.5, 1] (unit
/// norm), and the given fraction of entries of A x0 corrupted.
CorruptionTrial gen_corruption_trial(const CorruptionSweepOptions& opts, double level,
                                     std::uint64_t seed);

SweepResult run_corruption_sweep(const std::vector<Algorithm>& solvers,
                                 const CorruptionSweepOptions& opts, const SolverConfig& config);

// Output. CSV files carry no timings so identical inputs give identical bytes.

void write_phase_csv(std::ostream& out, const PhaseGrid& grid);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_phase_svg(std::ostream& out, const PhaseGrid& grid, double level = 0.95);
/// Mean relative error (or identification rate) against the axis, one line per solver.
void write_sweep_svg(std::ostream& out, const SweepResult& sweep);

}  // namespace l1min::bench
