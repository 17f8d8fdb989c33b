#include "l1min/bench.hpp"

#include "l1min/errors.hpp"
#include "l1min/io.hpp"
#include "l1min/robust.hpp"
#include "l1min/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

namespace l1min::bench {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> unit_grid(int count) {
  if (count < 1) throw InvalidArgument("grid size must be >= 1");
  std::vector<double> out;
  for (int i = 1; i <= count; ++i) out.push_back(static_cast<double>(i) / count);
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double rel_error(const Vector& x, const Vector& x0) {
  const double n0 = x0.norm();
  return n0 > 0.0 ? (x - x0).norm() / n0 : x.norm();
}

void check_unit_values(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw InvalidArgument(std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0 && v[i] <= 1.0)) {
      throw InvalidArgument(std::string(what) + " values must lie in (0, 1]");
    }
    if (i > 0 && !(v[i] > v[i - 1])) {
      throw InvalidArgument(std::string(what) + " values must be strictly increasing");
    }
  }
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("spearman: need two sequences of equal length >= 2");
  }
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

SolverResult solve_noise_free(Algorithm a, const ProblemInstance& problem,
                              const SolverConfig& config) {
  SolverConfig cfg = config;
  if (!cfg.lambda && !is_equality_form(a)) {
    cfg.lambda = a == Algorithm::homotopy
                     ? 0.0
                     : 1e-4 * (problem.A.transpose() * problem.b).lpNorm<Eigen::Infinity>();
  }
  return run_solver(a, problem, cfg);
}

// ---------------------------------------------------------------- phase grid

PhaseGrid run_phase_grid(Algorithm solver, const PhaseOptions& opts, const SolverConfig& config) {
  if (opts.trials < 1) throw InvalidArgument("phase: trials must be >= 1");
  if (opts.n < 1) throw InvalidArgument("phase: n must be >= 1");
  if (!(opts.success_tol > 0.0)) throw InvalidArgument("phase: success_tol must be positive");
  check_unit_values(opts.rho_values, "rho");
  check_unit_values(opts.delta_values, "delta");
  config.validate();

  const std::size_t nr = opts.rho_values.size();
  const std::size_t nd = opts.delta_values.size();
  const auto trials = static_cast<std::size_t>(opts.trials);
  std::vector<char> success(nr * nd * trials, 0);
  std::vector<double> seconds(success.size(), 0.0);

  parallel_for(success.size(), opts.jobs, [&](std::size_t item) {
    const std::size_t t = item % trials;
    const std::size_t di = (item / trials) % nd;
    const std::size_t ri = item / (trials * nd);
    synth::GenSpec spec;
    spec.n = opts.n;
    spec.k = std::max<Index>(1, std::llround(opts.rho_values[ri] * static_cast<double>(opts.n)));
    spec.d = std::max<Index>(1, std::llround(opts.delta_values[di] * static_cast<double>(opts.n)));
    spec.seed = synth::derive_seed({opts.base_seed, ri, di, t});
    const ProblemInstance problem = synth::gen_problem(spec);
    Stopwatch clock;
    try {
      const SolverResult res = solve_noise_free(solver, problem, config);
      seconds[item] = clock.seconds();
      success[item] = res.x.allFinite() && rel_error(res.x, *problem.ground_truth) <= opts.success_tol;
    } catch (const NumericalError&) {
      seconds[item] = clock.seconds();
    }
  });

  PhaseGrid grid;
  grid.solver = std::string(to_string(solver));
  grid.n = opts.n;
  grid.rho_values = opts.rho_values;
  grid.delta_values = opts.delta_values;
  grid.trials_per_cell = opts.trials;
  grid.base_seed = opts.base_seed;
  grid.success_tol = opts.success_tol;
  grid.success_rate = Matrix::Zero(static_cast<Index>(nr), static_cast<Index>(nd));
  for (std::size_t item = 0; item < success.size(); ++item) {
    const std::size_t di = (item / trials) % nd;
    const std::size_t ri = item / (trials * nd);
    grid.success_rate(static_cast<Index>(ri), static_cast<Index>(di)) += success[item];
    grid.wall_time_seconds += seconds[item];
  }
  grid.success_rate /= static_cast<double>(opts.trials);
  return grid;
}

std::vector<std::pair<double, double>> interpolate_success_contour(const PhaseGrid& grid,
                                                                   double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("contour level must lie in (0, 1)");
  const auto nr = static_cast<Index>(grid.rho_values.size());
  const auto nd = static_cast<Index>(grid.delta_values.size());
  if (grid.success_rate.rows() != nr || grid.success_rate.cols() != nd) {
    throw InvalidArgument("contour: grid dimensions are inconsistent");
  }
  std::vector<std::pair<double, double>> out;
  for (Index j = 0; j < nd; ++j) {
    for (Index i = 0; i + 1 < nr; ++i) {
      const double r0 = grid.success_rate(i, j);
      const double r1 = grid.success_rate(i + 1, j);
      if (r0 >= level && r1 < level) {
        const double frac = (r0 - level) / (r0 - r1);
        const double rho = grid.rho_values[static_cast<std::size_t>(i)] +
                           frac * (grid.rho_values[static_cast<std::size_t>(i + 1)] -
                                   grid.rho_values[static_cast<std::size_t>(i)]);
        out.emplace_back(grid.delta_values[static_cast<std::size_t>(j)], rho);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- sweeps

std::vector<SweepRow> SweepResult::for_solver(const std::string& solver) const {
  std::vector<SweepRow> out;
  for (const SweepRow& r : rows) {
    if (r.solver == solver) out.push_back(r);
  }
  return out;
}

namespace {

struct TrialRecord {
  double seconds = 0.0;
  double error = 0.0;
  double iterations = 0.0;
  bool converged = false;
  bool identified = false;
};

SweepResult reduce(std::string axis_name, const std::vector<double>& axis,
                   const std::vector<Algorithm>& solvers, int trials,
                   const std::vector<TrialRecord>& records) {
  SweepResult out;
  out.axis_name = std::move(axis_name);
  out.trials = trials;
  const std::size_t ns = solvers.size();
  const auto nt = static_cast<std::size_t>(trials);
  for (std::size_t a = 0; a < axis.size(); ++a) {
    for (std::size_t s = 0; s < ns; ++s) {
      SweepRow row;
      row.axis = axis[a];
      row.solver = std::string(to_string(solvers[s]));
      row.trials = trials;
      for (std::size_t t = 0; t < nt; ++t) {
        const TrialRecord& r = records[(a * nt + t) * ns + s];
        row.mean_wall_time += r.seconds;
        row.mean_rel_error += r.error;
        row.mean_iterations += r.iterations;
        row.converged_rate += r.converged;
        row.identification_rate += r.identified;
      }
      const double d = static_cast<double>(trials);
      row.mean_wall_time /= d;
      row.mean_rel_error /= d;
      row.mean_iterations /= d;
      row.converged_rate /= d;
      row.identification_rate /= d;
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace

std::vector<double> default_noise_axis(SweepMode mode) {
  if (mode == SweepMode::vary_d) return {160, 200, 240, 280, 320, 360, 380};
  return {0.10, 0.12, 0.14, 0.16, 0.18, 0.20, 0.22, 0.24, 0.26};
}

SweepResult run_noise_sweep(const std::vector<Algorithm>& solvers, const NoiseSweepOptions& opts,
                            const SolverConfig& config) {
  if (solvers.empty()) throw InvalidArgument("noise sweep: no solvers given");
  if (opts.trials < 1) throw InvalidArgument("noise sweep: trials must be >= 1");
  if (!(opts.sigma >= 0.0)) throw InvalidArgument("noise sweep: sigma must be >= 0");
  config.validate();
  const std::vector<double> axis = opts.axis.empty() ? default_noise_axis(opts.mode) : opts.axis;
  const std::size_t ns = solvers.size();
  const auto nt = static_cast<std::size_t>(opts.trials);
  std::vector<TrialRecord> records(axis.size() * nt * ns);

  parallel_for(axis.size() * nt, opts.jobs, [&](std::size_t item) {
    const std::size_t t = item % nt;
    const std::size_t a = item / nt;
    synth::GenSpec spec;
    spec.n = opts.n;
    if (opts.mode == SweepMode::vary_d) {
      spec.d = static_cast<Index>(std::llround(axis[a]));
      spec.k = opts.k;
    } else {
      spec.d = opts.d;
      spec.k = std::max<Index>(1, std::llround(axis[a] * static_cast<double>(opts.n)));
    }
    spec.noise_sigma = opts.sigma;
    spec.seed = synth::derive_seed({opts.base_seed, a, t});
    const ProblemInstance problem = synth::gen_problem(spec);
    for (std::size_t s = 0; s < ns; ++s) {
      TrialRecord& rec = records[item * ns + s];
      SolverConfig cfg = config;
      if (opts.sigma > 0.0 && !cfg.lambda && solvers[s] != Algorithm::pdipa) cfg.lambda = opts.sigma;
      Stopwatch clock;
      try {
        const SolverResult res = opts.sigma > 0.0 ? run_solver(solvers[s], problem, cfg)
                                                  : solve_noise_free(solvers[s], problem, cfg);
        rec.seconds = clock.seconds();
        rec.error = rel_error(res.x, *problem.ground_truth);
        rec.iterations = res.iterations;
        rec.converged = res.converged;
      } catch (const NumericalError&) {
        rec.seconds = clock.seconds();
        rec.error = 1.0;
      }
    }
  });
  return reduce(opts.mode == SweepMode::vary_d ? "d" : "rho", axis, solvers, opts.trials, records);
}

CorruptionTrial gen_corruption_trial(const CorruptionSweepOptions& opts, double level,
                                     std::uint64_t seed) {
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("corruption level must lie in [0, 1]");
  if (!(opts.magnitude > 0.0)) throw InvalidArgument("corruption magnitude must be positive");
  synth::Bouquet bq = synth::gen_bouquet_dict(opts.d, opts.n, opts.groups, opts.coherence,
                                              synth::derive_seed({seed, 1}));
  CorruptionTrial out;
  synth::Rng rng(synth::derive_seed({seed, 2}));
  out.group = static_cast<Index>(rng.below(static_cast<std::uint64_t>(opts.groups)));
  out.x0 = Vector::Zero(opts.n);
  for (Index j = 0; j < opts.n; ++j) {
    if (bq.labels[static_cast<std::size_t>(j)] == out.group) out.x0[j] = rng.uniform(0.5, 1.0);
  }
  out.x0 /= out.x0.norm();
  const Vector clean = bq.A * out.x0;
  synth::Corruption c = synth::corrupt_entries(clean, level, 0.0,
                                               opts.magnitude * clean.cwiseAbs().maxCoeff(),
                                               synth::derive_seed({seed, 3}));
  out.A = std::move(bq.A);
  out.labels = std::move(bq.labels);
  out.b = std::move(c.b);
  out.mask = std::move(c.mask);
  return out;
}

SweepResult run_corruption_sweep(const std::vector<Algorithm>& solvers,
                                 const CorruptionSweepOptions& opts, const SolverConfig& config) {
  if (solvers.empty()) throw InvalidArgument("corruption sweep: no solvers given");
  if (opts.trials < 1) throw InvalidArgument("corruption sweep: trials must be >= 1");
  if (opts.levels.empty()) throw InvalidArgument("corruption sweep: no levels given");
  config.validate();
  const std::size_t ns = solvers.size();
  const auto nt = static_cast<std::size_t>(opts.trials);
  std::vector<TrialRecord> records(opts.levels.size() * nt * ns);

  parallel_for(opts.levels.size() * nt, opts.jobs, [&](std::size_t item) {
    const std::size_t t = item % nt;
    const std::size_t li = item / nt;
    const CorruptionTrial trial =
        gen_corruption_trial(opts, opts.levels[li], synth::derive_seed({opts.base_seed, li, t}));
    for (std::size_t s = 0; s < ns; ++s) {
      TrialRecord& rec = records[item * ns + s];
      Stopwatch clock;
      try {
        const CabResult res = cab_solve(trial.A, trial.b, solvers[s], config);
        rec.seconds = clock.seconds();
        rec.error = rel_error(res.x, trial.x0);
        rec.iterations = res.result.iterations;
        rec.converged = res.result.converged;
        rec.identified = identify_group(res.x, trial.labels, opts.groups) == trial.group;
      } catch (const NumericalError&) {
        rec.seconds = clock.seconds();
        rec.error = 1.0;
      }
    }
  });
  return reduce("corruption", opts.levels, solvers, opts.trials, records);
}

// ---------------------------------------------------------------- output

void write_phase_csv(std::ostream& out, const PhaseGrid& grid) {
  out << "solver,n,rho,delta,k,d,trials,success_rate\n";
  for (std::size_t i = 0; i < grid.rho_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.delta_values.size(); ++j) {
      const double nn = static_cast<double>(grid.n);
      out << grid.solver << ',' << grid.n << ',' << format_double(grid.rho_values[i]) << ','
          << format_double(grid.delta_values[j]) << ','
          << std::max<long long>(1, std::llround(grid.rho_values[i] * nn)) << ','
          << std::max<long long>(1, std::llround(grid.delta_values[j] * nn)) << ','
          << grid.trials_per_cell << ','
          << format_double(grid.success_rate(static_cast<Index>(i), static_cast<Index>(j)))
          << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << sweep.axis_name
      << ",solver,trials,mean_rel_error,mean_iterations,converged_rate,identification_rate\n";
  for (const SweepRow& r : sweep.rows) {
    out << format_double(r.axis) << ',' << r.solver << ',' << r.trials << ','
        << format_double(r.mean_rel_error) << ',' << format_double(r.mean_iterations) << ','
        << format_double(r.converged_rate) << ',' << format_double(r.identification_rate)
        << '\n';
  }
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void write_phase_svg(std::ostream& out, const PhaseGrid& grid, double level) {
  const double w = 420, h = 420, left = 60, top = 30, cw = 320, ch = 320;
  const auto nr = grid.rho_values.size();
  const auto nd = grid.delta_values.size();
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << grid.solver
      << " success rate, n = " << grid.n << "</text>\n";
  const double cell_w = cw / static_cast<double>(nd);
  const double cell_h = ch / static_cast<double>(nr);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nd; ++j) {
      const double r = grid.success_rate(static_cast<Index>(i), static_cast<Index>(j));
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - r)));
      out << "<rect x=\"" << fmt(left + cell_w * static_cast<double>(j)) << "\" y=\""
          << fmt(top + ch - cell_h * static_cast<double>(i + 1)) << "\" width=\"" << fmt(cell_w)
          << "\" height=\"" << fmt(cell_h) << "\" fill=\"rgb(" << g << ',' << g << ',' << g
          << ")\"/>\n";
    }
  }
  // Grid values sit at cell centres.
  const auto contour = interpolate_success_contour(grid, level);
  if (!contour.empty()) {
    out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
    for (const auto& [delta, rho] : contour) {
      const double dj = (delta - grid.delta_values.front()) /
                        std::max(grid.delta_values.back() - grid.delta_values.front(), 1e-300);
      const double ri = (rho - grid.rho_values.front()) /
                        std::max(grid.rho_values.back() - grid.rho_values.front(), 1e-300);
      out << fmt(left + cell_w / 2 + dj * (cw - cell_w)) << ','
          << fmt(top + ch - cell_h / 2 - ri * (ch - cell_h)) << ' ';
    }
    out << "\"/>\n";
  }
  out << "<text x=\"" << left + cw / 2 << "\" y=\"" << top + ch + 30
      << "\" font-size=\"12\" text-anchor=\"middle\">delta = d/n</text>\n";
  out << "<text x=\"20\" y=\"" << top + ch / 2
      << "\" font-size=\"12\" transform=\"rotate(-90 20 " << top + ch / 2
      << ")\" text-anchor=\"middle\">rho = k/n</text>\n";
  out << "</svg>\n";
}

void write_sweep_svg(std::ostream& out, const SweepResult& sweep) {
  const bool rate = sweep.axis_name == "corruption";
  const double w = 520, h = 380, left = 70, top = 30, cw = 320, ch = 280;
  std::vector<std::string> solvers;
  std::vector<double> axis;
  for (const SweepRow& r : sweep.rows) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) solvers.push_back(r.solver);
    if (std::find(axis.begin(), axis.end(), r.axis) == axis.end()) axis.push_back(r.axis);
  }
  auto value = [&](const SweepRow& r) {
    return rate ? r.identification_rate : std::log10(std::max(r.mean_rel_error, 1e-16));
  };
  double lo = rate ? 0.0 : 1e300, hi = rate ? 1.0 : -1e300;
  if (!rate) {
    for (const SweepRow& r : sweep.rows) {
      lo = std::min(lo, value(r));
      hi = std::max(hi, value(r));
    }
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1;
  }
  const double amin = axis.empty() ? 0.0 : *std::min_element(axis.begin(), axis.end());
  const double amax = axis.empty() ? 1.0 : *std::max_element(axis.begin(), axis.end());
  auto px = [&](double a) { return left + (amax > amin ? (a - amin) / (amax - amin) : 0.5) * cw; };
  auto py = [&](double v) { return top + ch - (v - lo) / (hi - lo) * ch; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << cw << "\" height=\"" << ch
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (double a : axis) {
    out << "<text x=\"" << fmt(px(a)) << "\" y=\"" << top + ch + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << label(a) << "</text>\n";
  }
  out << "<text x=\"" << left - 6 << "\" y=\"" << top + 4
      << "\" font-size=\"10\" text-anchor=\"end\">" << (rate ? "1" : "1e" + label(hi))
      << "</text>\n";
  out << "<text x=\"" << left - 6 << "\" y=\"" << top + ch
      << "\" font-size=\"10\" text-anchor=\"end\">" << (rate ? "0" : "1e" + label(lo))
      << "</text>\n";
  out << "<text x=\"" << left + cw / 2 << "\" y=\"" << top + ch + 34
      << "\" font-size=\"12\" text-anchor=\"middle\">" << sweep.axis_name << "</text>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">"
      << (rate ? "identification rate" : "mean relative error (log10)") << "</text>\n";
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const SweepRow& r : sweep.for_solver(solvers[s])) {
      out << fmt(px(r.axis)) << ',' << fmt(py(value(r))) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << left + cw + 12 << "\" y=\"" << top + 14 + 16 * static_cast<double>(s)
        << "\" font-size=\"11\" fill=\"" << color << "\">" << solvers[s] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace l1min::bench
