#include "l1min/cli.hpp"

#include "l1min/bench.hpp"
#include "l1min/errors.hpp"
#include "l1min/homotopy.hpp"
#include "l1min/io.hpp"
#include "l1min/robust.hpp"
#include "l1min/serialize.hpp"
#include "l1min/solvers.hpp"
#include "l1min/synth.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace l1min::cli {

namespace fs = std::filesystem;

namespace {

fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) path = fs::path(dir) / path;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path.string() + "'");
  return f;
}

void write_json(const std::string& p, const Json& j) {
  std::ofstream f = open_out(output_path(p));
  f << j.dump(2) << '\n';
}

template <typename Fn>
void write_text(const std::string& p, Fn&& fn) {
  std::ofstream f = open_out(output_path(p));
  fn(f);
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end == item.c_str() || *end != '\0') {
      throw InvalidArgument(std::string(what) + ": cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + ": empty list");
  return out;
}

std::vector<Algorithm> parse_algos(const std::string& s) {
  std::vector<Algorithm> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_algorithm(item));
  if (out.empty()) throw InvalidArgument("--algos: empty list");
  return out;
}

Json environment_json(int jobs) {
  Json env;
  env["generator"] = std::string(synth::kGeneratorName);
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#else
  env["compiler"] = "unknown";
#endif
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                 "." + std::to_string(EIGEN_MINOR_VERSION);
  env["hardware_threads"] = std::thread::hardware_concurrency();
  env["jobs"] = jobs;
  return env;
}

Json sweep_rows_json(const bench::SweepResult& s) {
  Json rows = Json::array();
  for (const bench::SweepRow& r : s.rows) {
    rows.push_back({{s.axis_name, r.axis},
                    {"solver", r.solver},
                    {"trials", r.trials},
                    {"mean_wall_time", r.mean_wall_time},
                    {"mean_rel_error", r.mean_rel_error},
                    {"mean_iterations", r.mean_iterations},
                    {"converged_rate", r.converged_rate},
                    {"identification_rate", r.identification_rate}});
  }
  return rows;
}

// Flags shared by every subcommand that runs a solver.
struct ConfigFlags {
  std::string config_file;
  std::optional<double> lambda;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::string stopping;
  std::optional<double> threshold;

  void add(CLI::App* app, bool with_lambda = true) {
    app->add_option("--config", config_file, "JSON solver configuration; flags override it")
        ->check(CLI::ExistingFile);
    if (with_lambda) app->add_option("--lambda", lambda, "Lagrangian weight lambda");
    app->add_option("--tol", tol, "solver tolerance");
    app->add_option("--max-iter", max_iter, "iteration cap");
    app->add_option("--stopping", stopping,
                    "relative-objective | relative-estimate | ground-truth-distance | kkt-residual");
    app->add_option("--threshold", threshold, "stopping-rule threshold");
  }

  SolverConfig build(int default_max_iter = 5000) const {
    SolverConfig c;
    c.max_iter = default_max_iter;
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      Json j;
      try {
        j = Json::parse(f);
      } catch (const Json::parse_error& e) {
        throw InvalidArgument(config_file + ": " + e.what());
      }
      c = config_from_json(j);
    }
    if (lambda) c.lambda = *lambda;
    if (tol) c.tol = *tol;
    if (max_iter) c.max_iter = *max_iter;
    if (!stopping.empty()) c.stopping.kind = parse_stopping_kind(stopping);
    if (threshold) c.stopping.threshold = *threshold;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------- solve

struct SolveCmd {
  std::string algo = "fista";
  std::string matrix, rhs, truth;
  bool gen = false;
  Index n = 200, d = 100, k = 10;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  std::string out = "result.json";
  std::string x_out, trace_out, path_out;
  ConfigFlags cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("solve", "solve one sparse-recovery problem");
    c->add_option("--algo", algo, "pdipa | homotopy | gp | gpsr | tnipm | ist | fista | palm | dalm")
        ->capture_default_str();
    auto* m = c->add_option("--matrix", matrix, "dictionary A as CSV")->check(CLI::ExistingFile);
    auto* r = c->add_option("--rhs", rhs, "observation b as single-column CSV")
                  ->check(CLI::ExistingFile);
    c->add_option("--truth", truth, "ground-truth x0 CSV for the ground-truth stopping rule")
        ->check(CLI::ExistingFile);
    auto* g = c->add_flag("--gen", gen, "generate a Gaussian instance instead of reading files");
    c->add_option("--n", n, "columns (with --gen)")->capture_default_str();
    c->add_option("--d", d, "rows (with --gen)")->capture_default_str();
    c->add_option("--k", k, "nonzeros (with --gen)")->capture_default_str();
    c->add_option("--seed", seed, "seed (with --gen)")->capture_default_str();
    c->add_option("--sigma", sigma, "noise standard deviation (with --gen)")->capture_default_str();
    m->needs(r);
    r->needs(m);
    g->excludes(m)->excludes(r);
    c->add_option("--out", out, "result JSON")->capture_default_str();
    c->add_option("--x-out", x_out, "solution as single-column CSV");
    c->add_option("--trace-out", trace_out, "per-iteration trace CSV");
    c->add_option("--path-out", path_out, "homotopy breakpoints CSV");
    cfg.add(c);
  }

  int exec(std::ostream& out_stream, const CLI::App& sub) {
    if (!gen && matrix.empty()) throw CLI::ValidationError("solve", "give --matrix and --rhs, or --gen");
    const bool gen_flags = sub.count("--n") + sub.count("--d") + sub.count("--k") +
                           sub.count("--seed") + sub.count("--sigma");
    if (!gen && gen_flags) {
      throw CLI::ValidationError("solve", "--n/--d/--k/--seed/--sigma need --gen");
    }
    const Algorithm a = parse_algorithm(algo);
    ProblemInstance p;
    std::optional<std::uint64_t> seed_out;
    if (gen) {
      synth::GenSpec spec;
      spec.n = n;
      spec.d = d;
      spec.k = k;
      spec.seed = seed;
      spec.noise_sigma = sigma;
      p = synth::gen_problem(spec);
      seed_out = seed;
    } else {
      p.A = read_matrix_csv(matrix);
      p.b = read_vector_csv(rhs);
      if (!truth.empty()) p.ground_truth = read_vector_csv(truth);
      if (p.b.size() != p.A.rows()) {
        throw InvalidArgument("dimension mismatch: A is " + std::to_string(p.A.rows()) + "x" +
                              std::to_string(p.A.cols()) + " but b has length " +
                              std::to_string(p.b.size()));
      }
    }
    p.validate();
    const SolverConfig config = cfg.build();
    DenseView view(p.A);
    const OperatorProblem op{view, p.b, p.ground_truth ? &*p.ground_truth : nullptr};
    SolverResult res;
    if (a == Algorithm::homotopy && !path_out.empty()) {
      HomotopyRun run = homotopy_path(op, config.lambda.value_or(default_lambda(op)), config);
      write_text(path_out, [&](std::ostream& f) { write_path_csv(f, run.path); });
      res = std::move(run.result);
    } else {
      res = run_solver(a, op, config);
    }
    write_json(out, result_to_json(res, op, config, seed_out));
    if (!x_out.empty()) write_vector_csv(output_path(x_out), res.x);
    if (!trace_out.empty()) {
      write_text(trace_out, [&](std::ostream& f) {
        f << "iteration,objective,residual_norm,support_size\n";
        for (const TraceEntry& t : res.trace) {
          f << t.iteration << ',' << format_double(t.objective) << ','
            << format_double(t.residual_norm) << ',' << t.support_size << '\n';
        }
      });
    }
    out_stream << res.algorithm << ": " << (res.converged ? "converged" : "NOT converged")
               << " after " << res.iterations << " iterations, " << res.wall_time_seconds
               << " s\n";
    return res.converged ? kOk : kNotConverged;
  }
};

// ---------------------------------------------------------------- gen

struct GenCmd {
  std::string kind = "gaussian";
  Index n = 200, d = 100, k = 10, groups = 20, m = 11, corrupted = 12;
  std::uint64_t seed = 0;
  double sigma = 0.0, corruption = 0.0, coherence = 0.9, magnitude = 3.0;
  std::string out_dir = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gen", "write a synthetic instance as CSV files");
    c->add_option("--kind", kind, "gaussian | bouquet | alignment")
        ->check(CLI::IsMember({"gaussian", "bouquet", "alignment"}))
        ->capture_default_str();
    c->add_option("--n", n, "columns")->capture_default_str();
    c->add_option("--d", d, "rows")->capture_default_str();
    c->add_option("--k", k, "nonzeros (gaussian)")->capture_default_str();
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--sigma", sigma, "noise standard deviation (gaussian)")->capture_default_str();
    c->add_option("--corruption", corruption, "corrupted fraction (gaussian, bouquet)")
        ->capture_default_str();
    c->add_option("--groups", groups, "groups (bouquet)")->capture_default_str();
    c->add_option("--coherence", coherence, "coherence (bouquet)")->capture_default_str();
    c->add_option("--magnitude", magnitude, "corruption range multiple of max|b|")
        ->capture_default_str();
    c->add_option("--m", m, "columns of B (alignment)")->capture_default_str();
    c->add_option("--corrupted", corrupted, "gross errors (alignment)")->capture_default_str();
    c->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  }

  int exec(std::ostream& out) {
    const fs::path dir = output_path((fs::path(out_dir) / "A.csv").string()).parent_path();
    Json meta;
    meta["kind"] = kind;
    meta["seed"] = seed;
    meta["generator"] = std::string(synth::kGeneratorName);
    if (kind == "gaussian") {
      synth::GenSpec spec;
      spec.n = n;
      spec.d = d;
      spec.k = k;
      spec.seed = seed;
      spec.noise_sigma = sigma;
      spec.corruption_fraction = corruption;
      ProblemInstance p = synth::gen_problem(spec);
      Vector b = p.b;
      if (corruption > 0.0) {
        synth::Corruption c =
            synth::corrupt_entries(b, corruption, 0.0, magnitude * b.cwiseAbs().maxCoeff(),
                                   synth::derive_seed({seed, 4}));
        b = c.b;
        Vector mask(static_cast<Index>(c.mask.size()));
        for (std::size_t i = 0; i < c.mask.size(); ++i) mask[static_cast<Index>(i)] = static_cast<double>(c.mask[i]);
        write_vector_csv(dir / "mask.csv", mask);
      }
      write_matrix_csv(dir / "A.csv", p.A);
      write_vector_csv(dir / "b.csv", b);
      write_vector_csv(dir / "x0.csv", *p.ground_truth);
      meta["n"] = n;
      meta["d"] = d;
      meta["k"] = k;
      meta["sigma"] = sigma;
      meta["corruption"] = corruption;
    } else if (kind == "bouquet") {
      bench::CorruptionSweepOptions o;
      o.d = d;
      o.n = n;
      o.groups = groups;
      o.coherence = coherence;
      o.magnitude = magnitude;
      const bench::CorruptionTrial t = bench::gen_corruption_trial(o, corruption, seed);
      Vector labels(static_cast<Index>(t.labels.size()));
      for (std::size_t i = 0; i < t.labels.size(); ++i) labels[static_cast<Index>(i)] = static_cast<double>(t.labels[i]);
      write_matrix_csv(dir / "A.csv", t.A);
      write_vector_csv(dir / "b.csv", t.b);
      write_vector_csv(dir / "x0.csv", t.x0);
      write_vector_csv(dir / "labels.csv", labels);
      meta["n"] = n;
      meta["d"] = d;
      meta["groups"] = groups;
      meta["coherence"] = coherence;
      meta["corruption"] = corruption;
      meta["active_group"] = t.group;
    } else {
      const AlignmentProblem p = gen_alignment_problem(d, m, corrupted, seed);
      write_matrix_csv(dir / "B.csv", p.B);
      write_vector_csv(dir / "b.csv", p.b);
      write_vector_csv(dir / "w0.csv", *p.ground_truth_w);
      write_vector_csv(dir / "e0.csv", *p.ground_truth_e);
      meta["d"] = d;
      meta["m"] = m;
      meta["corrupted"] = corrupted;
    }
    std::ofstream f = open_out(dir / "meta.json");
    f << meta.dump(2) << '\n';
    out << "wrote " << kind << " instance to " << dir.string() << '\n';
    return kOk;
  }
};

// ---------------------------------------------------------------- phase

struct PhaseCmd {
  std::string algo = "homotopy";
  Index n = 200;
  std::string grid = "16x16";
  int trials = 20;
  std::uint64_t seed = 0;
  double success_tol = 1e-3;
  double level = 0.95;
  int jobs = 1;
  std::string out = "grid.csv", svg, json;
  ConfigFlags cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("phase", "success-rate grid over rho = k/n and delta = d/n");
    c->add_option("--algo", algo)->capture_default_str();
    c->add_option("--n", n)->capture_default_str();
    c->add_option("--grid", grid, "RHOxDELTA grid size, e.g. 16x16")->capture_default_str();
    c->add_option("--trials", trials, "trials per cell")->capture_default_str();
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--success-tol", success_tol, "relative error counted as success")
        ->capture_default_str();
    c->add_option("--level", level, "contour level for the summary and SVG")->capture_default_str();
    c->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    c->add_option("--out", out, "grid CSV")->capture_default_str();
    c->add_option("--svg", svg, "heat map with the success contour");
    c->add_option("--json", json, "summary with config echo and timing");
    cfg.add(c);
  }

  int exec(std::ostream& out_stream) {
    const auto x = grid.find('x');
    if (x == std::string::npos) throw InvalidArgument("--grid must look like 16x16");
    const std::vector<double> r = parse_list(grid.substr(0, x), "--grid");
    const std::vector<double> dlt = parse_list(grid.substr(x + 1), "--grid");
    if (r.size() != 1 || dlt.size() != 1 || r[0] < 1 || dlt[0] < 1 || r[0] != std::floor(r[0]) ||
        dlt[0] != std::floor(dlt[0])) {
      throw InvalidArgument("--grid must look like 16x16");
    }
    bench::PhaseOptions o;
    o.n = n;
    o.rho_values = bench::unit_grid(static_cast<int>(r[0]));
    o.delta_values = bench::unit_grid(static_cast<int>(dlt[0]));
    o.trials = trials;
    o.success_tol = success_tol;
    o.base_seed = seed;
    o.jobs = jobs;
    const SolverConfig config = cfg.build();
    const bench::PhaseGrid g = bench::run_phase_grid(parse_algorithm(algo), o, config);
    write_text(out, [&](std::ostream& f) { bench::write_phase_csv(f, g); });
    if (!svg.empty()) write_text(svg, [&](std::ostream& f) { bench::write_phase_svg(f, g, level); });
    const auto contour = bench::interpolate_success_contour(g, level);
    if (!json.empty()) {
      Json j;
      j["command"] = "phase";
      j["algo"] = g.solver;
      j["n"] = g.n;
      j["grid"] = grid;
      j["trials"] = trials;
      j["seed"] = seed;
      j["success_tol"] = success_tol;
      j["solver_wall_time_seconds"] = g.wall_time_seconds;
      Json c = Json::array();
      for (const auto& [delta, rho] : contour) c.push_back({{"delta", delta}, {"rho", rho}});
      j["contour"] = {{"level", level}, {"points", c}};
      j["config_echo"] = config_to_json(config);
      j["environment"] = environment_json(jobs);
      write_json(json, j);
    }
    out_stream << g.solver << " phase grid written; " << contour.size() << " contour points at level "
               << level << '\n';
    return kOk;
  }
};

// ---------------------------------------------------------------- noise-sweep

struct NoiseCmd {
  std::string mode = "vary-d";
  std::string algos = "homotopy,gpsr,ist,fista,palm,dalm";
  Index n = 400, k = 40, d = 300;
  double sigma = 0.01;
  std::string axis;
  int trials = 20;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "sweep.csv", svg, json;
  ConfigFlags cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("noise-sweep", "error and run time against d or k/n under noise");
    c->add_option("--mode", mode, "vary-d | vary-k")
        ->check(CLI::IsMember({"vary-d", "vary-k"}))
        ->capture_default_str();
    c->add_option("--algos", algos, "comma-separated solvers")->capture_default_str();
    c->add_option("--n", n)->capture_default_str();
    c->add_option("--k", k, "nonzeros (vary-d)")->capture_default_str();
    c->add_option("--d", d, "rows (vary-k)")->capture_default_str();
    c->add_option("--sigma", sigma, "noise standard deviation")->capture_default_str();
    c->add_option("--axis", axis, "comma-separated d values or k/n values");
    c->add_option("--trials", trials)->capture_default_str();
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--jobs", jobs)->capture_default_str();
    c->add_option("--out", out, "sweep CSV")->capture_default_str();
    c->add_option("--svg", svg, "error plot");
    c->add_option("--json", json, "summary with timings");
    cfg.add(c);
  }

  int exec(std::ostream& out_stream) {
    bench::NoiseSweepOptions o;
    o.mode = mode == "vary-d" ? bench::SweepMode::vary_d : bench::SweepMode::vary_k;
    o.n = n;
    o.k = k;
    o.d = d;
    o.sigma = sigma;
    if (!axis.empty()) o.axis = parse_list(axis, "--axis");
    o.trials = trials;
    o.base_seed = seed;
    o.jobs = jobs;
    const SolverConfig config = cfg.build();
    const bench::SweepResult s = bench::run_noise_sweep(parse_algos(algos), o, config);
    write_text(out, [&](std::ostream& f) { bench::write_sweep_csv(f, s); });
    if (!svg.empty()) write_text(svg, [&](std::ostream& f) { bench::write_sweep_svg(f, s); });
    if (!json.empty()) {
      Json j;
      j["command"] = "noise-sweep";
      j["mode"] = mode;
      j["n"] = n;
      j[o.mode == bench::SweepMode::vary_d ? "k" : "d"] = o.mode == bench::SweepMode::vary_d ? k : d;
      j["sigma"] = sigma;
      j["trials"] = trials;
      j["seed"] = seed;
      j["rows"] = sweep_rows_json(s);
      j["config_echo"] = config_to_json(config);
      j["environment"] = environment_json(jobs);
      write_json(json, j);
    }
    out_stream << "noise sweep: " << s.rows.size() << " rows written\n";
    return kOk;
  }
};

// ---------------------------------------------------------------- cab

struct CabCmd {
  std::string algo = "homotopy";
  std::string matrix, rhs;
  double weight = 1.0;
  std::string out = "cab.json";
  bool sweep = false;
  std::string algos = "homotopy";
  std::string levels = "0,0.1,0.2,0.3,0.4,0.5,0.6";
  Index d = 80, n = 140, groups = 20;
  double coherence = 0.9, magnitude = 3.0;
  int trials = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string svg, json;
  ConfigFlags cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("cab", "cross-and-bouquet recovery min |x|_1 + |e|_1, b = A x + e");
    c->add_option("--algo", algo)->capture_default_str();
    auto* m = c->add_option("--matrix", matrix, "dictionary A as CSV")->check(CLI::ExistingFile);
    auto* r = c->add_option("--rhs", rhs, "observation b as CSV")->check(CLI::ExistingFile);
    m->needs(r);
    r->needs(m);
    c->add_option("--weight", weight, "weight of |e|_1 relative to |x|_1")->capture_default_str();
    c->add_option("--out", out, "result JSON, or sweep CSV with --sweep")->capture_default_str();
    auto* s = c->add_flag("--sweep", sweep, "run the synthetic corruption sweep instead");
    s->excludes(m)->excludes(r);
    c->add_option("--algos", algos, "solvers for --sweep")->capture_default_str();
    c->add_option("--levels", levels, "corruption fractions for --sweep")->capture_default_str();
    c->add_option("--d", d)->capture_default_str();
    c->add_option("--n", n)->capture_default_str();
    c->add_option("--groups", groups)->capture_default_str();
    c->add_option("--coherence", coherence)->capture_default_str();
    c->add_option("--magnitude", magnitude, "corruption range multiple of max|b|")
        ->capture_default_str();
    c->add_option("--trials", trials)->capture_default_str();
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--jobs", jobs)->capture_default_str();
    c->add_option("--svg", svg, "identification-rate plot (--sweep)");
    c->add_option("--json", json, "summary with timings (--sweep)");
    cfg.add(c);
  }

  int exec(std::ostream& out_stream) {
    const SolverConfig config = cfg.build();
    if (sweep) {
      bench::CorruptionSweepOptions o;
      o.d = d;
      o.n = n;
      o.groups = groups;
      o.coherence = coherence;
      o.magnitude = magnitude;
      o.levels = parse_list(levels, "--levels");
      o.trials = trials;
      o.base_seed = seed;
      o.jobs = jobs;
      const bench::SweepResult s = bench::run_corruption_sweep(parse_algos(algos), o, config);
      write_text(out == "cab.json" ? "cab_sweep.csv" : out,
                 [&](std::ostream& f) { bench::write_sweep_csv(f, s); });
      if (!svg.empty()) write_text(svg, [&](std::ostream& f) { bench::write_sweep_svg(f, s); });
      if (!json.empty()) {
        Json j;
        j["command"] = "cab";
        j["d"] = d;
        j["n"] = n;
        j["groups"] = groups;
        j["coherence"] = coherence;
        j["magnitude"] = magnitude;
        j["trials"] = trials;
        j["seed"] = seed;
        j["rows"] = sweep_rows_json(s);
        j["config_echo"] = config_to_json(config);
        j["environment"] = environment_json(jobs);
        write_json(json, j);
      }
      out_stream << "corruption sweep: " << s.rows.size() << " rows written\n";
      return kOk;
    }
    if (matrix.empty()) throw CLI::ValidationError("cab", "give --matrix and --rhs, or --sweep");
    const Matrix a = read_matrix_csv(matrix);
    const Vector b = read_vector_csv(rhs);
    if (b.size() != a.rows()) {
      throw InvalidArgument("dimension mismatch: A is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " but b has length " +
                            std::to_string(b.size()));
    }
    const CabResult res = cab_solve(a, b, parse_algorithm(algo), config, weight);
    const ExtendedDictionary ext(a, 1.0 / weight);
    Json j = result_to_json(res.result, OperatorProblem{ext, b}, config, std::nullopt);
    j["n"] = a.cols();
    j["x"] = vector_to_json(res.x);
    j["e"] = vector_to_json(res.e);
    if (!(res.result.lambda > 0.0)) {
      j["lambda"] = nullptr;
      j["objective"] = res.x.lpNorm<1>() + weight * res.e.lpNorm<1>();
      j["kkt_residual"] = nullptr;
    }
    j["weight"] = weight;
    write_json(out, j);
    out_stream << "cab " << res.result.algorithm << ": "
               << (res.result.converged ? "converged" : "NOT converged") << '\n';
    return res.result.converged ? kOk : kNotConverged;
  }
};

// ---------------------------------------------------------------- align

struct AlignCmd {
  std::string algo = "palm";
  std::string matrix, rhs;
  bool gen = false;
  Index d = 120, m = 11, corrupted = 12;
  std::uint64_t seed = 0;
  std::string out = "align.json";
  ConfigFlags cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("align", "min |e|_1 with b = B w + e for a tall B");
    c->add_option("--algo", algo, "gp | homotopy | ist | palm")
        ->check(CLI::IsMember({"gp", "homotopy", "ist", "palm"}))
        ->capture_default_str();
    auto* mm = c->add_option("--matrix", matrix, "B as CSV")->check(CLI::ExistingFile);
    auto* r = c->add_option("--rhs", rhs, "b as CSV")->check(CLI::ExistingFile);
    mm->needs(r);
    r->needs(mm);
    auto* g = c->add_flag("--gen", gen, "generate a random instance");
    g->excludes(mm)->excludes(r);
    c->add_option("--d", d, "rows (with --gen)")->capture_default_str();
    c->add_option("--m", m, "columns (with --gen)")->capture_default_str();
    c->add_option("--corrupted", corrupted, "gross errors (with --gen)")->capture_default_str();
    c->add_option("--seed", seed, "seed (with --gen)")->capture_default_str();
    c->add_option("--out", out, "result JSON")->capture_default_str();
    cfg.add(c);
  }

  int exec(std::ostream& out_stream) {
    AlignmentProblem p;
    std::optional<std::uint64_t> seed_out;
    if (gen) {
      p = gen_alignment_problem(d, m, corrupted, seed);
      seed_out = seed;
    } else {
      if (matrix.empty()) throw CLI::ValidationError("align", "give --matrix and --rhs, or --gen");
      p.B = read_matrix_csv(matrix);
      p.b = read_vector_csv(rhs);
    }
    p.validate();
    const SolverConfig config = cfg.build();
    const double lambda = config.lambda.value_or(align_default_lambda(p));
    AlignResult res;
    if (algo == "gp") {
      res = align_gp_solve(p, lambda, config);
    } else if (algo == "ist") {
      res = align_ist_solve(p, lambda, config);
    } else if (algo == "homotopy") {
      SolverConfig c = config;
      c.lambda = lambda;
      res = align_homotopy_solve(p, c);
    } else {
      res = align_palm_solve(p, config);
    }
    const bool lagrangian = algo != "palm";
    Json j;
    j["algo"] = res.result.algorithm;
    j["n"] = p.B.cols();
    j["d"] = p.B.rows();
    j["lambda"] = lagrangian ? Json(lambda) : Json(nullptr);
    j["iterations"] = res.result.iterations;
    j["converged"] = res.result.converged;
    j["wall_time_seconds"] = res.result.wall_time_seconds;
    j["x"] = vector_to_json(res.result.x);
    j["objective"] = lagrangian ? align_objective(p, res.w, res.e, lambda) : res.e.lpNorm<1>();
    j["kkt_residual"] = lagrangian ? Json(align_e_kkt(p, res.w, res.e, lambda)) : Json(nullptr);
    j["config_echo"] = config_to_json(config);
    j["seed"] = seed_out ? Json(*seed_out) : Json(nullptr);
    j["warnings"] = res.result.warnings;
    j["w"] = vector_to_json(res.w);
    j["e"] = vector_to_json(res.e);
    write_json(out, j);
    out_stream << res.result.algorithm << ": "
               << (res.result.converged ? "converged" : "NOT converged") << '\n';
    return res.result.converged ? kOk : kNotConverged;
  }
};

// ---------------------------------------------------------------- report

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw InvalidArgument(path + ": empty file");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw InvalidArgument(path + ":" + std::to_string(i + 1) + ": expected " +
                            std::to_string(rows[0].size()) + " fields");
    }
  }
  return rows;
}

double to_num(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw InvalidArgument(where + ": cannot parse '" + s + "'");
  return v;
}

struct ReportCmd {
  std::string in;
  double level = 0.95;
  std::string svg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "summarize a result JSON, phase CSV or sweep CSV");
    c->add_option("--in", in, "input file")->required()->check(CLI::ExistingFile);
    c->add_option("--level", level, "contour level for phase grids")->capture_default_str();
    c->add_option("--svg", svg, "render the CSV as SVG");
  }

  int exec(std::ostream& out) {
    if (fs::path(in).extension() == ".json") {
      std::ifstream f(in);
      Json j;
      try {
        j = Json::parse(f);
      } catch (const Json::parse_error& e) {
        throw InvalidArgument(in + ": " + e.what());
      }
      for (const char* key : {"algo", "command", "n", "d", "lambda", "iterations", "converged",
                              "wall_time_seconds", "objective", "kkt_residual", "seed"}) {
        if (j.contains(key)) out << std::left << std::setw(20) << key << j[key].dump() << '\n';
      }
      if (j.contains("x") && j["x"].is_array()) {
        const Vector x = vector_from_json(j["x"]);
        out << std::left << std::setw(20) << "support_size" << support_size(x) << '\n';
      }
      if (j.contains("rows")) out << std::left << std::setw(20) << "rows" << j["rows"].size() << '\n';
      return kOk;
    }
    const auto rows = read_csv_rows(in);
    const auto& head = rows[0];
    if (head.size() == 8 && head[0] == "solver" && head[2] == "rho") {
      bench::PhaseGrid g;
      std::vector<double> rho, delta;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const double r = to_num(rows[i][2], in), dl = to_num(rows[i][3], in);
        if (std::find(rho.begin(), rho.end(), r) == rho.end()) rho.push_back(r);
        if (std::find(delta.begin(), delta.end(), dl) == delta.end()) delta.push_back(dl);
      }
      g.solver = rows[1][0];
      g.n = static_cast<Index>(to_num(rows[1][1], in));
      g.trials_per_cell = static_cast<int>(to_num(rows[1][6], in));
      g.rho_values = rho;
      g.delta_values = delta;
      g.success_rate = Matrix::Zero(static_cast<Index>(rho.size()), static_cast<Index>(delta.size()));
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto ri = std::find(rho.begin(), rho.end(), to_num(rows[i][2], in)) - rho.begin();
        const auto di = std::find(delta.begin(), delta.end(), to_num(rows[i][3], in)) - delta.begin();
        g.success_rate(ri, di) = to_num(rows[i][7], in);
      }
      out << g.solver << " phase grid, n = " << g.n << ", " << rho.size() << "x" << delta.size()
          << " cells, " << g.trials_per_cell << " trials per cell\n";
      out << "contour at level " << level << ":\n";
      for (const auto& [d, r] : bench::interpolate_success_contour(g, level)) {
        out << "  delta " << std::setw(8) << d << "  rho " << r << '\n';
      }
      if (!svg.empty()) write_text(svg, [&](std::ostream& f) { bench::write_phase_svg(f, g, level); });
      return kOk;
    }
    if (head.size() == 7 && head[1] == "solver") {
      bench::SweepResult s;
      s.axis_name = head[0];
      for (std::size_t i = 1; i < rows.size(); ++i) {
        bench::SweepRow r;
        r.axis = to_num(rows[i][0], in);
        r.solver = rows[i][1];
        r.trials = static_cast<int>(to_num(rows[i][2], in));
        r.mean_rel_error = to_num(rows[i][3], in);
        r.mean_iterations = to_num(rows[i][4], in);
        r.converged_rate = to_num(rows[i][5], in);
        r.identification_rate = to_num(rows[i][6], in);
        s.rows.push_back(r);
        s.trials = r.trials;
      }
      out << std::left << std::setw(12) << s.axis_name << std::setw(10) << "solver"
          << std::setw(14) << "rel_error" << std::setw(12) << "iterations" << std::setw(10)
          << "converged" << "identified\n";
      for (const auto& r : s.rows) {
        out << std::left << std::setw(12) << r.axis << std::setw(10) << r.solver << std::setw(14)
            << r.mean_rel_error << std::setw(12) << r.mean_iterations << std::setw(10)
            << r.converged_rate << r.identification_rate << '\n';
      }
      if (!svg.empty()) write_text(svg, [&](std::ostream& f) { bench::write_sweep_svg(f, s); });
      return kOk;
    }
    throw InvalidArgument(in + ": not a result JSON, phase CSV or sweep CSV");
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"l1min: sparse recovery solvers and benchmarks"};
  app.name("l1min");
  app.require_subcommand(1);
  SolveCmd solve;
  GenCmd gen;
  PhaseCmd phase;
  NoiseCmd noise;
  CabCmd cab;
  AlignCmd align;
  ReportCmd report;
  solve.add(app);
  gen.add(app);
  phase.add(app);
  noise.add(app);
  cab.add(app);
  align.add(app);
  report.add(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (app.got_subcommand("solve")) return solve.exec(out, *app.get_subcommand("solve"));
    if (app.got_subcommand("gen")) return gen.exec(out);
    if (app.got_subcommand("phase")) return phase.exec(out);
    if (app.got_subcommand("noise-sweep")) return noise.exec(out);
    if (app.got_subcommand("cab")) return cab.exec(out);
    if (app.got_subcommand("align")) return align.exec(out);
    if (app.got_subcommand("report")) return report.exec(out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNotConverged;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace l1min::cli
