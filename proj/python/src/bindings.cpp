#include "l1min/cli.hpp"
#include "l1min/errors.hpp"
#include "l1min/homotopy.hpp"
#include "l1min/robust.hpp"
#include "l1min/serialize.hpp"
#include "l1min/solvers.hpp"
#include "l1min/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace l1min;

namespace {

SolverConfig make_config(std::optional<double> lambda, double tol, int max_iter,
                         const std::string& config_json) {
  SolverConfig c = config_json.empty() ? SolverConfig{} : config_from_json(Json::parse(config_json));
  if (lambda) c.lambda = lambda;
  if (tol > 0.0) c.tol = tol;
  if (max_iter > 0) c.max_iter = max_iter;
  return c;
}

py::object number_or_none(double v) { return std::isfinite(v) ? py::object(py::float_(v)) : py::none(); }

py::dict result_dict(const SolverResult& r, const ProblemInstance& p) {
  py::dict d;
  d["algo"] = r.algorithm;
  d["x"] = r.x;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["wall_time_seconds"] = r.wall_time_seconds;
  d["lambda"] = number_or_none(r.lambda);
  const bool lagrangian = std::isfinite(r.lambda);
  d["objective"] = lagrangian ? objective(r.x, p, r.lambda) : r.x.lpNorm<1>();
  d["kkt_residual"] = lagrangian ? py::object(py::float_(kkt_residual(r.x, p, r.lambda))) : py::none();
  d["warnings"] = r.warnings;
  return d;
}

ProblemInstance instance(const Matrix& a, const Vector& b) {
  ProblemInstance p;
  p.A = a;
  p.b = b;
  if (b.size() != a.rows()) {
    throw InvalidArgument("dimension mismatch: A is " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " but b has length " + std::to_string(b.size()));
  }
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse recovery by l1 minimization.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.attr("generator_name") = std::string(synth::kGeneratorName);

  m.def("algorithms", [] {
    std::vector<std::string> out;
    for (Algorithm a : all_algorithms()) out.emplace_back(to_string(a));
    return out;
  });

  m.def(
      "solve",
      [](const std::string& algo, const Matrix& a, const Vector& b, std::optional<double> lam,
         double tol, int max_iter, const std::string& config_json) {
        const ProblemInstance p = instance(a, b);
        const SolverConfig c = make_config(lam, tol, max_iter, config_json);
        SolverResult r;
        {
          py::gil_scoped_release release;
          r = run_solver(parse_algorithm(algo), p, c);
        }
        return result_dict(r, p);
      },
      py::arg("algo"), py::arg("A"), py::arg("b"), py::arg("lam") = py::none(),
      py::arg("tol") = 0.0, py::arg("max_iter") = 0, py::arg("config_json") = "",
      "Run one solver; returns a dict shaped like the CLI result JSON.");

  m.def(
      "homotopy_path",
      [](const Matrix& a, const Vector& b, double target) {
        const ProblemInstance p = instance(a, b);
        DenseView view(p.A);
        const HomotopyRun run = homotopy_path(OperatorProblem{view, p.b}, target, SolverConfig{});
        py::list path;
        for (const Breakpoint& bp : run.path) {
          path.append(py::make_tuple(bp.lambda, bp.support_size, bp.objective,
                                     std::string(to_string(bp.event)), bp.index));
        }
        return py::make_tuple(run.result.x, path);
      },
      py::arg("A"), py::arg("b"), py::arg("target_lambda") = 0.0,
      "Solution at target_lambda and the breakpoints (lambda, support size, objective, event, index).");

  m.def(
      "gen_problem",
      [](Index n, Index d, Index k, std::uint64_t seed, double sigma) {
        synth::GenSpec s;
        s.n = n;
        s.d = d;
        s.k = k;
        s.seed = seed;
        s.noise_sigma = sigma;
        const ProblemInstance p = synth::gen_problem(s);
        return py::make_tuple(p.A, p.b, *p.ground_truth);
      },
      py::arg("n"), py::arg("d"), py::arg("k"), py::arg("seed") = 0, py::arg("sigma") = 0.0,
      "Gaussian dictionary A (d x n), observation b and k-sparse truth x0.");

  m.def("objective",
        [](const Vector& x, const Matrix& a, const Vector& b, double lam) {
          return objective(x, instance(a, b), lam);
        },
        py::arg("x"), py::arg("A"), py::arg("b"), py::arg("lam"));
  m.def("kkt_residual",
        [](const Vector& x, const Matrix& a, const Vector& b, double lam) {
          return kkt_residual(x, instance(a, b), lam);
        },
        py::arg("x"), py::arg("A"), py::arg("b"), py::arg("lam"));
  m.def("soft_threshold", [](const Vector& u, double t) { return soft_threshold(u, t); },
        py::arg("u"), py::arg("threshold"));

  m.def(
      "cab_solve",
      [](const Matrix& a, const Vector& b, const std::string& algo, double weight) {
        const CabResult r = cab_solve(a, b, parse_algorithm(algo), SolverConfig{}, weight);
        return py::make_tuple(r.x, r.e, r.result.converged);
      },
      py::arg("A"), py::arg("b"), py::arg("algo") = "homotopy", py::arg("weight") = 1.0,
      "Cross-and-bouquet recovery; returns (x, e, converged).");

  m.def(
      "align_solve",
      [](const Matrix& bm, const Vector& b, const std::string& algo, std::optional<double> lam) {
        AlignmentProblem p;
        p.B = bm;
        p.b = b;
        p.validate();
        SolverConfig c;
        c.max_iter = 20000;
        const double l = lam.value_or(align_default_lambda(p));
        AlignResult r;
        if (algo == "gp") {
          r = align_gp_solve(p, l, c);
        } else if (algo == "homotopy") {
          c.lambda = l;
          r = align_homotopy_solve(p, c);
        } else if (algo == "ist") {
          r = align_ist_solve(p, l, c);
        } else if (algo == "palm") {
          r = align_palm_solve(p, c);
        } else {
          throw InvalidArgument("unknown alignment solver '" + algo + "'");
        }
        return py::make_tuple(r.w, r.e, r.result.converged);
      },
      py::arg("B"), py::arg("b"), py::arg("algo") = "palm", py::arg("lam") = py::none(),
      "Robust fit b = B w + e with sparse e; returns (w, e, converged).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit code, stdout, stderr).");
}
