#include "l1min/serialize.hpp"

#include "l1min/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

namespace l1min {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v[i]));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument("expected a JSON array of numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

namespace {

Json optional_number(const std::optional<double>& v) {
  return v ? number_or_null(*v) : Json(nullptr);
}

// Reads an object field by field; anything left over is an error.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw InvalidArgument(where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.push_back(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw InvalidArgument("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw InvalidArgument("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw InvalidArgument(where_ + "." + key + ": wrong type");
    }
  }

  void get_optional(const char* key, std::optional<double>& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.push_back(key);
    if (it->is_null()) {
      out.reset();
    } else if (it->is_number()) {
      out = it->get<double>();
    } else {
      throw InvalidArgument(where_ + "." + key + ": expected a number or null");
    }
  }

  const Json* child(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.push_back(key);
    return &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw InvalidArgument(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace

Json config_to_json(const SolverConfig& c) {
  Json j;
  j["lambda"] = optional_number(c.lambda);
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["stopping"] = {{"kind", std::string(to_string(c.stopping.kind))},
                   {"threshold", c.stopping.threshold}};
  j["record_trace"] = c.record_trace;
  j["pdipa"] = {{"centering", c.pdipa.centering},
                {"step_fraction", c.pdipa.step_fraction},
                {"feasibility_tol", c.pdipa.feasibility_tol},
                {"gap_tol", c.pdipa.gap_tol}};
  j["gpsr"] = {{"alpha_max", c.gpsr.alpha_max},
               {"curvature_floor", c.gpsr.curvature_floor},
               {"max_halvings", c.gpsr.max_halvings}};
  j["tnipm"] = {{"t_growth", c.tnipm.t_growth},
                {"decrement_threshold", c.tnipm.decrement_threshold},
                {"pcg_tol", c.tnipm.pcg_tol},
                {"pcg_max_iter", c.tnipm.pcg_max_iter},
                {"max_backtracks", c.tnipm.max_backtracks},
                {"armijo", c.tnipm.armijo},
                {"backtrack", c.tnipm.backtrack},
                {"polish", c.tnipm.polish}};
  j["homotopy"] = {{"tie_tol", c.homotopy.tie_tol},
                   {"solve_residual_tol", c.homotopy.solve_residual_tol},
                   {"ridge", c.homotopy.ridge}};
  j["ist"] = {{"alpha0", c.ist.alpha0},
              {"alpha_min", c.ist.alpha_min},
              {"alpha_max", c.ist.alpha_max},
              {"max_doublings", c.ist.max_doublings},
              {"lambda_start", optional_number(c.ist.lambda_start)},
              {"beta", c.ist.beta},
              {"min_stages", c.ist.min_stages},
              {"stage_tol", c.ist.stage_tol},
              {"weights", c.ist.weights ? vector_to_json(*c.ist.weights) : Json(nullptr)}};
  j["fista"] = {{"L0", c.fista.L0},
                {"eta", c.fista.eta},
                {"beta", c.fista.beta},
                {"lambda_start", optional_number(c.fista.lambda_start)},
                {"continuation", c.fista.continuation},
                {"exact_lipschitz", c.fista.exact_lipschitz}};
  j["palm"] = {{"mu0", c.palm.mu0},
               {"rho", c.palm.rho},
               {"inner_max_iter", c.palm.inner_max_iter},
               {"inner_tol_scale", c.palm.inner_tol_scale}};
  j["dalm"] = {{"beta", c.dalm.beta}, {"cg_step", c.dalm.cg_step}};
  return j;
}

SolverConfig config_from_json(const Json& j) {
  SolverConfig c;
  Reader r(j, "config");
  r.get_optional("lambda", c.lambda);
  r.get("tol", c.tol);
  r.get("max_iter", c.max_iter);
  r.get("record_trace", c.record_trace);
  if (const Json* s = r.child("stopping")) {
    Reader rs(*s, "config.stopping");
    std::string kind(to_string(c.stopping.kind));
    rs.get("kind", kind);
    c.stopping.kind = parse_stopping_kind(kind);
    rs.get("threshold", c.stopping.threshold);
    rs.finish();
  }
  if (const Json* s = r.child("pdipa")) {
    Reader b(*s, "config.pdipa");
    b.get("centering", c.pdipa.centering);
    b.get("step_fraction", c.pdipa.step_fraction);
    b.get("feasibility_tol", c.pdipa.feasibility_tol);
    b.get("gap_tol", c.pdipa.gap_tol);
    b.finish();
  }
  if (const Json* s = r.child("gpsr")) {
    Reader b(*s, "config.gpsr");
    b.get("alpha_max", c.gpsr.alpha_max);
    b.get("curvature_floor", c.gpsr.curvature_floor);
    b.get("max_halvings", c.gpsr.max_halvings);
    b.finish();
  }
  if (const Json* s = r.child("tnipm")) {
    Reader b(*s, "config.tnipm");
    b.get("t_growth", c.tnipm.t_growth);
    b.get("decrement_threshold", c.tnipm.decrement_threshold);
    b.get("pcg_tol", c.tnipm.pcg_tol);
    b.get("pcg_max_iter", c.tnipm.pcg_max_iter);
    b.get("max_backtracks", c.tnipm.max_backtracks);
    b.get("armijo", c.tnipm.armijo);
    b.get("backtrack", c.tnipm.backtrack);
    b.get("polish", c.tnipm.polish);
    b.finish();
  }
  if (const Json* s = r.child("homotopy")) {
    Reader b(*s, "config.homotopy");
    b.get("tie_tol", c.homotopy.tie_tol);
    b.get("solve_residual_tol", c.homotopy.solve_residual_tol);
    b.get("ridge", c.homotopy.ridge);
    b.finish();
  }
  if (const Json* s = r.child("ist")) {
    Reader b(*s, "config.ist");
    b.get("alpha0", c.ist.alpha0);
    b.get("alpha_min", c.ist.alpha_min);
    b.get("alpha_max", c.ist.alpha_max);
    b.get("max_doublings", c.ist.max_doublings);
    b.get_optional("lambda_start", c.ist.lambda_start);
    b.get("beta", c.ist.beta);
    b.get("min_stages", c.ist.min_stages);
    b.get("stage_tol", c.ist.stage_tol);
    if (const Json* w = b.child("weights")) {
      if (w->is_null()) {
        c.ist.weights.reset();
      } else {
        c.ist.weights = vector_from_json(*w);
      }
    }
    b.finish();
  }
  if (const Json* s = r.child("fista")) {
    Reader b(*s, "config.fista");
    b.get("L0", c.fista.L0);
    b.get("eta", c.fista.eta);
    b.get("beta", c.fista.beta);
    b.get_optional("lambda_start", c.fista.lambda_start);
    b.get("continuation", c.fista.continuation);
    b.get("exact_lipschitz", c.fista.exact_lipschitz);
    b.finish();
  }
  if (const Json* s = r.child("palm")) {
    Reader b(*s, "config.palm");
    b.get("mu0", c.palm.mu0);
    b.get("rho", c.palm.rho);
    b.get("inner_max_iter", c.palm.inner_max_iter);
    b.get("inner_tol_scale", c.palm.inner_tol_scale);
    b.finish();
  }
  if (const Json* s = r.child("dalm")) {
    Reader b(*s, "config.dalm");
    b.get("beta", c.dalm.beta);
    b.get("cg_step", c.dalm.cg_step);
    b.finish();
  }
  r.finish();
  c.validate();
  return c;
}

Json result_to_json(const SolverResult& result, const OperatorProblem& problem,
                    const SolverConfig& config, std::optional<std::uint64_t> seed) {
  const bool lagrangian = std::isfinite(result.lambda);
  Json j;
  j["algo"] = result.algorithm;
  j["n"] = problem.op.cols();
  j["d"] = problem.op.rows();
  j["lambda"] = number_or_null(result.lambda);
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["wall_time_seconds"] = result.wall_time_seconds;
  j["x"] = vector_to_json(result.x);
  if (result.x.size() == problem.op.cols()) {
    j["objective"] = number_or_null(lagrangian ? objective(result.x, problem, result.lambda)
                                               : result.x.lpNorm<1>());
    j["kkt_residual"] =
        lagrangian ? number_or_null(kkt_residual(result.x, problem, result.lambda)) : Json(nullptr);
  } else {
    j["objective"] = nullptr;
    j["kkt_residual"] = nullptr;
  }
  j["config_echo"] = config_to_json(config);
  j["seed"] = seed ? Json(*seed) : Json(nullptr);
  j["warnings"] = result.warnings;
  return j;
}

}  // namespace l1min
