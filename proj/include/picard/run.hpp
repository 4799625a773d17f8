#pragma once

// Batch runs: analysis, iteration and the report/CSV artifacts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "picard/analysis.hpp"
#include "picard/config.hpp"
#include "picard/error.hpp"
#include "picard/mesh.hpp"
#include "picard/picard.hpp"

namespace picard {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  exit_converged = 0,
  exit_max_iterations = 2,
  exit_divergence = 3,
  exit_config = 4,
  exit_evaluation = 5,
};

inline int exit_code_for(StopReason r) {
  switch (r) {
    case StopReason::fixed_point: return exit_converged;
    case StopReason::max_iterations: return exit_max_iterations;
    case StopReason::divergence: return exit_divergence;
  }
  return exit_max_iterations;
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::domain:
    case ErrorCode::unbound_variable: return exit_evaluation;
    default: return exit_config;
  }
}

/// Finite numbers as JSON numbers, infinities as the string "inf".
inline json number(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

inline json number(long double v) { return number(static_cast<double>(v)); }

/// Problem, grid and time interval a configuration runs on.
struct RunSetup {
  Problem problem;
  GridPtr analysis_grid;
  GridPtr grid;
  ConstantsReport constants;
  std::vector<std::string> warnings;
};

inline RunSetup prepare(const RunConfig& cfg) {
  RunSetup s;
  ProblemSource src = cfg.problem;
  if (cfg.run.symmetric_time) src.t_lo = -src.t_hi;
  s.problem = build_problem(src, cfg.grid.ghost);
  if (cfg.grid.n_x.size() != static_cast<std::size_t>(src.k)) {
    throw Error(ErrorCode::config, "[grid] n_x needs one entry per spatial axis");
  }
  s.analysis_grid = make_grid(s.problem.domain, cfg.grid.n_t, cfg.grid.n_x);
  AnalysisOptions aopt;
  aopt.samples = cfg.analysis.samples;
  aopt.seed = cfg.analysis.seed;
  aopt.box_center = cfg.analysis.box_center;
  s.constants = analyze(s.problem, s.analysis_grid, aopt);
  s.grid = s.analysis_grid;
  if (cfg.run.time_interval == TimeInterval::delta1) {
    const double d1 = s.constants.delta1;
    if (!std::isfinite(d1)) {
      s.warnings.push_back("delta1 is unbounded; running on the configured time interval");
    } else {
      s.problem.domain.t_lo = cfg.run.symmetric_time ? -d1 : 0.0;
      s.problem.domain.t_hi = d1;
      s.grid = make_grid(s.problem.domain, cfg.grid.n_t, cfg.grid.n_x);
    }
  }
  const auto& d = s.problem.domain;
  s.constants.run_interval = std::max(std::fabs(d.t_lo), std::fabs(d.t_hi));
  s.constants.gamma_run = compute_gamma(s.constants.L.value, s.constants.run_interval, s.problem.n);
  if (s.constants.run_interval > s.constants.delta1 * (1 + 1e-12)) {
    s.warnings.push_back("time interval exceeds delta1; contraction and the error bound are not guaranteed");
  }
  if (s.constants.gamma_run >= 1) {
    s.warnings.push_back("gamma >= 1 on the run interval; error bounds are omitted");
  }
  return s;
}

struct RunOutcome {
  json report;
  IterationResult iterations;
  RunSetup setup;
  int exit_code = 0;
  double wall_seconds = 0;
};

inline json config_json(const RunConfig& cfg) {
  const ProblemSource& p = cfg.problem;
  json prob;
  prob["name"] = p.name;
  prob["n"] = p.n;
  prob["m"] = p.m;
  prob["k"] = p.k;
  prob["F"] = p.F;
  prob["G"] = p.G.empty() ? json(nullptr) : json(p.G);
  prob["g"] = p.g.empty() ? json(nullptr) : json(p.g);
  prob["c"] = p.c;
  prob["lo"] = p.lo;
  prob["hi"] = p.hi;
  prob["t_lo"] = p.t_lo;
  prob["t_hi"] = p.t_hi;
  prob["R"] = p.R;
  prob["exact"] = p.exact.empty() ? json(nullptr) : json(p.exact);
  prob["L_override"] = p.L_override ? json(*p.L_override) : json(nullptr);
  prob["M_override"] = p.M_override ? json(*p.M_override) : json(nullptr);
  json out;
  out["problem"] = prob;
  out["grid"] = {{"n_t", cfg.grid.n_t}, {"n_x", cfg.grid.n_x}, {"ghost", cfg.grid.ghost}};
  out["run"] = {{"p_max", cfg.run.p_max},
                {"tol", cfg.run.tol},
                {"norm", to_string(cfg.run.norm)},
                {"symmetric_time", cfg.run.symmetric_time},
                {"time_interval", to_string(cfg.run.time_interval)},
                {"halo", cfg.run.halo ? json(*cfg.run.halo) : json("auto")}};
  out["analysis"] = {{"samples", cfg.analysis.samples},
                     {"seed", cfg.analysis.seed},
                     {"box_center", to_string(cfg.analysis.box_center)}};
  out["output"] = {{"report", cfg.output.report},
                   {"iterations_csv", cfg.output.iterations_csv},
                   {"dump", to_string(cfg.output.dump)}};
  return out;
}

inline json constants_json(const ConstantsReport& c, const Problem& prob) {
  json box = json::array();
  for (const auto& b : c.box) {
    box.push_back({{"index", placeholder_name(b.index, prob.k)},
                   {"alpha0", b.index.t},
                   {"alpha", b.index.x},
                   {"lo", number(b.lo)},
                   {"hi", number(b.hi)}});
  }
  json out;
  out["K"] = c.K;
  out["box"] = box;
  out["M"] = number(c.M.value);
  out["L"] = number(c.L.value);
  out["delta"] = number(c.delta);
  out["delta1"] = number(c.delta1);
  out["gamma"] = number(c.gamma);
  out["R"] = number(c.R);
  out["samples"] = c.samples;
  out["seed"] = c.seed;
  out["M_raw"] = number(c.M.raw);
  out["L_raw"] = number(c.L.raw);
  out["M_source"] = c.M.overridden ? "override" : "sampled";
  out["L_source"] = c.L.overridden ? "override" : "sampled";
  out["safety_factor"] = kSafetyFactor;
  out["box_center"] = to_string(c.box_center);
  out["run_interval"] = number(c.run_interval);
  out["gamma_run"] = number(c.gamma_run);
  out["start_distance"] = number(c.start_distance);
  return out;
}

inline std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

inline std::optional<double> opt_double(const std::optional<real>& v) {
  if (!v) return std::nullopt;
  return static_cast<double>(*v);
}

/// Executes `cfg`; artifacts are written to `out_dir` unless it is empty.
inline RunOutcome run(const RunConfig& cfg, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome o;
  o.setup = prepare(cfg);
  const RunSetup& s = o.setup;
  IterateOptions iopt;
  iopt.p_max = cfg.run.p_max;
  iopt.tol = cfg.run.tol;
  iopt.norm = cfg.run.norm;
  iopt.halo = cfg.run.halo;
  iopt.keep_fields = cfg.output.dump == DumpMode::all;
  o.iterations = iterate(s.problem, s.grid, iopt);
  const IterationResult& it = o.iterations;
  const double gamma = s.constants.gamma_run;
  const bool bounded = gamma >= 0 && gamma < 1;

  json rows = json::array();
  std::string csv = "p,increment_sup,increment_cN,measured_ratio,error_bound,error_vs_exact,distance_from_u0\n";
  for (const auto& h : it.history) {
    json row;
    row["p"] = h.p;
    row["increment_norm"] = number(h.increment(cfg.run.norm));
    row["increment_sup"] = number(h.increment_sup);
    row["increment_cN"] = number(h.increment_cn);
    row["measured_ratio"] = h.measured_ratio ? number(*h.measured_ratio) : json(nullptr);
    std::optional<double> bound;
    if (bounded) {
      bound = error_bound(s.problem.R, gamma, h.p);
      row["error_bound"] = number(*bound);
    }
    if (h.error_vs_exact) row["error_vs_exact"] = number(*h.error_vs_exact);
    row["distance_from_u0"] = number(h.distance_from_u0);
    rows.push_back(row);
    csv += std::to_string(h.p) + "," + csv_number(static_cast<double>(h.increment_sup)) + "," +
           csv_number(static_cast<double>(h.increment_cn)) + "," + csv_number(opt_double(h.measured_ratio)) + "," +
           csv_number(bound) + "," + csv_number(opt_double(h.error_vs_exact)) + "," +
           csv_number(static_cast<double>(h.distance_from_u0)) + "\n";
  }

  std::vector<std::string> warnings = s.warnings;
  warnings.insert(warnings.end(), it.warnings.begin(), it.warnings.end());
  o.exit_code = exit_code_for(it.stop);

  json& r = o.report;
  r["config"] = config_json(cfg);
  r["constants"] = constants_json(s.constants, s.problem);
  r["grid"] = {{"t_lo", number(s.problem.domain.t_lo)},
               {"t_hi", number(s.problem.domain.t_hi)},
               {"n_t", s.grid->n_t()},
               {"n_x", s.grid->n_x()},
               {"ghost", s.grid->ghost()},
               {"halo", it.halo}};
  r["norm_order"] = it.norm_order;
  r["iterations"] = rows;
  r["stop_reason"] = to_string(it.stop);
  r["final_p"] = it.history.back().p;
  r["initial_condition_defect"] = number(initial_condition_defect(s.problem, it.final_field));
  if (!it.diagnostic.empty()) r["diagnostic"] = it.diagnostic;
  r["warnings"] = warnings;
  r["exit_code"] = o.exit_code;

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create output directory '" + out_dir + "': " + ec.message());
    auto write = [&](const std::string& name, auto&& emit) {
      const fs::path path = fs::path(out_dir) / name;
      std::ofstream f(path, std::ios::binary);
      if (!f) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
      emit(f);
      if (!f) throw Error(ErrorCode::io, "write to '" + path.string() + "' failed");
    };
    write(cfg.output.report, [&](std::ostream& f) { f << r.dump(2) << "\n"; });
    write(cfg.output.iterations_csv, [&](std::ostream& f) { f << csv; });
    if (cfg.output.dump == DumpMode::final) {
      write("u_final.csv", [&](std::ostream& f) { write_csv(it.final_field, f); });
    } else if (cfg.output.dump == DumpMode::all) {
      for (const auto& h : it.history) {
        write("u_" + std::to_string(h.p) + ".csv", [&](std::ostream& f) { write_csv(*h.u, f); });
      }
    }
  }
  o.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

}  // namespace picard
