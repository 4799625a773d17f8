#pragma once

// Built-in regression problems with closed-form solutions and the closed-form
// iterates u_p they are known to produce.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "picard/error.hpp"
#include "picard/expr.hpp"
#include "picard/picard.hpp"

namespace picard {

/// Textual form of a problem; the config layer stores and writes these.
struct ProblemSource {
  std::string name;
  int n = 1;
  int m = 0;
  int k = 1;
  std::string F;
  std::string G;
  std::string g;
  std::vector<std::string> c;
  std::vector<double> lo;
  std::vector<double> hi;
  double t_lo = 0.0;
  double t_hi = 0.5;
  double R = 1.0;
  std::string exact;
  std::optional<double> L_override;
  std::optional<double> M_override;

  bool operator==(const ProblemSource&) const = default;
};

/// Parses and validates every expression of `src`.
inline Problem build_problem(const ProblemSource& src, int ghost = 0) {
  Problem p;
  p.name = src.name;
  p.n = src.n;
  p.m = src.m;
  p.k = src.k;
  if (p.k < 1) throw Error(ErrorCode::invalid_argument, "spatial dimension k must be >= 1");
  const OrderLimits limits{src.n, src.m};
  p.F = parse(src.F, src.k, limits);
  if (!src.G.empty() || !src.g.empty()) {
    p.G = parse(src.G.empty() ? "0" : src.G, src.k, limits);
    p.g = parse(src.g.empty() ? "0" : src.g, src.k, limits);
  }
  for (const auto& ci : src.c) p.c.push_back(parse(ci, src.k));
  p.domain = Domain{src.k, src.lo, src.hi, src.t_lo, src.t_hi, ghost};
  p.R = src.R;
  if (!src.exact.empty()) p.exact = parse(src.exact, src.k);
  p.L_override = src.L_override;
  p.M_override = src.M_override;
  p.validate();
  return p;
}

struct PrintedIterate {
  int p = 0;
  std::string expr;
};

struct BuiltinProblem {
  std::string id;
  ProblemSource source;
  std::vector<PrintedIterate> printed_iterates;

  Problem problem(int ghost = 0) const { return build_problem(source, ghost); }
};

inline const std::vector<std::string>& builtin_ids() {
  static const std::vector<std::string> ids{"heat2d_forced", "heat2d_varcoef", "wave2d_nonlinear", "wave3d_varcoef"};
  return ids;
}

inline BuiltinProblem builtin(std::string_view id) {
  BuiltinProblem b;
  b.id = std::string(id);
  ProblemSource& s = b.source;
  s.name = b.id;
  if (id == "heat2d_forced") {
    s.n = 1;
    s.m = 2;
    s.k = 2;
    s.F = "u_xx - u_yy - u + (1+t)*sinh(x+y)";
    s.G = "u_xx - u_yy - u";
    s.g = "(1+t)*sinh(x+y)";
    s.c = {"sinh(x+y)"};
    s.exact = "(t + exp(-t))*sinh(x+y)";
    b.printed_iterates = {
        {1, "sinh(x+y)*(1 - t^3/6)"},
        {2, "sinh(x+y)*(1 + t^2/2 + t^4/24)"},
        {3, "sinh(x+y)*(1 + t^2/2 - t^3/6 - t^5/120)"},
        {4, "sinh(x+y)*(1 + t^2/2 - t^3/6 + t^4/24 + t^6/720)"},
        {5, "sinh(x+y)*(1 + t^2/2 - t^3/6 + t^4/24 - t^5/120 - t^7/5040)"},
    };
  } else if (id == "heat2d_varcoef") {
    s.n = 1;
    s.m = 2;
    s.k = 2;
    s.F = "(y^2/2)*u_xx + (x^2/2)*u_yy";
    s.c = {"y^2"};
    s.exact = "y^2*cosh(t) + x^2*sinh(t)";
    b.printed_iterates = {
        {1, "y^2 + x^2*t"},
        {2, "y^2*(1 + t^2/2) + x^2*t"},
        {3, "y^2*(1 + t^2/2) + x^2*(t + t^3/6)"},
        {4, "y^2*(1 + t^2/2 + t^4/24) + x^2*(t + t^3/6)"},
        {5, "y^2*(1 + t^2/2 + t^4/24) + x^2*(t + t^3/6 + t^5/120)"},
    };
  } else if (id == "wave2d_nonlinear") {
    s.n = 2;
    s.m = 2;
    s.k = 2;
    s.F = "(15/2)*x*u_xx^2 + (15/2)*y*u_yy^2 + 2*x^2 + 2*y^2";
    s.G = "(15/2)*x*u_xx^2 + (15/2)*y*u_yy^2";
    s.g = "2*x^2 + 2*y^2";
    s.c = {"0", "0"};
    s.exact = "t^2*(x^2+y^2) + t^6*(x+y)";
    b.printed_iterates = {
        {1, "t^2*(x^2+y^2)+t^6*(x+y)"},
        {2, "t^2*(x^2+y^2)+t^6*(x+y)"},
    };
  } else if (id == "wave3d_varcoef") {
    s.n = 2;
    s.m = 2;
    s.k = 3;
    s.F = "(1/2)*(x^2*u_xx + y^2*u_yy + z^2*u_zz) + x^2 + y^2 + z^2";
    s.G = "(1/2)*(x^2*u_xx + y^2*u_yy + z^2*u_zz)";
    s.g = "x^2 + y^2 + z^2";
    s.c = {"0", "x^2+y^2-z^2"};
    s.exact = "(x^2+y^2)*exp(t) + z^2*exp(-t) - (x^2+y^2+z^2)";
    b.printed_iterates = {
        {1, "(x^2+y^2)*(t + t^2/2 + t^3/6 + t^4/24) + z^2*(-t + t^2/2 - t^3/6 + t^4/24)"},
        {2, "(x^2+y^2)*(t + t^2/2 + t^3/6 + t^4/24 + t^5/120 + t^6/720) + "
            "z^2*(-t + t^2/2 - t^3/6 + t^4/24 - t^5/120 + t^6/720)"},
    };
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown builtin problem '" + std::string(id) + "'");
  }
  s.lo.assign(static_cast<std::size_t>(s.k), 0.0);
  s.hi.assign(static_cast<std::size_t>(s.k), 1.0);
  s.t_lo = 0.0;
  s.t_hi = 0.5;
  s.R = 1.0;
  return b;
}

struct ResidualReport {
  double pde_residual = 0;
  double initial_residual = 0;
  int samples = 0;
  bool ok = false;
  std::string failure;
};

/// Substitutes symbolic derivatives of the exact solution into the equation
/// and the initial conditions at pseudo-random points of J x Omega.
inline ResidualReport verify_exact(const Problem& prob, int samples = 64, double tol = 1e-6) {
  ResidualReport rep;
  rep.samples = samples;
  if (!prob.exact) {
    rep.failure = "no exact solution";
    return rep;
  }
  const Expr& u = *prob.exact;
  const int k = prob.k;
  MultiIndex top;
  top.t = prob.n;
  top.x.assign(static_cast<std::size_t>(k), 0);
  const Expr lhs = diff(u, top, k);
  std::vector<std::pair<std::string, Expr>> args;
  for (const auto& mi : prob.arguments()) args.emplace_back(placeholder_name(mi, k), diff(u, mi, k));
  std::vector<Expr> ic;
  for (int i = 1; i <= prob.n; ++i) {
    MultiIndex mi;
    mi.t = i - 1;
    mi.x.assign(static_cast<std::size_t>(k), 0);
    ic.push_back(diff(u, mi, k));
  }
  const auto space = spatial_names(k);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  try {
    for (int s = 0; s < samples; ++s) {
      Env env;
      env["t"] = prob.domain.t_lo + (prob.domain.t_hi - prob.domain.t_lo) * unit(rng);
      for (int i = 0; i < k; ++i) {
        auto ui = static_cast<std::size_t>(i);
        env[space[ui]] = prob.domain.lo[ui] + (prob.domain.hi[ui] - prob.domain.lo[ui]) * unit(rng);
      }
      Env full = env;
      for (const auto& [name, e] : args) full[name] = eval(e, env);
      rep.pde_residual = std::max(rep.pde_residual, std::fabs(eval(lhs, env) - eval(prob.F, full)));
      env["t"] = 0.0;
      for (int i = 0; i < prob.n; ++i) {
        const double d = eval(ic[static_cast<std::size_t>(i)], env) - eval(prob.c[static_cast<std::size_t>(i)], env);
        rep.initial_residual = std::max(rep.initial_residual, std::fabs(d));
      }
    }
  } catch (const Error& e) {
    rep.failure = e.what();
    return rep;
  }
  rep.ok = rep.pde_residual <= tol && rep.initial_residual <= tol;
  if (!rep.ok) rep.failure = "residual exceeds tolerance";
  return rep;
}

}  // namespace picard
