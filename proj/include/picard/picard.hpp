#pragma once

// Initial value problems
//   d^n u / dt^n = F(t, x, u, derivatives of u),  d^{i-1}u/dt^{i-1}(0, x) = c_i(x),
// the integral operator
//   T u = u0 + int_0^t (t - xi)^{n-1}/(n-1)! F(xi, x, u, ...) dxi,
//   u0  = sum_i c_i(x) t^{i-1}/(i-1)!,
// and the successive approximations u_p = T u_{p-1}.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "picard/error.hpp"
#include "picard/expr.hpp"
#include "picard/mesh.hpp"
#include "picard/parallel.hpp"
#include "picard/quadrature.hpp"

namespace picard {

struct Problem {
  std::string name;
  int n = 1;
  int m = 0;
  int k = 1;
  Expr F = Expr::constant(0);
  std::optional<Expr> G;
  std::optional<Expr> g;
  std::vector<Expr> c;
  Domain domain;
  double R = 1.0;
  std::optional<Expr> exact;
  std::optional<double> L_override;
  std::optional<double> M_override;

  bool has_split() const { return G.has_value() && g.has_value(); }

  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> out{"t"};
    for (auto& s : spatial_names(k)) out.push_back(s);
    return out;
  }

  /// Placeholders of F in canonical order.
  std::vector<MultiIndex> arguments() const { return placeholders(F, k); }

  void validate() const;
};

namespace detail {

inline void require_vars(const Expr& e, const std::vector<std::string>& allowed, const std::string& what,
                         bool allow_placeholders) {
  for (const auto& v : free_vars(e)) {
    if (allow_placeholders && is_placeholder_name(v)) continue;
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      throw Error(ErrorCode::invalid_argument, what + " may not depend on '" + v + "'");
    }
  }
}

inline void check_limits(const Expr& e, int n, int m, int k, const std::string& what) {
  for (const auto& mi : placeholders(e, k)) {
    if (mi.t > n - 1 || mi.total() > m) {
      throw Error(ErrorCode::order_limit,
                  what + ": placeholder " + placeholder_name(mi, k) + " exceeds the order limits (n=" +
                      std::to_string(n) + ", m=" + std::to_string(m) + ")");
    }
  }
}

}  // namespace detail

inline void Problem::validate() const {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "time order n must be >= 1");
  if (m < 0) throw Error(ErrorCode::invalid_argument, "derivative order m must be >= 0");
  if (k < 1) throw Error(ErrorCode::invalid_argument, "spatial dimension k must be >= 1");
  if (domain.k != k) throw Error(ErrorCode::invalid_argument, "domain dimension differs from k");
  domain.validate();
  if (!(R > 0) || !std::isfinite(R)) throw Error(ErrorCode::invalid_argument, "ball radius R must be > 0");
  if (c.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::invalid_argument, "need exactly n initial functions c_1..c_n");
  }
  const auto coords = coordinate_names();
  const std::vector<std::string> space(coords.begin() + 1, coords.end());
  for (std::size_t i = 0; i < c.size(); ++i) {
    detail::require_vars(c[i], space, "c" + std::to_string(i + 1), false);
  }
  detail::require_vars(F, coords, "F", true);
  detail::check_limits(F, n, m, k, "F");
  if (exact) detail::require_vars(*exact, coords, "exact solution", false);
  if (G.has_value() != g.has_value()) throw Error(ErrorCode::invalid_argument, "split needs both G and g");
  if (L_override && !(*L_override >= 0)) throw Error(ErrorCode::invalid_argument, "L override must be >= 0");
  if (M_override && !(*M_override >= 0)) throw Error(ErrorCode::invalid_argument, "M override must be >= 0");
  if (!has_split()) return;
  detail::require_vars(*G, coords, "G", true);
  detail::check_limits(*G, n, m, k, "G");
  detail::require_vars(*g, coords, "g", false);

  std::vector<std::string> names = coords;
  for (const auto& mi : placeholders(F, k)) names.push_back(placeholder_name(mi, k));
  for (const auto& mi : placeholders(*G, k)) names.push_back(placeholder_name(mi, k));
  std::sort(names.begin() + static_cast<long>(coords.size()), names.end());
  names.erase(std::unique(names.begin() + static_cast<long>(coords.size()), names.end()), names.end());
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 64; ++trial) {
    Env env;
    env["t"] = domain.t_lo + (domain.t_hi - domain.t_lo) * unit(rng);
    for (int i = 0; i < k; ++i) {
      auto ui = static_cast<std::size_t>(i);
      env[space[ui]] = domain.lo[ui] + (domain.hi[ui] - domain.lo[ui]) * unit(rng);
    }
    for (std::size_t v = coords.size(); v < names.size(); ++v) env[names[v]] = 4 * unit(rng) - 2;
    const double f = eval(F, env);
    const double split = eval(*G, env) + eval(*g, env);
    if (std::fabs(f - split) > 1e-12 * std::max(1.0, std::fabs(f))) {
      throw Error(ErrorCode::invalid_argument, "F differs from G + g at a sample point");
    }
  }
}

/// Closed form of u0 = sum_i c_i t^{i-1}/(i-1)!.
inline Expr u0_expression(const Problem& prob) {
  Expr out = Expr::constant(0);
  double fact = 1;
  for (int i = 1; i <= prob.n; ++i) {
    if (i > 2) fact *= i - 1;
    const Expr& ci = prob.c.at(static_cast<std::size_t>(i - 1));
    Expr term = ci;
    if (i >= 2) {
      Expr power = i == 2 ? Expr::variable("t") : detail::pow(Expr::variable("t"), Expr::constant(i - 1));
      term = detail::mul(ci, power);
      if (fact != 1) term = detail::div(term, Expr::constant(fact));
    }
    out = detail::add(out, term);
  }
  return out;
}

inline Field build_u0(const Problem& prob, const GridPtr& grid) { return sample(u0_expression(prob), grid); }

/// u0 + kernel integral of the forcing g.
inline Field build_u0_bar(const Problem& prob, const GridPtr& grid) {
  if (!prob.has_split()) throw Error(ErrorCode::invalid_argument, "problem has no G + g split");
  return build_u0(prob, grid) + kernel_integral(sample(*prob.g, grid), prob.n);
}

/// Stencil radius of one finite-difference evaluation of F's arguments.
inline int stencil_radius(const Problem& prob) {
  int r = 0;
  for (const auto& mi : prob.arguments()) {
    for (int a : mi.x) r = std::max(r, (a + 1) / 2);
  }
  return r;
}

/// T on a fixed grid, with u0, the compiled F and the quadrature weights cached.
class PicardOperator {
 public:
  PicardOperator(const Problem& prob, GridPtr grid)
      : prob_(prob), grid_(std::move(grid)), args_(prob.arguments()), weights_(kernel_weights(*grid_, prob.n)),
        u0_(build_u0(prob, grid_)) {
    if (grid_->k() != prob.k) throw Error(ErrorCode::grid_mismatch, "grid dimension differs from problem");
    slots_ = prob.coordinate_names();
    for (const auto& mi : args_) slots_.push_back(placeholder_name(mi, prob.k));
    compiled_ = CompiledExpr<real>(prob.F, slots_);
  }

  const GridPtr& grid() const { return grid_; }
  const Field& u0() const { return u0_; }
  const KernelWeights& weights() const { return weights_; }

  /// Iteration start: u0 plus the integrated forcing when a split is given.
  Field start() const {
    if (!prob_.has_split()) return u0_;
    return u0_ + kernel_integral(sample(*prob_.g, grid_), weights_);
  }

  /// Pointwise values of F(t, x, u, derivatives of u).
  Field rhs(const Field& u) const {
    if (!same_grid(u, u0_)) throw Error(ErrorCode::grid_mismatch, "iterate is not on the operator grid");
    const Grid& g = *grid_;
    std::vector<std::vector<real>> derivs;
    derivs.reserve(args_.size());
    for (const auto& mi : args_) derivs.push_back(detail::difference(u.values(), g.extents(), mi, g, true));
    Field out(grid_);
    auto dst = out.mutable_values();
    const std::size_t S = g.spatial_size();
    const std::size_t nc = static_cast<std::size_t>(g.k()) + 1;
    parallel_for(dst.size(), [&](std::size_t begin, std::size_t end) {
      std::vector<real> env(slots_.size());
      std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
      for (std::size_t flat = begin; flat < end; ++flat) {
        const int j = static_cast<int>(flat / S);
        g.spatial_index(flat % S, idx);
        env[0] = g.t(j);
        for (int i = 0; i < g.k(); ++i) env[static_cast<std::size_t>(i) + 1] = g.x(i, idx[static_cast<std::size_t>(i)]);
        for (std::size_t a = 0; a < derivs.size(); ++a) env[nc + a] = derivs[a][flat];
        try {
          dst[flat] = compiled_(env);
        } catch (const EvalError& err) {
          throw EvalError(err.code(),
                          std::string(err.what()) + " while evaluating F at (" + detail::describe_node(g, j, idx) + ")");
        }
      }
    }, 256);
    return out;
  }

  Field apply(const Field& u) const {
    Field out = u0_ + kernel_integral(rhs(u), weights_);
    auto v = out.values();
    for (std::size_t flat = 0; flat < v.size(); ++flat) {
      if (!std::isfinite(v[flat])) {
        const Grid& g = *grid_;
        std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
        g.spatial_index(flat % g.spatial_size(), idx);
        throw EvalError(ErrorCode::domain, "non-finite iterate value at (" +
                                               detail::describe_node(g, static_cast<int>(flat / g.spatial_size()), idx) +
                                               ")");
      }
    }
    return out;
  }

 private:
  Problem prob_;
  GridPtr grid_;
  std::vector<MultiIndex> args_;
  KernelWeights weights_;
  Field u0_;
  std::vector<std::string> slots_;
  CompiledExpr<real> compiled_;
};

/// One application of T on the grid of `u_prev`.
inline Field apply_T(const Problem& prob, const Field& u_prev) {
  return PicardOperator(prob, u_prev.grid_ptr()).apply(u_prev);
}

enum class NormKind { sup, cn };

inline const char* to_string(NormKind k) { return k == NormKind::sup ? "sup" : "cN"; }

enum class StopReason { fixed_point, max_iterations, divergence };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::fixed_point: return "fixed_point";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::divergence: return "divergence";
  }
  return "unknown";
}

struct IterateOptions {
  int p_max = 10;
  double tol = 1e-8;
  NormKind norm = NormKind::sup;
  /// Extra spatial layers carried beyond the grid's ghost layers so that the
  /// stencils of p iterations never reach the reported nodes; nullopt picks
  /// p_max times the stencil radius.
  std::optional<int> halo;
  /// Keep every iterate in the history (otherwise only the last two fields).
  bool keep_fields = true;
};

struct IterationState {
  int p = 0;
  std::optional<Field> u;
  real increment_sup = 0;
  real increment_cn = 0;
  /// increment(p) / increment(p - 1) in the stopping norm, p >= 2.
  std::optional<real> measured_ratio;
  std::optional<real> error_vs_exact;
  /// ||u_p - u0|| in the C^N norm.
  real distance_from_u0 = 0;

  real increment(NormKind k) const { return k == NormKind::sup ? increment_sup : increment_cn; }
};

struct IterationResult {
  std::vector<IterationState> history;
  StopReason stop = StopReason::max_iterations;
  std::vector<std::string> warnings;
  std::string diagnostic;
  int halo = 0;
  int norm_order = 0;
  Field final_field;
  Field u0;
};

namespace detail {

/// Overwrites nodes within `depth` layers of the working-grid edge with `src`.
inline void reset_rim(Field& f, const Field& src, int depth) {
  if (depth <= 0) return;
  const Grid& g = f.grid();
  const std::size_t S = g.spatial_size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
  auto dst = f.mutable_values();
  for (std::size_t s = 0; s < S; ++s) {
    g.spatial_index(s, idx);
    bool rim = false;
    for (int i = 0; i < g.k(); ++i) {
      const auto v = static_cast<long>(idx[static_cast<std::size_t>(i)]);
      const auto e = static_cast<long>(g.extent(i + 1));
      if (v < depth || v >= e - depth) rim = true;
    }
    if (!rim) continue;
    for (int j = 0; j < g.n_t(); ++j) {
      const std::size_t flat = static_cast<std::size_t>(j) * S + s;
      dst[flat] = src[flat];
    }
  }
}

}  // namespace detail

/// Runs u_p = T u_{p-1} from the start field (u0, or u0 plus the integrated
/// forcing when split) until the increment falls below `tol`, `p_max` is
/// reached, or the increments diverge. Fields in the history live on `grid`.
inline IterationResult iterate(const Problem& prob, const GridPtr& grid, const IterateOptions& opt) {
  if (opt.p_max < 1) throw Error(ErrorCode::invalid_argument, "p_max must be >= 1");
  if (!(opt.tol > 0)) throw Error(ErrorCode::invalid_argument, "tol must be > 0");
  const int r = stencil_radius(prob);
  const int halo = opt.halo.value_or(opt.p_max * r);
  if (halo < 0) throw Error(ErrorCode::invalid_argument, "halo must be >= 0");
  const auto work = std::make_shared<const Grid>(grid->with_ghost(grid->ghost() + halo));
  const PicardOperator T(prob, work);
  const int N = std::max(prob.m, prob.n);

  IterationResult result;
  result.halo = halo;
  result.norm_order = N;
  auto to_user = [&](const Field& f) {
    Field out = restrict_ghost(f, grid->ghost());
    return Field(grid, std::vector<real>(out.values().begin(), out.values().end()));
  };
  const Field u0_user = to_user(T.u0());
  result.u0 = u0_user;
  std::optional<Field> exact;
  if (prob.exact) exact = sample(*prob.exact, grid);

  const Field start = T.start();
  Field current = start;
  Field current_user = to_user(current);

  auto record = [&](int p, const Field& user, const Field& prev_user) {
    IterationState st;
    st.p = p;
    const Field diff = user - prev_user;
    st.increment_sup = sup_norm(diff);
    st.increment_cn = cn_norm(diff, N);
    st.distance_from_u0 = cn_norm(user - u0_user, N);
    if (exact) st.error_vs_exact = sup_norm(user - *exact);
    if (opt.keep_fields) st.u = user;
    return st;
  };

  result.history.push_back(record(0, current_user, u0_user));
  int growth = 0;
  std::optional<int> first_escape;
  for (int p = 1; p <= opt.p_max; ++p) {
    Field next = T.apply(current);
    if (halo > 0) detail::reset_rim(next, start, std::min(halo, p * r));
    Field next_user = to_user(next);
    IterationState st = record(p, next_user, current_user);
    const IterationState& prev = result.history.back();
    if (p >= 2 && prev.increment(opt.norm) > 0) st.measured_ratio = st.increment(opt.norm) / prev.increment(opt.norm);
    if (p >= 2 && st.increment(opt.norm) > prev.increment(opt.norm)) {
      ++growth;
    } else {
      growth = 0;
    }
    if (st.distance_from_u0 > prob.R && !first_escape) first_escape = p;
    const real inc = st.increment(opt.norm);
    result.history.push_back(std::move(st));
    current = std::move(next);
    current_user = std::move(next_user);
    if (inc <= opt.tol) {
      result.stop = StopReason::fixed_point;
      break;
    }
    if (growth >= 3 && inc > 10 * prob.R) {
      result.stop = StopReason::divergence;
      result.diagnostic = "increments grew for 3 consecutive iterations and exceed 10*R; "
                          "try a shorter time interval such as [0, delta1]";
      break;
    }
  }
  int best = 1;
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    if (result.history[i].increment(opt.norm) < result.history[static_cast<std::size_t>(best)].increment(opt.norm)) {
      best = static_cast<int>(i);
    }
  }
  const real last_inc = result.history.back().increment(opt.norm);
  const real best_inc = result.history[static_cast<std::size_t>(best)].increment(opt.norm);
  if (result.stop != StopReason::fixed_point && best < result.history.back().p && last_inc > 10 * best_inc) {
    // Picard sums on a grid grow like (t |lambda_max|)^p / p! in the stiff modes.
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "increments bottomed out at %.3g (p=%d) and grew afterwards; the discrete operator amplifies "
                  "round-off and rim errors at this resolution and u_%d is the most settled iterate",
                  static_cast<double>(best_inc), best, best);
    result.warnings.push_back(buf);
  }
  if (first_escape) {
    result.warnings.push_back("iterate left the ball B_R(u0) in the C^" + std::to_string(N) + " norm at p=" +
                              std::to_string(*first_escape));
  }
  result.final_field = current_user;
  return result;
}

/// max over spatial nodes and i <= n of |d^{i-1}u/dt^{i-1}(0, x) - c_i(x)|,
/// with high-order one-sided (or centered, when available) time stencils.
inline real initial_condition_defect(const Problem& prob, const Field& u) {
  const Grid& g = u.grid();
  const int j0 = g.t_zero_index();
  real worst = 0;
  const std::size_t S = g.spatial_size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
  for (int i = 1; i <= prob.n; ++i) {
    const int width = std::min(g.n_t(), i + 6);
    const int first = std::clamp(j0 - width / 2, 0, g.n_t() - width);
    std::vector<real> nodes(static_cast<std::size_t>(width));
    for (int q = 0; q < width; ++q) nodes[static_cast<std::size_t>(q)] = g.t(first + q);
    const auto w = fd_weights(0, nodes, i - 1);
    const Field ci = sample(prob.c.at(static_cast<std::size_t>(i - 1)), u.grid_ptr());
    for (std::size_t s = 0; s < S; ++s) {
      g.spatial_index(s, idx);
      if (!g.is_interior(idx)) continue;
      real d = 0;
      for (int q = 0; q < width; ++q) d += w[static_cast<std::size_t>(q)] * u.at(first + q, s);
      worst = std::max(worst, std::fabs(d - ci.at(j0, s)));
    }
  }
  return worst;
}

}  // namespace picard
