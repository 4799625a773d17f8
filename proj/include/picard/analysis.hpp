#pragma once

// Constants of the local existence theory: the argument count K, the compact
// box around the derivatives of u0, the bounds M and L of F on that box, the
// existence interval delta, the contraction interval delta1, the contraction
// factor gamma and the a-priori error bound R gamma^p / (1 - gamma).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "picard/error.hpp"
#include "picard/expr.hpp"
#include "picard/mesh.hpp"
#include "picard/parallel.hpp"
#include "picard/picard.hpp"

namespace picard {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {
inline long long ipow(long long b, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}
inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace detail

/// Number of derivative arguments of F (ordered differentiation tuples).
inline long long compute_K(int k, int n, int m) {
  if (k < 1 || n < 1 || m < 0) throw Error(ErrorCode::invalid_argument, "compute_K needs k >= 1, n >= 1, m >= 0");
  if (m < n) return (detail::ipow(k + 1, m + 1) - 1) / k;
  const long long head = (detail::ipow(k + 1, n - 1) - 1) / k;
  const long long tail = k == 1 ? (m - n + 2) : (detail::ipow(k, m - n + 2) - 1) / (k - 1);
  return head + detail::ipow(k + 1, n - 1) * tail;
}

struct BoxInterval {
  MultiIndex index;
  double lo = 0;
  double hi = 0;
};

enum class BoxCenter { u0, start };

inline const char* to_string(BoxCenter c) { return c == BoxCenter::u0 ? "u0" : "start"; }

/// Multi-indices of the box: total order <= m and time order < n.
inline std::vector<MultiIndex> box_indices(const Problem& prob) {
  return multi_indices(prob.k, prob.m, prob.n - 1);
}

/// Intervals [min D u0 - R, max D u0 + R] over the non-ghost nodes of `grid`.
/// BoxCenter::u0 differentiates the closed form of u0; BoxCenter::start uses
/// finite differences of the sampled iteration start.
inline std::vector<BoxInterval> build_box(const Problem& prob, const GridPtr& grid,
                                          BoxCenter center = BoxCenter::u0) {
  const Grid& g = *grid;
  std::vector<BoxInterval> out;
  const Expr u0 = u0_expression(prob);
  std::optional<Field> start;
  if (center == BoxCenter::start) start = PicardOperator(prob, grid).start();
  const std::size_t S = g.spatial_size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
  std::vector<char> interior(S);
  for (std::size_t s = 0; s < S; ++s) {
    g.spatial_index(s, idx);
    interior[s] = g.is_interior(idx) ? 1 : 0;
  }
  for (const auto& mi : box_indices(prob)) {
    std::vector<real> values;
    if (start) {
      values = detail::difference(start->values(), g.extents(), mi, g, true);
    } else {
      const Field f = sample(diff(u0, mi, prob.k), grid);
      values.assign(f.values().begin(), f.values().end());
    }
    real lo = std::numeric_limits<real>::infinity();
    real hi = -std::numeric_limits<real>::infinity();
    for (int j = 0; j < g.n_t(); ++j) {
      for (std::size_t s = 0; s < S; ++s) {
        if (!interior[s]) continue;
        const real v = values[static_cast<std::size_t>(j) * S + s];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    out.push_back({mi, static_cast<double>(lo) - prob.R, static_cast<double>(hi) + prob.R});
  }
  return out;
}

struct Estimate {
  double raw = 0;
  double value = 0;
  bool overridden = false;
};

inline constexpr double kSafetyFactor = 1.1;
inline constexpr std::size_t kBatch = 1024;

namespace detail {

inline std::uint64_t batch_seed(std::uint64_t seed, std::uint64_t batch) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (batch + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// One full Latin-hypercube batch in [0,1)^dims, point-major.
inline std::vector<double> lhs_batch(std::uint64_t seed, std::uint64_t batch, std::size_t dims) {
  std::mt19937_64 rng(batch_seed(seed, batch));
  std::vector<double> pts(kBatch * dims);
  std::vector<std::size_t> perm(kBatch);
  for (std::size_t d = 0; d < dims; ++d) {
    for (std::size_t i = 0; i < kBatch; ++i) perm[i] = i;
    for (std::size_t i = kBatch - 1; i > 0; --i) {
      const std::size_t r = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(perm[i], perm[r]);
    }
    for (std::size_t i = 0; i < kBatch; ++i) {
      pts[i * dims + d] = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(kBatch);
    }
  }
  return pts;
}

/// Sampling layout: (t, x_1..x_k, arguments of F); ranges per coordinate.
struct SampleSpace {
  std::vector<std::string> slots;
  std::vector<double> lo;
  std::vector<double> hi;
  std::size_t n_coords = 0;
};

inline SampleSpace sample_space(const Problem& prob, const std::vector<BoxInterval>& box) {
  SampleSpace sp;
  sp.slots = prob.coordinate_names();
  sp.lo.push_back(prob.domain.t_lo);
  sp.hi.push_back(prob.domain.t_hi);
  for (int i = 0; i < prob.k; ++i) {
    sp.lo.push_back(prob.domain.lo[static_cast<std::size_t>(i)]);
    sp.hi.push_back(prob.domain.hi[static_cast<std::size_t>(i)]);
  }
  sp.n_coords = sp.slots.size();
  for (const auto& mi : prob.arguments()) {
    auto it = std::find_if(box.begin(), box.end(), [&](const BoxInterval& b) { return b.index == mi; });
    if (it == box.end()) {
      throw Error(ErrorCode::invalid_argument, "box has no interval for " + placeholder_name(mi, prob.k));
    }
    sp.slots.push_back(placeholder_name(mi, prob.k));
    sp.lo.push_back(it->lo);
    sp.hi.push_back(it->hi);
  }
  return sp;
}

/// Max over batches of `per_point(point, first_index)`; batches run in
/// parallel and each uses its own seed, so the result is thread-independent.
template <class PerBatch>
double batched_max(std::size_t samples, PerBatch&& per_batch) {
  const std::size_t batches = (samples + kBatch - 1) / kBatch;
  std::vector<double> best(batches, 0.0);
  parallel_for(batches, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t count = std::min(kBatch, samples - b * kBatch);
      best[b] = per_batch(b, count);
    }
  });
  double m = 0;
  for (double v : best) m = std::max(m, v);
  return m;
}

}  // namespace detail

/// max |F| over Latin-hypercube samples of J x box.
inline Estimate estimate_M(const Problem& prob, const std::vector<BoxInterval>& box, std::size_t samples,
                           std::uint64_t seed) {
  if (prob.M_override) return {*prob.M_override, *prob.M_override, true};
  if (samples == 0) throw Error(ErrorCode::invalid_argument, "sample count must be >= 1");
  const auto sp = detail::sample_space(prob, box);
  const CompiledExpr<double> F(prob.F, sp.slots);
  const std::size_t dims = sp.slots.size();
  const double raw = detail::batched_max(samples, [&](std::size_t b, std::size_t count) {
    const auto pts = detail::lhs_batch(seed, b, dims);
    std::vector<double> env(dims);
    double m = 0;
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t d = 0; d < dims; ++d) env[d] = sp.lo[d] + (sp.hi[d] - sp.lo[d]) * pts[i * dims + d];
      m = std::max(m, std::fabs(F(env)));
    }
    return m;
  });
  return {raw, kSafetyFactor * raw, false};
}

/// max |F(t,x,y) - F(t,x,z)| / sum |y_i - z_i| over sampled pairs that share
/// (t, x) and differ in the derivative arguments of F.
inline Estimate estimate_L(const Problem& prob, const std::vector<BoxInterval>& box, std::size_t samples,
                           std::uint64_t seed) {
  if (prob.L_override) return {*prob.L_override, *prob.L_override, true};
  if (samples == 0) throw Error(ErrorCode::invalid_argument, "sample count must be >= 1");
  const auto sp = detail::sample_space(prob, box);
  const std::size_t dims = sp.slots.size();
  const std::size_t nargs = dims - sp.n_coords;
  if (nargs == 0) return {0, 0, false};
  const CompiledExpr<double> F(prob.F, sp.slots);
  const std::size_t pdims = dims + nargs;
  const double raw = detail::batched_max(samples, [&](std::size_t b, std::size_t count) {
    const auto pts = detail::lhs_batch(seed ^ 0x4c495053ULL, b, pdims);
    std::vector<double> y(dims);
    std::vector<double> z(dims);
    double m = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double* p = &pts[i * pdims];
      for (std::size_t d = 0; d < dims; ++d) y[d] = sp.lo[d] + (sp.hi[d] - sp.lo[d]) * p[d];
      z = y;
      double denom = 0;
      for (std::size_t a = 0; a < nargs; ++a) {
        const std::size_t d = sp.n_coords + a;
        z[d] = sp.lo[d] + (sp.hi[d] - sp.lo[d]) * p[dims + a];
        denom += std::fabs(y[d] - z[d]);
      }
      if (!(denom > 0)) continue;
      m = std::max(m, std::fabs(F(y) - F(z)) / denom);
    }
    return m;
  });
  return {raw, kSafetyFactor * raw, false};
}

/// (R (n-1)! / M)^{1/n}; infinite when M = 0.
inline double compute_delta(double R, int n, double M) {
  if (!(R > 0)) throw Error(ErrorCode::invalid_argument, "R must be > 0");
  if (n < 1) throw Error(ErrorCode::invalid_argument, "n must be >= 1");
  if (M < 0) throw Error(ErrorCode::invalid_argument, "M must be >= 0");
  if (M == 0) return kInf;
  return std::pow(R * detail::factorial(n - 1) / M, 1.0 / n);
}

inline double compute_delta1(double delta, double R, int n, double M, double L) {
  const double fact = detail::factorial(n - 1);
  const double a = delta / 2;
  const double b = M > 0 ? std::pow(R * fact / (2 * M), 1.0 / n) : kInf;
  const double c = L > 0 ? std::pow(fact / (2 * L), 1.0 / n) : kInf;
  return std::min({a, b, c});
}

inline double compute_gamma(double L, double delta1, int n) {
  if (!std::isfinite(delta1)) {
    if (L == 0) return 0;
    throw Error(ErrorCode::invalid_argument, "gamma needs a finite delta1");
  }
  return L * std::pow(delta1, n) / detail::factorial(n - 1);
}

inline double error_bound(double R, double gamma, int p) {
  if (!(gamma >= 0) || gamma >= 1) {
    throw Error(ErrorCode::invalid_argument, "error bound requires 0 <= gamma < 1");
  }
  return R * std::pow(gamma, p) / (1 - gamma);
}

struct AnalysisOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 12345;
  BoxCenter box_center = BoxCenter::u0;
};

struct ConstantsReport {
  long long K = 0;
  std::vector<BoxInterval> box;
  Estimate M;
  Estimate L;
  double delta = 0;
  double delta1 = 0;
  /// gamma = L delta1^n / (n-1)! with the Theorem-1 delta1.
  double gamma = 0;
  /// gamma for the time interval the iteration actually runs on.
  double gamma_run = 0;
  double run_interval = 0;
  double R = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  BoxCenter box_center = BoxCenter::u0;
  /// sup-norm distance between the iteration start and u0.
  double start_distance = 0;
};

/// Everything above, with J taken from the problem's domain and `grid`
/// providing the sample nodes for the box.
inline ConstantsReport analyze(const Problem& prob, const GridPtr& grid, const AnalysisOptions& opt) {
  ConstantsReport rep;
  rep.K = compute_K(prob.k, prob.n, prob.m);
  rep.R = prob.R;
  rep.samples = opt.samples;
  rep.seed = opt.seed;
  rep.box_center = opt.box_center;
  rep.box = build_box(prob, grid, opt.box_center);
  rep.M = estimate_M(prob, rep.box, opt.samples, opt.seed);
  rep.L = estimate_L(prob, rep.box, opt.samples, opt.seed);
  rep.delta = compute_delta(prob.R, prob.n, rep.M.value);
  rep.delta1 = compute_delta1(rep.delta, prob.R, prob.n, rep.M.value, rep.L.value);
  rep.gamma = std::isfinite(rep.delta1) ? compute_gamma(rep.L.value, rep.delta1, prob.n) : 0.0;
  rep.run_interval = std::max(std::fabs(prob.domain.t_lo), std::fabs(prob.domain.t_hi));
  rep.gamma_run = compute_gamma(rep.L.value, rep.run_interval, prob.n);
  const PicardOperator T(prob, grid);
  rep.start_distance = static_cast<double>(sup_norm(T.start() - T.u0()));
  return rep;
}

}  // namespace picard
