#pragma once

// Space-time tensor grids over J = [t_lo, t_hi] x prod_i [lo_i, hi_i], sampled
// fields and their finite-difference derivatives.
//
// Storage is time-major: value(j, i_1, ..., i_k) sits at
// j * spatial_size + ((i_1 * e_2 + i_2) * e_3 + ...), where e_i counts the
// nodes of axis i including `ghost` extension layers on both sides.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "picard/error.hpp"
#include "picard/expr.hpp"
#include "picard/parallel.hpp"

namespace picard {

/// Working precision of sampled fields and compiled evaluation.
using real = long double;

struct Domain {
  int k = 1;
  std::vector<double> lo;
  std::vector<double> hi;
  double t_lo = 0.0;
  double t_hi = 1.0;
  int ghost = 0;

  void validate() const {
    if (k < 1) throw Error(ErrorCode::invalid_argument, "spatial dimension must be >= 1");
    if (lo.size() != static_cast<std::size_t>(k) || hi.size() != static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::invalid_argument, "domain bounds must have k entries");
    }
    for (int i = 0; i < k; ++i) {
      if (!(lo[static_cast<std::size_t>(i)] < hi[static_cast<std::size_t>(i)])) {
        throw Error(ErrorCode::invalid_argument, "domain requires lo < hi on every axis");
      }
    }
    if (!(t_lo <= 0.0 && 0.0 <= t_hi && t_lo < t_hi)) {
      throw Error(ErrorCode::invalid_argument, "time interval must satisfy t_lo <= 0 <= t_hi, t_lo < t_hi");
    }
    if (ghost < 0) throw Error(ErrorCode::invalid_argument, "ghost layer count must be >= 0");
  }

  bool operator==(const Domain&) const = default;
};

class Grid {
 public:
  Grid(Domain domain, int n_t, std::vector<int> n_x)
      : domain_(std::move(domain)), n_t_(n_t), n_x_(std::move(n_x)) {
    domain_.validate();
    if (n_t_ < 5 || n_t_ % 2 == 0) {
      throw Error(ErrorCode::resolution, "time node count must be odd and >= 5");
    }
    if (n_x_.size() != static_cast<std::size_t>(domain_.k)) {
      throw Error(ErrorCode::invalid_argument, "need one node count per spatial axis");
    }
    for (int n : n_x_) {
      if (n < 5) throw Error(ErrorCode::resolution, "every spatial axis needs >= 5 nodes");
    }
    dt_ = (static_cast<real>(domain_.t_hi) - domain_.t_lo) / (n_t_ - 1);
    real zero = -static_cast<real>(domain_.t_lo) / dt_;
    t_zero_ = static_cast<int>(std::lround(static_cast<double>(zero)));
    if (std::fabs(static_cast<double>(zero - t_zero_)) > 1e-9) {
      throw Error(ErrorCode::invalid_argument, "t = 0 must coincide with a time node");
    }
    extents_.push_back(static_cast<std::size_t>(n_t_));
    for (int i = 0; i < domain_.k; ++i) {
      auto ui = static_cast<std::size_t>(i);
      h_.push_back((static_cast<real>(domain_.hi[ui]) - domain_.lo[ui]) / (n_x_[ui] - 1));
      extents_.push_back(static_cast<std::size_t>(n_x_[ui] + 2 * domain_.ghost));
    }
    spatial_size_ = 1;
    for (std::size_t a = 1; a < extents_.size(); ++a) spatial_size_ *= extents_[a];
  }

  const Domain& domain() const { return domain_; }
  int k() const { return domain_.k; }
  int ghost() const { return domain_.ghost; }
  int n_t() const { return n_t_; }
  /// Non-ghost node count along spatial axis i.
  int n_x(int i) const { return n_x_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& n_x() const { return n_x_; }

  /// Extents per storage axis: 0 is time, 1..k are the ghost-extended spatial axes.
  const std::vector<std::size_t>& extents() const { return extents_; }
  std::size_t extent(int axis) const { return extents_.at(static_cast<std::size_t>(axis)); }
  std::size_t spatial_size() const { return spatial_size_; }
  std::size_t size() const { return spatial_size_ * static_cast<std::size_t>(n_t_); }

  real dt() const { return dt_; }
  real h(int i) const { return h_.at(static_cast<std::size_t>(i)); }
  /// Spacing along storage axis `axis`.
  real spacing(int axis) const { return axis == 0 ? dt_ : h(axis - 1); }
  int t_zero_index() const { return t_zero_; }

  real t(int j) const { return static_cast<real>(j - t_zero_) * dt_; }
  /// Coordinate of ghost-extended index `idx` on spatial axis i.
  real x(int i, std::size_t idx) const {
    auto ui = static_cast<std::size_t>(i);
    return static_cast<real>(domain_.lo[ui]) +
           static_cast<real>(static_cast<long>(idx) - domain_.ghost) * h_[ui];
  }

  /// Storage axis for a variable name: "t" -> 0, spatial names and aliases -> 1..k.
  int axis(std::string_view name) const {
    if (name == "t") return 0;
    if (auto a = spatial_axis(name, domain_.k)) return *a + 1;
    throw Error(ErrorCode::invalid_argument, "axis '" + std::string(name) + "' is not in the grid");
  }

  Grid with_ghost(int ghost) const {
    Domain d = domain_;
    d.ghost = ghost;
    return Grid(std::move(d), n_t_, n_x_);
  }

  Grid with_time(double t_lo, double t_hi, int n_t) const {
    Domain d = domain_;
    d.t_lo = t_lo;
    d.t_hi = t_hi;
    return Grid(std::move(d), n_t, n_x_);
  }

  /// Decodes a spatial offset into per-axis ghost-extended indices.
  void spatial_index(std::size_t s, std::span<std::size_t> out) const {
    for (int a = domain_.k; a >= 1; --a) {
      std::size_t e = extents_[static_cast<std::size_t>(a)];
      out[static_cast<std::size_t>(a - 1)] = s % e;
      s /= e;
    }
  }

  bool is_interior(std::span<const std::size_t> idx) const {
    for (int i = 0; i < domain_.k; ++i) {
      auto v = static_cast<long>(idx[static_cast<std::size_t>(i)]);
      if (v < domain_.ghost || v >= domain_.ghost + n_x_[static_cast<std::size_t>(i)]) return false;
    }
    return true;
  }

  bool operator==(const Grid& other) const {
    return domain_ == other.domain_ && n_t_ == other.n_t_ && n_x_ == other.n_x_;
  }

 private:
  Domain domain_;
  int n_t_;
  std::vector<int> n_x_;
  real dt_ = 0;
  std::vector<real> h_;
  int t_zero_ = 0;
  std::vector<std::size_t> extents_;
  std::size_t spatial_size_ = 1;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(Domain domain, int n_t, std::vector<int> n_x) {
  return std::make_shared<const Grid>(std::move(domain), n_t, std::move(n_x));
}

/// Real-valued samples on every node of a grid, ghost layers included.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid, real fill = 0)
      : grid_(std::move(grid)), values_(grid_->size(), fill) {}
  Field(GridPtr grid, std::vector<real> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) {
      throw Error(ErrorCode::invalid_argument, "field value count does not match grid size");
    }
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const real> values() const { return values_; }
  std::span<real> mutable_values() { return values_; }
  real operator[](std::size_t i) const { return values_[i]; }

  /// Value at time index j and ghost-extended spatial offset s.
  real at(int j, std::size_t s) const {
    return values_[static_cast<std::size_t>(j) * grid_->spatial_size() + s];
  }

 private:
  GridPtr grid_;
  std::vector<real> values_;
};

inline bool same_grid(const Field& a, const Field& b) {
  return a.grid_ptr() == b.grid_ptr() || a.grid() == b.grid();
}

inline void require_same_grid(const Field& a, const Field& b) {
  if (!same_grid(a, b)) throw Error(ErrorCode::grid_mismatch, "fields live on different grids");
}

enum class FieldOp { add, sub, mul };

inline Field field_binop(const Field& a, const Field& b, FieldOp op) {
  require_same_grid(a, b);
  std::vector<real> out(a.size());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (op) {
      case FieldOp::add: out[i] = av[i] + bv[i]; break;
      case FieldOp::sub: out[i] = av[i] - bv[i]; break;
      case FieldOp::mul: out[i] = av[i] * bv[i]; break;
    }
  }
  return Field(a.grid_ptr(), std::move(out));
}

inline Field field_scale(const Field& a, real c) {
  std::vector<real> out(a.values().begin(), a.values().end());
  for (real& v : out) v *= c;
  return Field(a.grid_ptr(), std::move(out));
}

inline Field operator+(const Field& a, const Field& b) { return field_binop(a, b, FieldOp::add); }
inline Field operator-(const Field& a, const Field& b) { return field_binop(a, b, FieldOp::sub); }
inline Field operator*(real c, const Field& a) { return field_scale(a, c); }

namespace detail {

inline std::string describe_node(const Grid& g, int j, std::span<const std::size_t> idx) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "t=%.17g", static_cast<double>(g.t(j)));
  std::string out = buf;
  for (int i = 0; i < g.k(); ++i) {
    std::snprintf(buf, sizeof buf, ", %s=%.17g", spatial_name(i, g.k()).c_str(),
                  static_cast<double>(g.x(i, idx[static_cast<std::size_t>(i)])));
    out += buf;
  }
  return out;
}

}  // namespace detail

/// Pointwise evaluation of a closed-form expression on every node.
inline Field sample(const Expr& e, const GridPtr& grid) {
  const Grid& g = *grid;
  if (has_placeholders(e)) {
    throw Error(ErrorCode::invalid_argument, "cannot sample an expression with derivative placeholders");
  }
  std::vector<std::string> slots{"t"};
  for (const auto& n : spatial_names(g.k())) slots.push_back(n);
  const CompiledExpr<real> compiled(e, slots);
  Field out(grid);
  auto values = out.mutable_values();
  const std::size_t S = g.spatial_size();
  parallel_for(values.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<real> env(slots.size());
    std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
    for (std::size_t flat = begin; flat < end; ++flat) {
      int j = static_cast<int>(flat / S);
      g.spatial_index(flat % S, idx);
      env[0] = g.t(j);
      for (int i = 0; i < g.k(); ++i) env[static_cast<std::size_t>(i) + 1] = g.x(i, idx[static_cast<std::size_t>(i)]);
      try {
        values[flat] = compiled(env);
      } catch (const EvalError& err) {
        throw EvalError(err.code(), std::string(err.what()) + " at (" + detail::describe_node(g, j, idx) + ")");
      }
    }
  }, 256);
  return out;
}

namespace detail {

// Second-order stencils along one storage axis of a dense block with the given
// extents: central differences inside, one-sided second-order at both ends.
inline void difference_pass(std::span<const real> in, std::span<real> out,
                            std::span<const std::size_t> extents, std::size_t axis, int order,
                            real h) {
  const std::size_t n = extents[axis];
  if (n < 4) throw Error(ErrorCode::resolution, "too few nodes for a second-order stencil");
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < extents.size(); ++a) inner *= extents[a];
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= extents[a];
  const real inv = order == 1 ? 1 / (2 * h) : 1 / (h * h);
  parallel_for(outer, [&](std::size_t ob, std::size_t oe) {
    for (std::size_t o = ob; o < oe; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * n * inner + i;
        auto f = [&](std::size_t q) { return in[base + q * inner]; };
        auto put = [&](std::size_t q, real v) { out[base + q * inner] = v; };
        if (order == 1) {
          put(0, (-3 * f(0) + 4 * f(1) - f(2)) * inv);
          for (std::size_t q = 1; q + 1 < n; ++q) put(q, (f(q + 1) - f(q - 1)) * inv);
          put(n - 1, (3 * f(n - 1) - 4 * f(n - 2) + f(n - 3)) * inv);
        } else {
          put(0, (2 * f(0) - 5 * f(1) + 4 * f(2) - f(3)) * inv);
          for (std::size_t q = 1; q + 1 < n; ++q) put(q, (f(q - 1) - 2 * f(q) + f(q + 1)) * inv);
          put(n - 1, (2 * f(n - 1) - 5 * f(n - 2) + 4 * f(n - 3) - f(n - 4)) * inv);
        }
      }
    }
  }, 1);
}

/// Derivative of order `order` along `axis`; orders above two compose the
/// second- and first-order passes.
inline std::vector<real> difference(std::span<const real> in, std::span<const std::size_t> extents,
                                    std::size_t axis, int order, real h) {
  std::vector<real> cur(in.begin(), in.end());
  if (order == 0) return cur;
  std::vector<real> next(cur.size());
  int remaining = order;
  while (remaining > 0) {
    int step = remaining >= 2 ? 2 : 1;
    difference_pass(cur, next, extents, axis, step, h);
    std::swap(cur, next);
    remaining -= step;
  }
  return cur;
}

/// Applies the multi-index derivative to a dense block whose axes are
/// (time?, x_1, ..., x_k); `time_axis` is false for single time slices.
inline std::vector<real> difference(std::span<const real> in, std::span<const std::size_t> extents,
                                    const MultiIndex& mi, const Grid& g, bool time_axis) {
  std::vector<real> cur(in.begin(), in.end());
  const std::size_t offset = time_axis ? 1 : 0;
  if (mi.t > 0) {
    if (!time_axis) throw Error(ErrorCode::invalid_argument, "time derivative of a time slice");
    cur = difference(cur, extents, 0, mi.t, g.dt());
  }
  for (int i = 0; i < g.k(); ++i) {
    int ord = mi.x.at(static_cast<std::size_t>(i));
    if (ord > 0) cur = difference(cur, extents, offset + static_cast<std::size_t>(i), ord, g.h(i));
  }
  return cur;
}

}  // namespace detail

/// Finite-difference derivative of `order` along the named axis ("t", "x", ...).
inline Field fd_derivative(const Field& f, std::string_view axis, int order) {
  if (order < 0) throw Error(ErrorCode::invalid_argument, "derivative order must be >= 0");
  const Grid& g = f.grid();
  const int a = g.axis(axis);
  return Field(f.grid_ptr(), detail::difference(f.values(), g.extents(), static_cast<std::size_t>(a),
                                                order, g.spacing(a)));
}

/// Mixed derivative: t-order mi.t first, then each spatial axis.
inline Field fd_derivative(const Field& f, const MultiIndex& mi) {
  return Field(f.grid_ptr(), detail::difference(f.values(), f.grid().extents(), mi, f.grid(), true));
}

/// Max |v| over the non-ghost nodes of `g` (all time nodes).
inline real interior_max_abs(const Grid& g, std::span<const real> values) {
  real best = 0;
  const std::size_t S = g.spatial_size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
  std::vector<char> interior(S);
  for (std::size_t s = 0; s < S; ++s) {
    g.spatial_index(s, idx);
    interior[s] = g.is_interior(idx) ? 1 : 0;
  }
  for (int j = 0; j < g.n_t(); ++j) {
    const std::size_t base = static_cast<std::size_t>(j) * S;
    for (std::size_t s = 0; s < S; ++s) {
      if (interior[s]) best = std::max(best, std::fabs(values[base + s]));
    }
  }
  return best;
}

inline real sup_norm(const Field& f) { return interior_max_abs(f.grid(), f.values()); }

/// All multi-indices with total order <= max_total and t-order <= max_t,
/// ordered by total order, then u_t before u_x before u_y.
inline std::vector<MultiIndex> multi_indices(int k, int max_total, int max_t) {
  std::vector<MultiIndex> out;
  MultiIndex mi;
  mi.x.assign(static_cast<std::size_t>(k), 0);
  auto rec = [&](auto&& self, int axis, int budget) -> void {
    if (axis == k) {
      out.push_back(mi);
      return;
    }
    for (int a = 0; a <= budget; ++a) {
      mi.x[static_cast<std::size_t>(axis)] = a;
      self(self, axis + 1, budget - a);
    }
    mi.x[static_cast<std::size_t>(axis)] = 0;
  };
  for (int t = 0; t <= std::min(max_total, max_t); ++t) {
    mi.t = t;
    rec(rec, 0, max_total - t);
  }
  std::sort(out.begin(), out.end(), [](const MultiIndex& a, const MultiIndex& b) {
    if (a.total() != b.total()) return a.total() < b.total();
    if (a.t != b.t) return a.t > b.t;
    return a.x > b.x;
  });
  return out;
}

/// Discrete C^N norm: sum over multi-indices of total order <= N of the
/// max-abs finite-difference derivative over non-ghost nodes. `max_t_order`
/// optionally caps the time order.
inline real cn_norm(const Field& f, int N, std::optional<int> max_t_order = std::nullopt) {
  if (N < 0) throw Error(ErrorCode::invalid_argument, "norm order must be >= 0");
  const Grid& g = f.grid();
  for (std::size_t a = 0; a < g.extents().size(); ++a) {
    if (g.extent(static_cast<int>(a)) < 5) {
      throw Error(ErrorCode::resolution, "C^N norm needs >= 5 nodes per axis");
    }
  }
  real total = 0;
  for (const auto& mi : multi_indices(g.k(), N, max_t_order.value_or(N))) {
    total += interior_max_abs(g, detail::difference(f.values(), g.extents(), mi, g, true));
  }
  return total;
}

/// Copies `f` onto the same grid with fewer ghost layers.
inline Field restrict_ghost(const Field& f, int ghost) {
  const Grid& g = f.grid();
  if (ghost > g.ghost() || ghost < 0) {
    throw Error(ErrorCode::invalid_argument, "can only drop ghost layers");
  }
  auto target = std::make_shared<const Grid>(g.with_ghost(ghost));
  Field out(target);
  auto dst = out.mutable_values();
  const std::size_t shift = static_cast<std::size_t>(g.ghost() - ghost);
  const std::size_t S = target->spatial_size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
  for (std::size_t s = 0; s < S; ++s) {
    target->spatial_index(s, idx);
    std::size_t src = 0;
    for (int a = 1; a <= g.k(); ++a) {
      src = src * g.extent(a) + idx[static_cast<std::size_t>(a - 1)] + shift;
    }
    for (int j = 0; j < g.n_t(); ++j) {
      dst[static_cast<std::size_t>(j) * S + s] = f.at(j, src);
    }
  }
  return out;
}

/// Finite-difference weights for the `order`-th derivative at x0 from values
/// at `nodes` (Fornberg's recursion).
inline std::vector<real> fd_weights(real x0, std::span<const real> nodes, int order) {
  const std::size_t n = nodes.size();
  const auto m = static_cast<std::size_t>(order);
  if (n <= m) throw Error(ErrorCode::resolution, "not enough nodes for the requested derivative");
  std::vector<std::vector<real>> c(n, std::vector<real>(m + 1, 0));
  real c1 = 1;
  real c4 = nodes[0] - x0;
  c[0][0] = 1;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    real c2 = 1;
    const real c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const real c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t q = mn; q >= 1; --q) {
          c[i][q] = c1 * (static_cast<real>(q) * c[i - 1][q - 1] - c5 * c[i - 1][q]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t q = mn; q >= 1; --q) {
        c[j][q] = (c4 * c[j][q] - static_cast<real>(q) * c[j][q - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<real> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

/// CSV dump with header `t,x1,...,xk,value`, rows ordered by time then
/// space, 17 significant digits.
inline void write_csv(const Field& f, std::ostream& os, bool include_ghost = false) {
  const Grid& g = f.grid();
  os << "t";
  for (int i = 0; i < g.k(); ++i) os << ",x" << (i + 1);
  os << ",value\n";
  const std::size_t S = g.spatial_size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.k()));
  char buf[40];
  for (int j = 0; j < g.n_t(); ++j) {
    for (std::size_t s = 0; s < S; ++s) {
      g.spatial_index(s, idx);
      if (!include_ghost && !g.is_interior(idx)) continue;
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(g.t(j)));
      os << buf;
      for (int i = 0; i < g.k(); ++i) {
        std::snprintf(buf, sizeof buf, ",%.17g", static_cast<double>(g.x(i, idx[static_cast<std::size_t>(i)])));
        os << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.17g\n", static_cast<double>(f.at(j, s)));
      os << buf;
    }
  }
}

}  // namespace picard
