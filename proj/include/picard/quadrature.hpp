#pragma once

// Kernel-weighted time integrals
//   I[f](t_j) = int_0^{t_j} (t_j - xi)^{n-1} / (n-1)! f(xi) dxi
// by product integration: on each interval [t_a, t_{a+1}] the integrand f is
// replaced by its cubic interpolant through t_{a-1}..t_{a+2} (window clamped
// to the grid) and the kernel is integrated exactly against the Lagrange
// basis. Exact for f polynomial of degree <= 3.

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "picard/error.hpp"
#include "picard/mesh.hpp"

namespace picard {

/// Row-sparse matrix W with I[f](t_j) = sum_i W(j, i) f(t_i).
class KernelWeights {
 public:
  static constexpr int kMaxOrder = 16;

  KernelWeights() = default;

  /// `times` must be increasing with times[zero] == 0.
  KernelWeights(const std::vector<real>& times, int zero, int n) : n_(n) {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "kernel order n must be >= 1");
    if (n > kMaxOrder) throw Error(ErrorCode::invalid_argument, "kernel order n is too large");
    const int nt = static_cast<int>(times.size());
    if (nt < 4) throw Error(ErrorCode::resolution, "kernel quadrature needs >= 4 time nodes");
    rows_.resize(static_cast<std::size_t>(nt));
    real inv_fact = 1;
    for (int i = 2; i < n; ++i) inv_fact /= i;
    for (int j = 0; j < nt; ++j) {
      Row& row = rows_[static_cast<std::size_t>(j)];
      if (j == zero) continue;
      const int a_lo = std::min(j, zero);
      const int a_hi = std::max(j, zero);
      const real sign = j > zero ? 1 : -1;
      row.begin = std::clamp(a_lo - 1, 0, nt - 4);
      const int end = std::min(nt, std::max(a_hi + 2, row.begin + 4));
      row.w.assign(static_cast<std::size_t>(end - row.begin), 0);
      const real tj = times[static_cast<std::size_t>(j)];
      for (int a = a_lo; a < a_hi; ++a) {
        const int s = std::clamp(a - 1, 0, nt - 4);
        std::array<real, 4> nodes{};
        for (int q = 0; q < 4; ++q) nodes[static_cast<std::size_t>(q)] = times[static_cast<std::size_t>(s + q)];
        const real lo = times[static_cast<std::size_t>(a)];
        const real hi = times[static_cast<std::size_t>(a + 1)];
        for (int q = 0; q < 4; ++q) {
          auto integrand = [&](real xi) {
            real basis = 1;
            for (int r = 0; r < 4; ++r) {
              if (r == q) continue;
              basis *= (xi - nodes[static_cast<std::size_t>(r)]) /
                       (nodes[static_cast<std::size_t>(q)] - nodes[static_cast<std::size_t>(r)]);
            }
            real kernel = inv_fact;
            for (int e = 1; e < n; ++e) kernel *= (tj - xi);
            return kernel * basis;
          };
          const real w = boost::math::quadrature::gauss<real, 10>::integrate(integrand, lo, hi);
          row.w[static_cast<std::size_t>(s + q - row.begin)] += sign * w;
        }
      }
    }
  }

  int order() const { return n_; }
  std::size_t size() const { return rows_.size(); }

  /// Row j applied to time samples f(i).
  template <class Sample>
  real apply_row(std::size_t j, Sample&& f) const {
    const Row& row = rows_[j];
    real acc = 0;
    for (std::size_t q = 0; q < row.w.size(); ++q) acc += row.w[q] * f(static_cast<std::size_t>(row.begin) + q);
    return acc;
  }

  real weight(std::size_t j, std::size_t i) const {
    const Row& row = rows_[j];
    if (static_cast<int>(i) < row.begin || i >= row.begin + row.w.size()) return 0;
    return row.w[i - static_cast<std::size_t>(row.begin)];
  }

 private:
  struct Row {
    int begin = 0;
    std::vector<real> w;
  };
  int n_ = 1;
  std::vector<Row> rows_;
};

inline KernelWeights kernel_weights(const Grid& g, int n) {
  std::vector<real> times(static_cast<std::size_t>(g.n_t()));
  for (int j = 0; j < g.n_t(); ++j) times[static_cast<std::size_t>(j)] = g.t(j);
  return KernelWeights(times, g.t_zero_index(), n);
}

/// Kernel integral of `f` at every node, reusing precomputed weights.
inline Field kernel_integral(const Field& f, const KernelWeights& W) {
  const Grid& g = f.grid();
  if (W.size() != static_cast<std::size_t>(g.n_t())) {
    throw Error(ErrorCode::grid_mismatch, "kernel weights were built for another time grid");
  }
  Field out(f.grid_ptr());
  auto dst = out.mutable_values();
  auto src = f.values();
  const std::size_t S = g.spatial_size();
  parallel_for(S, [&](std::size_t sb, std::size_t se) {
    for (std::size_t s = sb; s < se; ++s) {
      for (std::size_t j = 0; j < W.size(); ++j) {
        dst[j * S + s] = W.apply_row(j, [&](std::size_t i) { return src[i * S + s]; });
      }
    }
  }, 64);
  return out;
}

/// (t, x) -> int_0^t (t - xi)^{n-1}/(n-1)! f(xi, x) dxi on every node of f's grid.
inline Field kernel_integral(const Field& f, int n) { return kernel_integral(f, kernel_weights(f.grid(), n)); }

}  // namespace picard
