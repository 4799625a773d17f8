#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "picard/analysis.hpp"
#include "picard/parallel.hpp"
#include "picard/problems.hpp"

using namespace picard;

namespace {

GridPtr default_grid(const Problem& p, int n_t = 65) {
  const int n_x = p.k == 3 ? 17 : 33;
  return make_grid(p.domain, n_t, std::vector<int>(static_cast<std::size_t>(p.k), n_x));
}

Problem simple(const std::string& F, const std::vector<std::string>& c, int n = 1, int m = 0, int k = 1) {
  ProblemSource s;
  s.name = "synthetic";
  s.n = n;
  s.m = m;
  s.k = k;
  s.F = F;
  s.c = c;
  s.lo.assign(static_cast<std::size_t>(k), 0.0);
  s.hi.assign(static_cast<std::size_t>(k), 1.0);
  return build_problem(s, 0);
}

const BoxInterval& find(const std::vector<BoxInterval>& box, const std::string& name, int k) {
  for (const auto& b : box) {
    if (placeholder_name(b.index, k) == name) return b;
  }
  throw std::runtime_error("no box interval " + name);
}

/// Differentiation sequences over {t, x_1..x_k} of length <= m in which t
/// appears only among the first n-1 positions.
long long brute_force_K(int k, int n, int m) {
  long long count = 0;
  std::vector<int> seq;
  std::function<void()> walk = [&] {
    ++count;
    if (static_cast<int>(seq.size()) == m) return;
    for (int letter = 0; letter <= k; ++letter) {
      if (letter == 0 && static_cast<int>(seq.size()) >= n - 1) continue;
      seq.push_back(letter);
      walk();
      seq.pop_back();
    }
  };
  walk();
  return count;
}

}  // namespace

TEST(ComputeK, Examples) {
  EXPECT_EQ(compute_K(2, 1, 2), 7);
  EXPECT_EQ(compute_K(2, 2, 2), 10);
  EXPECT_EQ(compute_K(3, 2, 2), 17);
  EXPECT_EQ(compute_K(1, 1, 0), 1);
  EXPECT_EQ(compute_K(1, 3, 1), 3);
  EXPECT_THROW(compute_K(0, 1, 1), Error);
  EXPECT_THROW(compute_K(1, 0, 1), Error);
  EXPECT_THROW(compute_K(1, 1, -1), Error);
}

TEST(ComputeK, MatchesEnumeration) {
  for (int k = 1; k <= 3; ++k) {
    for (int n = 1; n <= 3; ++n) {
      for (int m = 0; m <= 4; ++m) {
        EXPECT_EQ(compute_K(k, n, m), brute_force_K(k, n, m)) << "k=" << k << " n=" << n << " m=" << m;
      }
    }
  }
}

TEST(Box, VariableCoefficientHeat) {
  const Problem p = builtin("heat2d_varcoef").problem(0);
  const auto box = build_box(p, default_grid(p));
  EXPECT_EQ(box.size(), 6u);
  EXPECT_NEAR(find(box, "u", 2).lo, -1.0, 1e-12);
  EXPECT_NEAR(find(box, "u", 2).hi, 2.0, 1e-12);
  EXPECT_NEAR(find(box, "u_xx", 2).lo, -1.0, 1e-12);
  EXPECT_NEAR(find(box, "u_xx", 2).hi, 1.0, 1e-12);
  EXPECT_NEAR(find(box, "u_yy", 2).lo, 1.0, 1e-12);
  EXPECT_NEAR(find(box, "u_yy", 2).hi, 3.0, 1e-12);
}

TEST(Box, ZeroRadiusAroundZero) {
  Problem p;
  p.n = 1;
  p.m = 0;
  p.k = 1;
  p.F = parse("u", 1);
  p.c = {Expr::constant(0)};
  p.domain = Domain{1, {0}, {1}, 0, 0.5, 0};
  p.R = 0;
  const auto box = build_box(p, make_grid(p.domain, 9, {9}));
  ASSERT_EQ(box.size(), 1u);
  EXPECT_EQ(box[0].lo, 0.0);
  EXPECT_EQ(box[0].hi, 0.0);
}

TEST(Box, ForcedHeatCenters) {
  const Problem p = builtin("heat2d_forced").problem(2);
  const auto g = default_grid(p);
  const auto at_u0 = build_box(p, g, BoxCenter::u0);
  EXPECT_NEAR(find(at_u0, "u", 2).lo, -1.0, 1e-12);
  EXPECT_NEAR(find(at_u0, "u", 2).hi, std::sinh(2.0) + 1, 1e-12);
  const auto at_start = build_box(p, g, BoxCenter::start);
  EXPECT_NEAR(find(at_start, "u", 2).hi, 1.625 * std::sinh(2.0) + 1, 1e-9);
}

TEST(EstimateM, Oracles) {
  const Problem zero = simple("0*u", {"x"});
  const auto gz = make_grid(zero.domain, 9, {9});
  const auto bz = build_box(zero, gz);
  EXPECT_EQ(estimate_M(zero, bz, 4096, 1).raw, 0.0);

  // F = u on the box [-1, 2]: max |F| = 2.
  const Problem id = simple("u", {"x"});
  const auto bi = build_box(id, make_grid(id.domain, 9, {9}));
  EXPECT_NEAR(bi[0].lo, -1.0, 1e-12);
  EXPECT_NEAR(bi[0].hi, 2.0, 1e-12);
  const Estimate m = estimate_M(id, bi, 100000, 12345);
  EXPECT_LE(m.raw, 2.0);
  EXPECT_GE(m.raw, 1.99);
  EXPECT_DOUBLE_EQ(m.value, kSafetyFactor * m.raw);
  EXPECT_FALSE(m.overridden);
}

TEST(EstimateM, NonlinearWaveAgainstCornerEnumeration) {
  const Problem p = builtin("wave2d_nonlinear").problem(0);
  const auto box = build_box(p, default_grid(p));
  // |F| is maximized at a vertex of J x Omega x box: F is convex in each of
  // u_xx, u_yy and monotone in x, y. Enumerate the vertices directly.
  const BoxInterval& bxx = find(box, "u_xx", 2);
  const BoxInterval& byy = find(box, "u_yy", 2);
  double oracle = 0;
  for (double x : {0.0, 1.0}) {
    for (double y : {0.0, 1.0}) {
      for (double a : {bxx.lo, bxx.hi}) {
        for (double b : {byy.lo, byy.hi}) {
          oracle = std::max(oracle, std::fabs(7.5 * x * a * a + 7.5 * y * b * b + 2 * x * x + 2 * y * y));
        }
      }
    }
  }
  EXPECT_NEAR(oracle, 19.0, 1e-12);
  const Estimate m = estimate_M(p, box, 100000, 12345);
  EXPECT_LE(m.raw, oracle);
  EXPECT_GE(m.raw, 0.9 * oracle);
}

TEST(EstimateL, Oracles) {
  const Problem id = simple("u", {"x"});
  const auto bi = build_box(id, make_grid(id.domain, 9, {9}));
  EXPECT_NEAR(estimate_L(id, bi, 10000, 3).raw, 1.0, 1e-12);

  const Problem indep = simple("sin(x) + t", {"x"});
  const auto bz = build_box(indep, make_grid(indep.domain, 9, {9}));
  EXPECT_EQ(estimate_L(indep, bz, 10000, 3).raw, 0.0);

  const Problem forced = builtin("heat2d_forced").problem(2);
  const auto bf = build_box(forced, default_grid(forced));
  const Estimate lf = estimate_L(forced, bf, 100000, 12345);
  EXPECT_GE(lf.raw, 0.95);
  EXPECT_LE(lf.raw, 1.0 + 1e-12);

  const Problem heat = builtin("heat2d_varcoef").problem(0);
  const auto bh = build_box(heat, default_grid(heat));
  const Estimate lh = estimate_L(heat, bh, 100000, 12345);
  EXPECT_GE(lh.raw, 0.45);
  EXPECT_LE(lh.raw, 0.5 + 1e-12);
}

TEST(Estimates, MonotoneInSampleCount) {
  const Problem p = builtin("wave2d_nonlinear").problem(0);
  const auto box = build_box(p, default_grid(p));
  double prev_m = 0;
  double prev_l = 0;
  for (std::size_t n : {100u, 1000u, 5000u, 20000u, 100000u}) {
    const double m = estimate_M(p, box, n, 77).raw;
    const double l = estimate_L(p, box, n, 77).raw;
    EXPECT_GE(m, prev_m);
    EXPECT_GE(l, prev_l);
    prev_m = m;
    prev_l = l;
  }
}

TEST(Estimates, IndependentOfThreadCount) {
  const Problem p = builtin("heat2d_forced").problem(2);
  const auto box = build_box(p, default_grid(p));
  const int saved = thread_count();
  set_thread_count(1);
  const double m1 = estimate_M(p, box, 50000, 9).raw;
  const double l1 = estimate_L(p, box, 50000, 9).raw;
  set_thread_count(8);
  const double m8 = estimate_M(p, box, 50000, 9).raw;
  const double l8 = estimate_L(p, box, 50000, 9).raw;
  set_thread_count(saved);
  EXPECT_EQ(m1, m8);
  EXPECT_EQ(l1, l8);
}

TEST(Estimates, OverridesBypassSampling) {
  ProblemSource s = builtin("heat2d_forced").source;
  s.L_override = 1.0;
  s.M_override = 2.5 * std::sinh(2.0) + 3;
  const Problem p = build_problem(s, 2);
  const auto box = build_box(p, default_grid(p));
  const Estimate m = estimate_M(p, box, 0, 0);
  const Estimate l = estimate_L(p, box, 0, 0);
  EXPECT_TRUE(m.overridden);
  EXPECT_TRUE(l.overridden);
  EXPECT_EQ(m.value, *s.M_override);
  EXPECT_EQ(l.value, 1.0);
  EXPECT_THROW(estimate_M(simple("u", {"x"}), box, 0, 0), Error);
}

TEST(Constants, Examples) {
  EXPECT_DOUBLE_EQ(compute_delta(1, 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(compute_delta(1, 2, 1), 1.0);
  EXPECT_NEAR(compute_delta(1, 2, 2), std::sqrt(0.5), 1e-15);
  EXPECT_DOUBLE_EQ(compute_delta(2, 2, 1), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(compute_delta(3, 3, 1), std::cbrt(6.0));
  EXPECT_EQ(compute_delta(1, 1, 0), kInf);
  EXPECT_THROW(compute_delta(0, 1, 1), Error);
  EXPECT_THROW(compute_delta(1, 0, 1), Error);
  EXPECT_THROW(compute_delta(1, 1, -1), Error);

  EXPECT_DOUBLE_EQ(compute_delta1(0.5, 1, 1, 2, 1), 0.25);
  EXPECT_DOUBLE_EQ(compute_delta1(10, 1, 1, 0.01, 4), 0.125);
  EXPECT_EQ(compute_delta1(kInf, 1, 2, 0, 0), kInf);
  EXPECT_NEAR(compute_delta1(std::sqrt(0.5), 1, 2, 2, 1), std::sqrt(0.5) / 2, 1e-15);
  EXPECT_NEAR(compute_gamma(1, std::sqrt(0.5) / 2, 2), 0.125, 1e-15);
  EXPECT_EQ(compute_gamma(0, 0.3, 1), 0.0);
  EXPECT_DOUBLE_EQ(compute_gamma(1, 0.25, 1), 0.25);
  EXPECT_DOUBLE_EQ(compute_gamma(2, 0.5, 2), 0.5);
  EXPECT_EQ(compute_gamma(0, kInf, 2), 0.0);
  EXPECT_THROW(compute_gamma(1, kInf, 1), Error);

  EXPECT_DOUBLE_EQ(error_bound(1, 0.25, 2), 0.0625 / 0.75);
  EXPECT_DOUBLE_EQ(error_bound(2, 0.5, 0), 4.0);
  EXPECT_DOUBLE_EQ(error_bound(1, 0.5, 3), 0.25);
  EXPECT_DOUBLE_EQ(error_bound(2, 0.25, 2), 1.0 / 6);
  EXPECT_THROW(error_bound(1, 1.0, 2), Error);
  EXPECT_THROW(error_bound(1, -0.1, 2), Error);
}

TEST(Constants, DeltaScalesWithRadius) {
  for (int n = 1; n <= 4; ++n) {
    const double d1 = compute_delta(1, n, 3.7);
    const double d2 = compute_delta(2, n, 3.7);
    EXPECT_NEAR(d2 / d1, std::pow(2.0, 1.0 / n), 1e-14);
  }
}

TEST(Constants, GammaAtMostHalfAndBoundDecreasing) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pos(0.01, 50.0);
  std::uniform_int_distribution<int> order(1, 5);
  for (int trial = 0; trial < 500; ++trial) {
    const double R = pos(rng);
    const double M = pos(rng);
    const double L = pos(rng);
    const int n = order(rng);
    const double delta = compute_delta(R, n, M);
    const double d1 = compute_delta1(delta, R, n, M, L);
    EXPECT_LE(d1, delta / 2);
    const double g = compute_gamma(L, d1, n);
    EXPECT_LE(g, 0.5 + 1e-12);
    EXPECT_GT(g, 0);
    double prev = error_bound(R, g, 0);
    for (int p = 1; p <= 10; ++p) {
      const double b = error_bound(R, g, p);
      EXPECT_LT(b, prev);
      prev = b;
    }
  }
}

TEST(Analyze, ForcedHeatReport) {
  const Problem p = builtin("heat2d_forced").problem(2);
  const auto rep = analyze(p, default_grid(p), AnalysisOptions{});
  EXPECT_EQ(rep.K, 7);
  EXPECT_EQ(rep.box.size(), 6u);
  EXPECT_EQ(rep.samples, 100000u);
  EXPECT_EQ(rep.seed, 12345u);
  EXPECT_DOUBLE_EQ(rep.delta, compute_delta(1, 1, rep.M.value));
  EXPECT_DOUBLE_EQ(rep.delta1, compute_delta1(rep.delta, 1, 1, rep.M.value, rep.L.value));
  EXPECT_DOUBLE_EQ(rep.gamma, compute_gamma(rep.L.value, rep.delta1, 1));
  EXPECT_LE(rep.gamma, 0.5);
  EXPECT_DOUBLE_EQ(rep.run_interval, 0.5);
  EXPECT_DOUBLE_EQ(rep.gamma_run, rep.L.value * 0.5);
  EXPECT_EQ(rep.start_distance > 0, true);
}
