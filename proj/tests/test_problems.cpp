#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "picard/picard.hpp"
#include "picard/problems.hpp"

using namespace picard;

namespace {

GridPtr grid_for(const Problem& p, int n_t, int n_x) {
  return make_grid(p.domain, n_t, std::vector<int>(static_cast<std::size_t>(p.k), n_x));
}

}  // namespace

TEST(Builtins, Catalogue) {
  const auto& ids = builtin_ids();
  ASSERT_EQ(ids.size(), 4u);
  for (const auto& id : ids) {
    const BuiltinProblem b = builtin(id);
    EXPECT_EQ(b.id, id);
    EXPECT_EQ(b.source.name, id);
    EXPECT_EQ(b.source.t_lo, 0.0);
    EXPECT_EQ(b.source.t_hi, 0.5);
    EXPECT_EQ(b.source.R, 1.0);
    EXPECT_EQ(b.source.lo, std::vector<double>(static_cast<std::size_t>(b.source.k), 0.0));
    EXPECT_EQ(b.source.hi, std::vector<double>(static_cast<std::size_t>(b.source.k), 1.0));
    EXPECT_FALSE(b.printed_iterates.empty());
    const Problem p = b.problem(2);
    EXPECT_TRUE(p.exact.has_value());
    EXPECT_EQ(p.c.size(), static_cast<std::size_t>(p.n));
  }
  EXPECT_THROW(builtin("heat1d"), Error);
}

TEST(Builtins, OrdersAndSplits) {
  const Problem ex1 = builtin("heat2d_forced").problem();
  EXPECT_EQ(ex1.n, 1);
  EXPECT_EQ(ex1.k, 2);
  EXPECT_TRUE(ex1.has_split());
  const Problem ex2 = builtin("heat2d_varcoef").problem();
  EXPECT_FALSE(ex2.has_split());
  const Problem ex3 = builtin("wave2d_nonlinear").problem();
  EXPECT_EQ(ex3.n, 2);
  EXPECT_TRUE(ex3.has_split());
  const Problem ex4 = builtin("wave3d_varcoef").problem();
  EXPECT_EQ(ex4.k, 3);
  EXPECT_EQ(spatial_names(3), (std::vector<std::string>{"x", "y", "z"}));
}

TEST(VerifyExact, AllBuiltinsSolveTheirEquations) {
  for (const auto& id : builtin_ids()) {
    const auto rep = verify_exact(builtin(id).problem());
    EXPECT_TRUE(rep.ok) << id << ": " << rep.failure;
    EXPECT_LE(rep.pde_residual, 1e-12) << id;
    EXPECT_LE(rep.initial_residual, 1e-14) << id;
  }
}

TEST(VerifyExact, ZeroProblem) {
  ProblemSource s;
  s.name = "zero";
  s.n = 1;
  s.m = 2;
  s.k = 1;
  s.F = "u_xx";
  s.c = {"0"};
  s.lo = {0};
  s.hi = {1};
  s.exact = "0";
  const auto rep = verify_exact(build_problem(s));
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.pde_residual, 0.0);
  EXPECT_EQ(rep.initial_residual, 0.0);
}

TEST(VerifyExact, RejectsWrongSolutions) {
  // The roles of cosh and sinh exchanged: violates u(0) = y^2.
  ProblemSource s = builtin("heat2d_varcoef").source;
  s.exact = "y^2*sinh(t) + x^2*cosh(t)";
  const auto swapped = verify_exact(build_problem(s));
  EXPECT_FALSE(swapped.ok);
  EXPECT_GT(swapped.initial_residual, 0.1);

  s.exact = "y^2*cosh(t) + x^2*cosh(t)";
  EXPECT_FALSE(verify_exact(build_problem(s)).ok);

  s.exact.clear();
  EXPECT_FALSE(verify_exact(build_problem(s)).ok);
}

TEST(PrintedIterates, AreClosedFormIteratesOfT) {
  // u_p = T u_{p-1} iff d^n u_p / dt^n = F(u_{p-1}) and u_p carries the data c.
  for (const auto& id : builtin_ids()) {
    const BuiltinProblem b = builtin(id);
    const Problem p = b.problem();
    const int k = p.k;
    std::vector<Expr> iterates;
    iterates.push_back(p.has_split() ? Expr::constant(0) : u0_expression(p));
    for (const auto& pi : b.printed_iterates) iterates.push_back(parse(pi.expr, k));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MultiIndex top;
    top.t = p.n;
    top.x.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < b.printed_iterates.size(); ++i) {
      const int step = b.printed_iterates[i].p;
      const Expr& cur = iterates[i + 1];
      const Expr lhs = diff(cur, top, k);
      // No closed form of the split start here.
      if (step == 1 && p.has_split()) continue;
      const Expr prev = step == 1 ? u0_expression(p) : iterates[i];
      for (int s = 0; s < 16; ++s) {
        Env env;
        env["t"] = 0.5 * unit(rng);
        for (const auto& name : spatial_names(k)) env[name] = unit(rng);
        Env full = env;
        for (const auto& mi : p.arguments()) full[placeholder_name(mi, k)] = eval(diff(prev, mi, k), env);
        EXPECT_NEAR(eval(lhs, env), eval(p.F, full), 1e-10) << id << " p=" << step;
        Env zero = env;
        zero["t"] = 0;
        for (int j = 0; j < p.n; ++j) {
          MultiIndex mi;
          mi.t = j;
          mi.x.assign(static_cast<std::size_t>(k), 0);
          EXPECT_NEAR(eval(diff(cur, mi, k), zero), eval(p.c[static_cast<std::size_t>(j)], zero), 1e-12)
              << id << " p=" << step;
        }
      }
    }
  }
}

TEST(PrintedIterates, ReproducedNumerically) {
  struct Case {
    const char* id;
    int n_t;
    int n_x;
    double tol;
  };
  const Case cases[] = {
      {"heat2d_forced", 65, 33, 1e-6},
      {"heat2d_varcoef", 65, 33, 1e-6},
      {"wave2d_nonlinear", 65, 17, 1e-7},
      {"wave3d_varcoef", 65, 9, 1e-6},
  };
  for (const auto& c : cases) {
    const BuiltinProblem b = builtin(c.id);
    const Problem p = b.problem(2);
    const auto g = grid_for(p, c.n_t, c.n_x);
    IterateOptions opt;
    opt.p_max = b.printed_iterates.back().p;
    opt.tol = 1e-300;
    const auto res = iterate(p, g, opt);
    for (const auto& pi : b.printed_iterates) {
      ASSERT_LT(static_cast<std::size_t>(pi.p), res.history.size());
      const Field& u = *res.history[static_cast<std::size_t>(pi.p)].u;
      const Field ref = sample(parse(pi.expr, p.k), g);
      EXPECT_LE(static_cast<double>(sup_norm(u - ref)), c.tol) << c.id << " p=" << pi.p;
    }
  }
}
