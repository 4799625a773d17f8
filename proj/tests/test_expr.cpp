#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "picard/expr.hpp"
#include "picard/problems.hpp"

using namespace picard;

namespace {

std::set<std::string> names(const Expr& e) { return free_vars(e); }

double at(const std::string& src, Env env, int k = 2) { return eval(parse(src, k), env); }

}  // namespace

TEST(Parse, HeatForcedHasExpectedPlaceholders) {
  const Expr e = parse("u_xx - u_yy - u + (1+t)*sinh(x+y)", 2);
  const auto ph = placeholders(e, 2);
  ASSERT_EQ(ph.size(), 3u);
  std::set<std::string> got;
  for (const auto& mi : ph) got.insert(placeholder_name(mi, 2));
  EXPECT_EQ(got, (std::set<std::string>{"u", "u_xx", "u_yy"}));
}

TEST(Parse, ZeroIsConstant) {
  const Expr e = parse("0", 2);
  EXPECT_TRUE(e.is_constant(0.0));
}

TEST(Parse, NonlinearWave) {
  const Expr e = parse("(15/2)*x*u_xx^2 + (15/2)*y*u_yy^2 + 2*x^2 + 2*y^2", 2);
  EXPECT_EQ(names(e), (std::set<std::string>{"u_xx", "u_yy", "x", "y"}));
  EXPECT_DOUBLE_EQ(eval(e, {{"x", 1}, {"y", 0}, {"u_xx", 2}, {"u_yy", 5}}), 7.5 * 4 + 2);
}

TEST(Parse, UnbalancedParenthesisReportsEndOfInput) {
  try {
    parse("sinh(x+y", 2);
    FAIL() << "expected a syntax error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::syntax);
    EXPECT_EQ(e.position(), 8u);
    EXPECT_NE(std::string(e.what()).find("end of input"), std::string::npos);
  }
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse("2 +", 1), ParseError);
  EXPECT_THROW(parse("x y", 1), ParseError);
  EXPECT_THROW(parse("", 1), ParseError);
  try {
    parse("foo + x", 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_identifier);
  }
  try {
    parse("z", 2);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_identifier);
  }
  try {
    parse("bogus(x)", 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_identifier);
  }
}

TEST(Parse, OrderLimits) {
  const OrderLimits heat{1, 2};
  EXPECT_NO_THROW(parse("u_xx + u_xy", 2, heat));
  try {
    parse("u_t", 2, heat);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::order_limit);
  }
  EXPECT_THROW(parse("u_xxx", 2, heat), ParseError);
  const OrderLimits wave{2, 2};
  EXPECT_NO_THROW(parse("u_t + u_tx", 2, wave));
  EXPECT_THROW(parse("u_tt", 2, wave), ParseError);
  // Without limits any placeholder over declared axes is accepted.
  EXPECT_NO_THROW(parse("u_tttxxx", 2));
}

TEST(Parse, PlaceholdersAreCanonicalized) {
  EXPECT_EQ(parse("u_yx", 2), parse("u_xy", 2));
  EXPECT_EQ(to_string(parse("u_xt", 2)), "u_tx");
  EXPECT_EQ(to_string(parse("u_x3x1", 3)), "u_xz");
  EXPECT_EQ(to_string(parse("u_x1x1 + x2", 2)), "u_xx + y");
  EXPECT_EQ(to_string(parse("u_x4x1", 4)), "u_x1x4");
}

TEST(Parse, ConstantsFoldOnlyLiteralSubtrees) {
  EXPECT_EQ(to_string(parse("(15/2)*x", 1)), "7.5*x");
  EXPECT_EQ(to_string(parse("x*1 + 0", 1)), "x*1 + 0");
  EXPECT_THROW(parse("1/0", 1), ParseError);
  EXPECT_THROW(parse("log(0)", 1), ParseError);
}

TEST(Parse, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(at("-x^2", {{"x", 3}}, 1), -9);
  EXPECT_DOUBLE_EQ(at("2^3^2", {}, 1), 512);
  EXPECT_DOUBLE_EQ(at("2^-1", {}, 1), 0.5);
  EXPECT_DOUBLE_EQ(at("8/2/2", {}, 1), 2);
  EXPECT_DOUBLE_EQ(at("1-2-3", {}, 1), -4);
  EXPECT_DOUBLE_EQ(at("-(x)*-(x)", {{"x", 3}}, 1), 9);
  EXPECT_DOUBLE_EQ(at("1.5e2 + .5", {}, 1), 150.5);
}

TEST(Eval, Examples) {
  EXPECT_EQ(at("sinh(x+y)", {{"x", 0}, {"y", 0}}), 0.0);
  EXPECT_DOUBLE_EQ(at("x^2*cosh(t)+y^2*sinh(t)", {{"x", 1}, {"y", 0}, {"t", 0}}), 1.0);
  EXPECT_DOUBLE_EQ(at("t^2*(x^2+y^2)+t^6*(x+y)", {{"t", 1}, {"x", 1}, {"y", 1}}), 4.0);
}

TEST(Eval, UnboundVariableIsAnError) {
  try {
    at("x + y", {{"x", 1}});
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unbound_variable);
  }
}

TEST(Eval, DomainErrors) {
  for (const char* src : {"log(x)", "log(x-1)", "x^(-1)", "sqrt(x-1)", "1/x", "(x-1)^0.5", "exp(1000+x)"}) {
    try {
      at(src, {{"x", 0}}, 1);
      FAIL() << src;
    } catch (const EvalError& e) {
      EXPECT_EQ(e.code(), ErrorCode::domain) << src;
    }
  }
  EXPECT_DOUBLE_EQ(at("(x-2)^3", {{"x", 0}}, 1), -8);
  EXPECT_DOUBLE_EQ(at("abs(x-2)", {{"x", 0}}, 1), 2);
}

TEST(Eval, Deterministic) {
  const Expr e = parse("sin(x)*exp(y) + cosh(x*y)^3 - log(2+x)/sqrt(1+y^2)", 2);
  const Env env{{"x", 0.3712}, {"y", -1.25}};
  const double a = eval(e, env);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(eval(e, env), a);
}

TEST(Eval, CompiledMatchesTreeWalk) {
  const Expr e = parse("sin(x)*exp(y) + cosh(x*y)^3 - log(2+x)/sqrt(1+y^2) + u_xx*u", 2);
  const std::vector<std::string> slots{"x", "y", "u", "u_xx"};
  const CompiledExpr<double> c(e, slots);
  const std::vector<double> vals{0.3712, -1.25, 2.0, -0.5};
  EXPECT_EQ(c(vals), eval(e, {{"x", 0.3712}, {"y", -1.25}, {"u", 2.0}, {"u_xx", -0.5}}));
  EXPECT_THROW(CompiledExpr<double>(e, std::vector<std::string>{"x", "y"}), EvalError);
}

TEST(Diff, Examples) {
  EXPECT_DOUBLE_EQ(eval(diff(parse("x^2", 1), "x"), {{"x", 3}}), 6);
  EXPECT_EQ(eval(diff(diff(parse("sinh(x+y)", 2), "x"), "x"), {{"x", 0}, {"y", 0}}), 0.0);
  const Expr u = parse("t*(x^2+y^2-z^2)+t^2/2*(x^2+y^2+z^2)", 3);
  const Expr ut = diff(u, "t");
  for (double x : {0.0, 0.5, 1.0}) {
    for (double z : {0.25, 2.0}) {
      EXPECT_DOUBLE_EQ(eval(ut, {{"t", 0}, {"x", x}, {"y", 0.7}, {"z", z}}), x * x + 0.49 - z * z);
    }
  }
}

TEST(Diff, RejectsPlaceholders) { EXPECT_THROW(diff(parse("u_xx + x", 1), "x"), Error); }

TEST(Diff, MultiIndexAppliesEveryAxis) {
  const Expr e = parse("x^3*y^2*exp(t)", 2);
  MultiIndex mi{1, {2, 1}};
  EXPECT_DOUBLE_EQ(eval(diff(e, mi, 2), {{"x", 2}, {"y", 3}, {"t", 0}}), 6 * 2 * 2 * 3);
}

TEST(FreeVars, Examples) {
  EXPECT_TRUE(free_vars(parse("0", 1)).empty());
  EXPECT_EQ(free_vars(parse("(1+t)*sinh(x+y)", 2)), (std::set<std::string>{"t", "x", "y"}));
  EXPECT_EQ(free_vars(parse("u_xx + u", 1)), (std::set<std::string>{"u", "u_xx"}));
}

TEST(Print, RoundTripBuiltinExpressions) {
  for (const auto& id : builtin_ids()) {
    const auto b = builtin(id);
    std::vector<std::string> sources{b.source.F, b.source.exact};
    if (!b.source.G.empty()) sources.push_back(b.source.G);
    if (!b.source.g.empty()) sources.push_back(b.source.g);
    for (const auto& c : b.source.c) sources.push_back(c);
    for (const auto& pi : b.printed_iterates) sources.push_back(pi.expr);
    for (const auto& s : sources) {
      const Expr e = parse(s, b.source.k);
      const std::string printed = to_string(e);
      EXPECT_EQ(parse(printed, b.source.k), e) << s << " -> " << printed;
    }
  }
}

TEST(Print, NegativesAndPowers) {
  for (const char* s : {"-x^2", "(-x)^2", "2^-x", "-(x+1)", "x - -3", "(-2)^x", "x^(y^2)", "(x^y)^2", "-(-x)",
                        "x/(y*t)", "x - (y - t)", "1e-300*x", "-0.5*x"}) {
    const Expr e = parse(s, 2);
    EXPECT_EQ(parse(to_string(e), 2), e) << s << " -> " << to_string(e);
  }
}

namespace {

// Random smooth expressions over x, y, t.
class Generator {
 public:
  explicit Generator(unsigned seed) : rng_(seed) {}

  std::string make(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
    switch (pick(rng_)) {
      case 0: return leaf_var();
      case 1: return constant();
      case 2: return "(" + make(depth - 1) + " + " + make(depth - 1) + ")";
      case 3: return "(" + make(depth - 1) + " - " + make(depth - 1) + ")";
      case 4: return "(" + make(depth - 1) + ")*(" + make(depth - 1) + ")";
      case 5: return "sin(" + make(depth - 1) + ")";
      case 6: return "cos(" + make(depth - 1) + ")";
      case 7: return "(" + make(depth - 1) + ")^" + std::to_string(1 + static_cast<int>(rng_() % 3));
      default: return "exp(" + constant() + "*sin(" + make(depth - 1) + "))";
    }
  }

 private:
  std::string leaf_var() {
    static const char* vars[] = {"x", "y", "t"};
    return vars[rng_() % 3];
  }
  std::string constant() {
    std::uniform_real_distribution<double> u(-2, 2);
    return "(" + format(u(rng_)) + ")";
  }
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }
  std::mt19937 rng_;
};

Env random_point(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return {{"x", u(rng)}, {"y", u(rng)}, {"t", u(rng)}};
}

}  // namespace

TEST(DiffProperty, Linearity) {
  Generator gen(7);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Expr a = parse(gen.make(3), 2);
    const Expr b = parse(gen.make(3), 2);
    const Expr sum = Expr::binary(Op::add, a, b);
    for (const char* v : {"x", "y", "t"}) {
      const Env p = random_point(rng);
      const double lhs = eval(diff(sum, v), p);
      const double rhs = eval(diff(a, v), p) + eval(diff(b, v), p);
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::fabs(rhs)));
    }
  }
}

TEST(DiffProperty, MatchesCentralDifferences) {
  Generator gen(3);
  std::mt19937 rng(5);
  const double h = 1e-5;
  for (int trial = 0; trial < 300; ++trial) {
    const Expr e = parse(gen.make(3), 2);
    for (const char* v : {"x", "y", "t"}) {
      Env p = random_point(rng);
      const double d = eval(diff(e, v), p);
      Env plus = p;
      Env minus = p;
      plus[v] += h;
      minus[v] -= h;
      const double fd = (eval(e, plus) - eval(e, minus)) / (2 * h);
      EXPECT_LE(std::fabs(d - fd), 1e-6) << to_string(e) << " d/d" << v;
    }
  }
}

TEST(DiffProperty, MixedPartialsCommute) {
  Generator gen(21);
  std::mt19937 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Expr e = parse(gen.make(3), 2);
    const Env p = random_point(rng);
    const double xy = eval(diff(diff(e, "x"), "y"), p);
    const double yx = eval(diff(diff(e, "y"), "x"), p);
    EXPECT_NEAR(xy, yx, 1e-10 * std::max(1.0, std::fabs(xy))) << to_string(e);
  }
}
