#pragma once

// Closed-form expressions over t, the spatial coordinates and derivative
// placeholders of the unknown u (u, u_t, u_xx, u_txy, ...).
//
// Grammar:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := '-' unary | power
//   power := base ('^' unary)?
//   base  := number | ident '(' expr ')' | ident | '(' expr ')'
//
// Spatial variables are x, y, z when k <= 3 (x1, x2, x3 are accepted as
// aliases) and x1..xk otherwise. A placeholder is `u` or `u_` followed by one
// token per differentiation; tokens are stored in canonical order, t first.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "picard/error.hpp"

namespace picard {

/// Partial derivative multi-index: `t` differentiations in time, `x[i]` along
/// spatial axis i.
struct MultiIndex {
  int t = 0;
  std::vector<int> x;

  int spatial_order() const {
    int s = 0;
    for (int a : x) s += a;
    return s;
  }
  int total() const { return t + spatial_order(); }

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;
};

/// Bounds imposed on placeholders: time order below `n`, total order at most
/// `m`.
struct OrderLimits {
  int n = 1;
  int m = 0;
};

inline std::string spatial_name(int axis, int k) {
  static constexpr std::array<const char*, 3> letters{"x", "y", "z"};
  if (k <= 3) return letters.at(static_cast<std::size_t>(axis));
  return "x" + std::to_string(axis + 1);
}

inline std::vector<std::string> spatial_names(int k) {
  std::vector<std::string> names;
  for (int i = 0; i < k; ++i) names.push_back(spatial_name(i, k));
  return names;
}

/// Maps a spatial identifier (including aliases) to its axis.
inline std::optional<int> spatial_axis(std::string_view name, int k) {
  if (k <= 3 && name.size() == 1) {
    int axis = name[0] == 'x' ? 0 : name[0] == 'y' ? 1 : name[0] == 'z' ? 2 : -1;
    if (axis >= 0 && axis < k) return axis;
    return std::nullopt;
  }
  if (name.size() >= 2 && name[0] == 'x') {
    int idx = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
    if (ec == std::errc() && ptr == name.data() + name.size() && idx >= 1 && idx <= k &&
        name[1] != '0') {
      return idx - 1;
    }
  }
  return std::nullopt;
}

inline bool is_placeholder_name(std::string_view name) {
  return name == "u" || name.starts_with("u_");
}

/// Decodes `u`, `u_xy`, `u_tx1x2`, ... into a multi-index. Returns nullopt if
/// the suffix is not a sequence of valid differentiation tokens.
inline std::optional<MultiIndex> parse_placeholder(std::string_view name, int k) {
  if (!is_placeholder_name(name)) return std::nullopt;
  MultiIndex mi;
  mi.x.assign(static_cast<std::size_t>(k), 0);
  if (name == "u") return mi;
  std::string_view rest = name.substr(2);
  if (rest.empty()) return std::nullopt;
  while (!rest.empty()) {
    if (rest[0] == 't') {
      ++mi.t;
      rest.remove_prefix(1);
      continue;
    }
    std::size_t len = 1;
    if (rest[0] == 'x') {
      while (len < rest.size() && rest[len] >= '0' && rest[len] <= '9') ++len;
    }
    auto axis = spatial_axis(rest.substr(0, len), k);
    if (!axis) return std::nullopt;
    ++mi.x[static_cast<std::size_t>(*axis)];
    rest.remove_prefix(len);
  }
  return mi;
}

inline std::string placeholder_name(const MultiIndex& mi, int k) {
  if (mi.total() == 0) return "u";
  std::string name = "u_";
  name.append(static_cast<std::size_t>(mi.t), 't');
  for (int i = 0; i < k; ++i) {
    for (int r = 0; r < mi.x.at(static_cast<std::size_t>(i)); ++r) name += spatial_name(i, k);
  }
  return name;
}

enum class Func { neg, sin, cos, sinh, cosh, exp, log, sqrt, abs };
enum class Op { add, sub, mul, div, pow };

inline const char* func_name(Func f) {
  switch (f) {
    case Func::neg: return "-";
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::sinh: return "sinh";
    case Func::cosh: return "cosh";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
    case Func::abs: return "abs";
  }
  return "?";
}

inline std::optional<Func> func_from_name(std::string_view name) {
  static constexpr std::array<std::pair<std::string_view, Func>, 8> table{{
      {"sin", Func::sin},
      {"cos", Func::cos},
      {"sinh", Func::sinh},
      {"cosh", Func::cosh},
      {"exp", Func::exp},
      {"log", Func::log},
      {"sqrt", Func::sqrt},
      {"abs", Func::abs},
  }};
  for (const auto& [n, f] : table) {
    if (n == name) return f;
  }
  return std::nullopt;
}

/// Immutable expression tree. Copies share structure.
class Expr {
 public:
  enum class Kind { constant, variable, unary, binary };

  Expr() : node_(std::make_shared<const Node>(Node{})) {}

  static Expr constant(double value) {
    Node n;
    n.value = value;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
  static Expr variable(std::string name) {
    Node n;
    n.kind = Kind::variable;
    n.name = std::move(name);
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
  static Expr unary(Func f, const Expr& arg) {
    Node n;
    n.kind = Kind::unary;
    n.func = f;
    n.a = arg.node_;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
  static Expr binary(Op op, const Expr& lhs, const Expr& rhs) {
    Node n;
    n.kind = Kind::binary;
    n.op = op;
    n.a = lhs.node_;
    n.b = rhs.node_;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }

  Kind kind() const { return node_->kind; }
  double value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  Func func() const { return node_->func; }
  Op op() const { return node_->op; }
  Expr arg() const { return Expr(node_->a); }
  Expr lhs() const { return Expr(node_->a); }
  Expr rhs() const { return Expr(node_->b); }

  bool is_constant() const { return kind() == Kind::constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case Kind::constant: return a.value() == b.value();
      case Kind::variable: return a.name() == b.name();
      case Kind::unary: return a.func() == b.func() && a.arg() == b.arg();
      case Kind::binary: return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
    }
    return false;
  }

 private:
  struct Node {
    Kind kind = Kind::constant;
    double value = 0.0;
    std::string name;
    Func func = Func::neg;
    Op op = Op::add;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

using Env = std::map<std::string, double, std::less<>>;

namespace detail {

inline bool is_integral(long double v) { return std::nearbyint(v) == v; }

template <class Real>
Real checked(Real r, const char* what) {
  if (!std::isfinite(r)) {
    throw EvalError(ErrorCode::domain, std::string("non-finite result in ") + what);
  }
  return r;
}

template <class Real>
Real apply_func(Func f, Real v) {
  using std::abs, std::cos, std::cosh, std::exp, std::log, std::sin, std::sinh, std::sqrt;
  switch (f) {
    case Func::neg: return -v;
    case Func::sin: return checked(sin(v), "sin");
    case Func::cos: return checked(cos(v), "cos");
    case Func::sinh: return checked(sinh(v), "sinh");
    case Func::cosh: return checked(cosh(v), "cosh");
    case Func::exp: return checked(exp(v), "exp");
    case Func::log:
      if (!(v > 0)) throw EvalError(ErrorCode::domain, "log of non-positive value");
      return log(v);
    case Func::sqrt:
      if (v < 0) throw EvalError(ErrorCode::domain, "sqrt of negative value");
      return sqrt(v);
    case Func::abs: return abs(v);
  }
  return v;
}

template <class Real>
Real apply_op(Op op, Real a, Real b) {
  switch (op) {
    case Op::add: return checked(a + b, "+");
    case Op::sub: return checked(a - b, "-");
    case Op::mul: return checked(a * b, "*");
    case Op::div:
      if (b == 0) throw EvalError(ErrorCode::domain, "division by zero");
      return checked(a / b, "/");
    case Op::pow:
      if (a == 0 && b < 0) throw EvalError(ErrorCode::domain, "zero raised to a negative power");
      if (a < 0 && !is_integral(b)) {
        throw EvalError(ErrorCode::domain, "negative base with non-integer exponent");
      }
      return checked(static_cast<Real>(std::pow(a, b)), "^");
  }
  return a;
}

inline Expr fold_unary(Func f, const Expr& a) {
  if (a.is_constant()) return Expr::constant(apply_func<double>(f, a.value()));
  return Expr::unary(f, a);
}

inline Expr fold_binary(Op op, const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    return Expr::constant(apply_op<double>(op, a.value(), b.value()));
  }
  return Expr::binary(op, a, b);
}

class Parser {
 public:
  Parser(std::string_view src, int k, std::optional<OrderLimits> limits)
      : src_(src), k_(k), limits_(limits) {}

  Expr parse() {
    skip_ws();
    Expr e;
    try {
      e = parse_expr();
    } catch (const ParseError&) {
      throw;
    } catch (const EvalError& err) {
      // constant folding of a literal subtree failed
      throw ParseError(ErrorCode::domain, pos_, err.what());
    }
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ErrorCode code = ErrorCode::syntax) const {
    throw ParseError(code, pos_, msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (accept(c)) return;
    skip_ws();
    if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but found end of input");
    fail(std::string("expected '") + c + "' but found '" + src_[pos_] + "'");
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = fold_binary(Op::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = fold_binary(Op::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = fold_binary(Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = fold_binary(Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return fold_unary(Func::neg, parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_base();
    if (accept('^')) {
      return fold_binary(Op::pow, base, parse_unary());
    }
    return base;
  }

  Expr parse_base() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (c >= 'a' && c <= 'z') return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && ((src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::constant(value);
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                                  (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_')) {
      ++pos_;
    }
    std::string_view ident = src_.substr(start, pos_ - start);
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      auto f = func_from_name(ident);
      if (!f) {
        pos_ = start;
        fail("unknown function '" + std::string(ident) + "'", ErrorCode::unknown_identifier);
      }
      ++pos_;
      Expr arg = parse_expr();
      expect(')');
      return fold_unary(*f, arg);
    }
    if (ident == "t") return Expr::variable("t");
    if (auto axis = spatial_axis(ident, k_)) return Expr::variable(spatial_name(*axis, k_));
    if (is_placeholder_name(ident)) {
      auto mi = parse_placeholder(ident, k_);
      if (!mi) {
        pos_ = start;
        fail("malformed derivative placeholder '" + std::string(ident) + "'",
             ErrorCode::unknown_identifier);
      }
      if (limits_ && (mi->t > limits_->n - 1 || mi->total() > limits_->m)) {
        pos_ = start;
        fail("derivative placeholder '" + std::string(ident) + "' exceeds order limits (n=" +
                 std::to_string(limits_->n) + ", m=" + std::to_string(limits_->m) + ")",
             ErrorCode::order_limit);
      }
      return Expr::variable(placeholder_name(*mi, k_));
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(ident) + "'", ErrorCode::unknown_identifier);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int k_;
  std::optional<OrderLimits> limits_;
};

}  // namespace detail

/// Parses `source` for a problem with `k` spatial dimensions. When `limits`
/// is given, placeholders must satisfy time order < n and total order <= m.
inline Expr parse(std::string_view source, int k, std::optional<OrderLimits> limits = std::nullopt) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "spatial dimension must be >= 1");
  return detail::Parser(source, k, limits).parse();
}

namespace detail {

template <class Real, class Lookup>
Real evaluate(const Expr& e, const Lookup& lookup) {
  switch (e.kind()) {
    case Expr::Kind::constant: return static_cast<Real>(e.value());
    case Expr::Kind::variable: return lookup(e.name());
    case Expr::Kind::unary: return apply_func<Real>(e.func(), evaluate<Real>(e.arg(), lookup));
    case Expr::Kind::binary:
      return apply_op<Real>(e.op(), evaluate<Real>(e.lhs(), lookup), evaluate<Real>(e.rhs(), lookup));
  }
  return Real{};
}

}  // namespace detail

/// Evaluates in IEEE double precision. Every free variable must be bound.
inline double eval(const Expr& e, const Env& env) {
  return detail::evaluate<double>(e, [&env](const std::string& name) {
    auto it = env.find(name);
    if (it == env.end()) throw EvalError(ErrorCode::unbound_variable, "unbound variable '" + name + "'");
    return it->second;
  });
}

inline void collect_free_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::constant: return;
    case Expr::Kind::variable: out.insert(e.name()); return;
    case Expr::Kind::unary: collect_free_vars(e.arg(), out); return;
    case Expr::Kind::binary:
      collect_free_vars(e.lhs(), out);
      collect_free_vars(e.rhs(), out);
      return;
  }
}

inline std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_free_vars(e, out);
  return out;
}

inline bool has_placeholders(const Expr& e) {
  for (const auto& v : free_vars(e)) {
    if (is_placeholder_name(v)) return true;
  }
  return false;
}

/// Placeholders of `e` decoded as multi-indices, sorted.
inline std::vector<MultiIndex> placeholders(const Expr& e, int k) {
  std::vector<MultiIndex> out;
  for (const auto& v : free_vars(e)) {
    if (auto mi = parse_placeholder(v, k)) out.push_back(*mi);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Flattened stack program for repeated evaluation with variables resolved to
/// slot indices. Evaluation is pure; one instance may be shared by threads.
template <class Real>
class CompiledExpr {
 public:
  CompiledExpr() = default;

  CompiledExpr(const Expr& e, std::span<const std::string> slots) {
    std::size_t depth = 0;
    emit(e, slots, depth);
  }

  Real operator()(std::span<const Real> values) const {
    constexpr std::size_t kInline = 64;
    std::array<Real, kInline> inline_stack{};
    std::vector<Real> heap_stack;
    Real* stack = inline_stack.data();
    if (max_depth_ > kInline) {
      heap_stack.resize(max_depth_);
      stack = heap_stack.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : program_) {
      switch (in.code) {
        case Code::constant: stack[sp++] = in.value; break;
        case Code::slot: stack[sp++] = values[in.slot]; break;
        case Code::unary: stack[sp - 1] = detail::apply_func<Real>(in.func, stack[sp - 1]); break;
        case Code::binary:
          --sp;
          stack[sp - 1] = detail::apply_op<Real>(in.op, stack[sp - 1], stack[sp]);
          break;
      }
    }
    return stack[0];
  }

  bool empty() const { return program_.empty(); }

 private:
  enum class Code : std::uint8_t { constant, slot, unary, binary };
  struct Instr {
    Code code;
    Func func = Func::neg;
    Op op = Op::add;
    std::size_t slot = 0;
    Real value = 0;
  };

  void emit(const Expr& e, std::span<const std::string> slots, std::size_t& depth) {
    switch (e.kind()) {
      case Expr::Kind::constant:
        program_.push_back({Code::constant, Func::neg, Op::add, 0, static_cast<Real>(e.value())});
        bump(depth, 1);
        return;
      case Expr::Kind::variable: {
        auto it = std::find(slots.begin(), slots.end(), e.name());
        if (it == slots.end()) {
          throw EvalError(ErrorCode::unbound_variable, "unbound variable '" + e.name() + "'");
        }
        program_.push_back({Code::slot, Func::neg, Op::add,
                            static_cast<std::size_t>(it - slots.begin()), 0});
        bump(depth, 1);
        return;
      }
      case Expr::Kind::unary:
        emit(e.arg(), slots, depth);
        program_.push_back({Code::unary, e.func(), Op::add, 0, 0});
        return;
      case Expr::Kind::binary:
        emit(e.lhs(), slots, depth);
        emit(e.rhs(), slots, depth);
        program_.push_back({Code::binary, Func::neg, e.op(), 0, 0});
        --depth;
        return;
    }
  }

  void bump(std::size_t& depth, std::size_t by) {
    depth += by;
    max_depth_ = std::max(max_depth_, depth);
  }

  std::vector<Instr> program_;
  std::size_t max_depth_ = 0;
};

namespace detail {

// Builders used by diff: literal subtrees fold, and additive zeros and
// multiplicative zeros/ones are dropped.
inline Expr add(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return fold_binary(Op::add, a, b);
}
inline Expr neg(const Expr& a) {
  if (a.is_constant(0.0)) return a;
  return fold_unary(Func::neg, a);
}
inline Expr sub(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return neg(b);
  return fold_binary(Op::sub, a, b);
}
inline Expr mul(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return fold_binary(Op::mul, a, b);
}
inline Expr div(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return a;
  if (b.is_constant(1.0)) return a;
  return fold_binary(Op::div, a, b);
}
inline Expr pow(const Expr& a, const Expr& b) {
  if (b.is_constant(1.0)) return a;
  return fold_binary(Op::pow, a, b);
}
inline Expr call(Func f, const Expr& a) { return fold_unary(f, a); }

inline Expr derive(const Expr& e, const std::string& var) {
  switch (e.kind()) {
    case Expr::Kind::constant: return Expr::constant(0.0);
    case Expr::Kind::variable: return Expr::constant(e.name() == var ? 1.0 : 0.0);
    case Expr::Kind::unary: {
      const Expr a = e.arg();
      const Expr da = derive(a, var);
      if (da.is_constant(0.0)) return da;
      switch (e.func()) {
        case Func::neg: return neg(da);
        case Func::sin: return mul(call(Func::cos, a), da);
        case Func::cos: return neg(mul(call(Func::sin, a), da));
        case Func::sinh: return mul(call(Func::cosh, a), da);
        case Func::cosh: return mul(call(Func::sinh, a), da);
        case Func::exp: return mul(e, da);
        case Func::log: return div(da, a);
        case Func::sqrt: return div(da, mul(Expr::constant(2.0), e));
        case Func::abs: return div(mul(da, a), e);
      }
      return da;
    }
    case Expr::Kind::binary: {
      const Expr a = e.lhs();
      const Expr b = e.rhs();
      const Expr da = derive(a, var);
      const Expr db = derive(b, var);
      switch (e.op()) {
        case Op::add: return add(da, db);
        case Op::sub: return sub(da, db);
        case Op::mul: return add(mul(da, b), mul(a, db));
        case Op::div:
          return div(sub(mul(da, b), mul(a, db)), pow(b, Expr::constant(2.0)));
        case Op::pow:
          if (db.is_constant(0.0)) {
            return mul(mul(b, pow(a, sub(b, Expr::constant(1.0)))), da);
          }
          return mul(e, add(mul(db, call(Func::log, a)), div(mul(b, da), a)));
      }
      return da;
    }
  }
  return Expr::constant(0.0);
}

}  // namespace detail

/// Exact symbolic derivative of a closed-form expression.
inline Expr diff(const Expr& e, const std::string& var) {
  if (has_placeholders(e)) {
    throw Error(ErrorCode::invalid_argument, "diff is defined for closed-form expressions only");
  }
  return detail::derive(e, var);
}

/// Applies the derivative described by `mi` (t first, then each axis).
inline Expr diff(const Expr& e, const MultiIndex& mi, int k) {
  Expr out = e;
  for (int r = 0; r < mi.t; ++r) out = diff(out, "t");
  for (int i = 0; i < k; ++i) {
    for (int r = 0; r < mi.x.at(static_cast<std::size_t>(i)); ++r) out = diff(out, spatial_name(i, k));
  }
  return out;
}

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::constant: return e.value() < 0 || std::signbit(e.value()) ? 3 : 5;
    case Expr::Kind::variable: return 5;
    case Expr::Kind::unary: return e.func() == Func::neg ? 3 : 5;
    case Expr::Kind::binary:
      switch (e.op()) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::pow: return 4;
      }
  }
  return 5;
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string print(const Expr& e);

inline std::string wrap(const Expr& e, bool parens) {
  return parens ? "(" + print(e) + ")" : print(e);
}

inline std::string print(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::constant: return format_number(e.value());
    case Expr::Kind::variable: return e.name();
    case Expr::Kind::unary:
      if (e.func() == Func::neg) return "-" + wrap(e.arg(), precedence(e.arg()) < 3);
      return std::string(func_name(e.func())) + "(" + print(e.arg()) + ")";
    case Expr::Kind::binary: {
      const Expr a = e.lhs();
      const Expr b = e.rhs();
      switch (e.op()) {
        case Op::add: return wrap(a, precedence(a) < 1) + " + " + wrap(b, precedence(b) <= 1);
        case Op::sub: return wrap(a, precedence(a) < 1) + " - " + wrap(b, precedence(b) <= 1);
        case Op::mul: return wrap(a, precedence(a) < 2) + "*" + wrap(b, precedence(b) <= 2);
        case Op::div: return wrap(a, precedence(a) < 2) + "/" + wrap(b, precedence(b) <= 2);
        case Op::pow: return wrap(a, precedence(a) <= 4) + "^" + wrap(b, precedence(b) < 3);
      }
    }
  }
  return {};
}

}  // namespace detail

/// Renders `e` in the input grammar; reparsing yields a structurally equal tree.
inline std::string to_string(const Expr& e) { return detail::print(e); }

}  // namespace picard
