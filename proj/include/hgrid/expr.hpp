#pragma once

// Expression mini-language for drift f(t,x), diffusion h(t,x) and test
// functions phi(t,x):
//
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := unary ('^' integer)?
//   unary   := '-'? primary
//   primary := number | 't' | 'x' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | sqrt | bump
//
// bump(u) = exp(-1/(1-u^2)) for |u| < 1, else 0. Note that unary minus binds
// tighter than '^', so "-x^2" is (-x)^2.
//
// Derivatives of bump are guarded by the internal two-argument form
// inside(u, e), which is e for |u| < 1 and 0 otherwise (e is not evaluated
// outside). The printer emits it and the parser accepts it so printed
// derivatives round-trip.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hgrid {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::string subexpr)
      : std::runtime_error(what + " in " + subexpr), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const { return subexpr_; }

 private:
  std::string subexpr_;
};

enum class Op : std::uint8_t {
  Const, T, X, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt, Bump, Inside
};

enum class Var : std::uint8_t { T, X };

inline double bump_value(double u) {
  if (!(std::abs(u) < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u));
}

namespace detail {
struct Node;
}

/// Immutable expression tree with shared subtrees.
class Expr {
 public:
  Expr() : Expr(0.0) {}
  Expr(double constant);  // NOLINT(google-explicit-constructor)

  Op op() const;
  double constant() const;
  int exponent() const;
  Expr lhs() const;
  Expr rhs() const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_constant(double v) const { return is_constant() && constant() == v; }

  static Expr variable(Var v);
  static Expr make_binary(Op op, Expr a, Expr b);
  static Expr make_unary(Op op, Expr a);
  static Expr make_pow(Expr base, int exponent);
  static Expr make_inside(Expr guard, Expr body);

 private:
  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  static Expr node(Op op, double value, int exponent, const Expr& a, const Expr& b);
  std::shared_ptr<const detail::Node> node_;
};

namespace detail {
struct Node {
  Op op = Op::Const;
  double value = 0.0;
  int exponent = 0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};
}  // namespace detail

inline Expr Expr::node(Op op, double value, int exponent, const Expr& a, const Expr& b) {
  return Expr(std::make_shared<const detail::Node>(detail::Node{op, value, exponent, a.node_, b.node_}));
}

inline Expr::Expr(double constant)
    : node_(std::make_shared<const detail::Node>(detail::Node{Op::Const, constant, 0, nullptr, nullptr})) {}

inline Op Expr::op() const { return node_->op; }
inline double Expr::constant() const { return node_->value; }
inline int Expr::exponent() const { return node_->exponent; }
inline Expr Expr::lhs() const { return Expr(node_->a); }
inline Expr Expr::rhs() const { return Expr(node_->b); }

inline Expr Expr::variable(Var v) {
  return Expr(std::make_shared<const detail::Node>(
      detail::Node{v == Var::T ? Op::T : Op::X, 0.0, 0, nullptr, nullptr}));
}

// ---------------------------------------------------------------------------
// Printing

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Bump: return "bump";
    case Op::Inside: return "inside";
    default: return "?";
  }
}

/// Unambiguous, fully parenthesized form; parse(to_string(e)) evaluates
/// identically to e.
inline std::string to_string(const Expr& e) {
  switch (e.op()) {
    case Op::Const: {
      const double v = e.constant();
      if (std::signbit(v)) return "(-" + format_number(-v) + ")";
      return format_number(v);
    }
    case Op::T: return "t";
    case Op::X: return "x";
    case Op::Add: return "(" + to_string(e.lhs()) + "+" + to_string(e.rhs()) + ")";
    case Op::Sub: return "(" + to_string(e.lhs()) + "-" + to_string(e.rhs()) + ")";
    case Op::Mul: return "(" + to_string(e.lhs()) + "*" + to_string(e.rhs()) + ")";
    case Op::Div: return "(" + to_string(e.lhs()) + "/" + to_string(e.rhs()) + ")";
    case Op::Pow: return "(" + to_string(e.lhs()) + "^" + std::to_string(e.exponent()) + ")";
    case Op::Neg: return "(-" + to_string(e.lhs()) + ")";
    case Op::Inside:
      return std::string("inside(") + to_string(e.lhs()) + "," + to_string(e.rhs()) + ")";
    default: return std::string(function_name(e.op())) + "(" + to_string(e.lhs()) + ")";
  }
}

// ---------------------------------------------------------------------------
// Construction with light algebraic simplification (constant folding and
// neutral elements only; no general CAS).

namespace detail {
inline bool foldable(double v) { return std::isfinite(v); }

inline double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return a > 0 ? std::log(a) : std::numeric_limits<double>::quiet_NaN();
    case Op::Sqrt: return a >= 0 ? std::sqrt(a) : std::numeric_limits<double>::quiet_NaN();
    case Op::Bump: return bump_value(a);
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

inline double int_pow(double base, int k) {
  double r = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(k);
  while (e) {
    if (e & 1u) r *= b;
    b *= b;
    e >>= 1u;
  }
  return r;
}
}  // namespace detail

inline Expr Expr::make_binary(Op op, Expr a, Expr b) {
  if (a.is_constant() && b.is_constant()) {
    double v = std::numeric_limits<double>::quiet_NaN();
    switch (op) {
      case Op::Add: v = a.constant() + b.constant(); break;
      case Op::Sub: v = a.constant() - b.constant(); break;
      case Op::Mul: v = a.constant() * b.constant(); break;
      case Op::Div:
        if (b.constant() != 0.0) v = a.constant() / b.constant();
        break;
      default: break;
    }
    if (detail::foldable(v)) return Expr(v);
  }
  switch (op) {
    case Op::Add:
      if (a.is_constant(0.0)) return b;
      if (b.is_constant(0.0)) return a;
      break;
    case Op::Sub:
      if (b.is_constant(0.0)) return a;
      if (a.is_constant(0.0)) return make_unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr(0.0);
      if (a.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return a;
      break;
    case Op::Div:
      if (b.is_constant(1.0)) return a;
      if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr(0.0);
      break;
    default:
      throw std::logic_error("make_binary: not a binary operator");
  }
  return node(op, 0.0, 0, a, b);
}

inline Expr Expr::make_unary(Op op, Expr a) {
  if (a.is_constant()) {
    const double v = detail::apply_unary(op, a.constant());
    if (detail::foldable(v)) return Expr(v);
  }
  if (op == Op::Neg && a.op() == Op::Neg) return a.lhs();
  return node(op, 0.0, 0, a, Expr(0.0));
}

inline Expr Expr::make_pow(Expr base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("exponent must be a non-negative integer");
  if (exponent == 0) return Expr(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) {
    const double v = detail::int_pow(base.constant(), exponent);
    if (detail::foldable(v)) return Expr(v);
  }
  return node(Op::Pow, 0.0, exponent, base, Expr(0.0));
}

inline Expr Expr::make_inside(Expr guard, Expr body) {
  if (body.is_constant(0.0)) return body;
  if (guard.is_constant()) return std::abs(guard.constant()) < 1.0 ? body : Expr(0.0);
  return node(Op::Inside, 0.0, 0, guard, body);
}

inline Expr operator+(Expr a, Expr b) { return Expr::make_binary(Op::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return Expr::make_binary(Op::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return Expr::make_binary(Op::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return Expr::make_binary(Op::Div, std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::make_unary(Op::Neg, std::move(a)); }
inline Expr pow(Expr a, int k) { return Expr::make_pow(std::move(a), k); }
inline Expr sin(Expr a) { return Expr::make_unary(Op::Sin, std::move(a)); }
inline Expr cos(Expr a) { return Expr::make_unary(Op::Cos, std::move(a)); }
inline Expr exp(Expr a) { return Expr::make_unary(Op::Exp, std::move(a)); }
inline Expr log(Expr a) { return Expr::make_unary(Op::Log, std::move(a)); }
inline Expr sqrt(Expr a) { return Expr::make_unary(Op::Sqrt, std::move(a)); }
inline Expr bump(Expr a) { return Expr::make_unary(Op::Bump, std::move(a)); }
inline Expr inside(Expr g, Expr e) { return Expr::make_inside(std::move(g), std::move(e)); }
inline Expr var_t() { return Expr::variable(Var::T); }
inline Expr var_x() { return Expr::variable(Var::X); }

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) {
        e = Expr::make_binary(Op::Add, e, term());
      } else if (accept('-')) {
        e = Expr::make_binary(Op::Sub, e, term());
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) {
        e = Expr::make_binary(Op::Mul, e, factor());
      } else if (accept('/')) {
        e = Expr::make_binary(Op::Div, e, factor());
      } else {
        return e;
      }
    }
  }

  Expr factor() {
    Expr base = unary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    if (at >= src_.size()) throw ParseError("missing exponent", at);
    const char c = src_[at];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '(') {
      throw ParseError("non-constant exponent", at);
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ParseError("exponent must be a non-negative integer", at);
    }
    std::size_t end = at;
    while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    if (end < src_.size() && (src_[end] == '.' || src_[end] == 'e' || src_[end] == 'E')) {
      throw ParseError("exponent must be a non-negative integer", at);
    }
    int k = 0;
    auto res = std::from_chars(src_.data() + at, src_.data() + end, k);
    if (res.ec != std::errc() || k > 1000) throw ParseError("exponent out of range", at);
    pos_ = end;
    return Expr::make_pow(base, k);
  }

  Expr unary() {
    if (accept('-')) return Expr::make_unary(Op::Neg, primary());
    return primary();
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t at = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view id = src_.substr(at, pos_ - at);
      if (id == "t") return var_t();
      if (id == "x") return var_x();
      static constexpr std::array<std::pair<std::string_view, Op>, 6> funcs{{
          {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp},
          {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"bump", Op::Bump}}};
      for (const auto& [name, op] : funcs) {
        if (id == name) {
          expect('(');
          Expr arg = expr();
          expect(')');
          return Expr::make_unary(op, arg);
        }
      }
      if (id == "inside") {
        expect('(');
        Expr g = expr();
        expect(',');
        Expr body = expr();
        expect(')');
        return Expr::make_inside(g, body);
      }
      throw ParseError("unknown identifier '" + std::string(id) + "'", at);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    };
    digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      digits();
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
        end = e;
        digits();
      }
    }
    double v = 0.0;
    auto res = std::from_chars(src_.data() + at, src_.data() + end, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + end || !std::isfinite(v)) {
      throw ParseError("malformed number '" + std::string(src_.substr(at, end - at)) + "'", at);
    }
    pos_ = end;
    return Expr(v);
  }
};

}  // namespace detail

inline Expr parse(std::string_view source) { return detail::Parser(source).parse(); }

// ---------------------------------------------------------------------------
// Evaluation (tree walk; see CompiledExpr for the hot path)

inline double eval(const Expr& e, double t, double x) {
  switch (e.op()) {
    case Op::Const: return e.constant();
    case Op::T: return t;
    case Op::X: return x;
    case Op::Add: return eval(e.lhs(), t, x) + eval(e.rhs(), t, x);
    case Op::Sub: return eval(e.lhs(), t, x) - eval(e.rhs(), t, x);
    case Op::Mul: return eval(e.lhs(), t, x) * eval(e.rhs(), t, x);
    case Op::Div: {
      const double den = eval(e.rhs(), t, x);
      if (den == 0.0) throw EvalError("division by zero", to_string(e));
      return eval(e.lhs(), t, x) / den;
    }
    case Op::Pow: return detail::int_pow(eval(e.lhs(), t, x), e.exponent());
    case Op::Neg: return -eval(e.lhs(), t, x);
    case Op::Sin: return std::sin(eval(e.lhs(), t, x));
    case Op::Cos: return std::cos(eval(e.lhs(), t, x));
    case Op::Exp: return std::exp(eval(e.lhs(), t, x));
    case Op::Log: {
      const double a = eval(e.lhs(), t, x);
      if (!(a > 0.0)) throw EvalError("log of non-positive value", to_string(e));
      return std::log(a);
    }
    case Op::Sqrt: {
      const double a = eval(e.lhs(), t, x);
      if (a < 0.0) throw EvalError("sqrt of negative value", to_string(e));
      return std::sqrt(a);
    }
    case Op::Bump: return bump_value(eval(e.lhs(), t, x));
    case Op::Inside: {
      const double g = eval(e.lhs(), t, x);
      if (!(std::abs(g) < 1.0)) return 0.0;
      return eval(e.rhs(), t, x);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Symbolic differentiation

inline Expr derivative(const Expr& e, Var v) {
  const Op var_op = v == Var::T ? Op::T : Op::X;
  switch (e.op()) {
    case Op::Const: return Expr(0.0);
    case Op::T:
    case Op::X: return Expr(e.op() == var_op ? 1.0 : 0.0);
    case Op::Add: return derivative(e.lhs(), v) + derivative(e.rhs(), v);
    case Op::Sub: return derivative(e.lhs(), v) - derivative(e.rhs(), v);
    case Op::Mul: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      return derivative(a, v) * b + a * derivative(b, v);
    }
    case Op::Div: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      const Expr da = derivative(a, v);
      const Expr db = derivative(b, v);
      if (db.is_constant(0.0)) return da / b;
      return (da * b - a * db) / pow(b, 2);
    }
    case Op::Pow: {
      const int k = e.exponent();
      return Expr(static_cast<double>(k)) * pow(e.lhs(), k - 1) * derivative(e.lhs(), v);
    }
    case Op::Neg: return -derivative(e.lhs(), v);
    case Op::Sin: return cos(e.lhs()) * derivative(e.lhs(), v);
    case Op::Cos: return -(sin(e.lhs())) * derivative(e.lhs(), v);
    case Op::Exp: return e * derivative(e.lhs(), v);
    case Op::Log: return derivative(e.lhs(), v) / e.lhs();
    case Op::Sqrt: return derivative(e.lhs(), v) / (Expr(2.0) * e);
    case Op::Bump: {
      // bump'(u) = bump(u) * (-2u / (1-u^2)^2) for |u| < 1, 0 outside
      const Expr& u = e.lhs();
      const Expr du = derivative(u, v);
      if (du.is_constant(0.0)) return Expr(0.0);
      const Expr inner = e * (Expr(-2.0) * u / pow(Expr(1.0) - pow(u, 2), 2));
      return inside(u, inner) * du;
    }
    case Op::Inside: return inside(e.lhs(), derivative(e.rhs(), v));
  }
  return Expr(0.0);
}

inline bool depends_on(const Expr& e, Var v) {
  switch (e.op()) {
    case Op::Const: return false;
    case Op::T: return v == Var::T;
    case Op::X: return v == Var::X;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Inside: return depends_on(e.lhs(), v) || depends_on(e.rhs(), v);
    default: return depends_on(e.lhs(), v);
  }
}

// ---------------------------------------------------------------------------
// Compiled postfix form for repeated evaluation inside simulation loops.

class CompiledExpr {
 public:
  CompiledExpr() : CompiledExpr(Expr(0.0)) {}

  explicit CompiledExpr(const Expr& e) : source_(e) {
    emit(e, 0);
  }

  const Expr& source() const { return source_; }

  double operator()(double t, double x) const {
    constexpr std::size_t kInline = 64;
    if (max_depth_ <= kInline) {
      std::array<double, kInline> stack;
      return run(stack.data(), t, x);
    }
    std::vector<double> stack(max_depth_);
    return run(stack.data(), t, x);
  }

 private:
  struct Instr {
    Op op;
    int exponent = 0;       // Pow
    std::size_t jump = 0;   // Inside: index after the guarded body
    double value = 0.0;     // Const
    std::size_t node = 0;   // index into nodes_ for error messages
  };

  Expr source_;
  std::vector<Instr> code_;
  std::vector<Expr> nodes_;
  std::size_t max_depth_ = 1;

  void emit(const Expr& e, std::size_t depth) {
    max_depth_ = std::max(max_depth_, depth + 1);
    Instr in{e.op()};
    switch (e.op()) {
      case Op::Const:
        in.value = e.constant();
        code_.push_back(in);
        return;
      case Op::T:
      case Op::X:
        code_.push_back(in);
        return;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
        emit(e.lhs(), depth);
        emit(e.rhs(), depth + 1);
        in.node = nodes_.size();
        nodes_.push_back(e);
        code_.push_back(in);
        return;
      case Op::Pow:
        emit(e.lhs(), depth);
        in.exponent = e.exponent();
        code_.push_back(in);
        return;
      case Op::Inside: {
        emit(e.lhs(), depth);
        const std::size_t at = code_.size();
        code_.push_back(in);
        emit(e.rhs(), depth);
        code_[at].jump = code_.size();
        return;
      }
      default:
        emit(e.lhs(), depth);
        in.node = nodes_.size();
        nodes_.push_back(e);
        code_.push_back(in);
        return;
    }
  }

  double run(double* s, double t, double x) const {
    std::size_t sp = 0;
    const std::size_t count = code_.size();
    for (std::size_t pc = 0; pc < count; ++pc) {
      const Instr& in = code_[pc];
      switch (in.op) {
        case Op::Const: s[sp++] = in.value; break;
        case Op::T: s[sp++] = t; break;
        case Op::X: s[sp++] = x; break;
        case Op::Add: --sp; s[sp - 1] += s[sp]; break;
        case Op::Sub: --sp; s[sp - 1] -= s[sp]; break;
        case Op::Mul: --sp; s[sp - 1] *= s[sp]; break;
        case Op::Div:
          --sp;
          if (s[sp] == 0.0) throw EvalError("division by zero", to_string(nodes_[in.node]));
          s[sp - 1] /= s[sp];
          break;
        case Op::Pow: s[sp - 1] = detail::int_pow(s[sp - 1], in.exponent); break;
        case Op::Neg: s[sp - 1] = -s[sp - 1]; break;
        case Op::Sin: s[sp - 1] = std::sin(s[sp - 1]); break;
        case Op::Cos: s[sp - 1] = std::cos(s[sp - 1]); break;
        case Op::Exp: s[sp - 1] = std::exp(s[sp - 1]); break;
        case Op::Log:
          if (!(s[sp - 1] > 0.0)) throw EvalError("log of non-positive value", to_string(nodes_[in.node]));
          s[sp - 1] = std::log(s[sp - 1]);
          break;
        case Op::Sqrt:
          if (s[sp - 1] < 0.0) throw EvalError("sqrt of negative value", to_string(nodes_[in.node]));
          s[sp - 1] = std::sqrt(s[sp - 1]);
          break;
        case Op::Bump: s[sp - 1] = bump_value(s[sp - 1]); break;
        case Op::Inside:
          // guard value is replaced by the body's result
          if (!(std::abs(s[sp - 1]) < 1.0)) {
            s[sp - 1] = 0.0;
            pc = in.jump - 1;
          } else {
            --sp;
          }
          break;
      }
    }
    return s[0];
  }
};

}  // namespace hgrid
