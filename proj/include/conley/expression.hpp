#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conley/format.hpp"

namespace conley {

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

struct EvalDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExprKind : std::uint8_t {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent stored in `exponent`
  Neg,
  Sin,
  Cos,
  Exp,
  Sqrt,
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
 public:
  ExprKind kind;
  double value = 0.0;  // Constant
  int var = 0;         // Variable
  int exponent = 0;    // Pow
  ExprPtr a, b;        // children (unary ops use `a`)

  Expr(ExprKind k) : kind(k) {}
};

inline ExprPtr make_const(double v) {
  auto e = std::make_shared<Expr>(ExprKind::Constant);
  e->value = v;
  return e;
}

inline ExprPtr make_var(int i) {
  auto e = std::make_shared<Expr>(ExprKind::Variable);
  e->var = i;
  return e;
}

inline bool is_const(const ExprPtr& e, double v) {
  return e->kind == ExprKind::Constant && e->value == v;
}

// Simplifying factories. They fold constants for +,-,*,neg,pow and drop
// neutral elements; division and functions are left alone so evaluation-time
// domain errors are preserved.
inline ExprPtr make_add(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (a->kind == ExprKind::Constant && b->kind == ExprKind::Constant)
    return make_const(a->value + b->value);
  auto e = std::make_shared<Expr>(ExprKind::Add);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

inline ExprPtr make_neg(ExprPtr a) {
  if (a->kind == ExprKind::Constant) return make_const(-a->value);
  if (a->kind == ExprKind::Neg) return a->a;
  auto e = std::make_shared<Expr>(ExprKind::Neg);
  e->a = std::move(a);
  return e;
}

inline ExprPtr make_sub(ExprPtr a, ExprPtr b) {
  if (is_const(b, 0.0)) return a;
  if (a->kind == ExprKind::Constant && b->kind == ExprKind::Constant)
    return make_const(a->value - b->value);
  if (is_const(a, 0.0)) return make_neg(std::move(b));
  auto e = std::make_shared<Expr>(ExprKind::Sub);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

inline ExprPtr make_mul(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a->kind == ExprKind::Constant && b->kind == ExprKind::Constant)
    return make_const(a->value * b->value);
  auto e = std::make_shared<Expr>(ExprKind::Mul);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

inline ExprPtr make_div(ExprPtr a, ExprPtr b) {
  if (is_const(b, 1.0)) return a;
  auto e = std::make_shared<Expr>(ExprKind::Div);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

inline double ipow(double x, int k) {
  if (k < 0) {
    if (x == 0.0) throw EvalDomainError("0 raised to a negative power");
    return 1.0 / ipow(x, -k);
  }
  double r = 1.0;
  double base = x;
  int e = k;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

inline ExprPtr make_pow(ExprPtr a, int k) {
  if (k == 1) return a;
  if (k == 0) return make_const(1.0);
  if (a->kind == ExprKind::Constant && (k > 0 || a->value != 0.0))
    return make_const(ipow(a->value, k));
  auto e = std::make_shared<Expr>(ExprKind::Pow);
  e->a = std::move(a);
  e->exponent = k;
  return e;
}

inline ExprPtr make_fn(ExprKind k, ExprPtr a) {
  auto e = std::make_shared<Expr>(k);
  e->a = std::move(a);
  return e;
}

// ---------------------------------------------------------------------------
// Parser. Grammar (standard precedence, ^ binds tightest and right-assoc):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := primary ('^' exponent)?
//   primary:= number | 'pi' | 'x'<digits> | fn '(' expr ')' | '(' expr ')'
// The exponent of '^' must fold to an integer constant (chains like 2^3 are
// folded right-associatively before the check).
// ---------------------------------------------------------------------------
namespace detail {

class Parser {
 public:
  Parser(std::string_view text, int n_vars) : s_(text), n_(n_vars) {}

  ExprPtr parse() {
    if (s_.empty()) throw ParseError("empty expression", 0);
    skip_ws();
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int n_;

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr expr() {
    ExprPtr e = term();
    for (;;) {
      if (eat('+'))
        e = make_add(e, term());
      else if (eat('-'))
        e = make_sub(e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    for (;;) {
      if (eat('*'))
        e = make_mul(e, unary());
      else if (eat('/'))
        e = make_div(e, unary());
      else
        return e;
    }
  }

  ExprPtr unary() {
    if (eat('-')) return make_neg(unary());
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    skip_ws();
    if (!eat('^')) return base;
    const std::size_t at = pos_;
    ExprPtr e = exponent_operand();
    if (e->kind != ExprKind::Constant)
      throw ParseError("exponent must be a constant integer", at);
    const double v = e->value;
    if (v != std::floor(v) || std::abs(v) > 64)
      throw ParseError("exponent must be an integer with |k| <= 64", at);
    return make_pow(base, static_cast<int>(v));
  }

  // Right-associative: the operand of '^' may itself be a power.
  ExprPtr exponent_operand() {
    if (eat('-')) return make_neg(exponent_operand());
    return power();
  }

  ExprPtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr number() {
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double v = 0;
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc()) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(p - begin);
    return make_const(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) != 0)) ++pos_;
    std::string_view name = s_.substr(start, pos_ - start);
    if (name == "pi") return make_const(std::numbers::pi);
    if (name == "sin" || name == "cos" || name == "exp" || name == "sqrt") {
      if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
      ExprPtr arg = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      ExprKind k = name == "sin"   ? ExprKind::Sin
                   : name == "cos" ? ExprKind::Cos
                   : name == "exp" ? ExprKind::Exp
                                   : ExprKind::Sqrt;
      return make_fn(k, std::move(arg));
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int idx = -1;
      auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc() && p == name.data() + name.size()) {
        if (idx < 0 || idx >= n_)
          throw ParseError("variable index out of range (n = " + std::to_string(n_) + ")", start);
        return make_var(idx);
      }
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }
};

}  // namespace detail

inline ExprPtr parse_expression(std::string_view text, int n_vars) {
  return detail::Parser(text, n_vars).parse();
}

// ---------------------------------------------------------------------------
// Symbolic differentiation.
// ---------------------------------------------------------------------------
inline ExprPtr differentiate(const ExprPtr& e, int axis) {
  switch (e->kind) {
    case ExprKind::Constant:
      return make_const(0.0);
    case ExprKind::Variable:
      return make_const(e->var == axis ? 1.0 : 0.0);
    case ExprKind::Add:
      return make_add(differentiate(e->a, axis), differentiate(e->b, axis));
    case ExprKind::Sub:
      return make_sub(differentiate(e->a, axis), differentiate(e->b, axis));
    case ExprKind::Mul:
      return make_add(make_mul(differentiate(e->a, axis), e->b),
                      make_mul(e->a, differentiate(e->b, axis)));
    case ExprKind::Div:
      return make_div(make_sub(make_mul(differentiate(e->a, axis), e->b),
                               make_mul(e->a, differentiate(e->b, axis))),
                      make_pow(e->b, 2));
    case ExprKind::Pow:
      return make_mul(make_mul(make_const(e->exponent), make_pow(e->a, e->exponent - 1)),
                      differentiate(e->a, axis));
    case ExprKind::Neg:
      return make_neg(differentiate(e->a, axis));
    case ExprKind::Sin:
      return make_mul(make_fn(ExprKind::Cos, e->a), differentiate(e->a, axis));
    case ExprKind::Cos:
      return make_neg(make_mul(make_fn(ExprKind::Sin, e->a), differentiate(e->a, axis)));
    case ExprKind::Exp:
      return make_mul(make_fn(ExprKind::Exp, e->a), differentiate(e->a, axis));
    case ExprKind::Sqrt:
      return make_div(differentiate(e->a, axis),
                      make_mul(make_const(2.0), make_fn(ExprKind::Sqrt, e->a)));
  }
  throw std::logic_error("differentiate: bad node");
}

// ---------------------------------------------------------------------------
// Printing. print() then parse_expression() yields a structurally identical
// tree; doubles are printed with shortest round-trip representation.
// ---------------------------------------------------------------------------
namespace detail {

// Precedence levels: 0 add/sub, 1 mul/div, 2 unary minus, 3 pow, 4 atom.
inline int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return 0;
    case ExprKind::Mul:
    case ExprKind::Div:
      return 1;
    case ExprKind::Neg:
      return 2;
    case ExprKind::Pow:
      return 3;
    default:
      return 4;
  }
}

inline void print_rec(const Expr& e, std::string& out, int parent_prec, bool rhs) {
  const int prec = precedence(e);
  const bool parens = prec < parent_prec || (rhs && prec == parent_prec && prec <= 1);
  if (parens) out += '(';
  switch (e.kind) {
    case ExprKind::Constant: {
      if (e.value < 0) {
        out += '(';
        out += format_double(e.value);
        out += ')';
      } else {
        out += format_double(e.value);
      }
      break;
    }
    case ExprKind::Variable:
      out += 'x';
      out += std::to_string(e.var);
      break;
    case ExprKind::Add:
      print_rec(*e.a, out, 0, false);
      out += '+';
      print_rec(*e.b, out, 0, true);
      break;
    case ExprKind::Sub:
      print_rec(*e.a, out, 0, false);
      out += '-';
      print_rec(*e.b, out, 1, true);
      break;
    case ExprKind::Mul:
      print_rec(*e.a, out, 1, false);
      out += '*';
      print_rec(*e.b, out, 1, true);
      break;
    case ExprKind::Div:
      print_rec(*e.a, out, 1, false);
      out += '/';
      print_rec(*e.b, out, 2, true);
      break;
    case ExprKind::Neg:
      out += '-';
      print_rec(*e.a, out, 2, true);
      break;
    case ExprKind::Pow:
      print_rec(*e.a, out, 4, false);
      out += '^';
      out += std::to_string(e.exponent);
      break;
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
    case ExprKind::Sqrt: {
      out += e.kind == ExprKind::Sin   ? "sin"
             : e.kind == ExprKind::Cos ? "cos"
             : e.kind == ExprKind::Exp ? "exp"
                                       : "sqrt";
      out += '(';
      print_rec(*e.a, out, 0, false);
      out += ')';
      break;
    }
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string print_expression(const ExprPtr& e) {
  std::string out;
  detail::print_rec(*e, out, 0, false);
  return out;
}

inline bool structurally_equal(const ExprPtr& x, const ExprPtr& y) {
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case ExprKind::Constant:
      return x->value == y->value;
    case ExprKind::Variable:
      return x->var == y->var;
    case ExprKind::Pow:
      return x->exponent == y->exponent && structurally_equal(x->a, y->a);
    case ExprKind::Neg:
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
    case ExprKind::Sqrt:
      return structurally_equal(x->a, y->a);
    default:
      return structurally_equal(x->a, y->a) && structurally_equal(x->b, y->b);
  }
}

// ---------------------------------------------------------------------------
// Flat postfix tape for fast repeated evaluation (hot loops in the flow
// integrator). Semantics identical to tree evaluation.
// ---------------------------------------------------------------------------
class EvalTape {
 public:
  EvalTape() = default;
  explicit EvalTape(const ExprPtr& e) {
    depth_ = 0;
    build(e, 0);
    if (depth_ > kStackCap) throw std::invalid_argument("expression too deeply nested");
  }

  double eval(std::span<const double> x) const {
    double st[kStackCap];
    int top = -1;
    for (const Op& op : ops_) {
      switch (op.kind) {
        case ExprKind::Constant:
          st[++top] = op.c;
          break;
        case ExprKind::Variable:
          st[++top] = x[static_cast<std::size_t>(op.k)];
          break;
        case ExprKind::Add:
          st[top - 1] += st[top];
          --top;
          break;
        case ExprKind::Sub:
          st[top - 1] -= st[top];
          --top;
          break;
        case ExprKind::Mul:
          st[top - 1] *= st[top];
          --top;
          break;
        case ExprKind::Div:
          if (st[top] == 0.0) throw EvalDomainError("division by zero");
          st[top - 1] /= st[top];
          --top;
          break;
        case ExprKind::Pow:
          st[top] = ipow(st[top], op.k);
          break;
        case ExprKind::Neg:
          st[top] = -st[top];
          break;
        case ExprKind::Sin:
          st[top] = std::sin(st[top]);
          break;
        case ExprKind::Cos:
          st[top] = std::cos(st[top]);
          break;
        case ExprKind::Exp:
          st[top] = std::exp(st[top]);
          break;
        case ExprKind::Sqrt:
          if (st[top] < 0.0) throw EvalDomainError("square root of a negative value");
          st[top] = std::sqrt(st[top]);
          break;
      }
    }
    const double r = st[0];
    if (!std::isfinite(r)) throw EvalDomainError("non-finite value");
    return r;
  }

 private:
  static constexpr int kStackCap = 64;
  struct Op {
    ExprKind kind;
    int k = 0;
    double c = 0;
  };
  std::vector<Op> ops_;
  int depth_ = 0;

  void build(const ExprPtr& e, int d) {
    switch (e->kind) {
      case ExprKind::Constant:
        ops_.push_back({e->kind, 0, e->value});
        break;
      case ExprKind::Variable:
        ops_.push_back({e->kind, e->var, 0});
        break;
      case ExprKind::Pow:
        build(e->a, d);
        ops_.push_back({e->kind, e->exponent, 0});
        break;
      case ExprKind::Neg:
      case ExprKind::Sin:
      case ExprKind::Cos:
      case ExprKind::Exp:
      case ExprKind::Sqrt:
        build(e->a, d);
        ops_.push_back({e->kind, 0, 0});
        break;
      default:
        build(e->a, d);
        build(e->b, d + 1);
        ops_.push_back({e->kind, 0, 0});
        break;
    }
    depth_ = std::max(depth_, d + 1);
  }
};

/// Tree-walking evaluation (reference path; the tape is the fast path).
inline double evaluate_expression(const ExprPtr& e, std::span<const double> x) {
  switch (e->kind) {
    case ExprKind::Constant:
      return e->value;
    case ExprKind::Variable:
      return x[static_cast<std::size_t>(e->var)];
    case ExprKind::Add:
      return evaluate_expression(e->a, x) + evaluate_expression(e->b, x);
    case ExprKind::Sub:
      return evaluate_expression(e->a, x) - evaluate_expression(e->b, x);
    case ExprKind::Mul:
      return evaluate_expression(e->a, x) * evaluate_expression(e->b, x);
    case ExprKind::Div: {
      const double den = evaluate_expression(e->b, x);
      if (den == 0.0) throw EvalDomainError("division by zero");
      return evaluate_expression(e->a, x) / den;
    }
    case ExprKind::Pow:
      return ipow(evaluate_expression(e->a, x), e->exponent);
    case ExprKind::Neg:
      return -evaluate_expression(e->a, x);
    case ExprKind::Sin:
      return std::sin(evaluate_expression(e->a, x));
    case ExprKind::Cos:
      return std::cos(evaluate_expression(e->a, x));
    case ExprKind::Exp:
      return std::exp(evaluate_expression(e->a, x));
    case ExprKind::Sqrt: {
      const double v = evaluate_expression(e->a, x);
      if (v < 0.0) throw EvalDomainError("square root of a negative value");
      return std::sqrt(v);
    }
  }
  throw std::logic_error("evaluate: bad node");
}

}  // namespace conley
