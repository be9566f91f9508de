#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "conley/expression.hpp"

using namespace conley;

namespace {

double eval1(const ExprPtr& e, double x) {
  return evaluate_expression(e, std::span<const double>(&x, 1));
}

double eval2(const ExprPtr& e, double x0, double x1) {
  const double xs[2] = {x0, x1};
  return evaluate_expression(e, std::span<const double>(xs, 2));
}

}  // namespace

TEST_CASE("parse: power term") {
  auto e = parse_expression("x0^2", 1);
  REQUIRE(e->kind == ExprKind::Pow);
  REQUIRE(e->exponent == 2);
  REQUIRE(e->a->kind == ExprKind::Variable);
  REQUIRE(e->a->var == 0);
}

TEST_CASE("parse: sum of cosines") {
  auto e = parse_expression("cos(2*pi*x0) + cos(2*pi*x1)", 2);
  REQUIRE(e->kind == ExprKind::Add);
  REQUIRE(e->a->kind == ExprKind::Cos);
  REQUIRE(e->b->kind == ExprKind::Cos);
  REQUIRE(eval2(e, 0, 0) == Catch::Approx(2.0));
  REQUIRE(eval2(e, 0.5, 0.5) == Catch::Approx(-2.0));
}

TEST_CASE("parse: malformed input reports the offset") {
  try {
    parse_expression("x0 +", 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    REQUIRE(e.offset == 4);
  }
}

TEST_CASE("parse: unknown identifier and out-of-range variable") {
  REQUIRE_THROWS_AS(parse_expression("foo(x0)", 1), ParseError);
  REQUIRE_THROWS_AS(parse_expression("x1 + 1", 1), ParseError);
  REQUIRE_THROWS_AS(parse_expression("", 1), ParseError);
}

TEST_CASE("parse: exponent grammar") {
  // Right-associative chains fold to an integer.
  auto e = parse_expression("x0^3^2", 1);
  REQUIRE(e->kind == ExprKind::Pow);
  REQUIRE(e->exponent == 9);
  auto inv = parse_expression("x0^-1", 1);
  REQUIRE(inv->exponent == -1);
  REQUIRE_THROWS_AS(parse_expression("x0^x0", 1), ParseError);
  REQUIRE_THROWS_AS(parse_expression("x0^0.5", 1), ParseError);
}

TEST_CASE("parse: precedence") {
  // ^ binds tighter than unary minus: -x^2 is -(x^2).
  auto e = parse_expression("-x0^2", 1);
  REQUIRE(eval1(e, 3.0) == Catch::Approx(-9.0));
  REQUIRE(eval1(parse_expression("2*x0+1", 1), 4.0) == Catch::Approx(9.0));
  REQUIRE(eval1(parse_expression("2*(x0+1)", 1), 4.0) == Catch::Approx(10.0));
  REQUIRE(eval1(parse_expression("1-2-3", 1), 0.0) == Catch::Approx(-4.0));  // left-assoc
  REQUIRE(eval1(parse_expression("8/4/2", 1), 0.0) == Catch::Approx(1.0));
}

TEST_CASE("differentiate: power rule keeps the simplified form") {
  auto e = parse_expression("x0^2", 1);
  auto d = differentiate(e, 0);
  // 2 * x0 exactly: Mul(Const 2, Var 0).
  REQUIRE(d->kind == ExprKind::Mul);
  REQUIRE(d->a->kind == ExprKind::Constant);
  REQUIRE(d->a->value == 2.0);
  REQUIRE(d->b->kind == ExprKind::Variable);
}

TEST_CASE("differentiate: independent variable gives zero") {
  auto e = parse_expression("sin(x1)", 2);
  auto d = differentiate(e, 0);
  REQUIRE(d->kind == ExprKind::Constant);
  REQUIRE(d->value == 0.0);
}

TEST_CASE("differentiate: chain rule value") {
  auto e = parse_expression("cos(2*pi*x0)", 1);
  auto d = differentiate(e, 0);
  const double tau = 2 * std::numbers::pi;
  for (double x : {0.1, 0.37, 0.9})
    REQUIRE(eval1(d, x) == Catch::Approx(-tau * std::sin(tau * x)).margin(1e-12));
}

TEST_CASE("evaluate: spec values and domain errors") {
  REQUIRE(eval1(parse_expression("x0^2", 1), 0.5) == Catch::Approx(0.25));
  REQUIRE_THROWS_AS(eval1(parse_expression("1/x0", 1), 0.0), EvalDomainError);
  REQUIRE_THROWS_AS(eval1(parse_expression("sqrt(x0)", 1), -1.0), EvalDomainError);
  REQUIRE_THROWS_AS(eval1(parse_expression("x0^-1", 1), 0.0), EvalDomainError);
}

TEST_CASE("tape evaluation matches the tree walker") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const char* exprs[] = {"x0^2 - x1^2", "cos(2*pi*x0) + cos(2*pi*x1)",
                         "(x0^2 + x1^2 - 1)^2 + 0.1*x0", "exp(-x0^2)*sin(x1) + x0/(x1^2+1)"};
  for (const char* s : exprs) {
    auto e = parse_expression(s, 2);
    EvalTape tape(e);
    for (int k = 0; k < 200; ++k) {
      const double xs[2] = {u(rng), u(rng)};
      REQUIRE(tape.eval(std::span<const double>(xs, 2)) ==
              Catch::Approx(evaluate_expression(e, std::span<const double>(xs, 2))).margin(1e-13));
    }
  }
}

namespace {

// Random expression generator for the round-trip property.
ExprPtr random_expr(std::mt19937_64& rng, int depth, int n_vars) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
  std::uniform_real_distribution<double> cval(-4.0, 4.0);
  std::uniform_int_distribution<int> var(0, n_vars - 1);
  std::uniform_int_distribution<int> expn(2, 4);
  switch (pick(rng)) {
    case 0:
      return make_const(cval(rng));
    case 1:
    case 2:
      return make_var(var(rng));
    case 3:
      return make_add(random_expr(rng, depth - 1, n_vars), random_expr(rng, depth - 1, n_vars));
    case 4:
      return make_sub(random_expr(rng, depth - 1, n_vars), random_expr(rng, depth - 1, n_vars));
    case 5:
      return make_mul(random_expr(rng, depth - 1, n_vars), random_expr(rng, depth - 1, n_vars));
    case 6:
      return make_div(random_expr(rng, depth - 1, n_vars), random_expr(rng, depth - 1, n_vars));
    case 7:
      return make_neg(random_expr(rng, depth - 1, n_vars));
    case 8:
      return make_pow(random_expr(rng, depth - 1, n_vars), expn(rng));
    default:
      return make_fn(ExprKind::Sin, random_expr(rng, depth - 1, n_vars));
  }
}

}  // namespace

TEST_CASE("print then parse is structurally identical") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 300; ++k) {
    auto e = random_expr(rng, 4, 2);
    const std::string text = print_expression(e);
    CAPTURE(text);
    auto back = parse_expression(text, 2);
    REQUIRE(structurally_equal(e, back));
  }
}
