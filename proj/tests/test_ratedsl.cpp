#include <doctest.h>

#include <cmath>

#include "sizestruct/expr.hpp"
#include "support.hpp"

using namespace sizestruct;

namespace {

Bindings at(double s = 0, double P = 0, double Q = 0, double tau = 0, double delta = 0) {
  return Bindings()
      .set(Variable::s, s)
      .set(Variable::P, P)
      .set(Variable::Q, Q)
      .set(Variable::tau, tau)
      .set(Variable::delta, delta);
}

double ev(const char* text, const Bindings& b = at()) { return eval_expr(parse_expr(text), b); }

std::size_t parse_error_offset(const char* text) {
  try {
    parse_expr(text);
  } catch (const ParseError& e) {
    return e.offset();
  }
  FAIL("expected a parse error for '" << text << "'");
  return 0;
}

}  // namespace

TEST_CASE("literals, variables and constants") {
  const Expr one = parse_expr("1");
  CHECK(one.is_literal(1.0));
  CHECK(ev("2.5e1") == 25.0);
  CHECK(ev(".5") == 0.5);
  CHECK(ev("pi") == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(ev("e") == doctest::Approx(M_E).epsilon(1e-15));
  CHECK(ev("s + P*Q - tau / delta", at(1, 2, 3, 4, 8)) == 1.0 + 6.0 - 0.5);
  CHECK(parse_expr("  s\t*\n2 ") == parse_expr("s*2"));
}

TEST_CASE("precedence and associativity") {
  CHECK(ev("-2^2") == -4.0);
  CHECK(ev("2^3^2") == 512.0);
  CHECK(ev("2^-1") == 0.5);
  CHECK(ev("1-2-3") == -4.0);
  CHECK(ev("8/4/2") == 1.0);
  CHECK(ev("1+2*3") == 7.0);
  CHECK(ev("(1+2)*3") == 9.0);
  CHECK(ev("--3") == 3.0);
  CHECK(ev("2*-3") == -6.0);
}

TEST_CASE("birth rate with a product chain evaluates by direct arithmetic") {
  const Expr beta = parse_expr("0.5*exp(tau)*(0.7+sin(2*s)^2)*(1-Q)");
  CHECK(beta.kind() == Expr::Kind::binary);
  CHECK(beta.binary_op() == BinaryOp::mul);
  CHECK(eval_expr(beta, at(0, 0, 0, 0)) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(ev("exp(tau)", at()) == 1.0);
}

TEST_CASE("functions") {
  CHECK(ev("max(1, 2)") == 2.0);
  CHECK(ev("min(1, 2)") == 1.0);
  CHECK(ev("abs(-3)") == 3.0);
  CHECK(ev("sqrt(16)") == 4.0);
  CHECK(ev("ln(e)") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ev("sign(-2) + sign(0) + sign(5)") == 0.0);
  CHECK(ev("cos(0) + sin(0)") == 1.0);
  CHECK(ev("(-8)^3") == -512.0);
}

TEST_CASE("evaluation errors") {
  auto kind_of = [](const char* text, const Bindings& b) {
    try {
      eval_expr(parse_expr(text), b);
    } catch (const EvalError& e) {
      return e.kind();
    }
    FAIL("expected an evaluation error for '" << text << "'");
    return EvalError::Kind::domain;
  };
  CHECK(kind_of("ln(s)", at(0)) == EvalError::Kind::domain);
  CHECK(kind_of("ln(s)", at(-1)) == EvalError::Kind::domain);
  CHECK(kind_of("sqrt(s)", at(-1)) == EvalError::Kind::domain);
  CHECK(kind_of("1/s", at(0)) == EvalError::Kind::domain);
  CHECK(kind_of("s^(-1)", at(0)) == EvalError::Kind::domain);
  CHECK(kind_of("s^0.5", at(-4)) == EvalError::Kind::domain);
  CHECK(kind_of("s + Q", Bindings().set(Variable::s, 1)) == EvalError::Kind::unbound_variable);
  CHECK_THROWS_AS(CompiledExpr(parse_expr("1/s"))(at(0)), EvalError);
  CHECK_THROWS_AS(CompiledExpr(parse_expr("P"))(Bindings()), EvalError);
  CHECK_THROWS_AS(Bindings().get(Variable::Q), EvalError);
}

TEST_CASE("parse errors report offsets") {
  CHECK(parse_error_offset("s+") == 2);
  CHECK(parse_error_offset("") == 0);
  CHECK(parse_error_offset("   ") == 3);
  CHECK(parse_error_offset("(s+1") == 4);
  CHECK(parse_error_offset("s+1)") == 3);
  CHECK(parse_error_offset("foo(s)") == 0);
  CHECK(parse_error_offset("2*x") == 2);
  CHECK(parse_error_offset("max(1)") == 0);
  CHECK(parse_error_offset("sin(1, 2)") == 0);
  CHECK(parse_error_offset("sin") == 0);
  CHECK(parse_error_offset("s $ 2") == 2);
  CHECK(parse_error_offset("*s") == 0);
  CHECK(parse_error_offset("s 2") == 2);
  CHECK(parse_error_offset("1e") == 1);
}

TEST_CASE("printer round trip on fixed cases") {
  for (const char* text : {"1", "-2^2", "2^3^2", "(1-Q)*3", "-(s)", "max(0, 1-Q)*exp(tau)",
                           "1e-300", "0.1+0.2", "s/(P*Q)", "--s", "2^-s", "-1.5"}) {
    const Expr e = parse_expr(text);
    CHECK_MESSAGE(parse_expr(to_string(e)) == e, text << " -> " << to_string(e));
  }
}

TEST_CASE("printer round trip on generated expressions") {
  testgen::ExprGenerator gen(20240601, "sPQtd");
  for (int i = 0; i < 500; ++i) {
    const std::string text = gen.generate(5);
    const Expr e = parse_expr(text);
    const std::string printed = to_string(e);
    CHECK_MESSAGE(parse_expr(printed) == e, text << " -> " << printed);
    CHECK(to_string(parse_expr(printed)) == printed);
  }
}

TEST_CASE("symbolic derivatives on worked cases") {
  const Bindings b = at(0.7, 1.3, 0.4, -0.2);
  CHECK(diff_expr(parse_expr("(1-Q)*3"), Variable::Q) == Expr::literal(-3.0));
  const Expr d = diff_expr(parse_expr("sin(2*s)^2"), Variable::s);
  for (double s : {0.0, 0.3, 1.1, 4.0}) {
    Bindings bs = b;
    bs.set(Variable::s, s);
    CHECK(eval_expr(d, bs) == doctest::Approx(4 * std::sin(2 * s) * std::cos(2 * s)).epsilon(1e-14));
  }
  CHECK(diff_expr(parse_expr("1"), Variable::P) == Expr::literal(0.0));
  CHECK(eval_expr(diff_expr(parse_expr("abs(s)"), Variable::s), at(0)) == 0.0);
  CHECK(eval_expr(diff_expr(parse_expr("abs(s)"), Variable::s), at(-2)) == -1.0);
  CHECK(eval_expr(diff_expr(parse_expr("max(0, 1-Q)"), Variable::Q), at(0, 0, 0.5)) == -1.0);
  CHECK(eval_expr(diff_expr(parse_expr("max(0, 1-Q)"), Variable::Q), at(0, 0, 2.0)) == 0.0);
  CHECK(eval_expr(diff_expr(parse_expr("min(s, 1)"), Variable::s), at(0.5)) == 1.0);
  CHECK(eval_expr(diff_expr(parse_expr("s^s"), Variable::s), at(2.0)) ==
        doctest::Approx(4.0 * (std::log(2.0) + 1.0)).epsilon(1e-14));
  CHECK(eval_expr(diff_expr(parse_expr("2^s"), Variable::s), at(3.0)) ==
        doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(eval_expr(diff_expr(parse_expr("ln(s)/sqrt(s)"), Variable::s), at(4.0)) ==
        doctest::Approx((1.0 - 0.5 * std::log(4.0)) / 8.0).epsilon(1e-14));
  const Expr mixed = diff_expr(diff_expr(parse_expr("s^2*P^3"), Variable::s), Variable::P);
  CHECK(eval_expr(mixed, at(2.0, 3.0)) == doctest::Approx(6 * 2.0 * 9.0).epsilon(1e-14));
}

TEST_CASE("variable-free expressions differentiate to zero") {
  testgen::ExprGenerator gen(7, "");
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse_expr(gen.generate(4));
    for (auto v : {Variable::s, Variable::P, Variable::Q, Variable::tau, Variable::delta}) {
      const Expr d = diff_expr(e, v);
      CHECK(d.variables() == 0);
      CHECK(eval_expr(d, Bindings()) == 0.0);
      ++checked;
    }
  }
  CHECK(checked == 1000);
}

TEST_CASE("compiled evaluation matches the tree walker") {
  testgen::ExprGenerator gen(99, "sPQtd");
  std::uniform_real_distribution<double> x(-2.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    const Expr e = parse_expr(gen.generate(5));
    const CompiledExpr c(e);
    const Bindings b = at(x(gen.rng()), x(gen.rng()), x(gen.rng()), x(gen.rng()), x(gen.rng()));
    bool tree_threw = false, compiled_threw = false;
    double tv = 0, cv = 0;
    try {
      tv = eval_expr(e, b);
    } catch (const EvalError&) {
      tree_threw = true;
    }
    try {
      cv = c(b);
    } catch (const EvalError&) {
      compiled_threw = true;
    }
    CHECK(tree_threw == compiled_threw);
    if (!tree_threw && !compiled_threw && std::isfinite(tv)) CHECK(tv == cv);
  }
}

TEST_CASE("symbolic derivative agrees with central differences on 100 random expressions") {
  testgen::ExprGenerator gen(314159, "sPQ");
  std::uniform_real_distribution<double> x(0.1, 2.5);
  const Variable vars[] = {Variable::s, Variable::P, Variable::Q};
  int accepted = 0, attempts = 0;
  while (accepted < 100 && attempts < 100000) {
    ++attempts;
    const Expr e = parse_expr(gen.generate(4));
    const Variable v = vars[std::uniform_int_distribution<int>(0, 2)(gen.rng())];
    if (!e.depends_on(v)) continue;
    Bindings b = at(x(gen.rng()), x(gen.rng()), x(gen.rng()));
    if (!testgen::well_inside(e, b, 1e-3)) continue;
    const double x0 = b.get(v);
    const double h = 1e-6 * std::max(1.0, std::fabs(x0));
    Bindings lo = b, hi = b;
    lo.set(v, x0 - h);
    hi.set(v, x0 + h);
    if (!testgen::well_inside(e, lo, 1e-3) || !testgen::well_inside(e, hi, 1e-3)) continue;
    const double f0 = eval_expr(e, b);
    // Round-off in the difference quotient is about eps*|f|/h; points where
    // that alone exceeds the tolerance say nothing about the derivative.
    if (std::fabs(f0) > 1e3) continue;
    const double fd = (eval_expr(e, hi) - eval_expr(e, lo)) / (2.0 * h);
    const double exact = eval_expr(diff_expr(e, v), b);
    const double rel = std::fabs(exact - fd) / std::max(1.0, std::fabs(exact));
    CHECK_MESSAGE(rel <= 1e-6, to_string(e) << " d/" << variable_name(v) << " exact " << exact
                                            << " fd " << fd);
    ++accepted;
  }
  CHECK(accepted == 100);
}
