#include <cmath>

#include "expr_ops.hpp"
#include "sizestruct/expr.hpp"

namespace sizestruct {

namespace {

// Smart constructors: fold literal subtrees, drop additive zeros and
// multiplicative ones/zeros. A fold that would raise a domain error is left
// unfolded so the error surfaces at evaluation time.

Expr lit(double v) { return Expr::literal(v); }

Expr neg(const Expr& a) {
  if (a.is_literal()) return lit(-a.literal_value());
  if (a.kind() == Expr::Kind::negate) return a.operands()[0];
  return Expr::negate(a);
}

Expr fold_binary(BinaryOp op, const Expr& a, const Expr& b) {
  if (a.is_literal() && b.is_literal()) {
    try {
      return lit(detail::apply_binary(op, a.literal_value(), b.literal_value()));
    } catch (const EvalError&) {
    }
  }
  return Expr::binary(op, a, b);
}

Expr add(const Expr& a, const Expr& b) {
  if (a.is_literal(0.0)) return b;
  if (b.is_literal(0.0)) return a;
  return fold_binary(BinaryOp::add, a, b);
}

Expr sub(const Expr& a, const Expr& b) {
  if (b.is_literal(0.0)) return a;
  if (a.is_literal(0.0)) return neg(b);
  return fold_binary(BinaryOp::sub, a, b);
}

Expr mul(const Expr& a, const Expr& b) {
  if (a.is_literal(0.0) || b.is_literal(0.0)) return lit(0.0);
  if (a.is_literal(1.0)) return b;
  if (b.is_literal(1.0)) return a;
  if (a.is_literal(-1.0)) return neg(b);
  if (b.is_literal(-1.0)) return neg(a);
  return fold_binary(BinaryOp::mul, a, b);
}

Expr div(const Expr& a, const Expr& b) {
  if (b.is_literal(1.0)) return a;
  if (a.is_literal(0.0) && !b.is_literal(0.0)) return lit(0.0);
  return fold_binary(BinaryOp::div, a, b);
}

Expr pow(const Expr& a, const Expr& b) {
  if (b.is_literal(1.0)) return a;
  return fold_binary(BinaryOp::pow, a, b);
}

Expr call(Function f, std::vector<Expr> args) {
  bool all_literal = true;
  for (const auto& x : args) all_literal = all_literal && x.is_literal();
  Expr e = Expr::call(f, std::move(args));
  if (all_literal) {
    try {
      return lit(eval_expr(e, Bindings{}));
    } catch (const EvalError&) {
    }
  }
  return e;
}

Expr call1(Function f, const Expr& a) { return call(f, {a}); }

Expr diff(const Expr& e, Variable v) {
  if (!e.depends_on(v)) return lit(0.0);
  switch (e.kind()) {
    case Expr::Kind::literal:
      return lit(0.0);
    case Expr::Kind::variable:
      return lit(e.variable_id() == v ? 1.0 : 0.0);
    case Expr::Kind::negate:
      return neg(diff(e.operands()[0], v));
    case Expr::Kind::binary: {
      const Expr& a = e.operands()[0];
      const Expr& b = e.operands()[1];
      const Expr da = diff(a, v);
      const Expr db = diff(b, v);
      switch (e.binary_op()) {
        case BinaryOp::add:
          return add(da, db);
        case BinaryOp::sub:
          return sub(da, db);
        case BinaryOp::mul:
          return add(mul(da, b), mul(a, db));
        case BinaryOp::div:
          return div(sub(mul(da, b), mul(a, db)), pow(b, lit(2.0)));
        case BinaryOp::pow:
          if (!b.depends_on(v)) {
            // c a^(c-1) a'
            return mul(mul(b, pow(a, sub(b, lit(1.0)))), da);
          }
          if (!a.depends_on(v)) {
            // a^b ln(a) b'
            return mul(mul(e, call1(Function::ln, a)), db);
          }
          // a^b (b' ln a + b a'/a)
          return mul(e, add(mul(db, call1(Function::ln, a)), div(mul(b, da), a)));
      }
      break;
    }
    case Expr::Kind::call: {
      const auto& args = e.operands();
      if (args.size() == 2) {
        const Expr& a = args[0];
        const Expr& b = args[1];
        const Expr da = diff(a, v);
        const Expr db = diff(b, v);
        const Expr mean = mul(lit(0.5), add(da, db));
        const Expr jump = mul(mul(lit(0.5), call1(Function::sign, sub(a, b))), sub(da, db));
        return e.function() == Function::max ? add(mean, jump) : sub(mean, jump);
      }
      const Expr& a = args[0];
      const Expr da = diff(a, v);
      switch (e.function()) {
        case Function::sin:
          return mul(call1(Function::cos, a), da);
        case Function::cos:
          return neg(mul(call1(Function::sin, a), da));
        case Function::exp:
          return mul(e, da);
        case Function::ln:
          return div(da, a);
        case Function::sqrt:
          return div(da, mul(lit(2.0), e));
        case Function::abs:
          return mul(call1(Function::sign, a), da);
        case Function::sign:
          return lit(0.0);
        default:
          break;
      }
      break;
    }
  }
  return lit(0.0);
}

}  // namespace

Expr diff_expr(const Expr& e, Variable v) { return diff(e, v); }

}  // namespace sizestruct
