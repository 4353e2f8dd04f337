#pragma once

// Scalar semantics shared by the tree walker and the compiled evaluator.

#include <cmath>
#include <string>

#include "sizestruct/expr.hpp"

namespace sizestruct::detail {

[[noreturn]] inline void domain_error(const std::string& what) {
  throw EvalError(EvalError::Kind::domain, what);
}

inline double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::add:
      return a + b;
    case BinaryOp::sub:
      return a - b;
    case BinaryOp::mul:
      return a * b;
    case BinaryOp::div:
      if (b == 0.0) domain_error("division by zero");
      return a / b;
    case BinaryOp::pow:
      if (a < 0.0 && std::trunc(b) != b) domain_error("negative base with non-integer exponent");
      if (a == 0.0 && b < 0.0) domain_error("zero raised to a negative power");
      return std::pow(a, b);
  }
  return 0.0;
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double apply_unary_function(Function f, double x) {
  switch (f) {
    case Function::sin:
      return std::sin(x);
    case Function::cos:
      return std::cos(x);
    case Function::exp:
      return std::exp(x);
    case Function::ln:
      if (!(x > 0.0)) domain_error("ln of non-positive argument");
      return std::log(x);
    case Function::sqrt:
      if (x < 0.0) domain_error("sqrt of negative argument");
      return std::sqrt(x);
    case Function::abs:
      return std::fabs(x);
    case Function::sign:
      return sign_of(x);
    default:
      break;
  }
  return 0.0;
}

inline double apply_binary_function(Function f, double a, double b) {
  return f == Function::max ? (a < b ? b : a) : (b < a ? b : a);
}

}  // namespace sizestruct::detail
