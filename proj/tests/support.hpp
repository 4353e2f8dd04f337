#pragma once

// Independent reference values and generators shared by the test programs.
// Nothing here calls the library's quadrature or solvers.

#include <cmath>
#include <random>
#include <string>

#include "sizestruct/expr.hpp"

namespace oracle {

// int_0^m e^{-k s} (1 + b s) ds
inline double exp_linear_integral(double k, double b, double m) {
  const double e = std::exp(-k * m);
  return (1.0 - e) / k + b * (1.0 - e * (1.0 + k * m)) / (k * k);
}

// int_0^m e^{-a s} cos(b s) ds
inline double exp_cos_integral(double a, double b, double m) {
  const double at_m = std::exp(-a * m) * (-a * std::cos(b * m) + b * std::sin(b * m));
  const double at_0 = -a;
  return (at_m - at_0) / (a * a + b * b);
}

// gamma = 1, mu = 0.5, w = 1, theta = 1.5, m = 8,
// beta = 0.5 e^tau (0.7 + sin(2s)^2) at Q = 0. Uses sin^2 = (1 - cos 2x)/2.
inline double R00_sin_preset() {
  const double a = 0.5, m = 8.0, theta = 1.5;
  const double space = 1.2 * (1.0 - std::exp(-a * m)) / a - 0.5 * exp_cos_integral(a, 4.0, m);
  return 0.5 * (1.0 - std::exp(-theta)) * space;
}

// beta = 0.55 e^tau (1 + cos(0.1 s)^2) at Q = 0, same other rates.
inline double R00_cos_preset() {
  const double a = 0.5, m = 8.0, theta = 1.5;
  const double space = 1.5 * (1.0 - std::exp(-a * m)) / a + 0.5 * exp_cos_integral(a, 0.2, m);
  return 0.55 * (1.0 - std::exp(-theta)) * space;
}

// gamma = 1, mu = c, w = 1, beta = e^tau (1 + b s)(1 - Q) while Q < 1.
// With Pi = e^{-cs} the stationary profile is p* = P e^{-cs}/N and
// Q*(s) = P q(s), q = alpha F + (1 - F), F(s) = (1 - e^{-cs})/(1 - e^{-cm}).
// Then R(P) = k (A - P B) with k = 1 - e^{-theta}, A = int e^{-cs}(1+bs),
// B = int e^{-cs}(1+bs) q(s) ds = A - (1-alpha)(A - I(2c))/(1 - e^{-cm}).
struct LinearHierarchy {
  double c = 0.58, b = 1.8, alpha = 0.6, theta = 0.5, m = 8.0;

  double k() const { return 1.0 - std::exp(-theta); }
  double A() const { return exp_linear_integral(c, b, m); }
  double B() const {
    const double Fden = 1.0 - std::exp(-c * m);
    return A() - (1.0 - alpha) * (A() - exp_linear_integral(2.0 * c, b, m)) / Fden;
  }
  double P_star() const { return (A() - 1.0 / k()) / B(); }
  double N() const { return (1.0 - std::exp(-c * m)) / c; }
  double p_star(double s) const { return P_star() * std::exp(-c * s) / N(); }
  double Q_star(double s) const {
    const double F = (1.0 - std::exp(-c * s)) / (1.0 - std::exp(-c * m));
    return P_star() * (alpha * F + 1.0 - F);
  }
};

}  // namespace oracle

namespace testgen {

// Random expression text over the given variables. Literals are kept in a
// modest range so values stay well scaled for finite differences.
class ExprGenerator {
 public:
  // vars: letters from s, P, Q, t (tau), d (delta).
  explicit ExprGenerator(std::uint64_t seed, std::string vars = "sPQ")
      : rng_(seed), vars_(std::move(vars)) {}

  std::string generate(int depth) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (depth <= 0 || u(rng_) < 0.25) return leaf();
    const double pick = u(rng_);
    if (pick < 0.45) {
      static const char* ops[] = {"+", "-", "*", "/"};
      const char* op = ops[std::uniform_int_distribution<int>(0, 3)(rng_)];
      return wrap(generate(depth - 1) + space() + op + space() + generate(depth - 1));
    }
    if (pick < 0.55) {
      static const char* exps[] = {"2", "3", "0.5", "1.5", "-1"};
      return "(" + generate(depth - 1) + ")^" + exps[std::uniform_int_distribution<int>(0, 4)(rng_)];
    }
    if (pick < 0.62) return "-" + wrap(generate(depth - 1));
    static const char* unary[] = {"sin", "cos", "exp", "ln", "sqrt", "abs"};
    if (pick < 0.9) {
      const char* f = unary[std::uniform_int_distribution<int>(0, 5)(rng_)];
      std::string arg = generate(depth - 1);
      if (std::string(f) == "exp") arg = "0.3*(" + arg + ")";
      return std::string(f) + "(" + space() + arg + space() + ")";
    }
    const char* f = u(rng_) < 0.5 ? "max" : "min";
    return std::string(f) + "(" + generate(depth - 1) + "," + space() + generate(depth - 1) + ")";
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::string leaf() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (!vars_.empty() && u(rng_) < 0.55) {
      const auto i = std::uniform_int_distribution<std::size_t>(0, vars_.size() - 1)(rng_);
      switch (vars_[i]) {
        case 't':
          return "tau";
        case 'd':
          return "delta";
        default:
          return std::string(1, vars_[i]);
      }
    }
    const double v = std::round(std::uniform_real_distribution<double>(0.1, 3.0)(rng_) * 100) / 100;
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
    return s;
  }
  std::string wrap(const std::string& s) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < 0.7 ? "(" + s + ")" : s;
  }
  std::string space() {
    return std::uniform_int_distribution<int>(0, 3)(rng_) == 0 ? " " : "";
  }

  std::mt19937_64 rng_;
  std::string vars_;
};

// True when the point lies at least `margin` away from every kink or
// singularity of e (abs/max/min switching points, ln/sqrt/division/pow
// boundaries) and every subexpression evaluates.
inline bool well_inside(const sizestruct::Expr& e, const sizestruct::Bindings& b, double margin) {
  using namespace sizestruct;
  for (const auto& op : e.operands()) {
    if (!well_inside(op, b, margin)) return false;
  }
  try {
    switch (e.kind()) {
      case Expr::Kind::binary: {
        const double l = eval_expr(e.operands()[0], b);
        const double r = eval_expr(e.operands()[1], b);
        if (e.binary_op() == BinaryOp::div && std::fabs(r) < margin) return false;
        if (e.binary_op() == BinaryOp::pow && l < margin) return false;
        break;
      }
      case Expr::Kind::call: {
        const double a = eval_expr(e.operands()[0], b);
        switch (e.function()) {
          case Function::ln:
          case Function::sqrt:
            if (a < margin) return false;
            break;
          case Function::abs:
          case Function::sign:
            if (std::fabs(a) < margin) return false;
            break;
          case Function::max:
          case Function::min:
            if (std::fabs(a - eval_expr(e.operands()[1], b)) < margin) return false;
            break;
          default:
            break;
        }
        break;
      }
      default:
        break;
    }
    return std::isfinite(eval_expr(e, b));
  } catch (const EvalError&) {
    return false;
  }
}

}  // namespace testgen
