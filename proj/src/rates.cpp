#include "sizestruct/rates.hpp"

#include <cmath>
#include <sstream>

namespace sizestruct {

namespace {

void require_only(const Expr& e, std::uint8_t allowed, const char* name) {
  if ((e.variables() & ~allowed) != 0) {
    std::string bad;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
      const auto v = static_cast<Variable>(i);
      if ((e.variables() & ~allowed & Bindings::bit(v)) != 0) bad = variable_name(v);
    }
    throw RateError(std::string(name) + " may not depend on '" + bad + "'");
  }
}

}  // namespace

RateSet RateSet::make(Expr gamma, Expr mu, Expr beta, Expr w, double alpha, double theta,
                      double m) {
  using V = Variable;
  const auto sP = std::uint8_t(Bindings::bit(V::s) | Bindings::bit(V::P));
  require_only(gamma, sP, "gamma");
  require_only(mu, sP, "mu");
  require_only(beta, Bindings::bit(V::s) | Bindings::bit(V::tau) | Bindings::bit(V::Q), "beta");
  require_only(w, Bindings::bit(V::s), "w");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw RateError("alpha must lie in [0, 1)");
  if (!(theta > 0.0)) throw RateError("theta must be positive");
  if (!(m > 0.0)) throw RateError("m must be positive");

  RateSet r;
  r.gamma = std::move(gamma);
  r.mu = std::move(mu);
  r.beta = std::move(beta);
  r.w = std::move(w);
  r.alpha = alpha;
  r.theta = theta;
  r.m = m;

  r.gamma_s = diff_expr(r.gamma, V::s);
  r.gamma_P = diff_expr(r.gamma, V::P);
  r.gamma_sP = diff_expr(r.gamma_s, V::P);
  r.mu_P = diff_expr(r.mu, V::P);
  r.beta_Q = diff_expr(r.beta, V::Q);

  r.c_gamma = CompiledExpr(r.gamma);
  r.c_mu = CompiledExpr(r.mu);
  r.c_beta = CompiledExpr(r.beta);
  r.c_w = CompiledExpr(r.w);
  r.c_gamma_s = CompiledExpr(r.gamma_s);
  r.c_gamma_P = CompiledExpr(r.gamma_P);
  r.c_gamma_sP = CompiledExpr(r.gamma_sP);
  r.c_mu_P = CompiledExpr(r.mu_P);
  r.c_beta_Q = CompiledExpr(r.beta_Q);
  return r;
}

RateSet RateSet::parse(const std::string& gamma, const std::string& mu, const std::string& beta,
                       const std::string& w, double alpha, double theta, double m) {
  return make(parse_expr(gamma), parse_expr(mu), parse_expr(beta), parse_expr(w), alpha, theta,
              m);
}

void validate_rates(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid,
                    const std::vector<double>& P_values, const std::vector<double>& Q_values) {
  auto fail = [](const std::string& what, double s) {
    std::ostringstream os;
    os << what << " at s = " << s;
    throw RateError(os.str());
  };
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double s = grid.node(i);
    if (!(r.w_at(s) > 0.0)) fail("w must be positive", s);
    for (double P : P_values) {
      if (!(r.gamma_at(s, P) > 0.0)) fail("gamma must be positive", s);
      if (!(r.mu_at(s, P) >= 0.0)) fail("mu must be non-negative", s);
    }
    for (Eigen::Index j = 0; j < dgrid.size(); ++j) {
      for (double Q : Q_values) {
        if (!(r.beta_at(s, dgrid.node(j), Q) >= 0.0)) fail("beta must be non-negative", s);
      }
    }
  }
}

double newborn_growth_deviation(const RateSet& r, const std::vector<double>& P_values) {
  double worst = 0.0;
  for (double P : P_values) worst = std::max(worst, std::fabs(r.gamma_at(0.0, P) - 1.0));
  return worst;
}

}  // namespace sizestruct
