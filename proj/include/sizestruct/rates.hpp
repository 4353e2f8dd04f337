#pragma once

#include <string>
#include <vector>

#include "sizestruct/expr.hpp"
#include "sizestruct/numerics.hpp"

namespace sizestruct {

class RateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vital rates gamma(s,P), mu(s,P), beta(s,tau,Q), w(s), the hierarchy
/// strength alpha, maximum delay theta and maximum size m, together with the
/// partial derivatives the linearisation needs.
struct RateSet {
  Expr gamma, mu, beta, w;
  double alpha = 0.0;
  double theta = 1.0;
  double m = 1.0;

  Expr gamma_s, gamma_P, gamma_sP, mu_P, beta_Q;

  // Compiled forms of every expression above, for inner loops.
  CompiledExpr c_gamma, c_mu, c_beta, c_w;
  CompiledExpr c_gamma_s, c_gamma_P, c_gamma_sP, c_mu_P, c_beta_Q;

  static RateSet make(Expr gamma, Expr mu, Expr beta, Expr w, double alpha, double theta,
                      double m);
  static RateSet parse(const std::string& gamma, const std::string& mu, const std::string& beta,
                       const std::string& w, double alpha, double theta, double m);

  double gamma_at(double s, double P) const { return c_gamma(Bindings().set(Variable::s, s).set(Variable::P, P)); }
  double mu_at(double s, double P) const { return c_mu(Bindings().set(Variable::s, s).set(Variable::P, P)); }
  double w_at(double s) const { return c_w(Bindings().set(Variable::s, s)); }
  double beta_at(double s, double tau, double Q) const {
    return c_beta(Bindings().set(Variable::s, s).set(Variable::tau, tau).set(Variable::Q, Q));
  }
  double beta_Q_at(double s, double tau, double Q) const {
    return c_beta_Q(Bindings().set(Variable::s, s).set(Variable::tau, tau).set(Variable::Q, Q));
  }
};

/// Checks the sign conditions on the grid: w > 0 and gamma > 0, mu >= 0,
/// beta >= 0 (at the given P and Q values). Throws RateError naming the first
/// offending node.
void validate_rates(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid,
                    const std::vector<double>& P_values, const std::vector<double>& Q_values);

/// Largest |gamma(0,P) - 1| over the P values; newborn growth is assumed
/// normalised to one.
double newborn_growth_deviation(const RateSet& r, const std::vector<double>& P_values);

}  // namespace sizestruct
