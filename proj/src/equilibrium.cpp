#include "sizestruct/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sizestruct {

Eigen::VectorXd survivorship_profile(const RateSet& r, double P, const SizeGrid& grid) {
  const Eigen::Index n = grid.size();
  Eigen::VectorXd rate(n);
  Bindings b;
  b.set(Variable::P, P);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.set(Variable::s, grid.node(i));
    const double g = r.c_gamma(b);
    if (!(g > 0.0)) {
      std::ostringstream os;
      os << "gamma must be positive, got " << g << " at s = " << grid.node(i) << ", P = " << P;
      throw RateError(os.str());
    }
    rate(i) = (r.c_mu(b) + r.c_gamma_s(b)) / g;
  }
  return (-cumulative_trapezoid(rate, grid.spacing())).array().exp().matrix();
}

Eigen::VectorXd hierarchy_weight(const RateSet& r, const Eigen::VectorXd& p,
                                 const SizeGrid& grid) {
  const Eigen::Index n = grid.size();
  Eigen::VectorXd wp(n);
  for (Eigen::Index i = 0; i < n; ++i) wp(i) = r.w_at(grid.node(i)) * p(i);
  const Eigen::VectorXd W = cumulative_trapezoid(wp, grid.spacing());
  const double total = W(n - 1);
  return (r.alpha * W.array() + (total - W.array())).matrix();
}

double reproduction_number(const RateSet& r, double P, const Eigen::VectorXd& Q,
                           const SizeGrid& grid, const DelayGrid& dgrid) {
  const Eigen::VectorXd Pi = survivorship_profile(r, P, grid);
  const Eigen::Index ns = grid.size();
  const Eigen::Index nt = dgrid.size();
  Eigen::VectorXd outer(ns);
  Eigen::VectorXd inner(nt);
  Bindings b;
  for (Eigen::Index i = 0; i < ns; ++i) {
    b.set(Variable::s, grid.node(i)).set(Variable::Q, Q(i));
    for (Eigen::Index j = 0; j < nt; ++j) {
      b.set(Variable::tau, dgrid.node(j));
      inner(j) = r.c_beta(b);
    }
    outer(i) = Pi(i) * trapezoid(inner, dgrid.spacing());
  }
  return trapezoid(outer, grid.spacing());
}

double reproduction_number_trivial(const RateSet& r, const SizeGrid& grid,
                                   const DelayGrid& dgrid) {
  return reproduction_number(r, 0.0, Eigen::VectorXd::Zero(grid.size()), grid, dgrid);
}

Eigen::VectorXd equilibrium_density(const RateSet& r, double P_star, const SizeGrid& grid) {
  if (!(P_star > 0.0)) throw NumericsError("equilibrium density needs P* > 0");
  const Eigen::VectorXd Pi = survivorship_profile(r, P_star, grid);
  const double mass = trapezoid(Pi, grid.spacing());
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw NumericsError("survivorship integrates to a degenerate value");
  }
  return (P_star / mass) * Pi;
}

EquilibriumSolution equilibrium_at(const RateSet& r, double P_star, const SizeGrid& grid) {
  EquilibriumSolution eq{grid, P_star, {}, {}, {}, false};
  eq.Pi_star = survivorship_profile(r, P_star, grid);
  eq.p_star = equilibrium_density(r, P_star, grid);
  eq.Q_star = hierarchy_weight(r, eq.p_star, grid);
  return eq;
}

EquilibriumSolution trivial_equilibrium(const RateSet& r, const SizeGrid& grid) {
  EquilibriumSolution eq{grid, 0.0, {}, {}, {}, true};
  eq.Pi_star = survivorship_profile(r, 0.0, grid);
  eq.p_star = Eigen::VectorXd::Zero(grid.size());
  eq.Q_star = Eigen::VectorXd::Zero(grid.size());
  return eq;
}

double default_population_bound(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid) {
  auto max_beta = [&](double Q) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      for (Eigen::Index j = 0; j < dgrid.size(); ++j) {
        best = std::max(best, r.beta_at(grid.node(i), dgrid.node(j), Q));
      }
    }
    return best;
  };
  double b = max_beta(0.0);
  if (!(b > 0.0)) b = max_beta(1.0);
  return 10.0 * r.m * b * r.theta;
}

EquilibriumSearch solve_equilibrium(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid,
                                    double P_max, Eigen::Index samples, double tol) {
  if (!(P_max > 0.0)) throw NumericsError("population search bound must be positive");
  auto excess_on = [&](const SizeGrid& g, const DelayGrid& d) {
    return [&r, g, d](double P) {
      const Eigen::VectorXd p = equilibrium_density(r, P, g);
      return reproduction_number(r, P, hierarchy_weight(r, p, g), g, d) - 1.0;
    };
  };
  const ScalarFunction fine = excess_on(grid, dgrid);

  // Each evaluation of the excess costs a full ns x ntau sweep of beta, so
  // the scan runs on a coarser grid and only the refinement uses the fine
  // one. A coarse bracket whose fine-grid endpoints agree in sign is widened
  // by one scan step per side before it is given up on.
  const SizeGrid coarse_grid(std::min<Eigen::Index>(grid.size(), kCoarseSizeNodes), r.m);
  const DelayGrid coarse_delay(std::min<Eigen::Index>(dgrid.size(), kCoarseDelayNodes), r.theta);
  const ScalarFunction coarse = excess_on(coarse_grid, coarse_delay);

  const double lo = 1e-9 * P_max;  // P = 0 is the trivial state
  const double step = (P_max - lo) / static_cast<double>(samples);
  EquilibriumSearch out;
  for (const auto& br : bracket_scan(coarse, lo, P_max, samples)) {
    double a = br.lo, b = br.hi;
    double fa = fine(a), fb = fine(b);
    for (int widen = 0; widen < 3 && fa != 0.0 && fb != 0.0 && (fa < 0.0) == (fb < 0.0);
         ++widen) {
      a = std::max(lo, a - step);
      b = std::min(P_max, b + step);
      fa = fine(a);
      fb = fine(b);
    }
    if (fa == 0.0) {
      out.roots.push_back(a);
    } else if (fb == 0.0) {
      out.roots.push_back(b);
    } else if ((fa < 0.0) != (fb < 0.0)) {
      out.roots.push_back(find_root_bracketed(fine, a, b, tol));
    }
  }
  std::sort(out.roots.begin(), out.roots.end());
  auto same = [&](double x, double y) {
    return std::fabs(x - y) <= 10.0 * tol * std::max(1.0, std::fabs(x));
  };
  out.roots.erase(std::unique(out.roots.begin(), out.roots.end(), same), out.roots.end());
  if (!out.roots.empty()) out.solution = equilibrium_at(r, out.roots.front(), grid);
  return out;
}

}  // namespace sizestruct
