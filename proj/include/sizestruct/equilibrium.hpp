#pragma once

#include <optional>
#include <vector>

#include "sizestruct/numerics.hpp"
#include "sizestruct/rates.hpp"

namespace sizestruct {

/// Stationary state sampled on a size grid. The trivial state has
/// P_star = 0, zero density and hierarchy, and Pi_star = Pi(., 0).
struct EquilibriumSolution {
  SizeGrid grid;
  double P_star = 0.0;
  Eigen::VectorXd p_star;
  Eigen::VectorXd Q_star;
  Eigen::VectorXd Pi_star;
  bool trivial = true;
};

/// Pi(s,P) = exp(-int_0^s (mu + gamma_s)/gamma dy). Throws RateError if
/// gamma <= 0 at a node.
Eigen::VectorXd survivorship_profile(const RateSet& r, double P, const SizeGrid& grid);

/// Q(s) = alpha int_0^s w p + int_s^m w p.
Eigen::VectorXd hierarchy_weight(const RateSet& r, const Eigen::VectorXd& p,
                                 const SizeGrid& grid);

/// Basic reproduction function R(P, Q): nested trapezoid, tau inner.
double reproduction_number(const RateSet& r, double P, const Eigen::VectorXd& Q,
                           const SizeGrid& grid, const DelayGrid& dgrid);

/// R(0, 0).
double reproduction_number_trivial(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid);

/// p*(s) = P* Pi(s,P*) / int Pi.
Eigen::VectorXd equilibrium_density(const RateSet& r, double P_star, const SizeGrid& grid);

/// Full profile set for a candidate population size (P_star > 0).
EquilibriumSolution equilibrium_at(const RateSet& r, double P_star, const SizeGrid& grid);

EquilibriumSolution trivial_equilibrium(const RateSet& r, const SizeGrid& grid);

/// 10 m theta max beta(s,tau,0); when beta vanishes at Q = 0 the same bound
/// is taken at Q = 1.
double default_population_bound(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid);

struct EquilibriumSearch {
  /// Every refined root of R(P, Q*[P]) - 1 on the scan range, ascending.
  std::vector<double> roots;
  /// Profiles at the smallest root; empty when no sign change was found.
  std::optional<EquilibriumSolution> solution;
};

inline constexpr Eigen::Index kDefaultPopulationSamples = 100;
inline constexpr Eigen::Index kCoarseSizeNodes = 201;
inline constexpr Eigen::Index kCoarseDelayNodes = 51;

/// Roots of R(P, Q*[P]) - 1 on [1e-9 P_max, P_max]: brackets from a uniform
/// scan on a grid of at most kCoarseSizeNodes x kCoarseDelayNodes, refined
/// by Brent's method on the full grid.
EquilibriumSearch solve_equilibrium(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid,
                                    double P_max, Eigen::Index samples = kDefaultPopulationSamples,
                                    double tol = kDefaultRootTolerance);

}  // namespace sizestruct
