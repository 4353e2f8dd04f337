#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sizestruct/expr.hpp"
#include "sizestruct/numerics.hpp"
#include "sizestruct/rates.hpp"

namespace sizestruct {

/// Raised when a step would break the time-step restriction.
class CflError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

struct SimConfig {
  RateSet rates;
  SizeGrid grid{3, 1.0};
  double t_end = 1.0;
  double cfl = 1.0;
  /// Initial history p0(s, delta) on [0,m] x [-theta,0].
  Expr history_init;
  /// When set, overrides history_init with a delta-independent profile
  /// sampled on `grid`.
  std::optional<Eigen::VectorXd> history_profile;
  Eigen::Index stride = 1;
  std::vector<double> snapshot_times;
  /// Profile the `dist` column is measured against; zero when unset.
  std::optional<Eigen::VectorXd> reference;
};

/// Density levels covering [t - theta, t] at spacing dt, oldest first, with
/// the prefix integrals W = int_0^s w p cached per level.
class SimState {
 public:
  SimState(const SizeGrid& grid, double dt, Eigen::Index levels);

  double time() const { return static_cast<double>(step_) * dt_; }
  std::int64_t step_count() const { return step_; }
  double dt() const { return dt_; }
  Eigen::Index levels() const { return levels_; }

  /// Level j, j = 0 oldest, levels()-1 current.
  auto level(Eigen::Index j) const { return density_.col(column(j)); }
  auto prefix(Eigen::Index j) const { return prefix_.col(column(j)); }
  double population(Eigen::Index j) const { return population_(column(j)); }
  auto current() const { return level(levels_ - 1); }
  double current_population() const { return population(levels_ - 1); }

 private:
  friend SimState init_state(const SimConfig& cfg);
  friend void step(SimState& state, const SimConfig& cfg);

  Eigen::Index column(Eigen::Index j) const { return (head_ + j) % levels_; }
  void refresh_level(Eigen::Index col, const Eigen::VectorXd& w);

  SizeGrid grid_;
  double dt_;
  Eigen::Index levels_;
  Eigen::Index head_ = 0;
  std::int64_t step_ = 0;
  Eigen::MatrixXd density_;
  Eigen::MatrixXd prefix_;
  Eigen::VectorXd population_;
  Eigen::VectorXd w_;
};

/// Largest dt with dt * max_i(gamma_i/ds + mu_i) <= cfl at population P that
/// also divides theta into an integer number of steps.
double time_step(const SimConfig& cfg, double P);

SimState init_state(const SimConfig& cfg);

/// p(0,t) for the current buffer: trapezoid over levels (tau, inner) and size.
double recruitment(const SimState& state, const SimConfig& cfg);

/// One explicit upwind step; the boundary value is solved consistently with
/// the new level. Throws CflError if the restriction is violated.
void step(SimState& state, const SimConfig& cfg);

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> P;
  std::vector<double> recruitment;
  std::vector<double> dist;
};

struct Snapshot {
  double requested = 0.0;
  double t = 0.0;
  Eigen::VectorXd p;
};

struct SimResult {
  TimeSeries series;
  std::vector<Snapshot> snapshots;
  double dt = 0.0;
  Eigen::Index levels = 0;
};

SimResult run(const SimConfig& cfg);

/// Least-squares slope of log|P(t) - P_ref| on [t1, t2].
double growth_rate_fit(const TimeSeries& series, double P_ref, double t1, double t2);

}  // namespace sizestruct
