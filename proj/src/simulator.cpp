#include "sizestruct/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sizestruct {

namespace {

constexpr double kCflSlack = 1e-9;
// Rounding in the upwind update can leave values a few ulps below zero when
// the restriction is tight; anything beyond this relative level is an error.
constexpr double kNegativeRoundoff = 1e-12;

Eigen::VectorXd sample_w(const RateSet& r, const SizeGrid& grid) {
  Eigen::VectorXd w(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) w(i) = r.w_at(grid.node(i));
  return w;
}

double max_rate(const SimConfig& cfg, double P) {
  const double ds = cfg.grid.spacing();
  double worst = 0.0;
  Bindings b;
  b.set(Variable::P, P);
  for (Eigen::Index i = 0; i < cfg.grid.size(); ++i) {
    b.set(Variable::s, cfg.grid.node(i));
    worst = std::max(worst, cfg.rates.c_gamma(b) / ds + cfg.rates.c_mu(b));
  }
  return worst;
}

Eigen::VectorXd history_level(const SimConfig& cfg, double delta) {
  if (cfg.history_profile) return *cfg.history_profile;
  const Eigen::Index n = cfg.grid.size();
  Eigen::VectorXd p(n);
  const CompiledExpr f(cfg.history_init);
  Bindings b;
  b.set(Variable::delta, delta);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.set(Variable::s, cfg.grid.node(i));
    p(i) = f(b);
  }
  return p;
}

// Per-size birth contribution beta(s, tau, Q(s)) p(s) of one stored level.
void level_births(const SimConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& p,
                  const Eigen::Ref<const Eigen::VectorXd>& W, double tau, Eigen::VectorXd& out) {
  const double alpha = cfg.rates.alpha;
  const Eigen::Index n = p.size();
  const double total = W(n - 1);
  Bindings b;
  b.set(Variable::tau, tau);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p(i) == 0.0) {
      out(i) = 0.0;
      continue;
    }
    b.set(Variable::s, cfg.grid.node(i)).set(Variable::Q, alpha * W(i) + (total - W(i)));
    out(i) = cfg.rates.c_beta(b) * p(i);
  }
}

double tau_weight(Eigen::Index j, Eigen::Index levels, double dt) {
  return (j == 0 || j == levels - 1) ? 0.5 * dt : dt;
}

// Sum over levels [0, upto) of tau-weighted births, accumulated per size node.
Eigen::VectorXd partial_births(const SimState& state, const SimConfig& cfg, Eigen::Index upto) {
  const Eigen::Index n = cfg.grid.size();
  const double theta = cfg.rates.theta;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd c(n);
  for (Eigen::Index j = 0; j < upto; ++j) {
    const double tau = -theta + static_cast<double>(j) * state.dt();
    level_births(cfg, state.level(j), state.prefix(j), tau, c);
    acc += tau_weight(j, state.levels(), state.dt()) * c;
  }
  return acc;
}

}  // namespace

SimState::SimState(const SizeGrid& grid, double dt, Eigen::Index levels)
    : grid_(grid),
      dt_(dt),
      levels_(levels),
      density_(Eigen::MatrixXd::Zero(grid.size(), levels)),
      prefix_(Eigen::MatrixXd::Zero(grid.size(), levels)),
      population_(Eigen::VectorXd::Zero(levels)) {}

void SimState::refresh_level(Eigen::Index col, const Eigen::VectorXd& w) {
  const double h = grid_.spacing();
  prefix_.col(col) = cumulative_trapezoid((w.array() * density_.col(col).array()).matrix(), h);
  population_(col) = trapezoid(density_.col(col), h);
}

double time_step(const SimConfig& cfg, double P) {
  if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw NumericsError("cfl must lie in (0, 1]");
  const double rate = max_rate(cfg, P);
  if (!(rate > 0.0) || !std::isfinite(rate)) throw NumericsError("degenerate transport rate");
  const double dt_cfl = cfg.cfl / rate;
  const double theta = cfg.rates.theta;
  const double n = std::ceil(theta / dt_cfl * (1.0 - 1e-12));
  return theta / std::max(1.0, n);
}

SimState init_state(const SimConfig& cfg) {
  if (!(cfg.t_end > 0.0)) throw NumericsError("t_end must be positive");
  const double theta = cfg.rates.theta;
  const Eigen::VectorXd now = history_level(cfg, 0.0);
  const double P0 = trapezoid(now, cfg.grid.spacing());
  const double dt = time_step(cfg, P0);
  const auto levels = static_cast<Eigen::Index>(std::llround(theta / dt)) + 1;

  SimState state(cfg.grid, dt, levels);
  state.w_ = sample_w(cfg.rates, cfg.grid);
  for (Eigen::Index j = 0; j < levels; ++j) {
    const double delta = j == levels - 1 ? 0.0 : -theta + static_cast<double>(j) * dt;
    const Eigen::VectorXd p = history_level(cfg, delta);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (!std::isfinite(p(i)) || p(i) < 0.0) {
        std::ostringstream os;
        os << "initial history must be finite and non-negative; got " << p(i)
           << " at s = " << cfg.grid.node(i) << ", delta = " << delta;
        throw NumericsError(os.str());
      }
    }
    state.density_.col(j) = p;
    state.refresh_level(j, state.w_);
  }
  return state;
}

double recruitment(const SimState& state, const SimConfig& cfg) {
  return trapezoid(partial_births(state, cfg, state.levels()), cfg.grid.spacing());
}

void step(SimState& state, const SimConfig& cfg) {
  const Eigen::Index n = cfg.grid.size();
  const Eigen::Index L = state.levels();
  const double ds = cfg.grid.spacing();
  const double dt = state.dt();
  const double P = state.current_population();

  Eigen::VectorXd gamma(n), mu(n);
  Bindings b;
  b.set(Variable::P, P);
  double rate = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    b.set(Variable::s, cfg.grid.node(i));
    gamma(i) = cfg.rates.c_gamma(b);
    mu(i) = cfg.rates.c_mu(b);
    rate = std::max(rate, gamma(i) / ds + mu(i));
  }
  if (dt * rate > cfg.cfl * (1.0 + kCflSlack)) {
    std::ostringstream os;
    os << "time step " << dt << " violates the CFL restriction at t = " << state.time()
       << " (dt * max(gamma/ds + mu) = " << dt * rate << " > cfl = " << cfg.cfl << ")";
    throw CflError(os.str());
  }

  const Eigen::VectorXd p = state.current();
  Eigen::VectorXd next(n);
  const double c = dt / ds;
  for (Eigen::Index i = 1; i < n; ++i) {
    next(i) = p(i) - c * (gamma(i) * p(i) - gamma(i - 1) * p(i - 1)) - dt * mu(i) * p(i);
  }
  const double scale = std::max(p.maxCoeff(), 1e-300);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!std::isfinite(next(i)) || next(i) < -kNegativeRoundoff * scale) {
      throw NumericsError("upwind step produced a negative or non-finite density");
    }
    if (next(i) < 0.0) next(i) = 0.0;
  }
  next(0) = p(0);

  // Evict the oldest level; the freed column becomes the new current level.
  state.head_ = (state.head_ + 1) % L;
  const Eigen::Index col = state.column(L - 1);
  state.density_.col(col) = next;
  state.refresh_level(col, state.w_);
  ++state.step_;

  // p(0, t+dt) enters its own birth integral (tau = 0, s = 0 node) and Q, so
  // solve the boundary value by fixed-point iteration; the coupling is
  // O(ds dt) and a few sweeps suffice.
  const Eigen::VectorXd older = partial_births(state, cfg, L - 1);
  const double w_last = tau_weight(L - 1, L, dt);
  Eigen::VectorXd births(n);
  double boundary = next(0);
  for (int iter = 0; iter < 100; ++iter) {
    level_births(cfg, state.level(L - 1), state.prefix(L - 1), 0.0, births);
    const double value = trapezoid(older + w_last * births, ds);
    const bool done = std::fabs(value - boundary) <= 1e-15 * std::max(std::fabs(value), 1e-300);
    boundary = value;
    state.density_(0, col) = boundary;
    state.refresh_level(col, state.w_);
    if (done) break;
  }
  if (!std::isfinite(boundary) || boundary < 0.0) {
    throw NumericsError("recruitment became negative or non-finite");
  }
}

SimResult run(const SimConfig& cfg) {
  if (cfg.stride < 1) throw NumericsError("stride must be at least 1");
  SimState state = init_state(cfg);
  SimResult result;
  result.dt = state.dt();
  result.levels = state.levels();
  const double h = cfg.grid.spacing();

  auto record = [&] {
    const Eigen::VectorXd p = state.current();
    const double dist = cfg.reference ? trapezoid((p - *cfg.reference).cwiseAbs(), h)
                                      : trapezoid(p.cwiseAbs(), h);
    result.series.t.push_back(state.time());
    result.series.P.push_back(state.current_population());
    result.series.recruitment.push_back(p(0));
    result.series.dist.push_back(dist);
  };

  std::vector<double> pending = cfg.snapshot_times;
  std::sort(pending.begin(), pending.end());
  auto snap = [&] {
    while (!pending.empty() && state.time() >= pending.front() - 0.5 * state.dt()) {
      result.snapshots.push_back({pending.front(), state.time(), state.current()});
      pending.erase(pending.begin());
    }
  };

  record();
  snap();
  const auto steps = static_cast<std::int64_t>(std::ceil(cfg.t_end / state.dt() - 1e-9));
  for (std::int64_t k = 1; k <= steps; ++k) {
    step(state, cfg);
    if (k % cfg.stride == 0 || k == steps) record();
    snap();
  }
  return result;
}

double growth_rate_fit(const TimeSeries& series, double P_ref, double t1, double t2) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < series.t.size(); ++k) {
    const double t = series.t[k];
    if (t < t1 || t > t2) continue;
    const double dev = std::fabs(series.P[k] - P_ref);
    if (dev < 1e-13) {
      throw NumericsError("deviation from the reference falls below 1e-13 in the fit window");
    }
    const double y = std::log(dev);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++count;
  }
  if (count < 2) throw NumericsError("fit window holds fewer than two records");
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) throw NumericsError("fit window has no time spread");
  return (count * sxy - sx * sy) / denom;
}

}  // namespace sizestruct
