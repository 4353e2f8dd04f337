#include "sizestruct/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sizestruct {

LinearCoefficients linear_coefficients(const RateSet& r, const EquilibriumSolution& eq) {
  const SizeGrid& grid = eq.grid;
  const Eigen::Index n = grid.size();
  LinearCoefficients lc{grid, Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  Bindings b;
  b.set(Variable::P, eq.P_star);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.set(Variable::s, grid.node(i));
    const double g = r.c_gamma(b);
    if (!(g > 0.0)) throw RateError("gamma must be positive at the stationary state");
    const double gs = r.c_gamma_s(b);
    const double mu = r.c_mu(b);
    const double p = eq.p_star(i);
    const double dp = -p * (mu + gs) / g;
    lc.gamma_star(i) = g;
    lc.nu_star(i) = gs + mu;
    lc.eps_star(i) = p * (r.c_mu_P(b) + r.c_gamma_sP(b)) + dp * r.c_gamma_P(b);
  }
  return lc;
}

Eigen::VectorXd pi_star(const LinearCoefficients& lc, double lambda) {
  const Eigen::VectorXd rate = ((lambda + lc.nu_star.array()) / lc.gamma_star.array()).matrix();
  return (-cumulative_trapezoid(rate, lc.grid.spacing())).array().exp().matrix();
}

Eigen::VectorXd growth_time(const LinearCoefficients& lc) {
  return cumulative_trapezoid(lc.gamma_star.cwiseInverse(), lc.grid.spacing());
}

double det3(const Eigen::Matrix3d& A) {
  return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
         A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
         A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
}

CharacteristicFunction::CharacteristicFunction(const RateSet& r, const EquilibriumSolution& eq,
                                               const LinearCoefficients& lc,
                                               const DelayGrid& dgrid)
    : rates_(r), eq_(eq), lc_(lc), dgrid_(dgrid) {
  const SizeGrid& grid = eq.grid;
  const Eigen::Index ns = grid.size();
  const Eigen::Index nt = dgrid.size();
  w_.resize(ns);
  for (Eigen::Index i = 0; i < ns; ++i) w_(i) = r.w_at(grid.node(i));
  tau_ = dgrid.nodes();
  tau_weights_ = dgrid.weights();

  beta_.resize(ns, nt);
  beta_Q_.resize(ns, nt);
  Bindings b;
  for (Eigen::Index i = 0; i < ns; ++i) {
    b.set(Variable::s, grid.node(i)).set(Variable::Q, eq.Q_star(i));
    for (Eigen::Index j = 0; j < nt; ++j) {
      b.set(Variable::tau, tau_(j));
      beta_(i, j) = r.c_beta(b);
      beta_Q_(i, j) = r.c_beta_Q(b);
    }
  }
}

CharacteristicFunction::LambdaTerms CharacteristicFunction::terms(double lambda) const {
  const double h = eq_.grid.spacing();
  const Eigen::Index n = eq_.grid.size();

  const Eigen::VectorXd rate =
      ((lambda + lc_.nu_star.array()) / lc_.gamma_star.array()).matrix();
  const Eigen::VectorXd L = cumulative_trapezoid(rate, h);

  LambdaTerms t;
  t.pi = (-L).array().exp().matrix();

  const Eigen::VectorXd wt = (tau_weights_.array() * (lambda * tau_.array()).exp()).matrix();
  t.b = beta_ * wt;
  t.bqp = ((beta_Q_ * wt).array() * eq_.p_star.array()).matrix();

  const Eigen::VectorXd f = (lc_.eps_star.array() / lc_.gamma_star.array()).matrix();
  t.G.resize(n);
  t.G(0) = 0.0;
  const double half_h = 0.5 * h;
  for (Eigen::Index k = 1; k < n; ++k) {
    const double decay = std::exp(-(L(k) - L(k - 1)));
    t.G(k) = decay * (t.G(k - 1) + half_h * f(k - 1)) + half_h * f(k);
  }
  return t;
}

CharMatrix CharacteristicFunction::matrix(double lambda) const {
  const LambdaTerms t = terms(lambda);
  const double h = eq_.grid.spacing();
  const double a = rates_.alpha;
  const double w0 = w_(0);

  const Eigen::VectorXd Wpi = cumulative_trapezoid((w_.array() * t.pi.array()).matrix(), h);
  const Eigen::VectorXd WG = cumulative_trapezoid((w_.array() * t.G.array()).matrix(), h);
  const Eigen::Index last = Wpi.size() - 1;

  const double int_pi = trapezoid(t.pi, h);
  const double int_wpi = Wpi(last);
  const double int_wG = WG(last);
  const double int_G = trapezoid(t.G, h);
  const double s_bq = trapezoid(t.bqp, h);
  const double b_pi = trapezoid((t.b.array() * t.pi.array()).matrix(), h);
  const double b_G = trapezoid((t.b.array() * t.G.array()).matrix(), h);
  const double bq_Wpi = trapezoid((t.bqp.array() * Wpi.array()).matrix(), h);
  const double bq_WG = trapezoid((t.bqp.array() * WG.array()).matrix(), h);

  CharMatrix cm;
  cm.lambda = lambda;
  auto& A = cm.A;
  A(0, 0) = (1.0 - a) * w0 * s_bq;
  A(0, 1) = 1.0 - b_pi + (1.0 - a) * bq_Wpi;
  A(0, 2) = w0 * (a - 1.0) * b_G + w0 * (1.0 - a) * (1.0 - a) * bq_WG;
  A(1, 0) = 1.0 - a;
  A(1, 1) = int_wpi / w0;
  A(1, 2) = (1.0 - a) * int_wG;
  A(2, 0) = int_pi * s_bq;
  A(2, 1) = int_pi * (b_pi / (w0 * (a - 1.0)) + bq_Wpi / w0);
  A(2, 2) = int_pi * (1.0 - a) * bq_WG - int_pi * b_G - (1.0 + int_G);
  return cm;
}

double CharacteristicFunction::reduced(double lambda) const {
  const LambdaTerms t = terms(lambda);
  const double h = eq_.grid.spacing();
  const double a = rates_.alpha;
  const Eigen::VectorXd Wpi = cumulative_trapezoid((w_.array() * t.pi.array()).matrix(), h);
  const double b_pi = trapezoid((t.b.array() * t.pi.array()).matrix(), h);
  const double bq_Wpi = trapezoid((t.bqp.array() * Wpi.array()).matrix(), h);
  const double s_bq = trapezoid(t.bqp, h);
  return b_pi + (a - 1.0) * bq_Wpi + s_bq * Wpi(Wpi.size() - 1) - 1.0;
}

CharMatrix char_matrix(const RateSet& r, const EquilibriumSolution& eq,
                       const LinearCoefficients& lc, const DelayGrid& dgrid, double lambda) {
  return CharacteristicFunction(r, eq, lc, dgrid).matrix(lambda);
}

double char_det(const RateSet& r, const EquilibriumSolution& eq, const LinearCoefficients& lc,
                const DelayGrid& dgrid, double lambda) {
  return CharacteristicFunction(r, eq, lc, dgrid).det(lambda);
}

Positivity positivity_check(const CharacteristicFunction& cf) {
  const auto& eq = cf.equilibrium();
  const double h = eq.grid.spacing();
  const double a = cf.rates().alpha;
  const Eigen::VectorXd wt = cf.delay_grid().weights();
  const Eigen::VectorXd birth = cf.beta_samples() * wt;
  const Eigen::VectorXd c = ((cf.beta_Q_samples() * wt).array() * eq.p_star.array()).matrix();
  const Eigen::VectorXd C = cumulative_trapezoid(c, h);
  const double total = C(C.size() - 1);

  Positivity out;
  out.margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < C.size(); ++i) {
    const double s = eq.grid.node(i);
    const double lhs = birth(i) + cf.rates().w_at(s) * (C(i) + a * (total - C(i)));
    if (lhs < out.margin) {
      out.margin = lhs;
      out.worst_s = s;
    }
  }
  out.holds = out.margin >= -kPositivitySlack;
  return out;
}

Positivity positivity_check(const RateSet& r, const EquilibriumSolution& eq,
                            const DelayGrid& dgrid) {
  return positivity_check(CharacteristicFunction(r, eq, linear_coefficients(r, eq), dgrid));
}

KCurve sample_char_det(const CharacteristicFunction& cf, double lo, double hi, Eigen::Index n) {
  if (!(lo < hi) || n < 2) throw NumericsError("lambda range needs lo < hi and n >= 2");
  KCurve curve{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    curve.lambda(i) = i == n - 1 ? hi : lo + static_cast<double>(i) * step;
    curve.K(i) = cf.det(curve.lambda(i));
  }
  return curve;
}

RootSearch real_roots(const CharacteristicFunction& cf, double lo, double hi, Eigen::Index n,
                      double tol) {
  const KCurve curve = sample_char_det(cf, lo, hi, n);
  RootSearch out;
  for (const auto& br : sign_changes(curve.lambda, curve.K)) {
    out.roots.push_back(br.degenerate()
                            ? br.lo
                            : find_root_bracketed([&](double l) { return cf.det(l); }, br.lo,
                                                  br.hi, tol));
  }
  std::sort(out.roots.begin(), out.roots.end());
  if (!out.roots.empty()) {
    out.status = RootSearch::Status::found;
    out.root = out.roots.back();
  }
  return out;
}

RootSearch leading_root(const CharacteristicFunction& cf, const Positivity& positivity, double lo,
                        double hi, Eigen::Index n, double tol) {
  if (!positivity.holds) {
    RootSearch refused;
    refused.status = RootSearch::Status::refused;
    return refused;
  }
  return real_roots(cf, lo, hi, n, tol);
}

std::string_view to_string(Target t) { return t == Target::trivial ? "trivial" : "positive"; }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::stable:
      return "stable";
    case Verdict::unstable:
      return "unstable";
    case Verdict::indeterminate:
      break;
  }
  return "indeterminate";
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::reproduction_number:
      return "trivial-state reproduction number R(0,0) vs 1";
    case Criterion::negative_det_at_zero:
      return "K(0) < 0 with positivity";
    case Criterion::scramble_free_decreasing:
      return "eps* = 0, positivity, beta_Q < 0";
    case Criterion::scramble_free_increasing:
      return "eps* = 0, positivity, beta_Q >= 0";
    case Criterion::none:
      break;
  }
  return "none";
}

namespace {

std::string sign_pattern(const Eigen::MatrixXd& m) {
  const bool all_negative = (m.array() < 0.0).all();
  if (all_negative) return "negative";
  if ((m.array() >= 0.0).all()) return "nonnegative";
  return "mixed";
}

StabilityVerdict classify_trivial(const RateSet& r, const SizeGrid& grid, const DelayGrid& dgrid,
                                  const StabilityOptions& opts) {
  StabilityVerdict v;
  v.target = Target::trivial;
  const EquilibriumSolution eq = trivial_equilibrium(r, grid);
  const CharacteristicFunction cf(r, eq, linear_coefficients(r, eq), dgrid);
  const Positivity pos = positivity_check(cf);
  v.positivity = pos.holds;
  v.positivity_margin = pos.margin;
  v.R00 = reproduction_number_trivial(r, grid, dgrid);
  v.K0 = cf.det(0.0);

  const RootSearch root =
      leading_root(cf, pos, opts.lambda_lo, opts.lambda_hi, opts.lambda_samples);
  if (root.status == RootSearch::Status::found) {
    v.leading_root = root.root;
    v.leading_root_licensed = true;
  }

  if (!pos.holds) {
    v.notes.push_back("positivity fails at the trivial state (beta takes negative values)");
    return v;
  }
  if (std::fabs(*v.R00 - 1.0) <= opts.r0_tolerance) {
    v.notes.push_back("R(0,0) is within tolerance of 1");
    return v;
  }
  v.criterion = Criterion::reproduction_number;
  v.verdict = *v.R00 < 1.0 ? Verdict::stable : Verdict::unstable;
  return v;
}

StabilityVerdict classify_positive(const RateSet& r, const SizeGrid& grid,
                                   const DelayGrid& dgrid, const StabilityOptions& opts) {
  StabilityVerdict v;
  v.target = Target::positive;
  const double P_max = opts.P_max.value_or(default_population_bound(r, grid, dgrid));
  const EquilibriumSearch search =
      solve_equilibrium(r, grid, dgrid, P_max, opts.population_samples);
  if (!search.solution) {
    v.notes.push_back("no positive equilibrium found on (0, P_max]");
    return v;
  }
  if (search.roots.size() > 1) {
    std::ostringstream os;
    os << search.roots.size() << " equilibria found; analysing the smallest";
    v.notes.push_back(os.str());
  }
  const EquilibriumSolution& eq = *search.solution;
  v.P_star = eq.P_star;

  const LinearCoefficients lc = linear_coefficients(r, eq);
  const CharacteristicFunction cf(r, eq, lc, dgrid);
  const Positivity pos = positivity_check(cf);
  v.positivity = pos.holds;
  v.positivity_margin = pos.margin;
  v.eps_sup = lc.eps_star.cwiseAbs().maxCoeff();
  v.beta_Q_sign = sign_pattern(cf.beta_Q_samples());
  v.K0 = cf.det(0.0);

  const RootSearch root = real_roots(cf, opts.lambda_lo, opts.lambda_hi, opts.lambda_samples);
  if (root.status == RootSearch::Status::found) {
    v.leading_root = root.root;
    v.leading_root_licensed = pos.holds;
  }

  if (!pos.holds) {
    std::ostringstream os;
    os << "positivity fails (minimum " << pos.margin << " at s = " << pos.worst_s
       << "); real-line restriction not licensed";
    v.notes.push_back(os.str());
    return v;
  }

  const bool scramble_free = *v.eps_sup <= opts.eps_zero;
  if (scramble_free && v.beta_Q_sign == "negative") {
    v.criterion = Criterion::scramble_free_decreasing;
    v.verdict = Verdict::stable;
    return v;
  }
  if (scramble_free && v.beta_Q_sign == "nonnegative") {
    v.criterion = Criterion::scramble_free_increasing;
    v.verdict = Verdict::unstable;
    return v;
  }
  if (*v.K0 < -opts.k0_tolerance) {
    v.criterion = Criterion::negative_det_at_zero;
    v.verdict = Verdict::unstable;
    return v;
  }
  v.notes.push_back("no stability criterion applies");
  return v;
}

void put(std::ostringstream& os, const char* key, double value) {
  os.precision(17);
  os << key << ": " << value << '\n';
}

}  // namespace

StabilityVerdict classify(const RateSet& r, Target target, const SizeGrid& grid,
                          const DelayGrid& dgrid, const StabilityOptions& opts) {
  return target == Target::trivial ? classify_trivial(r, grid, dgrid, opts)
                                   : classify_positive(r, grid, dgrid, opts);
}

std::string to_text(const StabilityVerdict& v) {
  std::ostringstream os;
  os << "target: " << to_string(v.target) << '\n';
  os << "verdict: " << to_string(v.verdict) << '\n';
  os << "criterion: " << to_string(v.criterion) << '\n';
  if (v.R00) put(os, "R00", *v.R00);
  if (v.P_star) put(os, "P_star", *v.P_star);
  if (v.K0) put(os, "K0", *v.K0);
  if (v.leading_root) {
    put(os, "leading_root", *v.leading_root);
    os << "leading_root_licensed: " << (v.leading_root_licensed ? "true" : "false") << '\n';
  }
  os << "positivity: " << (v.positivity ? "true" : "false") << '\n';
  put(os, "positivity_margin", v.positivity_margin);
  if (v.eps_sup) put(os, "eps_sup", *v.eps_sup);
  if (!v.beta_Q_sign.empty()) os << "beta_Q_sign: " << v.beta_Q_sign << '\n';
  for (const auto& n : v.notes) os << "note: " << n << '\n';
  return os.str();
}

}  // namespace sizestruct
