#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "sizestruct/equilibrium.hpp"
#include "sizestruct/numerics.hpp"
#include "sizestruct/rates.hpp"

namespace sizestruct {

/// Coefficients of the problem linearised at a stationary state:
///   gamma*(s) = gamma(s,P*)
///   nu*(s)    = gamma_s(s,P*) + mu(s,P*)
///   eps*(s)   = p*(mu_P + gamma_sP) + p*' gamma_P
struct LinearCoefficients {
  SizeGrid grid;
  Eigen::VectorXd gamma_star;
  Eigen::VectorXd nu_star;
  Eigen::VectorXd eps_star;
};

/// p*' is taken from the stationary ODE, p*' = -p* (mu + gamma_s)/gamma, so
/// the profile is never differentiated numerically.
LinearCoefficients linear_coefficients(const RateSet& r, const EquilibriumSolution& eq);

/// pi*(lambda, s) = exp(-int_0^s (lambda + nu*)/gamma*).
Eigen::VectorXd pi_star(const LinearCoefficients& lc, double lambda);

/// Gamma(s) = int_0^s 1/gamma*; pi*(lambda,.) = Pi(.,P*) exp(-lambda Gamma).
Eigen::VectorXd growth_time(const LinearCoefficients& lc);

struct CharMatrix {
  double lambda = 0.0;
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
};

/// 3x3 cofactor expansion along the first row.
double det3(const Eigen::Matrix3d& A);

/// Characteristic matrix A(lambda) and determinant K(lambda) of the
/// linearisation around one stationary state.
///
/// Everything that does not depend on lambda is sampled once at
/// construction: beta(s,tau,Q*(s)) and beta_Q(s,tau,Q*(s)) on the product
/// grid. Each evaluation then costs two matrix-vector products (the tau
/// integrals of e^{lambda tau} beta) plus O(n_s) prefix sums for the nested
/// size integrals.
///
/// The nested integrals carry 1/pi* factors; they are accumulated as
///   G(s) = pi*(s) int_0^s eps*/(pi* gamma*) dy
/// with the ratio pi*(s)/pi*(y) folded into exp(L(y) - L(s)), so nothing is
/// divided by an underflowed pi*.
class CharacteristicFunction {
 public:
  CharacteristicFunction(const RateSet& r, const EquilibriumSolution& eq,
                         const LinearCoefficients& lc, const DelayGrid& dgrid);

  CharMatrix matrix(double lambda) const;
  double det(double lambda) const { return det3(matrix(lambda).A); }

  /// The determinant in the scramble-free case (eps* = 0), written out
  /// directly rather than through A:
  ///   Kt = int int e^{lt} beta pi + (alpha-1) int int e^{lt} beta_Q p* int_0^s w pi
  ///        + (int int e^{lt} beta_Q p*)(int w pi) - 1
  /// It equals -K/(1-alpha) whenever eps* vanishes; sign conventions in the
  /// stability argument for that case refer to this function.
  double reduced(double lambda) const;

  const RateSet& rates() const { return rates_; }
  const EquilibriumSolution& equilibrium() const { return eq_; }
  const LinearCoefficients& coefficients() const { return lc_; }
  const DelayGrid& delay_grid() const { return dgrid_; }
  /// beta(s_i, tau_j, Q*(s_i)).
  const Eigen::MatrixXd& beta_samples() const { return beta_; }
  /// beta_Q(s_i, tau_j, Q*(s_i)).
  const Eigen::MatrixXd& beta_Q_samples() const { return beta_Q_; }

 private:
  struct LambdaTerms {
    Eigen::VectorXd pi;      // pi*(lambda, s)
    Eigen::VectorXd b;       // int e^{lt} beta dtau
    Eigen::VectorXd bqp;     // p* int e^{lt} beta_Q dtau
    Eigen::VectorXd G;       // pi*(s) int_0^s eps*/(pi* gamma*)
  };
  LambdaTerms terms(double lambda) const;

  RateSet rates_;
  EquilibriumSolution eq_;
  LinearCoefficients lc_;
  DelayGrid dgrid_;
  Eigen::VectorXd w_;
  Eigen::VectorXd tau_;
  Eigen::VectorXd tau_weights_;
  Eigen::MatrixXd beta_;
  Eigen::MatrixXd beta_Q_;
};

CharMatrix char_matrix(const RateSet& r, const EquilibriumSolution& eq,
                       const LinearCoefficients& lc, const DelayGrid& dgrid, double lambda);
double char_det(const RateSet& r, const EquilibriumSolution& eq, const LinearCoefficients& lc,
                const DelayGrid& dgrid, double lambda);

struct Positivity {
  bool holds = false;
  double margin = 0.0;  // minimum over the grid of the left-hand side
  double worst_s = 0.0;
};

inline constexpr double kPositivitySlack = 1e-12;

/// Pointwise positivity condition on the linearised birth law:
///   int beta(s,tau,Q*(s)) dtau
///     + w(s) ( int_0^s int beta_Q p* + alpha int_s^m int beta_Q p* ) >= 0.
Positivity positivity_check(const RateSet& r, const EquilibriumSolution& eq,
                            const DelayGrid& dgrid);
Positivity positivity_check(const CharacteristicFunction& cf);

struct KCurve {
  Eigen::VectorXd lambda;
  Eigen::VectorXd K;
};

/// K at n uniform points of [lo, hi].
KCurve sample_char_det(const CharacteristicFunction& cf, double lo, double hi, Eigen::Index n);

struct RootSearch {
  enum class Status { found, none_found, refused };
  Status status = Status::none_found;
  double root = 0.0;          // largest real root when found
  std::vector<double> roots;  // all refined real roots, ascending
};

/// Real roots of K on [lo, hi] from a uniform scan, without any claim that
/// the largest one dominates the spectrum.
RootSearch real_roots(const CharacteristicFunction& cf, double lo, double hi, Eigen::Index n,
                      double tol = kDefaultRootTolerance);

/// Largest real root, only when positivity licenses restricting the search
/// to the real line; otherwise the search is refused.
RootSearch leading_root(const CharacteristicFunction& cf, const Positivity& positivity, double lo,
                        double hi, Eigen::Index n, double tol = kDefaultRootTolerance);

enum class Target { trivial, positive };
enum class Verdict { stable, unstable, indeterminate };

/// Which stability result produced a verdict.
enum class Criterion {
  none,
  reproduction_number,      // trivial state: R(0,0) < 1 or > 1
  negative_det_at_zero,     // positive state, positivity: K(0) < 0 => unstable
  scramble_free_decreasing, // eps* = 0, positivity, beta_Q < 0 => stable
  scramble_free_increasing, // eps* = 0, positivity, beta_Q >= 0 => unstable
};

std::string_view to_string(Target t);
std::string_view to_string(Verdict v);
std::string_view to_string(Criterion c);

struct StabilityVerdict {
  Target target = Target::trivial;
  Verdict verdict = Verdict::indeterminate;
  Criterion criterion = Criterion::none;
  std::optional<double> R00;
  std::optional<double> P_star;
  std::optional<double> K0;
  std::optional<double> leading_root;
  bool leading_root_licensed = false;
  bool positivity = false;
  double positivity_margin = 0.0;
  std::optional<double> eps_sup;
  std::string beta_Q_sign;  // "negative", "nonnegative", "mixed" (positive target)
  std::vector<std::string> notes;
};

struct StabilityOptions {
  double lambda_lo = -5.0;
  double lambda_hi = 50.0;
  Eigen::Index lambda_samples = 2000;
  std::optional<double> P_max;
  Eigen::Index population_samples = kDefaultPopulationSamples;
  double r0_tolerance = 1e-9;   // |R(0,0) - 1| at or below this is undecided
  double k0_tolerance = 1e-9;
  double eps_zero = 1e-12;      // sup-norm threshold for eps* = 0
};

StabilityVerdict classify(const RateSet& r, Target target, const SizeGrid& grid,
                          const DelayGrid& dgrid, const StabilityOptions& opts = {});

/// Multi-line "key: value" rendering used by the CLI.
std::string to_text(const StabilityVerdict& v);

}  // namespace sizestruct
