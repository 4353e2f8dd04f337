#include "sizestruct/numerics.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace sizestruct {

SizeGrid::SizeGrid(Eigen::Index n, double m) : n_(n), m_(m), h_(0.0) {
  if (n < 3) throw NumericsError("size grid needs at least 3 nodes");
  if (!(m > 0.0)) throw NumericsError("maximum size must be positive");
  h_ = m / static_cast<double>(n - 1);
}

Eigen::VectorXd SizeGrid::nodes() const {
  Eigen::VectorXd s(n_);
  for (Eigen::Index i = 0; i < n_; ++i) s(i) = node(i);
  return s;
}

DelayGrid::DelayGrid(Eigen::Index n, double theta) : n_(n), theta_(theta), h_(0.0) {
  if (n < 3) throw NumericsError("delay grid needs at least 3 nodes");
  if (!(theta > 0.0)) throw NumericsError("maximum delay must be positive");
  h_ = theta / static_cast<double>(n - 1);
}

Eigen::VectorXd DelayGrid::nodes() const {
  Eigen::VectorXd t(n_);
  for (Eigen::Index j = 0; j < n_; ++j) t(j) = node(j);
  return t;
}

Eigen::VectorXd DelayGrid::weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_, h_);
  w(0) = w(n_ - 1) = 0.5 * h_;
  return w;
}

namespace {

double checked(const ScalarFunction& f, double x) {
  const double y = f(x);
  if (std::isnan(y)) throw NumericsError("function returned NaN at x = " + std::to_string(x));
  return y;
}

}  // namespace

double find_root_bracketed(const ScalarFunction& f, double a, double b, double tol) {
  if (!(a < b)) throw NumericsError("root bracket requires a < b");
  if (!(tol > 0.0)) throw NumericsError("root tolerance must be positive");

  double fa = checked(f, a);
  double fb = checked(f, b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    throw NumericsError("endpoints do not bracket a root: f(" + std::to_string(a) +
                        ") and f(" + std::to_string(b) + ") have the same sign");
  }

  // [b, c] always brackets the root; b is the best estimate.
  double c = a, fc = fa;
  double d = b - a, e = d;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < 500; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 0.5 * std::max(tol, 4.0 * eps * std::fabs(b));
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;

    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      // Inverse quadratic interpolation, or secant when only two points differ.
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      const double min2 = std::fabs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = checked(f, b);
  }
  return b;
}

std::vector<SignChange> sign_changes(const Eigen::VectorXd& x, const Eigen::VectorXd& fx) {
  std::vector<SignChange> out;
  const Eigen::Index n = x.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(fx(i))) throw NumericsError("function returned NaN during bracket scan");
    if (fx(i) == 0.0) {
      out.push_back({x(i), x(i)});
    } else if (i + 1 < n && fx(i + 1) != 0.0 && (fx(i) > 0.0) != (fx(i + 1) > 0.0)) {
      out.push_back({x(i), x(i + 1)});
    }
  }
  return out;
}

std::vector<SignChange> bracket_scan(const ScalarFunction& f, double lo, double hi,
                                     Eigen::Index n) {
  if (!(lo < hi)) throw NumericsError("bracket scan requires lo < hi");
  if (n < 2) throw NumericsError("bracket scan needs at least 2 samples");
  Eigen::VectorXd x(n), fx(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = i == n - 1 ? hi : lo + static_cast<double>(i) * step;
    fx(i) = f(x(i));
    if (std::isnan(fx(i))) throw NumericsError("function returned NaN during bracket scan");
  }
  return sign_changes(x, fx);
}

}  // namespace sizestruct
