#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sizestruct {

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform nodes s_i = i*h on [0, m].
class SizeGrid {
 public:
  SizeGrid(Eigen::Index n, double m);

  Eigen::Index size() const { return n_; }
  double max_size() const { return m_; }
  double spacing() const { return h_; }
  double node(Eigen::Index i) const { return i == n_ - 1 ? m_ : static_cast<double>(i) * h_; }
  Eigen::VectorXd nodes() const;

 private:
  Eigen::Index n_;
  double m_;
  double h_;
};

/// Uniform nodes tau_j = -theta + j*h on [-theta, 0].
class DelayGrid {
 public:
  DelayGrid(Eigen::Index n, double theta);

  Eigen::Index size() const { return n_; }
  double max_delay() const { return theta_; }
  double spacing() const { return h_; }
  double node(Eigen::Index j) const {
    return j == n_ - 1 ? 0.0 : -theta_ + static_cast<double>(j) * h_;
  }
  Eigen::VectorXd nodes() const;
  /// Composite trapezoid weights, so that w.dot(f) matches trapezoid(f, h)
  /// up to summation order.
  Eigen::VectorXd weights() const;

 private:
  Eigen::Index n_;
  double theta_;
  double h_;
};

namespace detail {
inline void check_quadrature_args(Eigen::Index n, double h) {
  if (n < 2) throw NumericsError("trapezoid needs at least 2 samples");
  if (!(h > 0.0)) throw NumericsError("trapezoid spacing must be positive");
}
}  // namespace detail

/// Running trapezoid: out[k] = integral over the first k+1 samples.
/// out[last] is bit-identical to trapezoid() of the same samples.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> cumulative_trapezoid(
    const Eigen::DenseBase<Derived>& values, typename Derived::Scalar h) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.size();
  detail::check_quadrature_args(n, h);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  const Scalar half_h = Scalar(0.5) * h;
  Scalar acc(0);
  out(0) = Scalar(0);
  for (Eigen::Index k = 1; k < n; ++k) {
    acc += values(k - 1) + values(k);
    out(k) = half_h * acc;
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::DenseBase<Derived>& values,
                                   typename Derived::Scalar h) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.size();
  detail::check_quadrature_args(n, h);
  Scalar acc(0);
  for (Eigen::Index k = 1; k < n; ++k) acc += values(k - 1) + values(k);
  return Scalar(0.5) * h * acc;
}

inline constexpr double kDefaultRootTolerance = 1e-10;

using ScalarFunction = std::function<double(double)>;

/// Brent's method on [a, b]. Requires a sign change (an exact zero at an
/// endpoint is returned as is). The final bracket is no wider than `tol`.
double find_root_bracketed(const ScalarFunction& f, double a, double b,
                           double tol = kDefaultRootTolerance);

struct SignChange {
  double lo;
  double hi;
  bool degenerate() const { return lo == hi; }
};

/// Samples f at n uniform points and reports every strict sign change between
/// neighbours; exact zeros at sample points come back as [x, x].
std::vector<SignChange> bracket_scan(const ScalarFunction& f, double lo, double hi,
                                     Eigen::Index n);

/// As above, with the samples already taken at the uniform points.
std::vector<SignChange> sign_changes(const Eigen::VectorXd& x, const Eigen::VectorXd& fx);

}  // namespace sizestruct
