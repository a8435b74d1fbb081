#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "asdyn/parameter_layout.hpp"

namespace asdyn {

/// A differentiable unnormalized log density on an unconstrained space.
///
/// Implementations must be reentrant: the sampler calls log_density from
/// several chains concurrently. Outside the support the value is -infinity,
/// never NaN.
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  [[nodiscard]] virtual const ParameterLayout& layout() const = 0;
  [[nodiscard]] std::size_t dim() const { return layout().dim(); }

  /// Returns log p(x). When grad is non-null it is resized to dim() and filled.
  virtual double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const = 0;

  /// Layout of the recorded draws (constrained parameters plus derived quantities).
  [[nodiscard]] virtual const ParameterLayout& output_layout() const { return layout(); }
  /// Maps an unconstrained point to its output row.
  [[nodiscard]] virtual Eigen::VectorXd output(const Eigen::VectorXd& x) const { return x; }
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace lpdf {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// log N(x | mu, sd), sd is a standard deviation.
inline double normal(double x, double mu, double sd) noexcept {
  const double z = (x - mu) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
}
/// d/dx log N(x | mu, sd).
inline double normal_dx(double x, double mu, double sd) noexcept { return -(x - mu) / (sd * sd); }
/// d/dsd log N(x | mu, sd).
inline double normal_dsd(double x, double mu, double sd) noexcept {
  const double z = (x - mu) / sd;
  return (z * z - 1.0) / sd;
}

/// log InvGamma(x | shape, scale), density proportional to x^{-shape-1} exp(-scale / x).
inline double inv_gamma(double x, double shape, double scale) noexcept {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}
inline double inv_gamma_dx(double x, double shape, double scale) noexcept {
  return -(shape + 1.0) / x + scale / (x * x);
}

}  // namespace lpdf

}  // namespace asdyn
