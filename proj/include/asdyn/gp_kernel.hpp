#pragma once

#include <span>

#include <Eigen/Dense>

#include "asdyn/geometry.hpp"

namespace asdyn {

/// Squared-exponential kernel K(x1, x2) = amplitude * exp(-|x1 - x2|^2 / length_scale^2).
struct GpKernelParams {
  double amplitude = 1.0;
  double length_scale = 1.0;
  double mean = 0.0;

  [[nodiscard]] bool valid() const noexcept;
};

/// Diagonal jitter added before factorization, relative to the amplitude.
inline constexpr double kGpRelativeJitter = 1e-8;

[[nodiscard]] Eigen::MatrixXd gp_covariance(const GpKernelParams& params,
                                            std::span<const Location> locations);

/// Multivariate normal log density of a GP over fixed locations, with gradients.
class SquaredExponentialGp {
 public:
  explicit SquaredExponentialGp(std::span<const Location> locations);

  struct Evaluation {
    double log_density = 0.0;
    Eigen::VectorXd d_values;  ///< d/d(values)
    double d_mean = 0.0;
    double d_amplitude = 0.0;
    double d_length_scale = 0.0;
  };

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(sq_dist_.rows()); }
  [[nodiscard]] Eigen::MatrixXd covariance(const GpKernelParams& params, bool with_jitter) const;

  /// log N(values | mean, K + jitter). Returns -inf when the covariance is not
  /// positive definite after jitter.
  [[nodiscard]] Evaluation evaluate(const GpKernelParams& params, const Eigen::VectorXd& values) const;

 private:
  Eigen::MatrixXd sq_dist_;
};

}  // namespace asdyn
