#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "asdyn/bspline.hpp"
#include "asdyn/geometry.hpp"
#include "asdyn/gp_kernel.hpp"
#include "asdyn/log_density.hpp"
#include "asdyn/model_spec.hpp"

namespace asdyn {

/// Panel of wells measured in three epochs. Locations are in standardized units.
struct ResampledData {
  std::vector<Location> locations;
  std::vector<double> depth;
  std::vector<double> log_y2000;
  std::vector<double> log_y2014;
  std::vector<double> log_y2015;
  double d0 = 15.29;
};

/// The 2015 baseline is the 2014 baseline; it has no coordinate of its own.
struct ResampledParams {
  Eigen::VectorXd theta2000;
  Eigen::VectorXd theta2014;
  double beta_linear = 0.0;
  Eigen::VectorXd beta_spline;
  double beta_depth = 0.0;
  double sigma_short = 1.0;
  double sigma_long = 1.0;
  double mu = 0.0;
  GpKernelParams gp;
};

/// Breakpoints of the autoregression spline: equally spaced quantiles of the
/// observed log values as interior knots, and the observed range widened by
/// `margin` on each side as boundary knots. Tied quantiles are merged.
[[nodiscard]] std::vector<double> autoregression_breakpoints(std::span<const double> log_values, int n_inner,
                                                             double margin);

class ResampledModel final : public LogDensity {
 public:
  ResampledModel(ResampledData data, std::vector<double> breakpoints, ResampledPriors priors = {});

  [[nodiscard]] const ParameterLayout& layout() const override { return layout_; }
  [[nodiscard]] const ParameterLayout& output_layout() const override { return output_layout_; }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const override;
  [[nodiscard]] Eigen::VectorXd output(const Eigen::VectorXd& x) const override;

  /// Log posterior over constrained parameters, without the log-scale Jacobian.
  [[nodiscard]] double log_posterior(const ResampledParams& params) const;

  [[nodiscard]] ResampledParams unpack(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd pack(const ResampledParams& params) const;
  /// Starting point from the observed values (baselines at the observations).
  [[nodiscard]] Eigen::VectorXd data_init() const;

  /// Expected change theta2014 - theta2000 given theta2000. The spline term is
  /// evaluated at theta2000 clamped to the spline span.
  [[nodiscard]] double expected_change(double beta_linear, const Eigen::VectorXd& beta_spline,
                                       double theta2000) const;

  [[nodiscard]] const ResampledData& data() const noexcept { return data_; }
  [[nodiscard]] const CubicBSpline& spline() const noexcept { return spline_; }
  [[nodiscard]] const ResampledPriors& priors() const noexcept { return priors_; }
  [[nodiscard]] std::size_t n_wells() const noexcept { return n_; }

 private:
  double evaluate(const ResampledParams& p, ResampledParams* grad) const;

  ResampledData data_;
  CubicBSpline spline_;
  ResampledPriors priors_;
  SquaredExponentialGp gp_;
  std::size_t n_;
  ParameterLayout layout_;
  ParameterLayout output_layout_;
};

}  // namespace asdyn
