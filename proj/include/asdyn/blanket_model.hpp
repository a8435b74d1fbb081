#pragma once

#include <vector>

#include <Eigen/Dense>

#include "asdyn/basis_system.hpp"
#include "asdyn/calibration.hpp"
#include "asdyn/log_density.hpp"
#include "asdyn/model_spec.hpp"

namespace asdyn {

/// Observations entering the blanket-survey posterior.
struct BlanketData {
  std::vector<double> log_y1;  ///< survey 1 log lab values
  std::vector<double> depth1;  ///< survey 1 depths (m)
  std::vector<int> kit2;       ///< survey 2 kit categories 1..9
  std::vector<double> depth2;  ///< survey 2 depths (m)
  double d0 = 0.0;             ///< reference depth (m)
  BasisSystem basis1;          ///< basis at survey 1 locations
  BasisSystem basis2;          ///< basis and Laplacian at survey 2 locations
  CalibrationModel calibration;
};

/// Constrained parameters of the blanket-survey model.
struct BlanketParams {
  double beta0 = 0.0;
  Eigen::VectorXd beta;  ///< L surface coefficients
  double beta_depth = 0.0;
  double sigma_obs = 1.0;
  Eigen::VectorXd theta2;
  Eigen::VectorXd eta2;
  double alpha_y = 0.0;
  double alpha_theta = 0.0;
  double alpha_delta = 0.0;
  double beta_delta = 0.0;
  double tau = 1.0;
};

/// Free-parameter count: surface (L + 1), depth, sigma_obs, theta2 and eta2, four mixing terms, tau.
[[nodiscard]] constexpr std::size_t blanket_parameter_count(std::size_t n_basis, std::size_t n2) noexcept {
  return (n_basis + 1) + 1 + 1 + 2 * n2 + 4 + 1;
}

/// gamma(theta1) and d gamma / d theta1 for a mixing variant.
struct MixingTerm {
  double gamma = 0.0;
  double d_theta1 = 0.0;
  double d_alpha_y = 0.0;
  double d_alpha_theta = 0.0;
};
[[nodiscard]] MixingTerm mixing_term(MixingVariant variant, double alpha_y, double alpha_theta, double theta1) noexcept;

/// theta1 = beta0 + B beta and delta = (Laplacian B) beta / laplacian_scale.
struct SurfaceAtWells {
  Eigen::VectorXd theta1;
  Eigen::VectorXd delta;
};
[[nodiscard]] SurfaceAtWells extract_theta1_delta(double beta0, const Eigen::VectorXd& beta,
                                                  const BasisSystem& basis, double laplacian_scale);

/// Sum of the prior log densities (normalized; no change-of-variables terms).
/// Returns -inf when sigma_obs or tau is not positive. beta_depth has a flat prior.
[[nodiscard]] double prior_log_density(const BlanketParams& params, const BlanketPriors& priors);

/// Posterior of the blanket-survey model on the unconstrained scale.
///
/// sigma_obs and tau are sampled as logs. The survey-2 latents are non-centred:
/// theta2 = mean2 + tau * z_theta2 and eta2 = theta2 + beta_depth (d - d0) + sigma_obs * z_eta2,
/// so log_density(x) = log_posterior(unpack(x)) + (n2 + 1) (log sigma_obs + log tau).
class BlanketModel final : public LogDensity {
 public:
  BlanketModel(BlanketData data, MixingVariant variant, BlanketPriors priors, double laplacian_scale);

  [[nodiscard]] const ParameterLayout& layout() const override { return layout_; }
  [[nodiscard]] const ParameterLayout& output_layout() const override { return output_layout_; }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const override;
  [[nodiscard]] Eigen::VectorXd output(const Eigen::VectorXd& x) const override;

  /// Log posterior (constrained parameters, no Jacobian).
  [[nodiscard]] double log_posterior(const BlanketParams& params) const;

  /// Unconstrained vector to constrained parameters (theta2 and eta2 reconstructed).
  [[nodiscard]] BlanketParams unpack(const Eigen::VectorXd& x) const;
  /// Inverse of unpack. Throws std::invalid_argument on size mismatch or non-positive scales.
  [[nodiscard]] Eigen::VectorXd pack(const BlanketParams& params) const;
  /// Conditional mean of theta2: theta1 + alpha_delta + (beta_delta + gamma(theta1)) delta.
  [[nodiscard]] Eigen::VectorXd theta2_mean(const BlanketParams& params) const;

  /// Starting point built from the data: a least-squares surface and kit-implied log values.
  [[nodiscard]] Eigen::VectorXd data_init() const;

  [[nodiscard]] const BlanketData& data() const noexcept { return data_; }
  [[nodiscard]] MixingVariant variant() const noexcept { return variant_; }
  [[nodiscard]] const BlanketPriors& priors() const noexcept { return priors_; }
  [[nodiscard]] double laplacian_scale() const noexcept { return laplacian_scale_; }
  [[nodiscard]] std::size_t n_basis() const noexcept { return n_basis_; }

 private:
  double evaluate(const BlanketParams& p) const;

  BlanketData data_;
  MixingVariant variant_;
  BlanketPriors priors_;
  double laplacian_scale_;
  std::size_t n_basis_;
  std::size_t n1_;
  std::size_t n2_;
  ParameterLayout layout_;
  ParameterLayout output_layout_;
};

}  // namespace asdyn
