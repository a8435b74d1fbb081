#include "asdyn/gp_kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace asdyn {

bool GpKernelParams::valid() const noexcept {
  return std::isfinite(amplitude) && std::isfinite(length_scale) && std::isfinite(mean) &&
         amplitude > 0.0 && length_scale > 0.0;
}

SquaredExponentialGp::SquaredExponentialGp(std::span<const Location> locations) {
  const auto n = static_cast<Eigen::Index>(locations.size());
  sq_dist_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = locations[static_cast<std::size_t>(i)];
    if (!std::isfinite(a.north) || !std::isfinite(a.east)) {
      throw std::invalid_argument("gp: non-finite coordinate at record " + std::to_string(i));
    }
    sq_dist_(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& b = locations[static_cast<std::size_t>(j)];
      const double dn = a.north - b.north;
      const double de = a.east - b.east;
      sq_dist_(i, j) = sq_dist_(j, i) = dn * dn + de * de;
    }
  }
}

Eigen::MatrixXd SquaredExponentialGp::covariance(const GpKernelParams& params, bool with_jitter) const {
  if (!params.valid()) throw std::invalid_argument("gp: amplitude and length scale must be positive");
  const double inv_rho2 = 1.0 / (params.length_scale * params.length_scale);
  Eigen::MatrixXd k = params.amplitude * (-sq_dist_.array() * inv_rho2).exp().matrix();
  if (with_jitter) k.diagonal().array() += kGpRelativeJitter * params.amplitude;
  return k;
}

SquaredExponentialGp::Evaluation SquaredExponentialGp::evaluate(const GpKernelParams& params,
                                                                const Eigen::VectorXd& values) const {
  const auto n = sq_dist_.rows();
  Evaluation out;
  out.d_values = Eigen::VectorXd::Zero(n);
  if (!params.valid() || values.size() != n) {
    out.log_density = -std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::MatrixXd k = covariance(params, true);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    out.log_density = -std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::VectorXd resid = values.array() - params.mean;
  const Eigen::VectorXd alpha = llt.solve(resid);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.log_density = -0.5 * resid.dot(alpha) - 0.5 * log_det -
                    0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  out.d_values = -alpha;
  out.d_mean = alpha.sum();

  // d/dpsi = 0.5 * tr((alpha alpha^T - K^{-1}) dK/dpsi).
  // The jitter scales with the amplitude, so dK/d(amplitude) = K / amplitude.
  out.d_amplitude = 0.5 * (resid.dot(alpha) - static_cast<double>(n)) / params.amplitude;

  const Eigen::MatrixXd k_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double rho = params.length_scale;
  // dK/drho = K_nojitter .* (2 d^2 / rho^3)
  const Eigen::ArrayXXd dk = (k.array() - (kGpRelativeJitter * params.amplitude) *
                                              Eigen::MatrixXd::Identity(n, n).array()) *
                             sq_dist_.array() * (2.0 / (rho * rho * rho));
  const Eigen::ArrayXXd w = (alpha * alpha.transpose()).array() - k_inv.array();
  out.d_length_scale = 0.5 * (w * dk).sum();
  return out;
}

Eigen::MatrixXd gp_covariance(const GpKernelParams& params, std::span<const Location> locations) {
  return SquaredExponentialGp(locations).covariance(params, false);
}

}  // namespace asdyn
