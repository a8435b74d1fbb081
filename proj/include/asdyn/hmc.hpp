#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "asdyn/draws.hpp"
#include "asdyn/log_density.hpp"
#include "asdyn/rng.hpp"
#include "asdyn/sampler_config.hpp"

namespace asdyn {

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Phase-space point with cached density and gradient.
struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double log_density = 0.0;
};

/// One leapfrog step with a diagonal inverse metric. Updates `point` in place.
void leapfrog(const LogDensity& target, const Eigen::VectorXd& inv_metric, double step_size, PhasePoint& point);

/// Runs all chains (concurrently when config.threads > 1) and returns the
/// post-warmup draws mapped through target.output().
///
/// Without `init`, chain starting points are uniform on [-init_radius, init_radius]^d.
/// With `init`, they are init plus uniform noise of half-width init_jitter.
/// Throws SamplerError when no finite starting point is found in 100 attempts
/// or when every warmup transition of a chain diverges.
[[nodiscard]] PosteriorDraws sample(const LogDensity& target, const SamplerConfig& config,
                                    const std::optional<Eigen::VectorXd>& init = std::nullopt);

}  // namespace asdyn
