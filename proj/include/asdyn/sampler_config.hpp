#pragma once

#include <cstdint>

namespace asdyn {

struct SamplerConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_draws = 500;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  /// 0 selects the dynamic (no-U-turn) integrator; > 0 runs fixed-length HMC.
  int leapfrog_steps = 0;
  std::uint64_t seed = 20240601;
  int threads = 1;
  /// Energy error beyond which a trajectory counts as divergent.
  double divergence_threshold = 1000.0;
  /// Half-width of the uniform box used for random initialization.
  double init_radius = 2.0;
  /// Half-width of the uniform perturbation applied to a supplied starting point.
  double init_jitter = 0.1;

  /// Throws std::invalid_argument on non-positive counts or target_accept outside (0, 1).
  void validate() const;
};

}  // namespace asdyn
