#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "asdyn/parameter_layout.hpp"

namespace asdyn {

/// Post-warmup draws of several chains, stored chain-major (all draws of chain 0 first).
struct PosteriorDraws {
  ParameterLayout layout;
  Eigen::MatrixXd values;  ///< (n_chains * n_draws) x layout.dim()
  int n_chains = 0;
  int n_draws = 0;
  std::vector<int> divergences;         ///< post-warmup divergent transitions per chain
  std::vector<double> step_size;        ///< adapted step size per chain
  std::vector<double> mean_accept;      ///< mean acceptance statistic per chain
  std::vector<long long> n_leapfrog;    ///< leapfrog steps per chain (warmup included)

  [[nodiscard]] Eigen::Index row(int chain, int draw) const noexcept {
    return static_cast<Eigen::Index>(chain) * n_draws + draw;
  }
  /// Draws of coordinate `column` in one chain.
  [[nodiscard]] std::vector<double> chain_column(int chain, Eigen::Index column) const;
  /// Pooled draws of one coordinate over all chains.
  [[nodiscard]] std::vector<double> column(Eigen::Index column) const;
  /// Pooled draws of a named scalar or one element (0-based) of a named vector block.
  [[nodiscard]] std::vector<double> column(const std::string& block, std::size_t index = 0) const;
  /// Column index of element `index` of a block; throws std::out_of_range.
  [[nodiscard]] Eigen::Index column_index(const std::string& block, std::size_t index = 0) const;
  [[nodiscard]] int total_divergences() const noexcept;
};

}  // namespace asdyn
