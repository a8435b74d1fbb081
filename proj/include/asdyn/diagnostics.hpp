#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asdyn/draws.hpp"

namespace asdyn {

inline constexpr double kRhatFlagThreshold = 1.01;

/// Each inner vector is one chain; all chains must have equal length.
using ChainSamples = std::vector<std::vector<double>>;

/// Classic split R-hat. Empty with fewer than 2 chains, fewer than 4 draws per
/// chain, or zero within-chain variance.
[[nodiscard]] std::optional<double> split_rhat(const ChainSamples& chains);

/// Bulk effective sample size from rank-normalized split chains. Empty with
/// fewer than 4 draws per chain or when all draws are equal.
[[nodiscard]] std::optional<double> bulk_ess(const ChainSamples& chains);

struct ParameterDiagnostic {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<double> rhat;
  std::optional<double> ess_bulk;
  bool flagged = false;  ///< rhat above the flag threshold
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostic> parameters;
  /// Why R-hat is unavailable for every parameter (for example a single chain); empty otherwise.
  std::string rhat_note;
  std::vector<int> divergences;

  [[nodiscard]] std::size_t n_flagged() const;
  /// Fraction of parameters whose R-hat exceeds `threshold`.
  [[nodiscard]] double fraction_rhat_above(double threshold) const;
  [[nodiscard]] std::optional<double> max_rhat() const;
  [[nodiscard]] std::optional<double> min_ess() const;
};

[[nodiscard]] DiagnosticsReport diagnose(const PosteriorDraws& draws, double flag_threshold = kRhatFlagThreshold);

}  // namespace asdyn
