#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asdyn/bspline.hpp"
#include "asdyn/dataset.hpp"
#include "asdyn/draws.hpp"
#include "asdyn/model_spec.hpp"

namespace asdyn {

inline constexpr std::array<double, 3> kDefaultThresholds{10.0, 50.0, 100.0};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Posterior summary of a scalar: mean, median, central 50% and 95% intervals (type-7 quantiles).
struct Band {
  double mean = 0.0;
  double median = 0.0;
  Interval central50;
  Interval central95;
};

[[nodiscard]] Band summarize_band(std::span<const double> draws);

struct WellExceedance {
  double mean = 0.0;  ///< posterior mean of exp(eta2)
  double q10 = 0.0;
  double q90 = 0.0;
  std::vector<double> prob_exceed;  ///< one per threshold
  std::vector<double> mcse;         ///< Monte Carlo standard error of each probability
};

struct ExceedanceReport {
  std::vector<double> thresholds;
  std::vector<WellExceedance> wells;
};

/// Per-well statistics of exp(eta2) over the draws. Throws std::out_of_range without an eta2 block.
[[nodiscard]] ExceedanceReport individual_predictions(const PosteriorDraws& draws,
                                                      std::span<const double> thresholds = kDefaultThresholds);

/// Bands of beta_delta + gamma(theta) at each grid point.
[[nodiscard]] std::vector<Band> mixing_coefficient_curve(const PosteriorDraws& draws, MixingVariant variant,
                                                         std::span<const double> theta_grid);

/// Bands of exp(alpha_delta + (beta_delta + gamma(theta1)) * delta [+ e_obs + e_tau]) over a delta grid.
/// Noise draws are keyed on (seed, draw, grid index).
[[nodiscard]] std::vector<Band> predictive_change(const PosteriorDraws& draws, MixingVariant variant,
                                                  double theta1, std::span<const double> delta_grid,
                                                  bool include_noise, std::uint64_t seed);

struct TrendReport {
  Band mean_multiplicative;    ///< exp(mean_i(theta2 - theta1))
  Band median_multiplicative;  ///< exp(median_i(theta2 - theta1))
  Band mean_before;            ///< mean_i exp(theta1 + beta_depth (d - d0) + e_obs), ug/L
  Band mean_after;             ///< mean_i exp(eta2), ug/L
  Band mean_change;            ///< paired difference after - before, ug/L
  Band intercept_attribution;  ///< mean_i exp(eta2) (1 - exp(alpha_delta)), ug/L
  double fraction_increase = 0.0;  ///< wells whose posterior-mean change is positive
};

/// `depth2` are the survey-2 depths in well order. Observation noise draws are keyed on (seed, draw).
[[nodiscard]] TrendReport trend_report(const PosteriorDraws& draws, std::span<const double> depth2, double d0,
                                       std::uint64_t seed);

struct PpcStatistic {
  std::string name;
  double observed = 0.0;
  std::vector<double> replicated;  ///< one per draw
  double p_value = 0.0;            ///< Pr(replicated >= observed)
};

struct PpcReport {
  std::size_t subsample_size = 0;
  /// mean_log_change, sd_log_change, mean_linear_change (2000 to 2014).
  std::vector<PpcStatistic> statistics;
};

/// For each draw, a uniform subsample (without replacement) of survey-2 wells
/// replicates the panel's 2000 and 2014 lab readings with fresh observation
/// noise; statistics are compared with the observed panel. Subsamples are keyed on (seed, draw).
[[nodiscard]] PpcReport ppc_subsample(const PosteriorDraws& draws, std::size_t subsample_size,
                                      const Dataset& observed_panel, std::span<const double> depth2, double d0,
                                      std::uint64_t seed);

/// exp(factor * (h / east_extent)^2): the multiplicative effect a unit of the
/// scaled Laplacian corresponds to at neighbour distance h.
[[nodiscard]] double laplacian_scale(double h, double east_extent, double factor);

struct SplineChangeCurve {
  std::vector<double> theta_grid;
  std::vector<Band> change;  ///< beta_linear * theta + sum_l beta_l B_l(theta)
  std::vector<double> thresholds;
  /// exceedance[t][g]: Pr(2014 measurement > thresholds[t] | theta2000 = theta_grid[g]).
  std::vector<std::vector<double>> exceedance;
};

/// Resampled-model draws. The 2014 measurement is forward-simulated as
/// theta + change + N(0, sigma_long) + N(0, sigma_short) at the reference depth,
/// `replicates` times per draw, keyed on (seed, draw, grid index).
[[nodiscard]] SplineChangeCurve spline_change_curve(const PosteriorDraws& draws, const CubicBSpline& spline,
                                                    std::span<const double> theta_grid,
                                                    std::span<const double> thresholds, int replicates,
                                                    std::uint64_t seed);

}  // namespace asdyn
