#pragma once

#include <span>
#include <vector>

namespace asdyn {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of already sorted data.
/// Throws std::invalid_argument on empty input or p outside [0, 1].
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double p);

/// Type-7 quantile of unsorted data; NaN entries are rejected.
[[nodiscard]] double quantile(std::span<const double> values, double p);

/// Several quantiles of the same data, sorting once.
[[nodiscard]] std::vector<double> quantiles(std::span<const double> values, std::span<const double> probs);

/// Monte Carlo standard error of an estimated probability from n draws.
[[nodiscard]] double probability_mcse(double p, std::size_t n);

}  // namespace asdyn
