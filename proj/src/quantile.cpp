#include "asdyn/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asdyn {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) {
    throw std::invalid_argument("quantile of data containing NaN");
  }
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double quantile(std::span<const double> values, double p) { return quantile_sorted(sorted_copy(values), p); }

std::vector<double> quantiles(std::span<const double> values, std::span<const double> probs) {
  const std::vector<double> v = sorted_copy(values);
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(quantile_sorted(v, p));
  return out;
}

double probability_mcse(double p, std::size_t n) {
  if (n == 0) throw std::invalid_argument("probability_mcse with zero draws");
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

}  // namespace asdyn
