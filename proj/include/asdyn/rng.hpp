#pragma once

#include <cstdint>

namespace asdyn {

/// Counter-based generator: the stream is a pure function of its key, so any
/// (chain, iteration) can be replayed without running the ones before it.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t chain, std::uint64_t iteration, std::uint64_t stream = 0) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on (0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  /// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;
  /// Inverse gamma with density proportional to x^{-shape-1} exp(-scale / x).
  double inv_gamma(double shape, double scale) noexcept { return scale / gamma(shape); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace asdyn
