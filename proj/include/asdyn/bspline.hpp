#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asdyn {

/// Raised when a spline is evaluated outside its closed knot span.
class OutOfDomain : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cubic B-spline basis on strictly increasing breakpoints t_0 < ... < t_M.
///
/// The boundary breakpoints are repeated three extra times (clamped / open
/// uniform convention), giving M + 3 basis functions that form a partition of
/// unity on [t_0, t_M]. Function j is supported on cells max(0, j-3) .. min(M-1, j).
class CubicBSpline {
 public:
  static constexpr int kDegree = 3;

  explicit CubicBSpline(std::vector<double> breakpoints);

  /// Values (or derivatives) of the four functions that can be nonzero at x.
  struct Local {
    std::size_t first = 0;  ///< index of the first of the four functions
    std::array<double, 4> values{};
  };

  [[nodiscard]] std::size_t size() const noexcept { return breakpoints_.size() + 2; }
  [[nodiscard]] std::size_t n_cells() const noexcept { return breakpoints_.size() - 1; }
  [[nodiscard]] std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  [[nodiscard]] double lower() const noexcept { return breakpoints_.front(); }
  [[nodiscard]] double upper() const noexcept { return breakpoints_.back(); }
  [[nodiscard]] bool contains(double x) const noexcept { return x >= lower() && x <= upper(); }

  /// Cell index s with t_s <= x < t_{s+1}; the right end maps to the last cell.
  [[nodiscard]] std::size_t cell_of(double x) const;

  /// First and last cell touched by the support of function j.
  [[nodiscard]] std::pair<std::size_t, std::size_t> support_cells(std::size_t j) const;

  /// Evaluates derivative order 0, 1 or 2 of all locally nonzero functions.
  [[nodiscard]] Local evaluate_local(double x, int derivative_order) const;

  /// All three derivative orders at once (rows 0..2), sharing one span search.
  [[nodiscard]] std::array<Local, 3> evaluate_local_all(double x) const;

  /// Dense vector of length size().
  [[nodiscard]] std::vector<double> evaluate(double x, int derivative_order) const;

  /// Greville abscissae: sum_j greville[j] * B_j(x) == x on the span.
  [[nodiscard]] std::vector<double> greville() const;

 private:
  [[nodiscard]] double knot(std::ptrdiff_t k) const noexcept;

  std::vector<double> breakpoints_;
};

/// Convenience form: all basis values (or derivatives) at x.
[[nodiscard]] std::vector<double> bspline_1d(std::span<const double> knots, double x,
                                             int derivative_order);

}  // namespace asdyn
