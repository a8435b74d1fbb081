#include "asdyn/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace asdyn {

CubicBSpline::CubicBSpline(std::vector<double> breakpoints) : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.size() < 2) {
    throw std::invalid_argument("CubicBSpline: need at least two breakpoints");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i])) {
      throw std::invalid_argument("CubicBSpline: non-finite breakpoint");
    }
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1])) {
      throw std::invalid_argument("CubicBSpline: breakpoints must be strictly increasing");
    }
  }
}

// Extended knot vector u_k, k = 0 .. M + 6, with u_k = t_{clamp(k - 3, 0, M)}.
double CubicBSpline::knot(std::ptrdiff_t k) const noexcept {
  const auto m = static_cast<std::ptrdiff_t>(breakpoints_.size()) - 1;
  return breakpoints_[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k - kDegree, 0, m))];
}

std::size_t CubicBSpline::cell_of(double x) const {
  if (!contains(x)) {
    std::ostringstream msg;
    msg << "B-spline evaluation at " << x << " outside knot span [" << lower() << ", " << upper()
        << "]";
    throw OutOfDomain(msg.str());
  }
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  auto s = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it));
  return std::min(s == 0 ? 0 : s - 1, n_cells() - 1);
}

std::pair<std::size_t, std::size_t> CubicBSpline::support_cells(std::size_t j) const {
  const std::size_t lo = j >= 3 ? j - 3 : 0;
  const std::size_t hi = std::min(n_cells() - 1, j);
  return {lo, hi};
}

std::array<CubicBSpline::Local, 3> CubicBSpline::evaluate_local_all(double x) const {
  // Basis functions and derivatives after Piegl & Tiller, "The NURBS Book", A2.3.
  constexpr int p = kDegree;
  constexpr int n_ders = 2;
  const std::size_t s = cell_of(x);
  const auto span = static_cast<std::ptrdiff_t>(s) + p;

  double ndu[p + 1][p + 1];
  double left[p + 1];
  double right[p + 1];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knot(span + 1 - j);
    right[j] = knot(span + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  double ders[n_ders + 1][p + 1];
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

  double a[2][p + 1];
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n_ders; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n_ders; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= (p - k);
  }

  std::array<Local, 3> out;
  for (int k = 0; k <= n_ders; ++k) {
    out[static_cast<std::size_t>(k)].first = s;
    for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(k)].values[static_cast<std::size_t>(j)] = ders[k][j];
  }
  return out;
}

CubicBSpline::Local CubicBSpline::evaluate_local(double x, int derivative_order) const {
  if (derivative_order < 0 || derivative_order > 2) {
    throw std::invalid_argument("B-spline derivative order must be 0, 1 or 2");
  }
  return evaluate_local_all(x)[static_cast<std::size_t>(derivative_order)];
}

std::vector<double> CubicBSpline::evaluate(double x, int derivative_order) const {
  const Local local = evaluate_local(x, derivative_order);
  std::vector<double> out(size(), 0.0);
  for (std::size_t j = 0; j < 4; ++j) out[local.first + j] = local.values[j];
  return out;
}

std::vector<double> CubicBSpline::greville() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto k = static_cast<std::ptrdiff_t>(j);
    out[j] = (knot(k + 1) + knot(k + 2) + knot(k + 3)) / 3.0;
  }
  return out;
}

std::vector<double> bspline_1d(std::span<const double> knots, double x, int derivative_order) {
  return CubicBSpline(std::vector<double>(knots.begin(), knots.end())).evaluate(x, derivative_order);
}

}  // namespace asdyn
