#include "asdyn/knot_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace asdyn {

namespace {

void check_equal_spacing(std::span<const double> knots, double spacing, const char* axis) {
  if (knots.size() < 2) {
    throw std::invalid_argument(std::string("KnotGrid: ") + axis + " axis needs at least two knots");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double gap = knots[i] - knots[i - 1];
    if (!(gap > 0.0) || std::abs(gap - spacing) > 1e-9 * spacing) {
      throw std::invalid_argument(std::string("KnotGrid: ") + axis +
                                  " knots must be strictly increasing with constant spacing");
    }
  }
}

std::size_t axis_cell(std::span<const double> knots, double x) {
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  auto s = static_cast<std::size_t>(std::distance(knots.begin(), it));
  return std::min(s == 0 ? 0 : s - 1, knots.size() - 2);
}

using Point = std::pair<std::int64_t, std::int64_t>;  // (east, north)

std::int64_t cross(const Point& o, const Point& a, const Point& b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

}  // namespace

KnotGrid::KnotGrid(std::vector<double> north_knots, std::vector<double> east_knots,
                   std::vector<GridCell> active_cells)
    : north_knots_(std::move(north_knots)),
      east_knots_(std::move(east_knots)),
      active_(std::move(active_cells)) {
  if (east_knots_.size() < 2) throw std::invalid_argument("KnotGrid: east axis needs at least two knots");
  spacing_ = east_knots_[1] - east_knots_[0];
  check_equal_spacing(east_knots_, spacing_, "east");
  check_equal_spacing(north_knots_, spacing_, "north");
  std::sort(active_.begin(), active_.end());
  active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
  for (const auto& c : active_) {
    if (c.north < 0 || c.north >= n_north_cells() || c.east < 0 || c.east >= n_east_cells()) {
      throw std::invalid_argument("KnotGrid: active cell outside the grid");
    }
  }
}

bool KnotGrid::is_active(GridCell cell) const noexcept {
  return std::binary_search(active_.begin(), active_.end(), cell);
}

bool KnotGrid::contains(Location x) const noexcept {
  return x.north >= north_knots_.front() && x.north <= north_knots_.back() &&
         x.east >= east_knots_.front() && x.east <= east_knots_.back();
}

std::optional<GridCell> KnotGrid::cell_of(Location x) const noexcept {
  if (!contains(x)) return std::nullopt;
  return GridCell{static_cast<int>(axis_cell(north_knots_, x.north)),
                  static_cast<int>(axis_cell(east_knots_, x.east))};
}

std::vector<GridCell> convex_hull_completion(std::span<const GridCell> occupied) {
  std::vector<Point> pts;
  pts.reserve(occupied.size());
  for (const auto& c : occupied) pts.emplace_back(c.east, c.north);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) return {};

  // Lower and upper chains, collinear points dropped.
  std::vector<Point> hull;
  if (pts.size() >= 3) {
    std::vector<Point> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
      h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
      while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
      h[k++] = pts[i];
    }
    h.resize(k - 1);
    hull = std::move(h);
  } else {
    hull = pts;
  }

  const auto [min_e, max_e] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
  const auto [min_n, max_n] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.second < b.second; });

  auto inside = [&](const Point& q) {
    if (hull.size() == 1) return q == hull[0];
    if (hull.size() == 2) {
      // Segment (all occupied points collinear).
      const auto& a = hull[0];
      const auto& b = hull[1];
      return cross(a, b, q) == 0 && q.first >= std::min(a.first, b.first) &&
             q.first <= std::max(a.first, b.first) && q.second >= std::min(a.second, b.second) &&
             q.second <= std::max(a.second, b.second);
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
      if (cross(hull[i], hull[(i + 1) % hull.size()], q) < 0) return false;
    }
    return true;
  };

  std::vector<GridCell> out;
  for (auto n = min_n->second; n <= max_n->second; ++n) {
    for (auto e = min_e->first; e <= max_e->first; ++e) {
      if (inside({e, n})) out.push_back({static_cast<int>(n), static_cast<int>(e)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

KnotGrid build_knot_grid(std::span<const Location> locations, int n_east_inner) {
  if (n_east_inner < 4) throw std::invalid_argument("build_knot_grid: n_east_inner must be >= 4");
  if (locations.size() < 2) throw std::invalid_argument("build_knot_grid: need at least two locations");
  double min_e = locations[0].east, max_e = min_e;
  double min_n = locations[0].north, max_n = min_n;
  for (const auto& x : locations) {
    if (!std::isfinite(x.east) || !std::isfinite(x.north)) {
      throw std::invalid_argument("build_knot_grid: non-finite coordinate");
    }
    min_e = std::min(min_e, x.east);
    max_e = std::max(max_e, x.east);
    min_n = std::min(min_n, x.north);
    max_n = std::max(max_n, x.north);
  }
  const double extent_e = max_e - min_e;
  const double extent_n = max_n - min_n;
  if (!(extent_e > 0.0) || !(extent_n > 0.0)) {
    throw std::invalid_argument("build_knot_grid: degenerate extent (locations collinear along an axis)");
  }
  const double x0 = extent_e / (n_east_inner + 1);
  const int north_cells = std::max(1, static_cast<int>(std::ceil(extent_n / x0 - 1e-9)));

  std::vector<double> east(static_cast<std::size_t>(n_east_inner) + 2);
  for (std::size_t k = 0; k < east.size(); ++k) east[k] = min_e + static_cast<double>(k) * x0;
  east.back() = std::max(east.back(), max_e);
  std::vector<double> north(static_cast<std::size_t>(north_cells) + 1);
  for (std::size_t k = 0; k < north.size(); ++k) north[k] = min_n + static_cast<double>(k) * x0;

  std::vector<GridCell> occupied;
  occupied.reserve(locations.size());
  for (const auto& x : locations) {
    occupied.push_back({static_cast<int>(axis_cell(north, x.north)), static_cast<int>(axis_cell(east, x.east))});
  }
  std::sort(occupied.begin(), occupied.end());
  occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
  return KnotGrid(std::move(north), std::move(east), convex_hull_completion(occupied));
}

}  // namespace asdyn
