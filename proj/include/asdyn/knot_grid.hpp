#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "asdyn/geometry.hpp"

namespace asdyn {

/// A knot-grid block, addressed by its north and east cell indices.
struct GridCell {
  int north = 0;
  int east = 0;

  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

/// Square knot lattice with a set of retained (active) cells.
///
/// Both axes share the spacing x0. Active cells are kept sorted.
class KnotGrid {
 public:
  KnotGrid(std::vector<double> north_knots, std::vector<double> east_knots,
           std::vector<GridCell> active_cells);

  [[nodiscard]] std::span<const double> north_knots() const noexcept { return north_knots_; }
  [[nodiscard]] std::span<const double> east_knots() const noexcept { return east_knots_; }
  [[nodiscard]] double spacing() const noexcept { return spacing_; }
  [[nodiscard]] int n_north_cells() const noexcept { return static_cast<int>(north_knots_.size()) - 1; }
  [[nodiscard]] int n_east_cells() const noexcept { return static_cast<int>(east_knots_.size()) - 1; }
  /// Knots strictly inside the span on each axis.
  [[nodiscard]] int n_north_inner() const noexcept { return n_north_cells() - 1; }
  [[nodiscard]] int n_east_inner() const noexcept { return n_east_cells() - 1; }

  [[nodiscard]] std::span<const GridCell> active_cells() const noexcept { return active_; }
  [[nodiscard]] bool is_active(GridCell cell) const noexcept;
  [[nodiscard]] bool contains(Location x) const noexcept;
  /// Cell containing x, or nullopt outside the knot span.
  [[nodiscard]] std::optional<GridCell> cell_of(Location x) const noexcept;

 private:
  std::vector<double> north_knots_;
  std::vector<double> east_knots_;
  double spacing_ = 0.0;
  std::vector<GridCell> active_;
};

/// Equal-spacing knot grid over the locations' bounding box.
///
/// The east extent is split by n_east_inner interior knots into n_east_inner + 1
/// blocks of side x0; the north axis gets as many x0 blocks as needed to cover
/// its extent. Blocks holding no location are dropped and the survivors are
/// completed to their convex hull.
[[nodiscard]] KnotGrid build_knot_grid(std::span<const Location> locations, int n_east_inner);

/// Cells whose index point (east, north) lies in the convex hull of the occupied
/// cells' index points. Uses Andrew's monotone chain; result is sorted.
[[nodiscard]] std::vector<GridCell> convex_hull_completion(std::span<const GridCell> occupied);

}  // namespace asdyn
