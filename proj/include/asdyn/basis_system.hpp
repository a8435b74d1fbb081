#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "asdyn/bspline.hpp"
#include "asdyn/geometry.hpp"
#include "asdyn/knot_grid.hpp"

namespace asdyn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Pruned tensor-product cubic B-spline basis on a knot grid.
///
/// Product function (a, b) = B^N_a * B^E_b is kept iff its support touches an
/// active cell; kept functions are numbered 0..L-1 in (north, east) order.
class TensorBasis {
 public:
  explicit TensorBasis(KnotGrid grid);

  [[nodiscard]] const KnotGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] const CubicBSpline& north_spline() const noexcept { return north_; }
  [[nodiscard]] const CubicBSpline& east_spline() const noexcept { return east_; }
  [[nodiscard]] std::size_t n_basis() const noexcept { return kept_.size(); }
  /// Unpruned tensor size (per-axis counts multiplied).
  [[nodiscard]] std::size_t n_full() const noexcept { return north_.size() * east_.size(); }
  /// (north, east) per-axis indices of kept function l.
  [[nodiscard]] std::pair<std::size_t, std::size_t> axes_of(std::size_t l) const { return kept_.at(l); }
  /// Column of product (a, b), or -1 if pruned.
  [[nodiscard]] long column_of(std::size_t a, std::size_t b) const noexcept;

  /// Coefficients representing a + b * north + c * east exactly (Greville abscissae).
  [[nodiscard]] Eigen::VectorXd linear_surface(double a, double b_north, double c_east) const;

 private:
  KnotGrid grid_;
  CubicBSpline north_;
  CubicBSpline east_;
  std::vector<std::pair<std::size_t, std::size_t>> kept_;
  std::vector<long> column_;  // n_full entries
};

/// Basis and Laplacian matrices of a TensorBasis evaluated at a set of locations.
struct BasisSystem {
  std::shared_ptr<const TensorBasis> basis;
  SparseMatrix values;     ///< n_locations x L, B_l(x_i)
  SparseMatrix laplacian;  ///< n_locations x L, (B^N_a)'' B^E_b + B^N_a (B^E_b)''

  [[nodiscard]] std::size_t n_basis() const noexcept { return basis ? basis->n_basis() : 0; }
  [[nodiscard]] std::size_t n_locations() const noexcept { return static_cast<std::size_t>(values.rows()); }
  [[nodiscard]] const KnotGrid& grid() const { return basis->grid(); }
};

/// Evaluates the basis at each location. Throws std::out_of_range naming the
/// offending record index if a location lies outside the knot span.
[[nodiscard]] BasisSystem evaluate_basis(std::shared_ptr<const TensorBasis> basis,
                                         std::span<const Location> locations);

[[nodiscard]] BasisSystem build_basis_system(const KnotGrid& grid, std::span<const Location> locations);

/// Sparse triplet CSV with header `row,col,value` (0-based indices).
void write_triplets_csv(std::ostream& out, const SparseMatrix& matrix);

}  // namespace asdyn
