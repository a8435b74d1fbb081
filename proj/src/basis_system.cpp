#include "asdyn/basis_system.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace asdyn {

TensorBasis::TensorBasis(KnotGrid grid)
    : grid_(std::move(grid)),
      north_(std::vector<double>(grid_.north_knots().begin(), grid_.north_knots().end())),
      east_(std::vector<double>(grid_.east_knots().begin(), grid_.east_knots().end())),
      column_(north_.size() * east_.size(), -1) {
  for (std::size_t a = 0; a < north_.size(); ++a) {
    const auto [n_lo, n_hi] = north_.support_cells(a);
    for (std::size_t b = 0; b < east_.size(); ++b) {
      const auto [e_lo, e_hi] = east_.support_cells(b);
      bool touches = false;
      for (std::size_t n = n_lo; n <= n_hi && !touches; ++n) {
        for (std::size_t e = e_lo; e <= e_hi && !touches; ++e) {
          touches = grid_.is_active({static_cast<int>(n), static_cast<int>(e)});
        }
      }
      if (touches) {
        column_[a * east_.size() + b] = static_cast<long>(kept_.size());
        kept_.emplace_back(a, b);
      }
    }
  }
}

long TensorBasis::column_of(std::size_t a, std::size_t b) const noexcept {
  if (a >= north_.size() || b >= east_.size()) return -1;
  return column_[a * east_.size() + b];
}

Eigen::VectorXd TensorBasis::linear_surface(double a, double b_north, double c_east) const {
  const auto gn = north_.greville();
  const auto ge = east_.greville();
  Eigen::VectorXd coef(static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t l = 0; l < kept_.size(); ++l) {
    coef[static_cast<Eigen::Index>(l)] = a + b_north * gn[kept_[l].first] + c_east * ge[kept_[l].second];
  }
  return coef;
}

BasisSystem evaluate_basis(std::shared_ptr<const TensorBasis> basis, std::span<const Location> locations) {
  if (!basis) throw std::invalid_argument("evaluate_basis: null basis");
  const auto n = static_cast<Eigen::Index>(locations.size());
  const auto L = static_cast<Eigen::Index>(basis->n_basis());
  std::vector<Eigen::Triplet<double>> vals;
  std::vector<Eigen::Triplet<double>> laps;
  vals.reserve(locations.size() * 16);
  laps.reserve(locations.size() * 16);

  for (std::size_t i = 0; i < locations.size(); ++i) {
    const Location x = locations[i];
    if (!basis->grid().contains(x)) {
      std::ostringstream msg;
      msg << std::setprecision(10) << "location of record " << i << " (north=" << x.north
          << ", east=" << x.east << ") lies outside the knot span";
      throw std::out_of_range(msg.str());
    }
    const auto nd = basis->north_spline().evaluate_local_all(x.north);
    const auto ed = basis->east_spline().evaluate_local_all(x.east);
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t q = 0; q < 4; ++q) {
        const long col = basis->column_of(nd[0].first + p, ed[0].first + q);
        if (col < 0) continue;
        const double v = nd[0].values[p] * ed[0].values[q];
        const double lap = nd[2].values[p] * ed[0].values[q] + nd[0].values[p] * ed[2].values[q];
        const auto row = static_cast<Eigen::Index>(i);
        if (v != 0.0) vals.emplace_back(row, col, v);
        if (lap != 0.0) laps.emplace_back(row, col, lap);
      }
    }
  }
  BasisSystem out{std::move(basis), SparseMatrix(n, L), SparseMatrix(n, L)};
  out.values.setFromTriplets(vals.begin(), vals.end());
  out.laplacian.setFromTriplets(laps.begin(), laps.end());
  out.values.makeCompressed();
  out.laplacian.makeCompressed();
  return out;
}

BasisSystem build_basis_system(const KnotGrid& grid, std::span<const Location> locations) {
  return evaluate_basis(std::make_shared<const TensorBasis>(grid), locations);
}

void write_triplets_csv(std::ostream& out, const SparseMatrix& matrix) {
  out << "row,col,value\n";
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
    }
  }
}

}  // namespace asdyn
