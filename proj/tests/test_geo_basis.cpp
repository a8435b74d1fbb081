#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "asdyn/basis_system.hpp"
#include "asdyn/bspline.hpp"
#include "asdyn/gp_kernel.hpp"
#include "asdyn/knot_grid.hpp"
#include "support.hpp"

using namespace asdyn;

namespace {

// Textbook Cox-de Boor recursion on the clamped knot vector, half-open cells
// except for the final cell, which is closed.
double cox_de_boor(const std::vector<double>& t, std::size_t i, int k, double x) {
  if (k == 0) {
    const bool last = x == t.back() && t[i] < t[i + 1] && t[i + 1] == t.back();
    return (t[i] <= x && x < t[i + 1]) || last ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double d1 = t[i + static_cast<std::size_t>(k)] - t[i];
  const double d2 = t[i + static_cast<std::size_t>(k) + 1] - t[i + 1];
  if (d1 > 0.0) v += (x - t[i]) / d1 * cox_de_boor(t, i, k - 1, x);
  if (d2 > 0.0) v += (t[i + static_cast<std::size_t>(k) + 1] - x) / d2 * cox_de_boor(t, i + 1, k - 1, x);
  return v;
}

std::vector<double> clamped(const std::vector<double>& breaks) {
  std::vector<double> t(3, breaks.front());
  t.insert(t.end(), breaks.begin(), breaks.end());
  t.insert(t.end(), 3, breaks.back());
  return t;
}

std::vector<double> uniform_knots(int n, double step = 1.0) {
  std::vector<double> k;
  for (int i = 0; i <= n; ++i) k.push_back(i * step);
  return k;
}

// Cross product sign test for the brute-force hull oracle.
long cross(GridCell o, GridCell a, GridCell b) {
  return static_cast<long>(a.east - o.east) * (b.north - o.north) - static_cast<long>(a.north - o.north) * (b.east - o.east);
}

// Point in the hull iff it lies in some triangle of occupied points (or on a segment between two).
bool in_hull_brute(const std::vector<GridCell>& pts, GridCell p) {
  const std::size_t n = pts.size();
  for (std::size_t a = 0; a < n; ++a) {
    if (pts[a] == p) return true;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (cross(pts[a], pts[b], p) == 0 && std::min(pts[a].east, pts[b].east) <= p.east &&
          p.east <= std::max(pts[a].east, pts[b].east) && std::min(pts[a].north, pts[b].north) <= p.north &&
          p.north <= std::max(pts[a].north, pts[b].north)) {
        return true;
      }
      for (std::size_t c = b + 1; c < n; ++c) {
        const long d1 = cross(pts[a], pts[b], p);
        const long d2 = cross(pts[b], pts[c], p);
        const long d3 = cross(pts[c], pts[a], p);
        const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
        const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
        if (!(neg && pos) && cross(pts[a], pts[b], pts[c]) != 0) return true;
      }
    }
  }
  return false;
}

std::shared_ptr<const TensorBasis> full_unit_grid(int n_north_cells, int n_east_cells) {
  std::vector<GridCell> cells;
  for (int a = 0; a < n_north_cells; ++a) {
    for (int b = 0; b < n_east_cells; ++b) cells.push_back({a, b});
  }
  return std::make_shared<const TensorBasis>(
      KnotGrid(uniform_knots(n_north_cells), uniform_knots(n_east_cells), cells));
}

double surface_at(const std::shared_ptr<const TensorBasis>& basis, const Eigen::VectorXd& beta, Location x) {
  const BasisSystem s = evaluate_basis(basis, std::vector<Location>{x});
  return (s.values * beta)[0];
}

}  // namespace

TEST_SUITE("bspline") {
  TEST_CASE("cardinal cubic at a central knot") {
    const auto knots = uniform_knots(10);
    const auto v = bspline_1d(knots, 5.0, 0);
    REQUIRE(v.size() == 13);
    std::vector<double> nonzero;
    for (double x : v) {
      if (x != 0.0) nonzero.push_back(x);
    }
    REQUIRE(nonzero.size() == 3);
    CHECK(nonzero[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(nonzero[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-14));
    CHECK(nonzero[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  }

  TEST_CASE("matches Cox-de Boor recursion on irregular knots") {
    const std::vector<double> breaks{-1.0, -0.3, 0.2, 0.25, 1.1, 2.0, 3.7};
    const auto t = clamped(breaks);
    const CubicBSpline s(breaks);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(breaks.front(), breaks.back());
    for (int trial = 0; trial < 500; ++trial) {
      const double x = trial == 0 ? breaks.back() : (trial == 1 ? breaks.front() : u(gen));
      const auto v = s.evaluate(x, 0);
      REQUIRE(v.size() == s.size());
      double sum = 0.0;
      int nonzero = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        CHECK(v[j] == doctest::Approx(cox_de_boor(t, j, 3, x)).epsilon(1e-12).scale(1.0));
        sum += v[j];
        nonzero += v[j] != 0.0;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(nonzero <= 4);
    }
  }

  TEST_CASE("derivatives agree with finite differences of the values") {
    const std::vector<double> breaks{0.0, 0.5, 1.3, 2.0, 2.2, 3.0};
    const CubicBSpline s(breaks);
    const double h = 1e-5;
    for (double x : {0.1, 0.7, 1.0, 1.9, 2.1, 2.6, 2.9}) {
      const auto d1 = s.evaluate(x, 1);
      const auto d2 = s.evaluate(x, 2);
      const auto vp = s.evaluate(x + h, 0);
      const auto vm = s.evaluate(x - h, 0);
      const auto v0 = s.evaluate(x, 0);
      const auto d1p = s.evaluate(x + h, 1);
      const auto d1m = s.evaluate(x - h, 1);
      for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK(d1[j] == doctest::Approx((vp[j] - vm[j]) / (2 * h)).epsilon(1e-6).scale(1.0));
        CHECK(d2[j] == doctest::Approx((d1p[j] - d1m[j]) / (2 * h)).epsilon(1e-5).scale(1.0));
        (void)v0;
      }
    }
  }

  TEST_CASE("Greville abscissae reproduce the identity") {
    const CubicBSpline s({0.0, 0.4, 1.0, 1.5, 3.0});
    const auto g = s.greville();
    for (double x : {0.0, 0.3, 0.99, 2.2, 3.0}) {
      const auto v = s.evaluate(x, 0);
      double y = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) y += g[j] * v[j];
      CHECK(y == doctest::Approx(x).epsilon(1e-12).scale(1.0));
    }
  }

  TEST_CASE("rejects points outside the span and bad knots") {
    const CubicBSpline s({0.0, 1.0, 2.0});
    CHECK_THROWS_AS((void)s.evaluate(-1e-9, 0), OutOfDomain);
    CHECK_THROWS_AS((void)s.evaluate(2.0 + 1e-9, 0), OutOfDomain);
    CHECK_NOTHROW((void)s.evaluate(2.0, 0));
    CHECK_THROWS_AS(CubicBSpline({0.0, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(CubicBSpline({0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)s.evaluate(1.0, 3), std::invalid_argument);
  }
}

TEST_SUITE("knot_grid") {
  TEST_CASE("hull completion matches the triangle oracle") {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> coord(0, 9);
    for (int trial = 0; trial < 60; ++trial) {
      std::set<GridCell> occ;
      const int k = 1 + trial % 12;
      for (int i = 0; i < k; ++i) occ.insert({coord(gen), coord(gen)});
      const std::vector<GridCell> pts(occ.begin(), occ.end());
      const std::vector<GridCell> hull = convex_hull_completion(pts);
      std::set<GridCell> expected;
      for (int a = 0; a <= 9; ++a) {
        for (int b = 0; b <= 9; ++b) {
          if (in_hull_brute(pts, {a, b})) expected.insert({a, b});
        }
      }
      CHECK(std::set<GridCell>(hull.begin(), hull.end()) == expected);
      CHECK(std::is_sorted(hull.begin(), hull.end()));
    }
  }

  TEST_CASE("grid spacing splits the east extent") {
    std::vector<Location> locs{{0.0, 0.0}, {0.714, 1.0}, {0.3, 0.5}};
    const KnotGrid g = build_knot_grid(locs, 30);
    CHECK(g.spacing() == doctest::Approx(1.0 / 31.0));
    CHECK(g.n_east_cells() == 31);
    CHECK(g.n_north_cells() == static_cast<int>(std::ceil(0.714 * 31 - 1e-9)));
    for (const auto& x : locs) CHECK(g.contains(x));
  }

  TEST_CASE("full-scale spacing is about 293.5 m") {
    std::vector<Location> locs{{0.0, 0.0}, {6500.0, 9100.0}};
    const KnotGrid g = build_knot_grid(locs, 30);
    CHECK(g.spacing() == doctest::Approx(9100.0 / 31.0));
  }

  TEST_CASE("degenerate inputs are rejected") {
    std::vector<Location> same_east{{0.0, 1.0}, {1.0, 1.0}};
    CHECK_THROWS((void)build_knot_grid(same_east, 30));
    std::vector<Location> one{{0.0, 0.0}};
    CHECK_THROWS((void)build_knot_grid(one, 30));
    std::vector<Location> ok{{0.0, 0.0}, {1.0, 1.0}};
    CHECK_THROWS((void)build_knot_grid(ok, 3));
  }

  TEST_CASE("uneven spacing is rejected") {
    CHECK_THROWS(KnotGrid({0.0, 1.0, 2.5}, {0.0, 1.0, 2.0}, {{0, 0}}));
  }
}

TEST_SUITE("basis_system") {
  TEST_CASE("rows have at most 16 nonzeros and sum to one") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Location> locs;
    for (int i = 0; i < 400; ++i) locs.push_back({0.7 * u(gen), u(gen)});
    const KnotGrid grid = build_knot_grid(locs, 12);
    const BasisSystem sys = build_basis_system(grid, locs);
    CHECK(sys.values.rows() == 400);
    for (Eigen::Index r = 0; r < sys.values.rows(); ++r) {
      CHECK(sys.values.row(r).nonZeros() <= 16);
      CHECK(sys.laplacian.row(r).nonZeros() <= 16);
      CHECK(std::abs(sys.values.row(r).sum() - 1.0) < 1e-9);
    }
  }

  TEST_CASE("pruning drops functions away from occupied cells") {
    std::vector<Location> locs;
    for (int i = 0; i <= 20; ++i) {
      locs.push_back({0.0, i / 20.0});
      locs.push_back({0.8, i / 20.0});
    }
    locs.push_back({0.0, 0.0});
    // Two horizontal bands; hull completion fills between them.
    const KnotGrid g = build_knot_grid(locs, 8);
    const TensorBasis tb(g);
    CHECK(tb.n_basis() <= tb.n_full());
    std::vector<Location> corners{{0.0, 0.0}, {0.0, 1.0}};
    const KnotGrid tri = build_knot_grid(std::vector<Location>{{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}, 8);
    const TensorBasis tb2(tri);
    CHECK(tb2.n_basis() < tb2.n_full());
    for (std::size_t l = 0; l < tb2.n_basis(); ++l) {
      const auto [a, b] = tb2.axes_of(l);
      CHECK(tb2.column_of(a, b) == static_cast<long>(l));
    }
  }

  TEST_CASE("Laplacian matches a five-point stencil on a unit grid") {
    const auto basis = full_unit_grid(6, 8);
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd beta(static_cast<Eigen::Index>(basis->n_basis()));
    for (auto& b : beta) b = nd(gen);
    std::uniform_real_distribution<double> un(0.1, 5.9), ue(0.1, 7.9);
    std::vector<Location> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({un(gen), ue(gen)});
    const BasisSystem sys = evaluate_basis(basis, pts);
    const Eigen::VectorXd lap = sys.laplacian * beta;
    const double rms = std::sqrt(lap.squaredNorm() / static_cast<double>(lap.size()));
    const double h = 1e-3;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Location x = pts[i];
      const double f0 = surface_at(basis, beta, x);
      const double fd = (surface_at(basis, beta, {x.north + h, x.east}) + surface_at(basis, beta, {x.north - h, x.east}) +
                         surface_at(basis, beta, {x.north, x.east + h}) + surface_at(basis, beta, {x.north, x.east - h}) -
                         4.0 * f0) / (h * h);
      const double li = lap[static_cast<Eigen::Index>(i)];
      CHECK(std::abs(fd - li) / std::max(std::abs(li), rms) < 1e-3);
    }
  }

  TEST_CASE("linear surfaces are harmonic and exactly reproduced") {
    std::vector<Location> locs{{0.0, 0.0}, {0.6, 1.0}, {0.3, 0.2}, {0.5, 0.9}, {0.1, 0.6}};
    const KnotGrid grid = build_knot_grid(locs, 10);
    const BasisSystem sys = build_basis_system(grid, locs);
    const Eigen::VectorXd beta = sys.basis->linear_surface(1.5, -2.0, 3.0);
    const Eigen::VectorXd v = sys.values * beta;
    const Eigen::VectorXd d = sys.laplacian * beta;
    for (std::size_t i = 0; i < locs.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      CHECK(v[ii] == doctest::Approx(1.5 - 2.0 * locs[i].north + 3.0 * locs[i].east).epsilon(1e-12));
      CHECK(std::abs(d[ii]) < 1e-6);
    }
  }

  TEST_CASE("out-of-span locations name the record") {
    std::vector<Location> locs{{0.0, 0.0}, {1.0, 1.0}};
    const KnotGrid grid = build_knot_grid(locs, 4);
    std::vector<Location> bad{{0.5, 0.5}, {0.5, 1.5}};
    try {
      (void)build_basis_system(grid, bad);
      FAIL("expected an exception");
    } catch (const std::out_of_range& e) {
      CHECK(std::string(e.what()).find("record 1") != std::string::npos);
    }
  }
}

TEST_SUITE("gp_kernel") {
  TEST_CASE("covariance is symmetric with amplitude on the diagonal") {
    std::vector<Location> locs{{0.0, 0.0}, {0.1, 0.0}, {0.0, 0.3}, {1.0, 1.0}};
    const GpKernelParams p{2.0, 0.5, 0.0};
    const Eigen::MatrixXd k = gp_covariance(p, locs);
    CHECK((k - k.transpose()).norm() == 0.0);
    CHECK(k(0, 0) == 2.0);
    CHECK(k(0, 1) == doctest::Approx(2.0 * std::exp(-0.01 / 0.25)));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }

  TEST_CASE("log density matches a dense normal oracle and its gradients") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Location> locs;
    for (int i = 0; i < 12; ++i) locs.push_back({u(gen), u(gen)});
    const SquaredExponentialGp gp(locs);
    GpKernelParams p{1.3, 0.4, 0.7};
    Eigen::VectorXd y(12);
    for (auto& v : y) v = 0.7 + u(gen);
    const auto ev = gp.evaluate(p, y);

    Eigen::MatrixXd k = gp_covariance(p, locs);
    k.diagonal().array() += kGpRelativeJitter * p.amplitude;
    const Eigen::VectorXd r = y.array() - p.mean;
    const double oracle = -0.5 * r.dot(k.inverse() * r) - 0.5 * std::log(k.determinant()) -
                          0.5 * 12 * std::log(2.0 * M_PI);
    CHECK(ev.log_density == doctest::Approx(oracle).epsilon(1e-10));

    const double h = 1e-6;
    auto at = [&](GpKernelParams q, const Eigen::VectorXd& yy) { return gp.evaluate(q, yy).log_density; };
    GpKernelParams a = p, b = p;
    a.amplitude += h;
    b.amplitude -= h;
    CHECK(testing::rel_err(ev.d_amplitude, (at(a, y) - at(b, y)) / (2 * h)) < 1e-6);
    a = p;
    b = p;
    a.length_scale += h;
    b.length_scale -= h;
    CHECK(testing::rel_err(ev.d_length_scale, (at(a, y) - at(b, y)) / (2 * h)) < 1e-6);
    a = p;
    b = p;
    a.mean += h;
    b.mean -= h;
    CHECK(testing::rel_err(ev.d_mean, (at(a, y) - at(b, y)) / (2 * h)) < 1e-6);
    for (int i = 0; i < 12; ++i) {
      Eigen::VectorXd yp = y, ym = y;
      yp[i] += h;
      ym[i] -= h;
      CHECK(testing::rel_err(ev.d_values[i], (at(p, yp) - at(p, ym)) / (2 * h)) < 1e-6);
    }
  }

  TEST_CASE("invalid hyperparameters give an out-of-support value") {
    std::vector<Location> locs{{0.0, 0.0}, {1.0, 0.0}};
    const SquaredExponentialGp gp(locs);
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
    CHECK(gp.evaluate({-1.0, 1.0, 0.0}, y).log_density == -std::numeric_limits<double>::infinity());
    CHECK(gp.evaluate({1.0, 0.0, 0.0}, y).log_density == -std::numeric_limits<double>::infinity());
  }
}
