#include <doctest.h>

#include <cmath>
#include <sstream>

#include "asdyn/dataset.hpp"
#include "asdyn/diagnostics.hpp"
#include "asdyn/draws_io.hpp"
#include "asdyn/simulate.hpp"
#include "support.hpp"

using namespace asdyn;

namespace {

Dataset parse(const std::string& text, Schema schema) {
  std::istringstream in(text);
  return read_dataset(in, schema, "test.csv");
}

std::string error_of(const std::string& text, Schema schema) {
  try {
    (void)parse(text, schema);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("csv_schemas") {
  TEST_CASE("survey-1 row parses to a lab value") {
    const Dataset d = parse("well_id,east_m,north_m,depth_m,as_ugL\n23456,1200.5,345.2,14.0,112\n", Schema::survey1);
    REQUIRE(d.size() == 1);
    const WellRecord& w = d.wells[0];
    CHECK(w.well_id == "23456");
    CHECK(w.east_m == 1200.5);
    CHECK(w.north_m == 345.2);
    CHECK(w.depth_m == 14.0);
    CHECK(w.lab_ugL == std::vector<double>{112.0});
    CHECK_FALSE(w.kit_category.has_value());
  }

  TEST_CASE("survey-2 kit label maps to its category") {
    const Dataset d = parse("well_id,east_m,north_m,depth_m,kit_level\nB1,10,20,12,25\nB2,11,21,9,0\n", Schema::survey2);
    REQUIRE(d.size() == 2);
    CHECK(d.wells[0].kit_category == 3);
    CHECK(d.wells[1].kit_category == 1);
    CHECK(d.kit_categories() == std::vector<int>{3, 1});
  }

  TEST_CASE("calibration and panel schemas") {
    const Dataset c = parse("lab_ugL,kit_level\n0,0\n42.5,50\n", Schema::calibration);
    REQUIRE(c.size() == 2);
    CHECK(c.pairs[1].lab_value == 42.5);
    CHECK(c.pairs[1].kit_category == 4);
    const Dataset p = parse(
        "well_id,east_m,north_m,depth_m,as2000_ugL,as2014_ugL,as2015_ugL\nP1,1,2,15,10,20,30\n", Schema::panel);
    CHECK(p.wells[0].lab_ugL == std::vector<double>{10.0, 20.0, 30.0});
    CHECK(p.log_lab(1)[0] == doctest::Approx(std::log(20.0)));
  }

  TEST_CASE("zero lab values are floored and reported") {
    const Dataset d = parse("well_id,east_m,north_m,depth_m,as_ugL\na,0,0,10,0\nb,1,1,10,7\n", Schema::survey1);
    CHECK(d.wells[0].lab_ugL[0] == kDetectionFloor);
    CHECK(d.wells[1].lab_ugL[0] == 7.0);
    CHECK(d.report.floored_lines == std::vector<std::size_t>{2});
  }

  TEST_CASE("empty input is an error, not an empty dataset") {
    CHECK_FALSE(error_of("", Schema::survey1).empty());
    CHECK_FALSE(error_of("well_id,east_m,north_m,depth_m,as_ugL\n", Schema::survey1).empty());
  }

  TEST_CASE("wrong header names the expected columns") {
    const std::string e = error_of("id,x,y,d,v\n1,2,3,4,5\n", Schema::survey1);
    CHECK(e.find("well_id,east_m,north_m,depth_m,as_ugL") != std::string::npos);
  }

  TEST_CASE("non-numeric coordinate reports the line") {
    const std::string e = error_of("well_id,east_m,north_m,depth_m,as_ugL\na,1,2,3,4\nb,east,2,3,4\n", Schema::survey1);
    CHECK(e.find("test.csv:3") != std::string::npos);
    CHECK(e.find("east") != std::string::npos);
  }

  TEST_CASE("unknown kit label lists valid labels with the line") {
    const std::string e = error_of("well_id,east_m,north_m,depth_m,kit_level\nb,1,2,3,30\n", Schema::survey2);
    CHECK(e.find(":2") != std::string::npos);
    CHECK(e.find("0 10 25 50 100 200 300 500 1000") != std::string::npos);
  }

  TEST_CASE("missing fields, negative values and bad depths are rejected") {
    CHECK(error_of("well_id,east_m,north_m,depth_m,as_ugL\na,1,2,3\n", Schema::survey1).find(":2") != std::string::npos);
    CHECK(error_of("well_id,east_m,north_m,depth_m,as_ugL\na,1,2,3,-4\n", Schema::survey1).find(":2") != std::string::npos);
    CHECK(error_of("well_id,east_m,north_m,depth_m,as_ugL\na,1,2,0,4\n", Schema::survey1).find(":2") != std::string::npos);
    CHECK(error_of("well_id,east_m,north_m,depth_m,as_ugL\na,1,2,,4\n", Schema::survey1).find(":2") != std::string::npos);
  }

  TEST_CASE("schema names") {
    for (Schema s : {Schema::survey1, Schema::survey2, Schema::calibration, Schema::panel}) CHECK(parse_schema(to_string(s)) == s);
    CHECK_THROWS((void)parse_schema("survey3"));
  }

  TEST_CASE("write and read round trip") {
    const SimulatedBlanket sim = simulate_blanket(testing::mini_spec(), testing::mini_simulation(30, 20), 3);
    for (const Dataset* d : {&sim.survey1, &sim.survey2, &sim.calibration, &sim.panel}) {
      std::stringstream ss;
      write_dataset(ss, *d);
      const Dataset back = read_dataset(ss, d->schema);
      REQUIRE(back.size() == d->size());
      for (std::size_t i = 0; i < d->wells.size(); ++i) {
        CHECK(back.wells[i].well_id == d->wells[i].well_id);
        CHECK(back.wells[i].east_m == doctest::Approx(d->wells[i].east_m).epsilon(1e-8));
        CHECK(back.wells[i].kit_category == d->wells[i].kit_category);
        for (std::size_t k = 0; k < d->wells[i].lab_ugL.size(); ++k)
          CHECK(back.wells[i].lab_ugL[k] == doctest::Approx(std::max(d->wells[i].lab_ugL[k], 0.0)).epsilon(1e-8));
      }
      for (std::size_t i = 0; i < d->pairs.size(); ++i) {
        CHECK(back.pairs[i].kit_category == d->pairs[i].kit_category);
        CHECK(back.pairs[i].lab_value == doctest::Approx(d->pairs[i].lab_value).epsilon(1e-8));
      }
    }
  }
}

TEST_SUITE("standardization") {
  TEST_CASE("wells 9100 m apart east-west map to 0 and 1") {
    const std::vector<Location> raw{{500.0, 1000.0}, {500.0, 10100.0}};
    const Standardization s = fit_standardization(raw);
    CHECK(s.east_extent == 9100.0);
    const auto z = s.apply(raw);
    CHECK(z[0].east == 0.0);
    CHECK(z[1].east == 1.0);
    CHECK(z[0].north == 0.0);
  }

  TEST_CASE("coordinates land in the unit strip and invert exactly") {
    const SimulatedBlanket sim = simulate_blanket(testing::mini_spec(), testing::mini_simulation(50, 50), 4);
    const std::vector<Location> raw = sim.survey1.raw_locations();
    const Standardization s = fit_standardization(raw);
    double max_north = 0.0;
    for (const Location& r : raw) {
      const Location z = s.apply(r);
      CHECK(z.east >= 0.0);
      CHECK(z.east <= 1.0);
      CHECK(z.north >= 0.0);
      max_north = std::max(max_north, z.north);
      const Location back = s.invert(z);
      CHECK(back.east == doctest::Approx(r.east).epsilon(1e-12));
      CHECK(back.north == doctest::Approx(r.north).epsilon(1e-12));
    }
    CHECK(max_north <= 6500.0 / s.east_extent + 1e-12);
  }

  TEST_CASE("translation leaves standardized coordinates unchanged") {
    const std::vector<Location> raw{{10.0, 20.0}, {300.0, 5000.0}, {7000.0, 900.0}};
    std::vector<Location> moved = raw;
    for (auto& l : moved) {
      l.east += 123456.0;
      l.north -= 4321.0;
    }
    const auto a = fit_standardization(raw).apply(raw);
    const auto b = fit_standardization(moved).apply(moved);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].east == doctest::Approx(b[i].east).epsilon(1e-12));
      CHECK(a[i].north == doctest::Approx(b[i].north).epsilon(1e-12));
    }
  }

  TEST_CASE("override extent and degenerate input") {
    const std::vector<Location> raw{{0.0, 0.0}, {0.0, 4550.0}};
    CHECK(fit_standardization(raw, 9100.0).apply(raw)[1].east == 0.5);
    const std::vector<Location> same{{1.0, 2.0}, {5.0, 2.0}};
    CHECK_THROWS((void)fit_standardization(same));
  }
}

TEST_SUITE("simulation") {
  TEST_CASE("same seed gives identical data") {
    const auto a = simulate_blanket(testing::mini_spec(), testing::mini_simulation(40, 40), 8);
    const auto b = simulate_blanket(testing::mini_spec(), testing::mini_simulation(40, 40), 8);
    CHECK(a.survey1.wells == b.survey1.wells);
    CHECK(a.survey2.wells == b.survey2.wells);
    CHECK(a.panel.wells == b.panel.wells);
    CHECK(a.truth.params.beta == b.truth.params.beta);
  }

  TEST_CASE("fixed truth with two seeds changes noise but not surfaces") {
    SimulationConfig sim = testing::mini_simulation(40, 40);
    sim.layout_seed = 77;
    const auto first = simulate_blanket(testing::mini_spec(), sim, 1);
    const auto second = simulate_blanket(testing::mini_spec(), sim, 2, first.truth.params);
    CHECK(first.truth.theta1 == second.truth.theta1);
    CHECK(first.truth.delta == second.truth.delta);
    CHECK(first.survey1.raw_locations() == second.survey1.raw_locations());
    CHECK(first.survey1.wells[0].lab_ugL != second.survey1.wells[0].lab_ugL);
    CHECK(first.truth.params.theta2 != second.truth.params.theta2);
  }

  TEST_CASE("noise-free limit reproduces the latent surfaces") {
    const ModelSpec spec = testing::mini_spec();
    SimulationConfig sim = testing::mini_simulation(60, 60);
    const auto base = simulate_blanket(spec, sim, 5);
    BlanketParams p = base.truth.params;
    p.sigma_obs = 1e-6;
    p.tau = 1e-6;
    const auto quiet = simulate_blanket(spec, sim, 6, p);
    const BlanketData& d = quiet.setup.data;
    const Eigen::VectorXd surface1 = (d.basis1.values * p.beta).array() + p.beta0;
    for (std::size_t i = 0; i < 60; ++i) {
      const double expected = surface1[static_cast<Eigen::Index>(i)] + p.beta_depth * (d.depth1[i] - d.d0);
      CHECK(std::abs(std::log(quiet.survey1.wells[i].lab_ugL[0]) - expected) < 1e-4);
    }
    const auto& t = quiet.truth;
    for (Eigen::Index i = 0; i < 60; ++i) {
      const double coef = p.beta_delta + mixing_term(spec.variant, p.alpha_y, p.alpha_theta, t.theta1[i]).gamma;
      CHECK(std::abs(t.params.theta2[i] - (t.theta1[i] + p.alpha_delta + coef * t.delta[i])) < 1e-4);
    }
  }

  TEST_CASE("kit category frequencies match the calibration model") {
    const ModelSpec spec = testing::mini_spec();
    std::array<double, kKitLevels> expected{}, var{}, observed{};
    double n = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = simulate_blanket(spec, testing::mini_simulation(50, 3000), seed);
      n += static_cast<double>(s.survey2.size());
      for (std::size_t i = 0; i < s.survey2.size(); ++i) {
        const auto p = kit_category_probabilities(s.setup.data.calibration, s.truth.params.eta2[static_cast<Eigen::Index>(i)]);
        for (std::size_t k = 0; k < p.size(); ++k) {
          expected[k] += p[k];
          var[k] += p[k] * (1 - p[k]);
        }
        observed[static_cast<std::size_t>(*s.survey2.wells[i].kit_category - 1)] += 1;
      }
    }
    for (std::size_t k = 0; k < kKitLevels; ++k) {
      const double mcse = std::sqrt(var[k]) / n;
      CHECK(std::abs(observed[k] / n - expected[k] / n) <= 3.0 * mcse + 1e-12);
    }
  }

  TEST_CASE("region too small for the requested separation") {
    SimulationConfig sim = testing::mini_simulation(100, 100);
    sim.min_separation_m = 2000.0;
    try {
      (void)simulate_blanket(testing::mini_spec(), sim, 1);
      FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
      CHECK(std::string(e.what()).find("minimum separation") != std::string::npos);
    }
  }

  TEST_CASE("simulated panel wells are a subset of survey-2 sites") {
    const auto s = simulate_blanket(testing::mini_spec(), testing::mini_simulation(40, 40), 13);
    REQUIRE(s.panel.size() == 40);
    for (std::size_t k = 0; k < s.panel.size(); ++k) {
      const WellRecord& src = s.survey2.wells[s.truth.panel_wells[k]];
      CHECK(s.panel.wells[k].east_m == src.east_m);
      CHECK(s.panel.wells[k].lab_ugL.size() == 3);
    }
  }

  TEST_CASE("calibration pairs floor low lab values") {
    const Dataset c = simulate_calibration(SimulationConfig::default_calibration(), 500, 1.0, 1.0, 3);
    for (const auto& p : c.pairs) CHECK((p.lab_value >= kDetectionLimit || p.lab_value == kDetectionFloor));
  }

  TEST_CASE("resampled panel truth") {
    ModelSpec spec;
    SimulationConfig sim = testing::mini_simulation();
    sim.n_panel = 25;
    const SimulatedPanel p = simulate_resampled(spec, sim, 4);
    CHECK(p.panel.size() == 25);
    CHECK(p.truth.params.beta_spline.cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.truth.params.theta2000.size() == 25);
    sim.n_panel = 1;
    CHECK_THROWS_AS((void)simulate_resampled(spec, sim, 4), SimulationError);
  }
}

TEST_SUITE("draws_io") {
  TEST_CASE("CSV round trip is exact") {
    PosteriorDraws d;
    d.layout.add_scalar("mu").add("beta", 3);
    d.n_chains = 2;
    d.n_draws = 4;
    d.values = Eigen::MatrixXd::Random(8, 4) * 1e3;
    d.values(0, 0) = 1.0 / 3.0;
    std::stringstream ss;
    write_draws_csv(ss, d);
    const std::string header = ss.str().substr(0, ss.str().find('\n'));
    CHECK(header == "chain,draw,mu,beta[1],beta[2],beta[3]");
    const PosteriorDraws back = read_draws_csv(ss);
    CHECK(back.n_chains == 2);
    CHECK(back.n_draws == 4);
    CHECK(back.layout == d.layout);
    CHECK(back.values == d.values);
  }

  TEST_CASE("malformed draws are rejected with the line") {
    std::istringstream in("chain,draw,mu\n1,1,0.5\n1,2,abc\n");
    try {
      (void)read_draws_csv(in, "d.csv");
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("d.csv:3") != std::string::npos);
    }
  }

  TEST_CASE("diagnostics JSON writes null for undefined values") {
    PosteriorDraws d;
    d.layout.add_scalar("c").add_scalar("x");
    d.n_chains = 2;
    d.n_draws = 10;
    d.values = Eigen::MatrixXd::Zero(20, 2);
    for (int r = 0; r < 20; ++r) d.values(r, 1) = std::sin(r * 1.7);
    d.divergences = {0, 1};
    const nlohmann::json j = diagnostics_json(diagnose(d), d);
    const auto& params = j.at("parameters");
    REQUIRE(params.size() == 2);
    CHECK(params[0].at("rhat").is_null());
    CHECK(params[0].at("ess_bulk").is_null());
    CHECK(params[1].at("rhat").is_number());
    CHECK(j.contains("fraction_rhat_above_1_05"));
  }
}

TEST_SUITE("draws_io") {
  TEST_CASE("diagnostics JSON of draws without sampler statistics") {
    std::istringstream in("chain,draw,mu\n1,1,0.5\n1,2,0.7\n2,1,0.1\n2,2,0.2\n");
    const PosteriorDraws d = read_draws_csv(in);
    const nlohmann::json j = diagnostics_json(diagnose(d), d);
    CHECK(j.at("chains").size() == 2);
    CHECK(j.at("chains")[0].at("step_size").is_null());
  }
}
