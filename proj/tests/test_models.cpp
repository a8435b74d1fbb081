#include <doctest.h>

#include <cmath>
#include <random>

#include "asdyn/blanket_model.hpp"
#include "asdyn/pipeline.hpp"
#include "asdyn/resampled_model.hpp"
#include "asdyn/simulate.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace asdyn;

namespace {

BlanketModel mini_blanket(MixingVariant variant, std::uint64_t seed = 1, SimulatedBlanket* keep = nullptr) {
  const ModelSpec spec = testing::mini_spec(variant);
  SimulatedBlanket sim = simulate_blanket(spec, testing::mini_simulation(), seed);
  BlanketModel m(sim.setup.data, variant, spec.blanket, spec.laplacian_scale);
  if (keep) *keep = std::move(sim);
  return m;
}

ResampledModel mini_resampled(std::size_t n, std::uint64_t seed = 2) {
  ModelSpec spec;
  SimulationConfig sim = testing::mini_simulation();
  sim.n_panel = static_cast<int>(n);
  const SimulatedPanel p = simulate_resampled(spec, sim, seed);
  const ResampledSetup setup = prepare_resampled(p.panel, spec);
  return ResampledModel(setup.data, setup.breakpoints, spec.resampled);
}

// Point near the generating truth, so every term is in a realistic regime.
Eigen::VectorXd blanket_point(const BlanketModel& m, const SimulatedBlanket& sim, std::uint64_t seed) {
  BlanketParams p = sim.truth.params;
  return testing::jitter(m.pack(p), 0.05, seed);
}

}  // namespace

TEST_SUITE("blanket_model") {
  TEST_CASE("miniature instance has about forty surface coefficients") {
    SimulatedBlanket sim;
    const BlanketModel m = mini_blanket(MixingVariant::exp_plus_linear, 1, &sim);
    CHECK(m.n_basis() >= 30);
    CHECK(m.n_basis() <= 60);
    CHECK(m.dim() == blanket_parameter_count(m.n_basis(), 100));
  }

  TEST_CASE("full-scale parameter count includes the depth slope") {
    CHECK(blanket_parameter_count(485, 8229) == 16951);
  }

  TEST_CASE("gradient matches central differences for every variant") {
    for (MixingVariant v : {MixingVariant::exp_plus_linear, MixingVariant::linear_in_exp, MixingVariant::constant}) {
      SimulatedBlanket sim;
      const BlanketModel m = mini_blanket(v, 3, &sim);
      for (std::uint64_t rep = 0; rep < 3; ++rep) {
        const Eigen::VectorXd x = blanket_point(m, sim, 10 + rep);
        Eigen::VectorXd g;
        const double lp = m.log_density(x, &g);
        REQUIRE(std::isfinite(lp));
        CHECK(lp == m.log_density(x, nullptr));
        double worst = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) worst = std::max(worst, testing::rel_err(g[i], testing::fd_partial(m, x, i, 1e-5), 1e-3));
        CHECK(worst < 1e-4);
      }
    }
  }

  TEST_CASE("sampler density is the posterior plus the change-of-variables terms") {
    SimulatedBlanket sim;
    const BlanketModel m = mini_blanket(MixingVariant::exp_plus_linear, 14, &sim);
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
      const Eigen::VectorXd x = blanket_point(m, sim, 30 + rep);
      const BlanketParams p = m.unpack(x);
      const double n2 = static_cast<double>(p.theta2.size());
      const double expected = m.log_posterior(p) + (n2 + 1.0) * (std::log(p.sigma_obs) + std::log(p.tau));
      CHECK(m.log_density(x, nullptr) == doctest::Approx(expected).epsilon(1e-12));
      CHECK((m.pack(p) - x).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("sparse and dense evaluations agree") {
    SimulatedBlanket sim;
    const BlanketModel m = mini_blanket(MixingVariant::exp_plus_linear, 4, &sim);
    const BlanketParams p = m.unpack(blanket_point(m, sim, 5));
    const double dense = testing::dense_blanket(m.data(), MixingVariant::exp_plus_linear, m.priors(), m.laplacian_scale(), p);
    CHECK(std::abs(m.log_posterior(p) - dense) < 1e-10 * std::max(1.0, std::abs(dense)));
  }

  TEST_CASE("constant variant equals the default at zero alpha, bitwise") {
    SimulatedBlanket sim;
    const BlanketModel def = mini_blanket(MixingVariant::exp_plus_linear, 6, &sim);
    const BlanketModel con(sim.setup.data, MixingVariant::constant, def.priors(), def.laplacian_scale());
    BlanketParams p = def.unpack(blanket_point(def, sim, 7));
    p.alpha_y = 0.0;
    p.alpha_theta = 0.0;
    CHECK(def.log_posterior(p) == con.log_posterior(p));
  }

  TEST_CASE("with all mixing terms zero the Laplacian drops out exactly") {
    SimulatedBlanket sim;
    const BlanketModel m = mini_blanket(MixingVariant::exp_plus_linear, 8, &sim);
    BlanketData zeroed = m.data();
    zeroed.basis2.laplacian.setZero();
    const BlanketModel z(zeroed, MixingVariant::exp_plus_linear, m.priors(), m.laplacian_scale());
    BlanketParams p = m.unpack(blanket_point(m, sim, 9));
    p.alpha_y = p.alpha_theta = p.beta_delta = p.alpha_delta = 0.0;
    CHECK(m.log_posterior(p) == z.log_posterior(p));
  }

  TEST_CASE("scale parameters outside the support") {
    SimulatedBlanket sim;
    const BlanketModel m = mini_blanket(MixingVariant::exp_plus_linear, 1, &sim);
    BlanketParams p = sim.truth.params;
    p.sigma_obs = 0.0;
    CHECK(m.log_posterior(p) == -std::numeric_limits<double>::infinity());
    p.sigma_obs = -1.0;
    CHECK(m.log_posterior(p) == -std::numeric_limits<double>::infinity());
    p.sigma_obs = 1.0;
    p.tau = 0.0;
    CHECK(m.log_posterior(p) == -std::numeric_limits<double>::infinity());
  }

  TEST_CASE("mismatched basis dimensions name the matrix") {
    SimulatedBlanket sim;
    (void)mini_blanket(MixingVariant::exp_plus_linear, 1, &sim);
    BlanketData d = sim.setup.data;
    d.log_y1.pop_back();
    d.depth1.pop_back();
    try {
      BlanketModel bad(d, MixingVariant::exp_plus_linear, {}, 1000.0);
      FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("survey-1 basis matrix") != std::string::npos);
    }
  }
}

TEST_SUITE("blanket_prior") {
  TEST_CASE("closed form at the prior centre") {
    BlanketParams p;
    p.beta0 = 4.0;
    p.beta = Eigen::VectorXd::Zero(3);
    p.sigma_obs = 5.0 / 6.0;  // inverse-gamma mode b / (a + 1)
    p.tau = 5.0 / 6.0;
    const BlanketPriors pr;
    const double ln0 = -0.5 * std::log(2 * M_PI);
    const double ig_mode = 5 * std::log(5.0) - std::lgamma(5.0) - 6 * std::log(5.0 / 6.0) - 6.0;
    const double expected = (ln0 - std::log(2.0)) + 3 * (ln0 - std::log(0.5)) + (ln0 - std::log(0.2)) +
                            (ln0 - std::log(0.5)) + 2 * ln0 + 2 * ig_mode;
    CHECK(prior_log_density(p, pr) == doctest::Approx(expected).epsilon(1e-13));
  }

  TEST_CASE("moving one coefficient by two prior sds costs exactly two") {
    BlanketParams p;
    p.beta = Eigen::VectorXd::Zero(2);
    const double a = prior_log_density(p, {});
    p.beta[0] = 1.0;
    CHECK(prior_log_density(p, {}) - a == doctest::Approx(-2.0).epsilon(1e-14));
  }

  TEST_CASE("non-positive scales are out of support") {
    BlanketParams p;
    p.beta = Eigen::VectorXd::Zero(1);
    p.sigma_obs = 0.0;
    CHECK(prior_log_density(p, {}) == -std::numeric_limits<double>::infinity());
  }
}

TEST_SUITE("surface_extraction") {
  TEST_CASE("flat surface") {
    SimulatedBlanket sim;
    (void)mini_blanket(MixingVariant::exp_plus_linear, 1, &sim);
    const BasisSystem& b = sim.setup.data.basis2;
    const auto s = extract_theta1_delta(2.5, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.n_basis())), b, 1000.0);
    CHECK((s.theta1.array() - 2.5).abs().maxCoeff() < 1e-12);
    CHECK(s.delta.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("linear ramp has zero curvature") {
    SimulatedBlanket sim;
    (void)mini_blanket(MixingVariant::exp_plus_linear, 1, &sim);
    const BasisSystem& b = sim.setup.data.basis2;
    const auto s = extract_theta1_delta(0.0, b.basis->linear_surface(0.3, 1.2, -0.7), b, 1000.0);
    CHECK(s.delta.cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("dimension mismatch") {
    SimulatedBlanket sim;
    (void)mini_blanket(MixingVariant::exp_plus_linear, 1, &sim);
    CHECK_THROWS_AS((void)extract_theta1_delta(0.0, Eigen::VectorXd::Zero(3), sim.setup.data.basis2, 1000.0),
                    std::invalid_argument);
  }
}

TEST_SUITE("resampled_model") {
  TEST_CASE("knots at deciles with widened span") {
    std::vector<double> v;
    for (int i = 0; i <= 100; ++i) v.push_back(i);
    const auto k = autoregression_breakpoints(v, 9, 1.0);
    REQUIRE(k.size() == 11);
    CHECK(k.front() == -1.0);
    CHECK(k.back() == 101.0);
    for (int i = 1; i <= 9; ++i) CHECK(k[static_cast<std::size_t>(i)] == doctest::Approx(10.0 * i));
    const std::vector<double> ties(50, 1.0);
    const auto kt = autoregression_breakpoints(ties, 9, 1.0);
    CHECK(kt == std::vector<double>{0.0, 1.0, 2.0});
  }

  TEST_CASE("gradient matches central differences on 20 wells") {
    const ResampledModel m = mini_resampled(20);
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
      const Eigen::VectorXd x = testing::jitter(m.data_init(), 0.3, 20 + rep);
      Eigen::VectorXd g;
      const double lp = m.log_density(x, &g);
      REQUIRE(std::isfinite(lp));
      double worst = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) worst = std::max(worst, testing::rel_err(g[i], testing::fd_partial(m, x, i, 1e-5), 1e-3));
      CHECK(worst < 1e-4);
    }
  }

  TEST_CASE("no coordinate for the 2015 baseline") {
    const ResampledModel m = mini_resampled(20);
    CHECK(m.layout().find("theta2015") == nullptr);
    CHECK(m.dim() == 2 * 20 + 1 + m.spline().size() + 1 + 2 + 1 + 2);
  }

  TEST_CASE("wide short-term noise approaches closed-form normal terms") {
    const ResampledModel m = mini_resampled(20);
    ResampledParams p = m.unpack(m.data_init());
    p.mu = 3.0;
    p.theta2000.setConstant(3.0);
    p.theta2014.setConstant(3.0);
    p.beta_depth = 0.0;
    p.beta_linear = 0.0;
    p.beta_spline.setZero();
    const double big = 1e3;
    ResampledParams q = p;
    p.sigma_short = big;
    q.sigma_short = 2 * big;
    // Only the likelihood and the sigma_short prior depend on sigma_short.
    const auto& d = m.data();
    double like_p = 0.0, like_q = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      for (double y : {d.log_y2000[i], d.log_y2014[i], d.log_y2015[i]}) {
        like_p += -0.5 * std::log(2 * M_PI) - std::log(big) - 0.5 * (y - 3) * (y - 3) / (big * big);
        like_q += -0.5 * std::log(2 * M_PI) - std::log(2 * big) - 0.5 * (y - 3) * (y - 3) / (4 * big * big);
      }
    }
    auto ig = [](double x) { return 3 * std::log(3.0) - std::lgamma(3.0) - 4 * std::log(x) - 3 / x; };
    const double expected = (like_p + ig(big)) - (like_q + ig(2 * big));
    CHECK(m.log_posterior(p) - m.log_posterior(q) == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("evaluation is deterministic") {
    const ResampledModel m = mini_resampled(20);
    const Eigen::VectorXd x = testing::jitter(m.data_init(), 0.2, 3);
    Eigen::VectorXd g1, g2;
    const double a = m.log_density(x, &g1);
    const double b = m.log_density(x, &g2);
    CHECK(a == b);
    CHECK(g1 == g2);
  }

  TEST_CASE("non-positive noise scales are out of support") {
    const ResampledModel m = mini_resampled(20);
    ResampledParams p = m.unpack(m.data_init());
    p.sigma_long = 0.0;
    CHECK(m.log_posterior(p) == -std::numeric_limits<double>::infinity());
  }
}
