#include "asdyn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Cholesky>

#include "asdyn/rng.hpp"

namespace asdyn {

namespace {

// Independent streams of one simulation seed.
enum Stream : std::uint64_t { kLayout = 11, kDepth = 12, kSurface = 13, kNoise = 14, kPanel = 15, kCalibration = 16 };

std::string well_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i + 1);
  return buf;
}

// Uniform positions in the region minus holes with a minimum pairwise distance.
std::vector<Location> place_wells(const SimulationConfig& sim, std::size_t n, CounterRng& rng) {
  if (!(sim.region_east_m > 0.0) || !(sim.region_north_m > 0.0)) {
    throw SimulationError("simulation region must have positive extent");
  }
  constexpr int kTries = 10000;
  const double sep2 = sim.min_separation_m * sim.min_separation_m;
  std::vector<Location> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (int t = 0; t < kTries && !placed; ++t) {
      const double e = rng.uniform() * sim.region_east_m;
      const double nn = rng.uniform() * sim.region_north_m;
      if (std::any_of(sim.holes.begin(), sim.holes.end(), [&](const Rect& h) { return h.contains(e, nn); })) continue;
      if (sep2 > 0.0 && std::any_of(out.begin(), out.end(), [&](const Location& p) {
            return (p.east - e) * (p.east - e) + (p.north - nn) * (p.north - nn) < sep2;
          })) {
        continue;
      }
      out.push_back({nn, e});
      placed = true;
    }
    if (!placed) {
      throw SimulationError("region too small for " + std::to_string(n) + " wells at minimum separation " +
                            std::to_string(sim.min_separation_m) + " m (placed " + std::to_string(i) + ")");
    }
  }
  return out;
}

double draw_depth(const SimulationConfig& sim, CounterRng& rng) {
  for (int t = 0; t < 1000; ++t) {
    const double d = sim.depth_mean_m + sim.depth_sd_m * rng.normal();
    if (d >= sim.depth_min_m) return d;
  }
  return sim.depth_min_m;
}

int draw_kit(const CalibrationModel& cal, double log_y, CounterRng& rng) {
  const auto probs = kit_category_probabilities(cal, log_y);
  double u = rng.uniform();
  for (int k = 0; k < kKitLevels - 1; ++k) {
    u -= probs[static_cast<std::size_t>(k)];
    if (u < 0.0) return k + 1;
  }
  return kKitLevels;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Dataset simulate_calibration(const CalibrationModel& model, int n, double lab_log_mean, double lab_log_sd,
                             std::uint64_t seed) {
  model.validate();
  if (n <= 0) throw SimulationError("calibration sample size must be positive");
  CounterRng rng(seed, 0, 0, kCalibration);
  Dataset data;
  data.schema = Schema::calibration;
  for (int i = 0; i < n; ++i) {
    const double lab = floor_detection_limit(std::exp(lab_log_mean + lab_log_sd * rng.normal()));
    data.pairs.push_back({lab, draw_kit(model, std::log(lab), rng)});
  }
  data.report.rows = data.pairs.size();
  return data;
}

SimulatedBlanket simulate_blanket(const ModelSpec& spec, const SimulationConfig& sim, std::uint64_t seed,
                                  const std::optional<BlanketParams>& fixed_truth) {
  if (sim.n1 < 2 || sim.n2 < 2) throw SimulationError("need at least two wells in each survey");
  if (sim.n_panel < 0 || sim.n_panel > sim.n2) throw SimulationError("panel size must lie in [0, n2]");
  sim.calibration.validate();
  const std::uint64_t layout_seed = sim.layout_seed.value_or(seed);
  CounterRng layout(layout_seed, 0, 0, kLayout);
  CounterRng depth_rng(layout_seed, 0, 0, kDepth);
  const auto n1 = static_cast<std::size_t>(sim.n1);
  const auto n2 = static_cast<std::size_t>(sim.n2);
  const std::vector<Location> sites = place_wells(sim, n1 + n2, layout);

  SimulatedBlanket out;
  out.survey1.schema = Schema::survey1;
  out.survey2.schema = Schema::survey2;
  for (std::size_t i = 0; i < n1 + n2; ++i) {
    WellRecord w;
    w.well_id = i < n1 ? well_id("A", i) : well_id("B", i - n1);
    w.east_m = sites[i].east;
    w.north_m = sites[i].north;
    w.depth_m = draw_depth(sim, depth_rng);
    (i < n1 ? out.survey1 : out.survey2).wells.push_back(std::move(w));
  }
  out.setup = prepare_blanket_geometry(out.survey1.wells, out.survey2.wells, spec);
  BlanketData& data = out.setup.data;
  data.calibration = sim.calibration;
  const auto L = static_cast<Eigen::Index>(data.basis2.n_basis());

  BlanketParams p;
  if (fixed_truth) {
    p = *fixed_truth;
    if (p.beta.size() != L) {
      throw SimulationError("fixed truth has " + std::to_string(p.beta.size()) + " surface coefficients, basis has " +
                            std::to_string(L));
    }
  } else {
    const BlanketPriors& pr = spec.blanket;
    CounterRng rng(seed, 0, 0, kSurface);
    p.beta0 = pr.beta0_mean + pr.beta0_sd * rng.normal();
    p.beta.resize(L);
    for (Eigen::Index l = 0; l < L; ++l) p.beta[l] = pr.beta_sd * rng.normal();
    p.beta_depth = sim.beta_depth_sd * rng.normal();
    p.sigma_obs = rng.inv_gamma(pr.sigma_obs_shape, pr.sigma_obs_scale);
    p.alpha_y = pr.alpha_y_sd * rng.normal();
    p.alpha_theta = pr.alpha_theta_sd * rng.normal();
    p.alpha_delta = pr.alpha_delta_sd * rng.normal();
    p.beta_delta = pr.beta_delta_sd * rng.normal();
    p.tau = rng.inv_gamma(pr.tau_shape, pr.tau_scale);
  }

  const SurfaceAtWells s = extract_theta1_delta(p.beta0, p.beta, data.basis2, spec.laplacian_scale);
  const Eigen::VectorXd surface1 = (data.basis1.values * p.beta).array() + p.beta0;
  CounterRng noise(seed, 0, 0, kNoise);
  auto autoregress = [&](Eigen::Index i) {
    const double coef = p.beta_delta + mixing_term(spec.variant, p.alpha_y, p.alpha_theta, s.theta1[i]).gamma;
    return s.theta1[i] + p.alpha_delta + coef * s.delta[i] + p.tau * noise.normal();
  };

  for (std::size_t i = 0; i < n1; ++i) {
    const double log_y = surface1[static_cast<Eigen::Index>(i)] + p.beta_depth * (data.depth1[i] - data.d0) +
                         p.sigma_obs * noise.normal();
    out.survey1.wells[i].lab_ugL = {std::exp(log_y)};
  }
  p.theta2.resize(static_cast<Eigen::Index>(n2));
  p.eta2.resize(static_cast<Eigen::Index>(n2));
  for (std::size_t i = 0; i < n2; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    p.theta2[ii] = autoregress(ii);
    p.eta2[ii] = p.theta2[ii] + p.beta_depth * (data.depth2[i] - data.d0) + p.sigma_obs * noise.normal();
    out.survey2.wells[i].kit_category = draw_kit(sim.calibration, p.eta2[ii], noise);
  }
  data.log_y1 = out.survey1.log_lab(0);
  data.kit2 = out.survey2.kit_categories();

  // Panel: a random subset of survey-2 sites remeasured in the lab in three epochs.
  CounterRng panel_rng(seed, 0, 0, kPanel);
  std::vector<std::size_t> order(n2);
  for (std::size_t i = 0; i < n2; ++i) order[i] = i;
  const auto n_panel = static_cast<std::size_t>(sim.n_panel);
  for (std::size_t i = 0; i < n_panel; ++i) std::swap(order[i], order[i + panel_rng.below(n2 - i)]);
  out.truth.panel_wells.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_panel));
  out.truth.panel_theta2.resize(static_cast<Eigen::Index>(n_panel));
  out.panel.schema = Schema::panel;
  for (std::size_t k = 0; k < n_panel; ++k) {
    const std::size_t i = out.truth.panel_wells[k];
    const auto ii = static_cast<Eigen::Index>(i);
    const double theta2 = autoregress(ii);
    out.truth.panel_theta2[static_cast<Eigen::Index>(k)] = theta2;
    const double dd = p.beta_depth * (data.depth2[i] - data.d0);
    WellRecord w = out.survey2.wells[i];
    w.kit_category.reset();
    w.lab_ugL = {std::exp(s.theta1[ii] + dd + p.sigma_obs * noise.normal()),
                 std::exp(theta2 + dd + p.sigma_obs * noise.normal()),
                 std::exp(theta2 + dd + p.sigma_obs * noise.normal())};
    out.panel.wells.push_back(std::move(w));
  }

  out.calibration = simulate_calibration(sim.calibration, sim.n_cal, sim.lab_log_mean, sim.lab_log_sd, seed);
  out.survey1.report.rows = n1;
  out.survey2.report.rows = n2;
  out.panel.report.rows = n_panel;
  out.truth.params = std::move(p);
  out.truth.theta1 = s.theta1;
  out.truth.delta = s.delta;
  return out;
}

SimulatedPanel simulate_resampled(const ModelSpec& spec, const SimulationConfig& sim, std::uint64_t seed) {
  if (sim.n_panel < 2) throw SimulationError("panel needs at least two wells");
  const std::uint64_t layout_seed = sim.layout_seed.value_or(seed);
  CounterRng layout(layout_seed, 0, 0, kLayout);
  CounterRng depth_rng(layout_seed, 0, 0, kDepth);
  const auto n = static_cast<std::size_t>(sim.n_panel);
  const std::vector<Location> sites = place_wells(sim, n, layout);

  SimulatedPanel out;
  out.panel.schema = Schema::panel;
  for (std::size_t i = 0; i < n; ++i) {
    WellRecord w;
    w.well_id = well_id("P", i);
    w.east_m = sites[i].east;
    w.north_m = sites[i].north;
    w.depth_m = draw_depth(sim, depth_rng);
    out.panel.wells.push_back(std::move(w));
  }
  std::optional<double> extent;
  if (spec.east_extent_m > 0.0) extent = spec.east_extent_m;
  out.truth.standardization = fit_standardization(out.panel.raw_locations(), extent);
  const std::vector<Location> locs = out.truth.standardization.apply(out.panel.raw_locations());

  const ResampledPriors& pr = spec.resampled;
  CounterRng rng(seed, 0, 0, kSurface);
  ResampledParams& p = out.truth.params;
  p.mu = pr.mu_mean + pr.mu_sd * rng.normal();
  p.gp.amplitude = rng.inv_gamma(pr.gp_amplitude_shape, pr.gp_amplitude_scale);
  p.gp.length_scale = pr.gp_length_unit * rng.inv_gamma(pr.gp_length_shape, pr.gp_length_scale);
  p.gp.mean = p.mu;
  p.sigma_short = rng.inv_gamma(pr.sigma_shape, pr.sigma_scale);
  p.sigma_long = rng.inv_gamma(pr.sigma_shape, pr.sigma_scale);
  p.beta_depth = sim.beta_depth_sd * rng.normal();
  p.beta_linear = -0.2 + 0.1 * rng.normal();

  const Eigen::MatrixXd k = gp_covariance(p.gp, locs) +
                            kGpRelativeJitter * p.gp.amplitude * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw SimulationError("GP covariance is not positive definite");
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  p.theta2000 = (llt.matrixL() * z).array() + p.mu;

  CounterRng noise(seed, 0, 0, kNoise);
  p.theta2014.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double t = p.theta2000[ii];
    p.theta2014[ii] = t + p.beta_linear * t + p.sigma_long * noise.normal();
    const double dd = p.beta_depth * (out.panel.wells[i].depth_m - spec.panel_d0_m);
    out.panel.wells[i].lab_ugL = {std::exp(t + dd + p.sigma_short * noise.normal()),
                                  std::exp(p.theta2014[ii] + dd + p.sigma_short * noise.normal()),
                                  std::exp(p.theta2014[ii] + dd + p.sigma_short * noise.normal())};
  }
  out.panel.report.rows = n;
  // Zero spline coefficients on the basis a fit of this panel would use.
  const ResampledSetup setup = prepare_resampled(out.panel, spec);
  p.beta_spline = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(CubicBSpline(setup.breakpoints).size()));
  return out;
}

nlohmann::json truth_json(const SimulatedBlanket& sim) {
  const BlanketParams& p = sim.truth.params;
  const Standardization& st = sim.setup.standardization;
  return {{"model", "blanket"},
          {"beta0", p.beta0},
          {"beta", to_vector(p.beta)},
          {"beta_depth", p.beta_depth},
          {"sigma_obs", p.sigma_obs},
          {"alpha_y", p.alpha_y},
          {"alpha_theta", p.alpha_theta},
          {"alpha_delta", p.alpha_delta},
          {"beta_delta", p.beta_delta},
          {"tau", p.tau},
          {"theta1", to_vector(sim.truth.theta1)},
          {"delta", to_vector(sim.truth.delta)},
          {"theta2", to_vector(p.theta2)},
          {"eta2", to_vector(p.eta2)},
          {"panel_wells", sim.truth.panel_wells},
          {"panel_theta2", to_vector(sim.truth.panel_theta2)},
          {"d0", sim.setup.data.d0},
          {"n_basis", sim.setup.data.basis2.n_basis()},
          {"standardization", {{"east_offset", st.east_offset}, {"north_offset", st.north_offset}, {"east_extent", st.east_extent}}},
          {"calibration", sim.setup.data.calibration}};
}

nlohmann::json truth_json(const SimulatedPanel& sim) {
  const ResampledParams& p = sim.truth.params;
  const Standardization& st = sim.truth.standardization;
  return {{"model", "resampled"},
          {"theta2000", to_vector(p.theta2000)},
          {"theta2014", to_vector(p.theta2014)},
          {"beta_linear", p.beta_linear},
          {"beta_spline", to_vector(p.beta_spline)},
          {"beta_depth", p.beta_depth},
          {"sigma_short", p.sigma_short},
          {"sigma_long", p.sigma_long},
          {"mu", p.mu},
          {"gp_amplitude", p.gp.amplitude},
          {"gp_length_scale", p.gp.length_scale},
          {"standardization", {{"east_offset", st.east_offset}, {"north_offset", st.north_offset}, {"east_extent", st.east_extent}}}};
}

}  // namespace asdyn
