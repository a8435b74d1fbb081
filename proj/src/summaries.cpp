#include "asdyn/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "asdyn/blanket_model.hpp"
#include "asdyn/quantile.hpp"
#include "asdyn/rng.hpp"

namespace asdyn {

namespace {

// Columns of a named block, resolved once.
std::vector<Eigen::Index> block_columns(const PosteriorDraws& draws, const std::string& name) {
  const ParameterBlock& b = draws.layout.at(name);
  std::vector<Eigen::Index> cols(b.size);
  std::iota(cols.begin(), cols.end(), static_cast<Eigen::Index>(b.offset));
  return cols;
}

Eigen::Index scalar_column(const PosteriorDraws& draws, const std::string& name) {
  return static_cast<Eigen::Index>(draws.layout.at(name).offset);
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

Band summarize_band(std::span<const double> draws) {
  if (draws.empty()) throw std::invalid_argument("summary of zero draws");
  static constexpr std::array<double, 5> probs{0.025, 0.25, 0.5, 0.75, 0.975};
  const std::vector<double> q = quantiles(draws, probs);
  Band b;
  b.mean = mean_of(draws);
  b.central95 = {q[0], q[4]};
  b.central50 = {q[1], q[3]};
  b.median = q[2];
  return b;
}

ExceedanceReport individual_predictions(const PosteriorDraws& draws, std::span<const double> thresholds) {
  const std::vector<Eigen::Index> cols = block_columns(draws, "eta2");
  ExceedanceReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  const auto n = static_cast<std::size_t>(draws.values.rows());
  if (n == 0) throw std::invalid_argument("individual_predictions: no draws");
  std::vector<double> y(n);
  for (Eigen::Index c : cols) {
    for (std::size_t r = 0; r < n; ++r) y[r] = std::exp(draws.values(static_cast<Eigen::Index>(r), c));
    std::sort(y.begin(), y.end());
    WellExceedance w;
    w.mean = mean_of(y);
    w.q10 = quantile_sorted(y, 0.1);
    w.q90 = quantile_sorted(y, 0.9);
    for (double t : thresholds) {
      const auto above = static_cast<std::size_t>(y.end() - std::upper_bound(y.begin(), y.end(), t));
      const double p = static_cast<double>(above) / static_cast<double>(n);
      w.prob_exceed.push_back(p);
      w.mcse.push_back(probability_mcse(p, n));
    }
    report.wells.push_back(std::move(w));
  }
  return report;
}

std::vector<Band> mixing_coefficient_curve(const PosteriorDraws& draws, MixingVariant variant,
                                           std::span<const double> theta_grid) {
  const Eigen::Index ay = scalar_column(draws, "alpha_y");
  const Eigen::Index at = scalar_column(draws, "alpha_theta");
  const Eigen::Index bd = scalar_column(draws, "beta_delta");
  std::vector<Band> out;
  std::vector<double> v(static_cast<std::size_t>(draws.values.rows()));
  for (double theta : theta_grid) {
    for (Eigen::Index r = 0; r < draws.values.rows(); ++r) {
      v[static_cast<std::size_t>(r)] =
          draws.values(r, bd) + mixing_term(variant, draws.values(r, ay), draws.values(r, at), theta).gamma;
    }
    out.push_back(summarize_band(v));
  }
  return out;
}

std::vector<Band> predictive_change(const PosteriorDraws& draws, MixingVariant variant, double theta1,
                                    std::span<const double> delta_grid, bool include_noise, std::uint64_t seed) {
  const Eigen::Index ay = scalar_column(draws, "alpha_y");
  const Eigen::Index at = scalar_column(draws, "alpha_theta");
  const Eigen::Index ad = scalar_column(draws, "alpha_delta");
  const Eigen::Index bd = scalar_column(draws, "beta_delta");
  const Eigen::Index so = scalar_column(draws, "sigma_obs");
  const Eigen::Index ta = scalar_column(draws, "tau");
  std::vector<Band> out;
  std::vector<double> v(static_cast<std::size_t>(draws.values.rows()));
  for (std::size_t g = 0; g < delta_grid.size(); ++g) {
    for (Eigen::Index r = 0; r < draws.values.rows(); ++r) {
      const double coef = draws.values(r, bd) + mixing_term(variant, draws.values(r, ay), draws.values(r, at), theta1).gamma;
      double e = draws.values(r, ad) + coef * delta_grid[g];
      if (include_noise) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r), g);
        e += draws.values(r, so) * rng.normal() + draws.values(r, ta) * rng.normal();
      }
      v[static_cast<std::size_t>(r)] = std::exp(e);
    }
    out.push_back(summarize_band(v));
  }
  return out;
}

TrendReport trend_report(const PosteriorDraws& draws, std::span<const double> depth2, double d0, std::uint64_t seed) {
  const std::vector<Eigen::Index> th1 = block_columns(draws, "theta1");
  const std::vector<Eigen::Index> th2 = block_columns(draws, "theta2");
  const std::vector<Eigen::Index> eta = block_columns(draws, "eta2");
  const Eigen::Index bdep = scalar_column(draws, "beta_depth");
  const Eigen::Index so = scalar_column(draws, "sigma_obs");
  const Eigen::Index ad = scalar_column(draws, "alpha_delta");
  const std::size_t n = th1.size();
  if (depth2.size() != n) {
    throw std::invalid_argument("trend_report: " + std::to_string(depth2.size()) + " depths for " +
                                std::to_string(n) + " wells in the draws");
  }
  const auto n_draws = static_cast<std::size_t>(draws.values.rows());
  std::vector<double> mult(n_draws), med(n_draws), before(n_draws), after(n_draws), change(n_draws), intercept(n_draws);
  std::vector<double> change_sum(n, 0.0);
  std::vector<double> lc(n);
  for (std::size_t r = 0; r < n_draws; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    CounterRng rng(seed, r, 0);
    double b = 0.0;
    double a = 0.0;
    double ic = 0.0;
    const double factor = 1.0 - std::exp(draws.values(row, ad));
    for (std::size_t i = 0; i < n; ++i) {
      const double t1 = draws.values(row, th1[i]);
      lc[i] = draws.values(row, th2[i]) - t1;
      change_sum[i] += lc[i];
      const double y2 = std::exp(draws.values(row, eta[i]));
      a += y2;
      b += std::exp(t1 + draws.values(row, bdep) * (depth2[i] - d0) + draws.values(row, so) * rng.normal());
      ic += y2 * factor;
    }
    const double nn = static_cast<double>(n);
    mult[r] = std::exp(mean_of(lc));
    med[r] = std::exp(quantile(lc, 0.5));
    before[r] = b / nn;
    after[r] = a / nn;
    change[r] = after[r] - before[r];
    intercept[r] = ic / nn;
  }
  TrendReport t;
  t.mean_multiplicative = summarize_band(mult);
  t.median_multiplicative = summarize_band(med);
  t.mean_before = summarize_band(before);
  t.mean_after = summarize_band(after);
  t.mean_change = summarize_band(change);
  t.intercept_attribution = summarize_band(intercept);
  const auto positive = std::count_if(change_sum.begin(), change_sum.end(), [](double s) { return s > 0.0; });
  t.fraction_increase = static_cast<double>(positive) / static_cast<double>(n);
  return t;
}

PpcReport ppc_subsample(const PosteriorDraws& draws, std::size_t subsample_size, const Dataset& observed_panel,
                        std::span<const double> depth2, double d0, std::uint64_t seed) {
  if (observed_panel.schema != Schema::panel) throw std::invalid_argument("ppc: observed data must be a panel");
  const std::vector<Eigen::Index> th1 = block_columns(draws, "theta1");
  const std::vector<Eigen::Index> th2 = block_columns(draws, "theta2");
  const Eigen::Index bdep = scalar_column(draws, "beta_depth");
  const Eigen::Index so = scalar_column(draws, "sigma_obs");
  const std::size_t n2 = th1.size();
  if (subsample_size == 0 || subsample_size > n2) {
    throw std::invalid_argument("ppc: subsample size must lie in [1, " + std::to_string(n2) + "]");
  }
  if (depth2.size() != n2) throw std::invalid_argument("ppc: depth count does not match the draws");

  std::vector<double> obs_log, obs_lin;
  for (const auto& w : observed_panel.wells) {
    obs_log.push_back(std::log(w.lab_ugL.at(1)) - std::log(w.lab_ugL.at(0)));
    obs_lin.push_back(w.lab_ugL.at(1) - w.lab_ugL.at(0));
  }
  PpcReport report;
  report.subsample_size = subsample_size;
  report.statistics = {{"mean_log_change", mean_of(obs_log), {}, 0.0},
                       {"sd_log_change", sample_sd(obs_log), {}, 0.0},
                       {"mean_linear_change", mean_of(obs_lin), {}, 0.0}};

  std::vector<std::size_t> order(n2);
  std::vector<double> lc(subsample_size), lin(subsample_size);
  for (Eigen::Index r = 0; r < draws.values.rows(); ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r), 0);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < subsample_size; ++k) {
      std::swap(order[k], order[k + rng.below(n2 - k)]);
      const std::size_t j = order[k];
      const double dd = draws.values(r, bdep) * (depth2[j] - d0);
      const double sigma = draws.values(r, so);
      const double y0 = draws.values(r, th1[j]) + dd + sigma * rng.normal();
      const double y1 = draws.values(r, th2[j]) + dd + sigma * rng.normal();
      lc[k] = y1 - y0;
      lin[k] = std::exp(y1) - std::exp(y0);
    }
    report.statistics[0].replicated.push_back(mean_of(lc));
    report.statistics[1].replicated.push_back(sample_sd(lc));
    report.statistics[2].replicated.push_back(mean_of(lin));
  }
  for (auto& s : report.statistics) {
    const auto ge = std::count_if(s.replicated.begin(), s.replicated.end(), [&](double v) { return v >= s.observed; });
    s.p_value = static_cast<double>(ge) / static_cast<double>(s.replicated.size());
  }
  return report;
}

double laplacian_scale(double h, double east_extent, double factor) {
  if (!(h >= 0.0) || !(east_extent > 0.0)) throw std::invalid_argument("laplacian_scale: need h >= 0 and a positive extent");
  const double r = h / east_extent;
  return std::exp(factor * r * r);
}

SplineChangeCurve spline_change_curve(const PosteriorDraws& draws, const CubicBSpline& spline,
                                      std::span<const double> theta_grid, std::span<const double> thresholds,
                                      int replicates, std::uint64_t seed) {
  const Eigen::Index bl = scalar_column(draws, "beta_linear");
  const std::vector<Eigen::Index> bs = block_columns(draws, "beta_spline");
  const Eigen::Index ss = scalar_column(draws, "sigma_short");
  const Eigen::Index sl = scalar_column(draws, "sigma_long");
  if (bs.size() != spline.size()) {
    throw std::invalid_argument("spline_change_curve: draws have " + std::to_string(bs.size()) +
                                " spline coefficients, basis has " + std::to_string(spline.size()));
  }
  if (replicates <= 0) throw std::invalid_argument("spline_change_curve: replicates must be positive");
  SplineChangeCurve out;
  out.theta_grid.assign(theta_grid.begin(), theta_grid.end());
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  out.exceedance.assign(thresholds.size(), std::vector<double>(theta_grid.size(), 0.0));
  const auto n_draws = static_cast<std::size_t>(draws.values.rows());
  std::vector<double> v(n_draws);
  for (std::size_t g = 0; g < theta_grid.size(); ++g) {
    const double theta = theta_grid[g];
    const CubicBSpline::Local b = spline.evaluate_local(std::clamp(theta, spline.lower(), spline.upper()), 0);
    std::vector<std::size_t> count(thresholds.size(), 0);
    for (std::size_t r = 0; r < n_draws; ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      double m = draws.values(row, bl) * theta;
      for (std::size_t j = 0; j < 4; ++j) {
        if (b.first + j < spline.size()) m += draws.values(row, bs[b.first + j]) * b.values[j];
      }
      v[r] = m;
      CounterRng rng(seed, r, g);
      for (int k = 0; k < replicates; ++k) {
        const double log_y = theta + m + draws.values(row, sl) * rng.normal() + draws.values(row, ss) * rng.normal();
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
          if (log_y > std::log(thresholds[t])) ++count[t];
        }
      }
    }
    out.change.push_back(summarize_band(v));
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      out.exceedance[t][g] = static_cast<double>(count[t]) / static_cast<double>(n_draws * static_cast<std::size_t>(replicates));
    }
  }
  return out;
}

}  // namespace asdyn
