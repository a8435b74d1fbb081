#include "asdyn/resampled_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "asdyn/quantile.hpp"

namespace asdyn {

std::vector<double> autoregression_breakpoints(std::span<const double> log_values, int n_inner, double margin) {
  if (log_values.empty()) throw std::invalid_argument("autoregression_breakpoints: no observed values");
  if (n_inner < 0) throw std::invalid_argument("autoregression_breakpoints: negative knot count");
  if (!(margin > 0.0)) throw std::invalid_argument("autoregression_breakpoints: margin must be positive");
  std::vector<double> sorted(log_values.begin(), log_values.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw std::invalid_argument("autoregression_breakpoints: non-finite value");
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots{sorted.front() - margin};
  for (int k = 1; k <= n_inner; ++k) {
    const double q = quantile_sorted(sorted, static_cast<double>(k) / (n_inner + 1));
    if (q > knots.back()) knots.push_back(q);
  }
  knots.push_back(sorted.back() + margin);
  return knots;
}

ResampledModel::ResampledModel(ResampledData data, std::vector<double> breakpoints, ResampledPriors priors)
    : data_(std::move(data)),
      spline_(std::move(breakpoints)),
      priors_(priors),
      gp_(data_.locations),
      n_(data_.locations.size()) {
  auto check = [&](std::size_t size, const char* name) {
    if (size != n_) {
      throw std::invalid_argument(std::string("ResampledModel: ") + name + " has " + std::to_string(size) +
                                  " entries, expected " + std::to_string(n_));
    }
  };
  if (n_ == 0) throw std::invalid_argument("ResampledModel: empty panel");
  check(data_.depth.size(), "depth");
  check(data_.log_y2000.size(), "log_y2000");
  check(data_.log_y2014.size(), "log_y2014");
  check(data_.log_y2015.size(), "log_y2015");
  for (const auto* series : {&data_.log_y2000, &data_.log_y2014, &data_.log_y2015}) {
    for (double v : *series) {
      if (!std::isfinite(v)) throw std::invalid_argument("ResampledModel: non-finite log value in panel");
    }
  }

  const std::size_t k = spline_.size();
  layout_.add("theta2000", n_)
      .add("theta2014", n_)
      .add_scalar("beta_linear")
      .add("beta_spline", k)
      .add_scalar("beta_depth")
      .add_scalar("log_sigma_short")
      .add_scalar("log_sigma_long")
      .add_scalar("mu")
      .add_scalar("log_gp_amplitude")
      .add_scalar("log_gp_length_scale");
  output_layout_.add("theta2000", n_)
      .add("theta2014", n_)
      .add_scalar("beta_linear")
      .add("beta_spline", k)
      .add_scalar("beta_depth")
      .add_scalar("sigma_short")
      .add_scalar("sigma_long")
      .add_scalar("mu")
      .add_scalar("gp_amplitude")
      .add_scalar("gp_length_scale");
}

ResampledParams ResampledModel::unpack(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != layout_.dim()) {
    throw std::invalid_argument("ResampledModel: parameter vector has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(layout_.dim()));
  }
  const auto n = static_cast<Eigen::Index>(n_);
  const auto k = static_cast<Eigen::Index>(spline_.size());
  ResampledParams p;
  Eigen::Index i = 0;
  p.theta2000 = x.segment(i, n);
  i += n;
  p.theta2014 = x.segment(i, n);
  i += n;
  p.beta_linear = x[i++];
  p.beta_spline = x.segment(i, k);
  i += k;
  p.beta_depth = x[i++];
  p.sigma_short = std::exp(x[i++]);
  p.sigma_long = std::exp(x[i++]);
  p.mu = x[i++];
  p.gp.amplitude = std::exp(x[i++]);
  p.gp.length_scale = std::exp(x[i++]);
  p.gp.mean = p.mu;
  return p;
}

Eigen::VectorXd ResampledModel::pack(const ResampledParams& p) const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto k = static_cast<Eigen::Index>(spline_.size());
  if (p.theta2000.size() != n || p.theta2014.size() != n || p.beta_spline.size() != k) {
    throw std::invalid_argument("ResampledModel::pack: block sizes do not match the model");
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(layout_.dim()));
  Eigen::Index i = 0;
  x.segment(i, n) = p.theta2000;
  i += n;
  x.segment(i, n) = p.theta2014;
  i += n;
  x[i++] = p.beta_linear;
  x.segment(i, k) = p.beta_spline;
  i += k;
  x[i++] = p.beta_depth;
  x[i++] = std::log(p.sigma_short);
  x[i++] = std::log(p.sigma_long);
  x[i++] = p.mu;
  x[i++] = std::log(p.gp.amplitude);
  x[i++] = std::log(p.gp.length_scale);
  return x;
}

double ResampledModel::expected_change(double beta_linear, const Eigen::VectorXd& beta_spline,
                                       double theta2000) const {
  const double c = std::clamp(theta2000, spline_.lower(), spline_.upper());
  const CubicBSpline::Local b = spline_.evaluate_local(c, 0);
  double m = beta_linear * theta2000;
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t col = b.first + j;
    if (col < spline_.size()) m += beta_spline[static_cast<Eigen::Index>(col)] * b.values[j];
  }
  return m;
}

double ResampledModel::evaluate(const ResampledParams& p, ResampledParams* g) const {
  const double ss = p.sigma_short;
  const double sl = p.sigma_long;
  if (!(ss > 0.0) || !(sl > 0.0) || !std::isfinite(ss) || !std::isfinite(sl) || !p.gp.valid()) return kNegInf;
  const auto n = static_cast<Eigen::Index>(n_);
  const auto k = static_cast<Eigen::Index>(spline_.size());
  const ResampledPriors& pr = priors_;

  if (g) {
    g->theta2000 = Eigen::VectorXd::Zero(n);
    g->theta2014 = Eigen::VectorXd::Zero(n);
    g->beta_spline = Eigen::VectorXd::Zero(k);
    g->beta_linear = g->beta_depth = g->sigma_short = g->sigma_long = g->mu = 0.0;
    g->gp = GpKernelParams{0.0, 0.0, 0.0};
  }

  double lp = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double dd = data_.depth[si] - data_.d0;
    const double m00 = p.theta2000[i] + p.beta_depth * dd;
    const double m14 = p.theta2014[i] + p.beta_depth * dd;
    const double y00 = data_.log_y2000[si];
    const double y14 = data_.log_y2014[si];
    const double y15 = data_.log_y2015[si];
    lp += lpdf::normal(y00, m00, ss) + lpdf::normal(y14, m14, ss) + lpdf::normal(y15, m14, ss);

    // Autoregression on the baseline change.
    const double t = p.theta2000[i];
    const double c = std::clamp(t, spline_.lower(), spline_.upper());
    const bool inside = t > spline_.lower() && t < spline_.upper();
    const auto b = spline_.evaluate_local_all(c);
    double m = p.beta_linear * t;
    double dm = p.beta_linear;
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t col = b[0].first + j;
      if (col >= spline_.size()) continue;
      m += p.beta_spline[static_cast<Eigen::Index>(col)] * b[0].values[j];
      if (inside) dm += p.beta_spline[static_cast<Eigen::Index>(col)] * b[1].values[j];
    }
    const double mean14 = t + m;
    lp += lpdf::normal(p.theta2014[i], mean14, sl);

    if (g) {
      const double g00 = -lpdf::normal_dx(y00, m00, ss);
      const double g14 = -lpdf::normal_dx(y14, m14, ss) - lpdf::normal_dx(y15, m14, ss);
      g->theta2000[i] += g00;
      g->theta2014[i] += g14;
      g->beta_depth += (g00 + g14) * dd;
      g->sigma_short += lpdf::normal_dsd(y00, m00, ss) + lpdf::normal_dsd(y14, m14, ss) +
                        lpdf::normal_dsd(y15, m14, ss);
      const double g_mean = -lpdf::normal_dx(p.theta2014[i], mean14, sl);
      g->theta2014[i] += lpdf::normal_dx(p.theta2014[i], mean14, sl);
      g->theta2000[i] += g_mean * (1.0 + dm);
      g->beta_linear += g_mean * t;
      for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t col = b[0].first + j;
        if (col < spline_.size()) g->beta_spline[static_cast<Eigen::Index>(col)] += g_mean * b[0].values[j];
      }
      g->sigma_long += lpdf::normal_dsd(p.theta2014[i], mean14, sl);
    }
  }

  // Gaussian-process prior on the 2000 baseline.
  GpKernelParams gp = p.gp;
  gp.mean = p.mu;
  const SquaredExponentialGp::Evaluation ev = gp_.evaluate(gp, p.theta2000);
  if (!std::isfinite(ev.log_density)) return kNegInf;
  lp += ev.log_density;

  // Priors.
  const double unit = pr.gp_length_unit;
  lp += lpdf::normal(p.beta_linear, 0.0, pr.beta_linear_sd);
  lp += lpdf::normal(p.beta_spline[0], 0.0, pr.beta_first_sd);
  for (Eigen::Index j = 1; j < k; ++j) lp += lpdf::normal(p.beta_spline[j], p.beta_spline[j - 1], pr.random_walk_sd);
  lp += lpdf::inv_gamma(ss, pr.sigma_shape, pr.sigma_scale) + lpdf::inv_gamma(sl, pr.sigma_shape, pr.sigma_scale);
  lp += lpdf::normal(p.mu, pr.mu_mean, pr.mu_sd);
  lp += lpdf::inv_gamma(p.gp.amplitude, pr.gp_amplitude_shape, pr.gp_amplitude_scale);
  lp += lpdf::inv_gamma(p.gp.length_scale / unit, pr.gp_length_shape, pr.gp_length_scale) - std::log(unit);
  if (!std::isfinite(lp)) return kNegInf;

  if (g) {
    g->theta2000 += ev.d_values;
    g->mu += ev.d_mean + lpdf::normal_dx(p.mu, pr.mu_mean, pr.mu_sd);
    g->gp.amplitude = ev.d_amplitude + lpdf::inv_gamma_dx(p.gp.amplitude, pr.gp_amplitude_shape, pr.gp_amplitude_scale);
    g->gp.length_scale = ev.d_length_scale +
                         lpdf::inv_gamma_dx(p.gp.length_scale / unit, pr.gp_length_shape, pr.gp_length_scale) / unit;
    g->beta_linear += lpdf::normal_dx(p.beta_linear, 0.0, pr.beta_linear_sd);
    g->beta_spline[0] += lpdf::normal_dx(p.beta_spline[0], 0.0, pr.beta_first_sd);
    for (Eigen::Index j = 1; j < k; ++j) {
      const double d = lpdf::normal_dx(p.beta_spline[j], p.beta_spline[j - 1], pr.random_walk_sd);
      g->beta_spline[j] += d;
      g->beta_spline[j - 1] -= d;
    }
    g->sigma_short += lpdf::inv_gamma_dx(ss, pr.sigma_shape, pr.sigma_scale);
    g->sigma_long += lpdf::inv_gamma_dx(sl, pr.sigma_shape, pr.sigma_scale);
  }
  return lp;
}

double ResampledModel::log_posterior(const ResampledParams& params) const { return evaluate(params, nullptr); }

double ResampledModel::log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  const ResampledParams p = unpack(x);
  const double log_jacobian =
      std::log(p.sigma_short) + std::log(p.sigma_long) + std::log(p.gp.amplitude) + std::log(p.gp.length_scale);
  if (!grad) {
    const double lp = evaluate(p, nullptr);
    return std::isfinite(lp) ? lp + log_jacobian : kNegInf;
  }
  ResampledParams g;
  const double lp = evaluate(p, &g);
  if (!std::isfinite(lp)) {
    grad->setZero(x.size());
    return kNegInf;
  }
  const double g_ss = g.sigma_short * p.sigma_short + 1.0;
  const double g_sl = g.sigma_long * p.sigma_long + 1.0;
  const double g_amp = g.gp.amplitude * p.gp.amplitude + 1.0;
  const double g_len = g.gp.length_scale * p.gp.length_scale + 1.0;
  g.sigma_short = g.sigma_long = g.gp.amplitude = g.gp.length_scale = 1.0;
  *grad = pack(g);
  auto slot = [&](const char* name) { return static_cast<Eigen::Index>(layout_.at(name).offset); };
  (*grad)[slot("log_sigma_short")] = g_ss;
  (*grad)[slot("log_sigma_long")] = g_sl;
  (*grad)[slot("log_gp_amplitude")] = g_amp;
  (*grad)[slot("log_gp_length_scale")] = g_len;
  return lp + log_jacobian;
}

Eigen::VectorXd ResampledModel::output(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x;
  for (const char* name : {"log_sigma_short", "log_sigma_long", "log_gp_amplitude", "log_gp_length_scale"}) {
    const auto i = static_cast<Eigen::Index>(layout_.at(name).offset);
    out[i] = std::exp(x[i]);
  }
  return out;
}

Eigen::VectorXd ResampledModel::data_init() const {
  const auto n = static_cast<Eigen::Index>(n_);
  ResampledParams p;
  p.theta2000.resize(n);
  p.theta2014.resize(n);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    p.theta2000[i] = data_.log_y2000[si];
    p.theta2014[i] = 0.5 * (data_.log_y2014[si] + data_.log_y2015[si]);
    mean += p.theta2000[i];
  }
  mean /= static_cast<double>(n);
  p.beta_spline = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spline_.size()));
  p.mu = mean;
  p.sigma_short = 1.0;
  p.sigma_long = 1.0;
  p.gp.amplitude = 1.0;
  p.gp.length_scale = priors_.gp_length_unit;
  return pack(p);
}

}  // namespace asdyn
