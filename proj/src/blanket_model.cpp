#include "asdyn/blanket_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace asdyn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("BlanketModel: " + what);
}

std::string shape(const SparseMatrix& m) {
  std::ostringstream s;
  s << m.rows() << "x" << m.cols();
  return s.str();
}

}  // namespace

MixingTerm mixing_term(MixingVariant variant, double alpha_y, double alpha_theta, double theta1) noexcept {
  MixingTerm m;
  switch (variant) {
    case MixingVariant::exp_plus_linear: {
      const double e = std::exp(0.5 * theta1);
      m.gamma = alpha_y * e + alpha_theta * theta1;
      m.d_theta1 = 0.5 * alpha_y * e + alpha_theta;
      m.d_alpha_y = e;
      m.d_alpha_theta = theta1;
      break;
    }
    case MixingVariant::linear_in_exp: {
      const double e = std::exp(theta1);
      m.gamma = alpha_y * e;
      m.d_theta1 = alpha_y * e;
      m.d_alpha_y = e;
      break;
    }
    case MixingVariant::constant:
      break;
  }
  return m;
}

SurfaceAtWells extract_theta1_delta(double beta0, const Eigen::VectorXd& beta, const BasisSystem& basis,
                                    double laplacian_scale) {
  if (static_cast<std::size_t>(beta.size()) != basis.n_basis() ||
      basis.values.cols() != beta.size() || basis.laplacian.cols() != beta.size()) {
    std::ostringstream msg;
    msg << "extract_theta1_delta: " << beta.size() << " coefficients do not conform to basis matrix "
        << shape(basis.values) << " / Laplacian matrix " << shape(basis.laplacian);
    throw std::invalid_argument(msg.str());
  }
  SurfaceAtWells out;
  out.theta1 = (basis.values * beta).array() + beta0;
  out.delta = (basis.laplacian * beta) / laplacian_scale;
  return out;
}

double prior_log_density(const BlanketParams& p, const BlanketPriors& pr) {
  if (!(p.sigma_obs > 0.0) || !(p.tau > 0.0)) return kNegInf;
  double lp = lpdf::normal(p.beta0, pr.beta0_mean, pr.beta0_sd);
  for (Eigen::Index l = 0; l < p.beta.size(); ++l) lp += lpdf::normal(p.beta[l], 0.0, pr.beta_sd);
  lp += lpdf::normal(p.alpha_y, 0.0, pr.alpha_y_sd);
  lp += lpdf::normal(p.alpha_theta, 0.0, pr.alpha_theta_sd);
  lp += lpdf::normal(p.alpha_delta, 0.0, pr.alpha_delta_sd);
  lp += lpdf::normal(p.beta_delta, 0.0, pr.beta_delta_sd);
  lp += lpdf::inv_gamma(p.sigma_obs, pr.sigma_obs_shape, pr.sigma_obs_scale);
  lp += lpdf::inv_gamma(p.tau, pr.tau_shape, pr.tau_scale);
  return lp;
}

BlanketModel::BlanketModel(BlanketData data, MixingVariant variant, BlanketPriors priors, double laplacian_scale)
    : data_(std::move(data)), variant_(variant), priors_(priors), laplacian_scale_(laplacian_scale) {
  n1_ = data_.log_y1.size();
  n2_ = data_.kit2.size();
  n_basis_ = data_.basis2.n_basis();
  require(laplacian_scale_ > 0.0, "laplacian_scale must be positive");
  require(data_.depth1.size() == n1_, "depth1 has " + std::to_string(data_.depth1.size()) + " entries, expected " + std::to_string(n1_));
  require(data_.depth2.size() == n2_, "depth2 has " + std::to_string(data_.depth2.size()) + " entries, expected " + std::to_string(n2_));
  require(static_cast<std::size_t>(data_.basis1.values.rows()) == n1_ &&
              static_cast<std::size_t>(data_.basis1.values.cols()) == n_basis_,
          "survey-1 basis matrix is " + shape(data_.basis1.values) + ", expected " + std::to_string(n1_) + "x" + std::to_string(n_basis_));
  require(static_cast<std::size_t>(data_.basis2.values.rows()) == n2_ &&
              static_cast<std::size_t>(data_.basis2.values.cols()) == n_basis_,
          "survey-2 basis matrix is " + shape(data_.basis2.values) + ", expected " + std::to_string(n2_) + "x" + std::to_string(n_basis_));
  require(static_cast<std::size_t>(data_.basis2.laplacian.rows()) == n2_ &&
              static_cast<std::size_t>(data_.basis2.laplacian.cols()) == n_basis_,
          "survey-2 Laplacian matrix is " + shape(data_.basis2.laplacian) + ", expected " + std::to_string(n2_) + "x" + std::to_string(n_basis_));
  for (double v : data_.log_y1) require(std::isfinite(v), "non-finite survey-1 log value");
  for (int w : data_.kit2) require(w >= 1 && w <= kKitLevels, "kit category outside 1..9");
  data_.calibration.validate();

  layout_.add_scalar("beta0")
      .add("beta", n_basis_)
      .add_scalar("beta_depth")
      .add_scalar("log_sigma_obs")
      .add("z_theta2", n2_)
      .add("z_eta2", n2_)
      .add_scalar("alpha_y")
      .add_scalar("alpha_theta")
      .add_scalar("alpha_delta")
      .add_scalar("beta_delta")
      .add_scalar("log_tau");
  output_layout_.add_scalar("beta0")
      .add("beta", n_basis_)
      .add_scalar("beta_depth")
      .add_scalar("sigma_obs")
      .add("theta2", n2_)
      .add("eta2", n2_)
      .add_scalar("alpha_y")
      .add_scalar("alpha_theta")
      .add_scalar("alpha_delta")
      .add_scalar("beta_delta")
      .add_scalar("tau")
      .add("theta1", n2_)
      .add("delta", n2_);
}

BlanketParams BlanketModel::unpack(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != layout_.dim()) {
    throw std::invalid_argument("BlanketModel: parameter vector has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(layout_.dim()));
  }
  const auto L = static_cast<Eigen::Index>(n_basis_);
  const auto n2 = static_cast<Eigen::Index>(n2_);
  BlanketParams p;
  Eigen::Index k = 0;
  p.beta0 = x[k++];
  p.beta = x.segment(k, L);
  k += L;
  p.beta_depth = x[k++];
  p.sigma_obs = std::exp(x[k++]);
  const Eigen::VectorXd z_theta = x.segment(k, n2);
  k += n2;
  const Eigen::VectorXd z_eta = x.segment(k, n2);
  k += n2;
  p.alpha_y = x[k++];
  p.alpha_theta = x[k++];
  p.alpha_delta = x[k++];
  p.beta_delta = x[k++];
  p.tau = std::exp(x[k++]);
  const Eigen::VectorXd mean2 = theta2_mean(p);
  p.theta2 = mean2 + p.tau * z_theta;
  p.eta2.resize(n2);
  for (Eigen::Index i = 0; i < n2; ++i) {
    p.eta2[i] = p.theta2[i] + p.beta_depth * (data_.depth2[static_cast<std::size_t>(i)] - data_.d0) + p.sigma_obs * z_eta[i];
  }
  return p;
}

Eigen::VectorXd BlanketModel::pack(const BlanketParams& p) const {
  const auto L = static_cast<Eigen::Index>(n_basis_);
  const auto n2 = static_cast<Eigen::Index>(n2_);
  if (p.beta.size() != L || p.theta2.size() != n2 || p.eta2.size() != n2) {
    throw std::invalid_argument("BlanketModel::pack: block sizes do not match the model");
  }
  if (!(p.sigma_obs > 0.0) || !(p.tau > 0.0)) throw std::invalid_argument("BlanketModel::pack: sigma_obs and tau must be positive");
  const Eigen::VectorXd mean2 = theta2_mean(p);
  Eigen::VectorXd x(static_cast<Eigen::Index>(layout_.dim()));
  Eigen::Index k = 0;
  x[k++] = p.beta0;
  x.segment(k, L) = p.beta;
  k += L;
  x[k++] = p.beta_depth;
  x[k++] = std::log(p.sigma_obs);
  x.segment(k, n2) = (p.theta2 - mean2) / p.tau;
  k += n2;
  for (Eigen::Index i = 0; i < n2; ++i) {
    const double dd = data_.depth2[static_cast<std::size_t>(i)] - data_.d0;
    x[k + i] = (p.eta2[i] - p.theta2[i] - p.beta_depth * dd) / p.sigma_obs;
  }
  k += n2;
  x[k++] = p.alpha_y;
  x[k++] = p.alpha_theta;
  x[k++] = p.alpha_delta;
  x[k++] = p.beta_delta;
  x[k++] = std::log(p.tau);
  return x;
}

Eigen::VectorXd BlanketModel::theta2_mean(const BlanketParams& p) const {
  const SurfaceAtWells s = extract_theta1_delta(p.beta0, p.beta, data_.basis2, laplacian_scale_);
  Eigen::VectorXd mean2(s.theta1.size());
  for (Eigen::Index i = 0; i < mean2.size(); ++i) {
    const double coef = p.beta_delta + mixing_term(variant_, p.alpha_y, p.alpha_theta, s.theta1[i]).gamma;
    mean2[i] = s.theta1[i] + p.alpha_delta + coef * s.delta[i];
  }
  return mean2;
}

double BlanketModel::evaluate(const BlanketParams& p) const {
  if (!(p.sigma_obs > 0.0) || !(p.tau > 0.0) || !std::isfinite(p.sigma_obs) || !std::isfinite(p.tau)) return kNegInf;
  double lp = 0.0;
  // Survey 1: log y1 ~ N(beta0 + B1 beta + beta_depth (d1 - d0), sigma_obs).
  const Eigen::VectorXd surface1 = data_.basis1.values * p.beta;
  for (std::size_t i = 0; i < n1_; ++i) {
    const double mu = p.beta0 + surface1[static_cast<Eigen::Index>(i)] + p.beta_depth * (data_.depth1[i] - data_.d0);
    lp += lpdf::normal(data_.log_y1[i], mu, p.sigma_obs);
  }
  // Mixing autoregression theta2 ~ N(mean2, tau), latent reading eta2 ~ N(theta2 + depth term, sigma_obs), kit given eta2.
  const Eigen::VectorXd mean2 = theta2_mean(p);
  for (std::size_t i = 0; i < n2_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lp += lpdf::normal(p.theta2[ii], mean2[ii], p.tau);
    lp += lpdf::normal(p.eta2[ii], p.theta2[ii] + p.beta_depth * (data_.depth2[i] - data_.d0), p.sigma_obs);
    lp += kit_log_likelihood(data_.calibration, data_.kit2[i], p.eta2[ii]).value;
  }
  lp += prior_log_density(p, priors_);
  return std::isfinite(lp) ? lp : kNegInf;
}

double BlanketModel::log_posterior(const BlanketParams& params) const {
  return evaluate(params);
}

double BlanketModel::log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  if (static_cast<std::size_t>(x.size()) != layout_.dim()) {
    throw std::invalid_argument("BlanketModel: parameter vector has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(layout_.dim()));
  }
  const auto L = static_cast<Eigen::Index>(n_basis_);
  const auto n1 = static_cast<Eigen::Index>(n1_);
  const auto n2 = static_cast<Eigen::Index>(n2_);
  const Eigen::Index o_beta = 1;
  const Eigen::Index o_depth = o_beta + L;
  const Eigen::Index o_sigma = o_depth + 1;
  const Eigen::Index o_zt = o_sigma + 1;
  const Eigen::Index o_ze = o_zt + n2;
  const Eigen::Index o_ay = o_ze + n2;
  const Eigen::Index o_tau = o_ay + 4;

  const double beta0 = x[0];
  const auto beta = x.segment(o_beta, L);
  const double beta_depth = x[o_depth];
  const double sigma = std::exp(x[o_sigma]);
  const double alpha_y = x[o_ay];
  const double alpha_theta = x[o_ay + 1];
  const double alpha_delta = x[o_ay + 2];
  const double beta_delta = x[o_ay + 3];
  const double tau = std::exp(x[o_tau]);
  auto fail = [&] {
    if (grad) grad->setZero(x.size());
    return kNegInf;
  };
  if (!(sigma > 0.0) || !(tau > 0.0) || !std::isfinite(sigma) || !std::isfinite(tau)) return fail();

  double lp = 0.0;
  double g_sigma = 0.0;
  double g_tau = 0.0;
  double g_beta0 = 0.0;
  double g_depth = 0.0;
  double g_alpha_y = 0.0;
  double g_alpha_theta = 0.0;
  double g_alpha_delta = 0.0;
  double g_beta_delta = 0.0;

  // Survey 1: log y1 ~ N(beta0 + B1 beta + beta_depth (d1 - d0), sigma_obs).
  const Eigen::VectorXd surface1 = data_.basis1.values * beta;
  Eigen::VectorXd g_mu1(n1);
  for (Eigen::Index i = 0; i < n1; ++i) {
    const double dd = data_.depth1[static_cast<std::size_t>(i)] - data_.d0;
    const double mu = beta0 + surface1[i] + beta_depth * dd;
    const double y = data_.log_y1[static_cast<std::size_t>(i)];
    lp += lpdf::normal(y, mu, sigma);
    g_mu1[i] = -lpdf::normal_dx(y, mu, sigma);
    g_sigma += lpdf::normal_dsd(y, mu, sigma);
    g_beta0 += g_mu1[i];
    g_depth += g_mu1[i] * dd;
  }

  // Survey 2, non-centred: theta2 = mean2 + tau z_theta, eta2 = theta2 + depth term + sigma_obs z_eta.
  // The normal terms reduce to standard normals once the Jacobian tau^n2 sigma_obs^n2 is included.
  const Eigen::VectorXd surface2 = data_.basis2.values * beta;
  const Eigen::VectorXd delta = (data_.basis2.laplacian * beta) / laplacian_scale_;
  Eigen::VectorXd g_theta1(n2);
  Eigen::VectorXd g_delta(n2);
  if (grad) grad->resize(x.size());
  for (Eigen::Index i = 0; i < n2; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double zt = x[o_zt + i];
    const double ze = x[o_ze + i];
    const double theta1 = beta0 + surface2[i];
    const MixingTerm mix = mixing_term(variant_, alpha_y, alpha_theta, theta1);
    const double coef = beta_delta + mix.gamma;
    const double dd = data_.depth2[si] - data_.d0;
    const double eta = theta1 + alpha_delta + coef * delta[i] + tau * zt + beta_depth * dd + sigma * ze;
    const KitLogLikelihood kit = kit_log_likelihood(data_.calibration, data_.kit2[si], eta);
    lp += kit.value - 2.0 * lpdf::kHalfLog2Pi - 0.5 * (zt * zt + ze * ze);

    const double k = kit.d_log_y;
    g_theta1[i] = k * (1.0 + mix.d_theta1 * delta[i]);
    g_delta[i] = k * coef;
    g_beta0 += g_theta1[i];
    g_alpha_delta += k;
    g_beta_delta += k * delta[i];
    g_alpha_y += k * mix.d_alpha_y * delta[i];
    g_alpha_theta += k * mix.d_alpha_theta * delta[i];
    g_tau += k * zt;
    g_sigma += k * ze;
    g_depth += k * dd;
    if (grad) {
      (*grad)[o_zt + i] = -zt + k * tau;
      (*grad)[o_ze + i] = -ze + k * sigma;
    }
  }

  // Priors on the remaining parameters, plus the log-scale Jacobians.
  const BlanketPriors& pr = priors_;
  lp += lpdf::normal(beta0, pr.beta0_mean, pr.beta0_sd);
  lp += -static_cast<double>(L) * (lpdf::kHalfLog2Pi + std::log(pr.beta_sd)) - 0.5 * beta.squaredNorm() / (pr.beta_sd * pr.beta_sd);
  lp += lpdf::normal(alpha_y, 0.0, pr.alpha_y_sd);
  lp += lpdf::normal(alpha_theta, 0.0, pr.alpha_theta_sd);
  lp += lpdf::normal(alpha_delta, 0.0, pr.alpha_delta_sd);
  lp += lpdf::normal(beta_delta, 0.0, pr.beta_delta_sd);
  lp += lpdf::inv_gamma(sigma, pr.sigma_obs_shape, pr.sigma_obs_scale) + std::log(sigma);
  lp += lpdf::inv_gamma(tau, pr.tau_shape, pr.tau_scale) + std::log(tau);
  if (!std::isfinite(lp)) return fail();
  if (!grad) return lp;

  g_sigma += lpdf::inv_gamma_dx(sigma, pr.sigma_obs_shape, pr.sigma_obs_scale);
  g_tau += lpdf::inv_gamma_dx(tau, pr.tau_shape, pr.tau_scale);
  Eigen::VectorXd& g = *grad;
  g[0] = g_beta0 + lpdf::normal_dx(beta0, pr.beta0_mean, pr.beta0_sd);
  g.segment(o_beta, L) = data_.basis1.values.transpose() * g_mu1 + data_.basis2.values.transpose() * g_theta1 +
                         (data_.basis2.laplacian.transpose() * g_delta) / laplacian_scale_ - beta / (pr.beta_sd * pr.beta_sd);
  g[o_depth] = g_depth;
  g[o_sigma] = g_sigma * sigma + 1.0;
  g[o_ay] = g_alpha_y + lpdf::normal_dx(alpha_y, 0.0, pr.alpha_y_sd);
  g[o_ay + 1] = g_alpha_theta + lpdf::normal_dx(alpha_theta, 0.0, pr.alpha_theta_sd);
  g[o_ay + 2] = g_alpha_delta + lpdf::normal_dx(alpha_delta, 0.0, pr.alpha_delta_sd);
  g[o_ay + 3] = g_beta_delta + lpdf::normal_dx(beta_delta, 0.0, pr.beta_delta_sd);
  g[o_tau] = g_tau * tau + 1.0;
  return lp;
}

Eigen::VectorXd BlanketModel::output(const Eigen::VectorXd& x) const {
  const BlanketParams p = unpack(x);
  const SurfaceAtWells s = extract_theta1_delta(p.beta0, p.beta, data_.basis2, laplacian_scale_);
  const auto L = static_cast<Eigen::Index>(n_basis_);
  const auto n2 = static_cast<Eigen::Index>(n2_);
  Eigen::VectorXd out(static_cast<Eigen::Index>(output_layout_.dim()));
  Eigen::Index k = 0;
  out[k++] = p.beta0;
  out.segment(k, L) = p.beta;
  k += L;
  out[k++] = p.beta_depth;
  out[k++] = p.sigma_obs;
  for (const Eigen::VectorXd* v : {&p.theta2, &p.eta2}) {
    out.segment(k, n2) = *v;
    k += n2;
  }
  for (double v : {p.alpha_y, p.alpha_theta, p.alpha_delta, p.beta_delta, p.tau}) out[k++] = v;
  for (const Eigen::VectorXd* v : {&s.theta1, &s.delta}) {
    out.segment(k, n2) = *v;
    k += n2;
  }
  return out;
}

Eigen::VectorXd BlanketModel::data_init() const {
  BlanketParams p;
  const auto L = static_cast<Eigen::Index>(n_basis_);
  double mean = 0.0;
  for (double v : data_.log_y1) mean += v;
  mean = n1_ > 0 ? mean / static_cast<double>(n1_) : priors_.beta0_mean;
  p.beta0 = mean;
  p.beta = Eigen::VectorXd::Zero(L);
  if (n1_ > 0) {
    // Ridge fit with the prior precision of the surface coefficients.
    Eigen::VectorXd resid(static_cast<Eigen::Index>(n1_));
    for (std::size_t i = 0; i < n1_; ++i) resid[static_cast<Eigen::Index>(i)] = data_.log_y1[i] - mean;
    SparseMatrix normal = SparseMatrix(data_.basis1.values.transpose() * data_.basis1.values);
    SparseMatrix ridge(L, L);
    ridge.setIdentity();
    normal += ridge * (1.0 / (priors_.beta_sd * priors_.beta_sd));
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver{Eigen::SparseMatrix<double>(normal)};
    if (solver.info() == Eigen::Success) {
      const Eigen::VectorXd rhs = data_.basis1.values.transpose() * resid;
      p.beta = solver.solve(rhs);
    }
  }
  // Kit-implied log value: centre of the latent interval of each category.
  const auto& cal = data_.calibration;
  auto implied = [&](int w) {
    const double s = cal.slope == 0.0 ? -1.0 : cal.slope;
    const auto& c = cal.cutpoints;
    if (w == 1) return (c[0] - 1.0) / -s;
    if (w == kKitLevels) return (c[kKitLevels - 2] + 1.0) / -s;
    return 0.5 * (c[static_cast<std::size_t>(w - 2)] + c[static_cast<std::size_t>(w - 1)]) / -s;
  };
  const auto n2 = static_cast<Eigen::Index>(n2_);
  p.eta2.resize(n2);
  for (Eigen::Index i = 0; i < n2; ++i) p.eta2[i] = implied(data_.kit2[static_cast<std::size_t>(i)]);
  const SurfaceAtWells s = extract_theta1_delta(p.beta0, p.beta, data_.basis2, laplacian_scale_);
  p.theta2 = 0.5 * (p.eta2 + s.theta1);
  p.sigma_obs = 1.0;
  p.tau = 1.0;
  return pack(p);
}

}  // namespace asdyn
