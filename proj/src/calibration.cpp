#include "asdyn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace asdyn {

namespace {

constexpr int kCut = kKitLevels - 1;
constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) noexcept {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// Log-probability of one ordinal cell bounded by latent cumulative logits a < b
// (a = -inf for the lowest category, b = +inf for the highest), together with
// the first and second derivatives in (a, b).
struct CellTerms {
  double value = 0.0;
  double da = 0.0;
  double db = 0.0;
  double haa = 0.0;
  double hab = 0.0;
  double hbb = 0.0;
};

CellTerms cell_terms(double a, double b) noexcept {
  CellTerms t;
  const bool lower_open = std::isinf(a);
  const bool upper_open = std::isinf(b);
  if (lower_open && upper_open) return t;
  if (lower_open) {
    t.value = log_logistic(b);
    t.db = logistic(-b);
    t.hbb = -logistic(b) * logistic(-b);
    return t;
  }
  if (upper_open) {
    t.value = log_logistic(-a);
    t.da = -logistic(a);
    t.haa = -logistic(a) * logistic(-a);
    return t;
  }
  // F(b) - F(a) = (1 - e^{a-b}) F(b) F(-a)
  const double d = b - a;
  const double em1 = std::expm1(d);
  const double curv = 1.0 / (em1 * -std::expm1(-d));  // e^d / (e^d - 1)^2
  t.value = std::log(-std::expm1(-d)) + log_logistic(b) + log_logistic(-a);
  t.db = 1.0 / em1 + logistic(-b);
  t.da = -1.0 / em1 - logistic(a);
  t.hbb = -curv - logistic(b) * logistic(-b);
  t.haa = -curv - logistic(a) * logistic(-a);
  t.hab = curv;
  return t;
}

std::pair<double, double> cell_bounds(const CalibrationModel& m, int category, double log_y) {
  const double shift = m.slope * log_y;
  const double a = category == 1 ? -kInf : m.cutpoints[static_cast<std::size_t>(category - 2)] + shift;
  const double b = category == kKitLevels ? kInf : m.cutpoints[static_cast<std::size_t>(category - 1)] + shift;
  return {a, b};
}

struct Objective {
  double value = 0.0;
  Eigen::VectorXd grad;  // (c_1..c_8, slope)
  Eigen::MatrixXd hess;
};

Objective log_likelihood(const CalibrationModel& m, std::span<const double> log_y,
                         std::span<const int> category) {
  Objective o;
  o.grad = Eigen::VectorXd::Zero(kCut + 1);
  o.hess = Eigen::MatrixXd::Zero(kCut + 1, kCut + 1);
  for (std::size_t i = 0; i < log_y.size(); ++i) {
    const int w = category[i];
    const double x = log_y[i];
    const auto [a, b] = cell_bounds(m, w, x);
    const CellTerms t = cell_terms(a, b);
    o.value += t.value;
    const int ia = w - 2;  // index of c_{w-1}
    const int ib = w - 1;  // index of c_w
    const bool has_a = w > 1;
    const bool has_b = w < kKitLevels;
    if (has_a) {
      o.grad[ia] += t.da;
      o.hess(ia, ia) += t.haa;
      o.hess(ia, kCut) += x * (t.haa + t.hab);
    }
    if (has_b) {
      o.grad[ib] += t.db;
      o.hess(ib, ib) += t.hbb;
      o.hess(ib, kCut) += x * (t.hab + t.hbb);
    }
    if (has_a && has_b) o.hess(ia, ib) += t.hab;
    o.grad[kCut] += x * (t.da + t.db);
    o.hess(kCut, kCut) += x * x * (t.haa + 2.0 * t.hab + t.hbb);
  }
  o.hess = Eigen::MatrixXd(o.hess.selfadjointView<Eigen::Upper>());
  return o;
}

// Unconstrained coordinates: (c_1, log(c_2 - c_1), ..., log(c_8 - c_7), slope).
CalibrationModel from_unconstrained(const Eigen::VectorXd& u) {
  CalibrationModel m;
  m.cutpoints[0] = u[0];
  for (int k = 1; k < kCut; ++k) m.cutpoints[static_cast<std::size_t>(k)] = m.cutpoints[static_cast<std::size_t>(k - 1)] + std::exp(u[k]);
  m.slope = u[kCut];
  return m;
}

}  // namespace

int kit_category_from_label(std::string_view label) {
  std::string trimmed(label);
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\""));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\"") + 1);
  for (std::size_t k = 0; k < kKitLabels.size(); ++k) {
    if (trimmed == std::to_string(kKitLabels[k])) return static_cast<int>(k) + 1;
  }
  std::ostringstream msg;
  msg << "unknown kit label '" << trimmed << "'; valid labels are";
  for (int v : kKitLabels) msg << ' ' << v;
  throw std::invalid_argument(msg.str());
}

int kit_label_of(int category) {
  if (category < 1 || category > kKitLevels) throw std::out_of_range("kit category must be in 1..9");
  return kKitLabels[static_cast<std::size_t>(category - 1)];
}

double floor_detection_limit(double lab_value) noexcept {
  return lab_value < kDetectionLimit ? kDetectionFloor : lab_value;
}

void CalibrationModel::validate() const {
  if (!std::isfinite(slope)) throw std::invalid_argument("calibration slope must be finite");
  for (int k = 0; k < kCut; ++k) {
    if (!std::isfinite(cutpoints[static_cast<std::size_t>(k)])) throw std::invalid_argument("calibration cutpoints must be finite");
    if (k > 0 && !(cutpoints[static_cast<std::size_t>(k)] > cutpoints[static_cast<std::size_t>(k - 1)])) {
      throw std::invalid_argument("calibration cutpoints must be strictly increasing");
    }
  }
}

std::array<double, kKitLevels> kit_category_probabilities(const CalibrationModel& model, double log_y) {
  if (!std::isfinite(log_y)) throw std::invalid_argument("kit_category_probabilities: non-finite log_y");
  std::array<double, kKitLevels> p{};
  for (int w = 1; w <= kKitLevels; ++w) {
    const auto [a, b] = cell_bounds(model, w, log_y);
    p[static_cast<std::size_t>(w - 1)] = std::exp(cell_terms(a, b).value);
  }
  return p;
}

KitLogLikelihood kit_log_likelihood(const CalibrationModel& model, int category, double log_y) {
  if (category < 1 || category > kKitLevels) {
    throw std::out_of_range("kit category " + std::to_string(category) + " outside 1..9");
  }
  const auto [a, b] = cell_bounds(model, category, log_y);
  const CellTerms t = cell_terms(a, b);
  // a and b shift together with log_y.
  return {t.value, model.slope * (t.da + t.db)};
}

CalibrationFit fit_calibration(std::span<const CalibrationPair> pairs, const CalibrationFitOptions& options) {
  if (pairs.size() < 10) throw std::invalid_argument("fit_calibration: need at least 10 pairs");
  std::vector<double> log_y;
  std::vector<int> cat;
  std::array<double, kKitLevels> counts{};
  for (const auto& p : pairs) {
    if (p.kit_category < 1 || p.kit_category > kKitLevels) {
      throw std::out_of_range("fit_calibration: kit category " + std::to_string(p.kit_category) + " outside 1..9");
    }
    if (!std::isfinite(p.lab_value)) throw std::invalid_argument("fit_calibration: non-finite lab value");
    log_y.push_back(std::log(floor_detection_limit(p.lab_value)));
    cat.push_back(p.kit_category);
    counts[static_cast<std::size_t>(p.kit_category - 1)] += 1.0;
  }
  if (std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) < 2) {
    throw std::invalid_argument("fit_calibration: all pairs fall in one kit category; model is unidentifiable");
  }

  // Start from smoothed empirical cumulative frequencies with zero slope.
  Eigen::VectorXd u(kCut + 1);
  {
    const double total = static_cast<double>(pairs.size()) + 0.5 * kKitLevels;
    double cum = 0.0;
    std::array<double, kCut> c{};
    for (int k = 0; k < kCut; ++k) {
      cum += counts[static_cast<std::size_t>(k)] + 0.5;
      const double q = cum / total;
      c[static_cast<std::size_t>(k)] = std::log(q / (1.0 - q));
    }
    u[0] = c[0];
    for (int k = 1; k < kCut; ++k) u[k] = std::log(c[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k - 1)]);
    u[kCut] = 0.0;
  }

  auto evaluate = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    const CalibrationModel m = from_unconstrained(v);
    Objective o = log_likelihood(m, log_y, cat);
    // Jacobian dc/dv: c_k depends on v_0 and exp(v_j), j <= k.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(kCut + 1, kCut + 1);
    for (int k = 0; k < kCut; ++k) {
      jac(k, 0) = 1.0;
      for (int j = 1; j <= k; ++j) jac(k, j) = std::exp(v[j]);
    }
    jac(kCut, kCut) = 1.0;
    grad = jac.transpose() * o.grad;
    hess = jac.transpose() * o.hess * jac;
    for (int j = 1; j < kCut; ++j) hess(j, j) += std::exp(v[j]) * o.grad.segment(j, kCut - j).sum();
    return o.value;
  };

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double value = evaluate(u, grad, hess);
  int iter = 0;
  double damping = 0.0;
  for (; iter < options.max_iterations && grad.norm() >= options.gradient_tolerance; ++iter) {
    const Eigen::MatrixXd neg_h = -hess;
    Eigen::VectorXd step;
    for (double lambda = damping;; lambda = lambda == 0.0 ? 1e-8 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff()) : 10.0 * lambda) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg_h + lambda * Eigen::MatrixXd::Identity(kCut + 1, kCut + 1));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(grad);
        damping = lambda * 0.1 < 1e-12 ? 0.0 : lambda * 0.1;
        break;
      }
      if (lambda > 1e12) throw FitError("fit_calibration: Hessian could not be regularized", grad.norm());
    }
    double t = 1.0;
    Eigen::VectorXd g_new;
    Eigen::MatrixXd h_new;
    double v_new = -kInf;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::VectorXd cand = u + t * step;
      v_new = evaluate(cand, g_new, h_new);
      if (std::isfinite(v_new) && v_new >= value - 1e-12 * std::abs(value)) {
        u = cand;
        break;
      }
    }
    if (!std::isfinite(v_new)) throw FitError("fit_calibration: line search failed", grad.norm());
    value = v_new;
    grad = g_new;
    hess = h_new;
  }
  if (!(grad.norm() < options.gradient_tolerance)) {
    std::ostringstream msg;
    msg << "fit_calibration: no convergence after " << iter << " iterations (gradient norm "
        << grad.norm() << ")";
    throw FitError(msg.str(), grad.norm());
  }

  CalibrationFit fit;
  fit.model = from_unconstrained(u);
  fit.log_likelihood = value;
  fit.iterations = iter;
  fit.gradient_norm = grad.norm();
  const Objective at_mode = log_likelihood(fit.model, log_y, cat);
  fit.covariance = (-at_mode.hess).inverse();
  return fit;
}

Eigen::MatrixXi calibration_confusion(const CalibrationModel& model, std::span<const CalibrationPair> pairs) {
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(kKitLevels, kKitLevels);
  for (const auto& p : pairs) {
    const auto probs = kit_category_probabilities(model, std::log(floor_detection_limit(p.lab_value)));
    const auto mode = std::distance(probs.begin(), std::max_element(probs.begin(), probs.end()));
    table(p.kit_category - 1, static_cast<Eigen::Index>(mode)) += 1;
  }
  return table;
}

void to_json(nlohmann::json& j, const CalibrationModel& model) {
  j = nlohmann::json{{"cutpoints", model.cutpoints}, {"slope", model.slope}};
}

void from_json(const nlohmann::json& j, CalibrationModel& model) {
  const auto& cuts = j.at("cutpoints");
  if (!cuts.is_array() || cuts.size() != kCut) {
    throw std::invalid_argument("calibration JSON: 'cutpoints' must hold 8 numbers");
  }
  for (std::size_t k = 0; k < kCut; ++k) model.cutpoints[k] = cuts[k].get<double>();
  model.slope = j.at("slope").get<double>();
  model.validate();
}

}  // namespace asdyn
