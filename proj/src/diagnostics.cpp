#include "asdyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace asdyn {

namespace {

void check_rectangular(const ChainSamples& chains) {
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw std::invalid_argument("diagnostics: chains differ in length");
  }
}

ChainSamples split(const ChainSamples& chains) {
  ChainSamples out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

ChainSamples rank_normalize(const ChainSamples& chains) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t i = 0; i < chains[c].size(); ++i) all.emplace_back(chains[c][i], c * chains[c].size() + i);
  }
  std::sort(all.begin(), all.end());
  const double total = static_cast<double>(all.size());
  const boost::math::normal_distribution<double> normal;
  ChainSamples out = chains;
  const std::size_t len = chains.front().size();
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
    const double z = boost::math::quantile(normal, (rank - 0.375) / (total + 0.25));
    for (std::size_t k = i; k < j; ++k) out[all[k].second / len][all[k].second % len] = z;
    i = j;
  }
  return out;
}

// Effective sample size with Geyer's initial monotone sequence over pooled autocorrelations.
std::optional<double> ess_from(const ChainSamples& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> means(m);
  std::vector<double> acov0(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    double s = 0.0;
    for (double x : chains[c]) s += (x - means[c]) * (x - means[c]);
    acov0[c] = s / static_cast<double>(n);
  }
  auto mean_acov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  const double nn = static_cast<double>(n);
  double mean_var = 0.0;
  for (double a : acov0) mean_var += a * nn / (nn - 1.0);
  mean_var /= static_cast<double>(m);
  double var_plus = mean_var * (nn - 1.0) / nn;
  if (m > 1) var_plus += variance_of(means, mean_of(means));
  if (!(var_plus > 0.0) || !std::isfinite(var_plus)) return std::nullopt;

  std::vector<double> rho(n, 0.0);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t s = 1;
  while (s + 4 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - mean_acov(s + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(s + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const std::size_t max_s = s;
  if (rho_even > 0.0) rho[max_s + 1] = rho_even;
  for (std::size_t t = 1; t + 3 <= max_s; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = 0.5 * (rho[t - 1] + rho[t]);
      rho[t + 2] = rho[t + 1];
    }
  }
  const double total = static_cast<double>(m * n);
  double tau = -1.0 + 2.0 * std::accumulate(rho.begin(), rho.begin() + static_cast<std::ptrdiff_t>(max_s), 0.0) +
               rho[max_s + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

}  // namespace

std::optional<double> split_rhat(const ChainSamples& chains) {
  if (chains.size() < 2) return std::nullopt;
  check_rectangular(chains);
  if (chains.front().size() < 4) return std::nullopt;
  const ChainSamples halves = split(chains);
  const double n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    w += variance_of(h, means.back());
  }
  w /= static_cast<double>(halves.size());
  const double b = n * variance_of(means, mean_of(means));
  if (!(w > 0.0) || !std::isfinite(w)) return std::nullopt;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

std::optional<double> bulk_ess(const ChainSamples& chains) {
  if (chains.empty()) return std::nullopt;
  check_rectangular(chains);
  if (chains.front().size() < 4) return std::nullopt;
  const double first = chains.front().front();
  bool constant = true;
  for (const auto& c : chains) {
    for (double x : c) {
      if (!std::isfinite(x)) return std::nullopt;
      constant = constant && x == first;
    }
  }
  if (constant) return std::nullopt;
  return ess_from(rank_normalize(split(chains)));
}

std::size_t DiagnosticsReport::n_flagged() const {
  return static_cast<std::size_t>(
      std::count_if(parameters.begin(), parameters.end(), [](const auto& p) { return p.flagged; }));
}

double DiagnosticsReport::fraction_rhat_above(double threshold) const {
  if (parameters.empty()) return 0.0;
  const auto n = std::count_if(parameters.begin(), parameters.end(),
                               [&](const auto& p) { return p.rhat && *p.rhat > threshold; });
  return static_cast<double>(n) / static_cast<double>(parameters.size());
}

std::optional<double> DiagnosticsReport::max_rhat() const {
  std::optional<double> out;
  for (const auto& p : parameters) {
    if (p.rhat && (!out || *p.rhat > *out)) out = p.rhat;
  }
  return out;
}

std::optional<double> DiagnosticsReport::min_ess() const {
  std::optional<double> out;
  for (const auto& p : parameters) {
    if (p.ess_bulk && (!out || *p.ess_bulk < *out)) out = p.ess_bulk;
  }
  return out;
}

DiagnosticsReport diagnose(const PosteriorDraws& draws, double flag_threshold) {
  DiagnosticsReport report;
  report.divergences = draws.divergences;
  if (draws.n_chains < 2) report.rhat_note = "R-hat undefined with a single chain";
  else if (draws.n_draws < 4) report.rhat_note = "R-hat undefined with fewer than 4 draws per chain";
  const std::vector<std::string> names = draws.layout.column_names();
  for (Eigen::Index j = 0; j < draws.values.cols(); ++j) {
    ChainSamples chains;
    for (int c = 0; c < draws.n_chains; ++c) chains.push_back(draws.chain_column(c, j));
    ParameterDiagnostic d;
    d.name = names[static_cast<std::size_t>(j)];
    const Eigen::VectorXd col = draws.values.col(j);
    d.mean = col.mean();
    d.sd = col.size() > 1 ? std::sqrt((col.array() - d.mean).square().sum() / static_cast<double>(col.size() - 1)) : 0.0;
    d.rhat = split_rhat(chains);
    d.ess_bulk = bulk_ess(chains);
    d.flagged = d.rhat && *d.rhat > flag_threshold;
    report.parameters.push_back(std::move(d));
  }
  return report;
}

}  // namespace asdyn
