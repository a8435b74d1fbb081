#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "asdyn/log_density.hpp"
#include "asdyn/model_spec.hpp"
#include "asdyn/simulate.hpp"

namespace testing {

/// Central difference of the log density along coordinate i.
inline double fd_partial(const asdyn::LogDensity& f, const Eigen::VectorXd& x, Eigen::Index i, double h) {
  Eigen::VectorXd xp = x;
  Eigen::VectorXd xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (f.log_density(xp, nullptr) - f.log_density(xm, nullptr)) / (2.0 * h);
}

/// |a - b| relative to max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Square region with a rectangular hole; about 40 surface coefficients at n_east_inner = 4.
inline asdyn::SimulationConfig mini_simulation(int n1 = 100, int n2 = 100) {
  asdyn::SimulationConfig sim;
  sim.region_east_m = 9100.0;
  sim.region_north_m = 6500.0;
  sim.holes = {{3000.0, 2500.0, 5000.0, 4000.0}};
  sim.n1 = n1;
  sim.n2 = n2;
  sim.n_panel = std::min(50, n2);
  sim.n_cal = 200;
  return sim;
}

inline asdyn::ModelSpec mini_spec(asdyn::MixingVariant variant = asdyn::MixingVariant::exp_plus_linear) {
  asdyn::ModelSpec spec;
  spec.kind = asdyn::ModelKind::blanket;
  spec.variant = variant;
  spec.n_east_inner = 4;
  return spec;
}

/// Random point near a reference: reference + N(0, scale).
inline Eigen::VectorXd jitter(const Eigen::VectorXd& x, double scale, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += nd(gen);
  return y;
}

}  // namespace testing
