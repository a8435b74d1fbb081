#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "asdyn/dataset.hpp"
#include "asdyn/pipeline.hpp"

namespace asdyn {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generating values and latent states of one synthetic blanket data set.
struct BlanketTruth {
  BlanketParams params;      ///< includes theta2 and eta2 at survey-2 wells
  Eigen::VectorXd theta1;    ///< baseline at survey-2 wells
  Eigen::VectorXd delta;     ///< scaled Laplacian at survey-2 wells
  std::vector<std::size_t> panel_wells;  ///< survey-2 indices resampled in the panel
  Eigen::VectorXd panel_theta2;          ///< independent 2014 baselines of the panel wells
};

struct SimulatedBlanket {
  Dataset survey1;
  Dataset survey2;
  Dataset calibration;
  Dataset panel;
  BlanketSetup setup;  ///< standardization, bases and d0 used for generation
  BlanketTruth truth;
};

/// Draws a blanket data set from the model.
///
/// Well positions come from `sim.layout_seed` (or `seed` when unset). Without
/// `fixed_truth` all parameters are prior draws keyed on `seed`
/// (beta_depth ~ N(0, sim.beta_depth_sd)); with it, only theta2, eta2 and
/// observation noise depend on `seed`. Kit readings use `sim.calibration`.
/// Throws SimulationError when the region cannot hold the wells at the
/// requested minimum separation.
[[nodiscard]] SimulatedBlanket simulate_blanket(const ModelSpec& spec, const SimulationConfig& sim,
                                                std::uint64_t seed,
                                                const std::optional<BlanketParams>& fixed_truth = std::nullopt);

/// Quality-control pairs: log lab value ~ N(lab_log_mean, lab_log_sd), floored at
/// the detection limit, kit category drawn given the recorded lab value.
[[nodiscard]] Dataset simulate_calibration(const CalibrationModel& model, int n, double lab_log_mean,
                                           double lab_log_sd, std::uint64_t seed);

struct ResampledTruth {
  ResampledParams params;
  Standardization standardization;
};

struct SimulatedPanel {
  Dataset panel;
  ResampledTruth truth;
};

/// Draws a three-epoch panel from the resampled model with a linear
/// autoregression (spline coefficients zero). The GP and noise hyperparameters
/// and mu are prior draws; beta_linear ~ N(-0.2, 0.1).
[[nodiscard]] SimulatedPanel simulate_resampled(const ModelSpec& spec, const SimulationConfig& sim,
                                                std::uint64_t seed);

[[nodiscard]] nlohmann::json truth_json(const SimulatedBlanket& sim);
[[nodiscard]] nlohmann::json truth_json(const SimulatedPanel& sim);

}  // namespace asdyn
