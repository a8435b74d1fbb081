#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

namespace asdyn {

inline constexpr int kKitLevels = 9;
/// Field-kit reading labels (ug/L), in category order 1..9.
inline constexpr std::array<int, kKitLevels> kKitLabels{0, 10, 25, 50, 100, 200, 300, 500, 1000};

inline constexpr double kDetectionLimit = 5.0;  ///< ug/L
inline constexpr double kDetectionFloor = 2.5;  ///< ug/L, substituted below the limit

/// Maps a kit reading label ("25") to its category (3). Throws listing valid labels.
[[nodiscard]] int kit_category_from_label(std::string_view label);
[[nodiscard]] int kit_label_of(int category);

/// Lab values below the detection limit are replaced by the floor value.
[[nodiscard]] double floor_detection_limit(double lab_value) noexcept;

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double gradient_norm)
      : std::runtime_error(what), gradient_norm_(gradient_norm) {}
  [[nodiscard]] double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

struct CalibrationPair {
  double lab_value = 0.0;  ///< ug/L
  int kit_category = 1;    ///< 1..9
};

/// Cumulative-logit model Pr(w <= k | y) = logistic(c_k + slope * log y), k = 1..8.
struct CalibrationModel {
  std::array<double, kKitLevels - 1> cutpoints{};
  double slope = 0.0;

  /// Throws unless cutpoints are finite and strictly increasing.
  void validate() const;
};

[[nodiscard]] std::array<double, kKitLevels> kit_category_probabilities(const CalibrationModel& model,
                                                                       double log_y);

struct KitLogLikelihood {
  double value = 0.0;    ///< log Pr(w | log_y)
  double d_log_y = 0.0;  ///< derivative with respect to log_y
};

/// log Pr(w | log_y) and its derivative. Category must be in 1..9.
[[nodiscard]] KitLogLikelihood kit_log_likelihood(const CalibrationModel& model, int category,
                                                  double log_y);

struct CalibrationFitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
};

struct CalibrationFit {
  CalibrationModel model;
  double log_likelihood = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// Asymptotic covariance of (c_1..c_8, slope): inverse observed information.
  Eigen::MatrixXd covariance;
  [[nodiscard]] Eigen::VectorXd standard_errors() const { return covariance.diagonal().cwiseSqrt(); }
};

/// Maximum-likelihood fit (flat prior) by damped Newton on (c_1, log increments, slope).
/// Lab values are floored at the detection limit before the log transform.
[[nodiscard]] CalibrationFit fit_calibration(std::span<const CalibrationPair> pairs,
                                             const CalibrationFitOptions& options = {});

/// counts(observed - 1, modal predicted - 1).
[[nodiscard]] Eigen::MatrixXi calibration_confusion(const CalibrationModel& model,
                                                    std::span<const CalibrationPair> pairs);

void to_json(nlohmann::json& j, const CalibrationModel& model);
void from_json(const nlohmann::json& j, CalibrationModel& model);

}  // namespace asdyn
