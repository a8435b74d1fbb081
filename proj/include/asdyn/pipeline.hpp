#pragma once

#include "asdyn/blanket_model.hpp"
#include "asdyn/dataset.hpp"
#include "asdyn/model_spec.hpp"
#include "asdyn/resampled_model.hpp"

namespace asdyn {

/// Geometry and observations shared by simulation and fitting, so that both
/// see the same standardization, knot grid and basis.
struct BlanketSetup {
  Standardization standardization;
  BlanketData data;
};

/// Standardizes survey 1 and survey 2 jointly, builds the knot grid over both,
/// and evaluates the bases. d0 is the configured value or the mean depth of both surveys.
[[nodiscard]] BlanketSetup prepare_blanket(const Dataset& survey1, const Dataset& survey2,
                                           const CalibrationModel& calibration, const ModelSpec& spec);

/// Geometry-only variant used before any observations exist.
[[nodiscard]] BlanketSetup prepare_blanket_geometry(std::span<const WellRecord> survey1,
                                                    std::span<const WellRecord> survey2, const ModelSpec& spec);

struct ResampledSetup {
  Standardization standardization;
  ResampledData data;
  std::vector<double> breakpoints;
};

/// Panel data in standardized coordinates with spline knots from all observed log values.
[[nodiscard]] ResampledSetup prepare_resampled(const Dataset& panel, const ModelSpec& spec);

}  // namespace asdyn
