#include "asdyn/pipeline.hpp"

#include <cmath>

namespace asdyn {

BlanketSetup prepare_blanket_geometry(std::span<const WellRecord> survey1, std::span<const WellRecord> survey2,
                                      const ModelSpec& spec) {
  std::vector<Location> raw;
  for (const auto& w : survey1) raw.push_back({w.north_m, w.east_m});
  for (const auto& w : survey2) raw.push_back({w.north_m, w.east_m});
  BlanketSetup setup;
  std::optional<double> extent;
  if (spec.east_extent_m > 0.0) extent = spec.east_extent_m;
  setup.standardization = fit_standardization(raw, extent);
  const std::vector<Location> all = setup.standardization.apply(raw);
  const KnotGrid grid = build_knot_grid(all, spec.n_east_inner);
  auto basis = std::make_shared<const TensorBasis>(grid);
  const std::span<const Location> s(all);
  setup.data.basis1 = evaluate_basis(basis, s.first(survey1.size()));
  setup.data.basis2 = evaluate_basis(basis, s.subspan(survey1.size()));

  double depth_sum = 0.0;
  for (const auto& w : survey1) {
    setup.data.depth1.push_back(w.depth_m);
    depth_sum += w.depth_m;
  }
  for (const auto& w : survey2) {
    setup.data.depth2.push_back(w.depth_m);
    depth_sum += w.depth_m;
  }
  setup.data.d0 = spec.d0_m ? *spec.d0_m : depth_sum / static_cast<double>(survey1.size() + survey2.size());
  return setup;
}

BlanketSetup prepare_blanket(const Dataset& survey1, const Dataset& survey2, const CalibrationModel& calibration,
                             const ModelSpec& spec) {
  if (survey1.schema != Schema::survey1) throw std::invalid_argument("blanket model: first dataset must be survey1");
  if (survey2.schema != Schema::survey2) throw std::invalid_argument("blanket model: second dataset must be survey2");
  BlanketSetup setup = prepare_blanket_geometry(survey1.wells, survey2.wells, spec);
  setup.data.log_y1 = survey1.log_lab(0);
  setup.data.kit2 = survey2.kit_categories();
  setup.data.calibration = calibration;
  return setup;
}

ResampledSetup prepare_resampled(const Dataset& panel, const ModelSpec& spec) {
  if (panel.schema != Schema::panel) throw std::invalid_argument("resampled model: dataset must be a panel");
  ResampledSetup setup;
  std::optional<double> extent;
  if (spec.east_extent_m > 0.0) extent = spec.east_extent_m;
  const std::vector<Location> raw = panel.raw_locations();
  setup.standardization = fit_standardization(raw, extent);
  setup.data.locations = setup.standardization.apply(raw);
  setup.data.depth = panel.depths();
  setup.data.log_y2000 = panel.log_lab(0);
  setup.data.log_y2014 = panel.log_lab(1);
  setup.data.log_y2015 = panel.log_lab(2);
  setup.data.d0 = spec.panel_d0_m;
  std::vector<double> all = setup.data.log_y2000;
  all.insert(all.end(), setup.data.log_y2014.begin(), setup.data.log_y2014.end());
  all.insert(all.end(), setup.data.log_y2015.begin(), setup.data.log_y2015.end());
  setup.breakpoints = autoregression_breakpoints(all, spec.spline_inner_knots, spec.spline_margin);
  return setup;
}

}  // namespace asdyn
