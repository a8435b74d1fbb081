#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asdyn/calibration.hpp"
#include "asdyn/geometry.hpp"

namespace asdyn {

enum class Schema { survey1, survey2, calibration, panel };

[[nodiscard]] std::string to_string(Schema schema);
[[nodiscard]] Schema parse_schema(const std::string& text);
/// Exact CSV header required for the schema.
[[nodiscard]] const std::vector<std::string>& schema_header(Schema schema);

/// One well. Survey-1 rows carry one lab value, panel rows three (2000, 2014,
/// 2015), survey-2 rows a kit category instead.
struct WellRecord {
  std::string well_id;
  double east_m = 0.0;
  double north_m = 0.0;
  double depth_m = 0.0;
  std::vector<double> lab_ugL;
  std::optional<int> kit_category;

  friend bool operator==(const WellRecord&, const WellRecord&) = default;
};

struct LoadReport {
  std::size_t rows = 0;
  /// Lines (1-based, header is line 1) whose zero lab values were replaced by the detection floor.
  std::vector<std::size_t> floored_lines;
};

struct Dataset {
  Schema schema = Schema::survey1;
  std::vector<WellRecord> wells;       ///< survey1, survey2, panel
  std::vector<CalibrationPair> pairs;  ///< calibration
  LoadReport report;

  [[nodiscard]] std::size_t size() const noexcept {
    return schema == Schema::calibration ? pairs.size() : wells.size();
  }
  [[nodiscard]] std::vector<Location> raw_locations() const;
  [[nodiscard]] std::vector<double> depths() const;
  [[nodiscard]] double mean_depth() const;
  /// log of lab value `epoch` (0-based) per well.
  [[nodiscard]] std::vector<double> log_lab(std::size_t epoch = 0) const;
  [[nodiscard]] std::vector<int> kit_categories() const;
};

/// Parses CSV text. Errors name the source and line; zero lab values are
/// floored at the detection floor and listed in the report; negative ones are rejected.
[[nodiscard]] Dataset read_dataset(std::istream& in, Schema schema, const std::string& source = "<input>");
[[nodiscard]] Dataset load_survey(const std::string& path, Schema schema);
/// Writes the schema's CSV with 9 significant digits.
void write_dataset(std::ostream& out, const Dataset& data);

/// Shift to non-negative coordinates and a common divisor (the east extent).
struct Standardization {
  double east_offset = 0.0;
  double north_offset = 0.0;
  double east_extent = 1.0;

  [[nodiscard]] Location apply(const Location& raw) const noexcept;
  [[nodiscard]] Location invert(const Location& standardized) const noexcept;
  [[nodiscard]] std::vector<Location> apply(std::span<const Location> raw) const;
};

/// Offsets at the coordinate minima; divisor is `extent_override` when given
/// (> 0), else the east extent of the points. Throws on a degenerate east extent.
[[nodiscard]] Standardization fit_standardization(std::span<const Location> raw,
                                                  std::optional<double> extent_override = std::nullopt);

}  // namespace asdyn
