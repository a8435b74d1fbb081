#include "asdyn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "asdyn/text.hpp"

namespace asdyn {

std::string to_string(Schema schema) {
  switch (schema) {
    case Schema::survey1: return "survey1";
    case Schema::survey2: return "survey2";
    case Schema::calibration: return "calibration";
    case Schema::panel: return "panel";
  }
  return "unknown";
}

Schema parse_schema(const std::string& text) {
  for (Schema s : {Schema::survey1, Schema::survey2, Schema::calibration, Schema::panel}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown schema '" + text + "' (valid: survey1, survey2, calibration, panel)");
}

const std::vector<std::string>& schema_header(Schema schema) {
  static const std::vector<std::string> s1{"well_id", "east_m", "north_m", "depth_m", "as_ugL"};
  static const std::vector<std::string> s2{"well_id", "east_m", "north_m", "depth_m", "kit_level"};
  static const std::vector<std::string> cal{"lab_ugL", "kit_level"};
  static const std::vector<std::string> panel{"well_id",    "east_m",     "north_m",   "depth_m",
                                              "as2000_ugL", "as2014_ugL", "as2015_ugL"};
  switch (schema) {
    case Schema::survey1: return s1;
    case Schema::survey2: return s2;
    case Schema::calibration: return cal;
    case Schema::panel: return panel;
  }
  return s1;
}

namespace {

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line) + ": "; }

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

int parse_kit(const std::string& field, const std::string& source, std::size_t line) {
  try {
    return kit_category_from_label(field);
  } catch (const std::exception& e) {
    throw ParseError(where(source, line) + e.what());
  }
}

}  // namespace

Dataset read_dataset(std::istream& in, Schema schema, const std::string& source) {
  Dataset data;
  data.schema = schema;
  const std::vector<std::string>& header = schema_header(schema);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::string text = line;
    if (line_no == 1 && text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    if (split_csv_line(text) != header) {
      throw ParseError(where(source, line_no) + "header must be '" + joined(header) + "' for " + to_string(schema) +
                       " files");
    }
    have_header = true;
  }
  if (!have_header) throw ParseError(source + ": empty file (expected header '" + joined(header) + "')");

  auto lab = [&](const std::string& field, std::size_t ln, const std::string& column) {
    const double v = parse_double(field, source, ln, column);
    if (v < 0.0) throw ParseError(where(source, ln) + "column '" + column + "': negative concentration");
    if (v == 0.0) {
      if (data.report.floored_lines.empty() || data.report.floored_lines.back() != ln) {
        data.report.floored_lines.push_back(ln);
      }
      return kDetectionFloor;
    }
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError(where(source, line_no) + "expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(f.size()));
    }
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (f[k].empty()) throw ParseError(where(source, line_no) + "missing value for '" + header[k] + "'");
    }
    ++data.report.rows;
    if (schema == Schema::calibration) {
      CalibrationPair p;
      p.lab_value = parse_double(f[0], source, line_no, header[0]);
      if (p.lab_value < 0.0) throw ParseError(where(source, line_no) + "column 'lab_ugL': negative concentration");
      p.kit_category = parse_kit(f[1], source, line_no);
      data.pairs.push_back(p);
      continue;
    }
    WellRecord w;
    w.well_id = f[0];
    w.east_m = parse_double(f[1], source, line_no, header[1]);
    w.north_m = parse_double(f[2], source, line_no, header[2]);
    w.depth_m = parse_double(f[3], source, line_no, header[3]);
    if (!(w.depth_m > 0.0)) throw ParseError(where(source, line_no) + "column 'depth_m': depth must be positive");
    switch (schema) {
      case Schema::survey1: w.lab_ugL = {lab(f[4], line_no, header[4])}; break;
      case Schema::survey2: w.kit_category = parse_kit(f[4], source, line_no); break;
      case Schema::panel:
        for (std::size_t k = 4; k < 7; ++k) w.lab_ugL.push_back(lab(f[k], line_no, header[k]));
        break;
      case Schema::calibration: break;
    }
    data.wells.push_back(std::move(w));
  }
  if (data.size() == 0) throw ParseError(source + ": no data rows");
  return data;
}

Dataset load_survey(const std::string& path, Schema schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_dataset(in, schema, path);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  std::ostringstream s;
  s << std::setprecision(9);
  s << joined(schema_header(data.schema)) << '\n';
  if (data.schema == Schema::calibration) {
    for (const auto& p : data.pairs) s << p.lab_value << ',' << kit_label_of(p.kit_category) << '\n';
  } else {
    for (const auto& w : data.wells) {
      s << w.well_id << ',' << w.east_m << ',' << w.north_m << ',' << w.depth_m;
      if (data.schema == Schema::survey2) {
        s << ',' << kit_label_of(w.kit_category.value_or(1));
      } else {
        for (double v : w.lab_ugL) s << ',' << v;
      }
      s << '\n';
    }
  }
  out << s.str();
}

std::vector<Location> Dataset::raw_locations() const {
  std::vector<Location> out;
  out.reserve(wells.size());
  for (const auto& w : wells) out.push_back({w.north_m, w.east_m});
  return out;
}

std::vector<double> Dataset::depths() const {
  std::vector<double> out;
  for (const auto& w : wells) out.push_back(w.depth_m);
  return out;
}

double Dataset::mean_depth() const {
  if (wells.empty()) throw std::logic_error("mean depth of an empty dataset");
  const std::vector<double> d = depths();
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

std::vector<double> Dataset::log_lab(std::size_t epoch) const {
  std::vector<double> out;
  for (const auto& w : wells) {
    if (epoch >= w.lab_ugL.size()) throw std::out_of_range("well '" + w.well_id + "' has no lab value for that epoch");
    out.push_back(std::log(w.lab_ugL[epoch]));
  }
  return out;
}

std::vector<int> Dataset::kit_categories() const {
  std::vector<int> out;
  for (const auto& w : wells) {
    if (!w.kit_category) throw std::logic_error("well '" + w.well_id + "' has no kit reading");
    out.push_back(*w.kit_category);
  }
  return out;
}

Location Standardization::apply(const Location& raw) const noexcept {
  return {(raw.north - north_offset) / east_extent, (raw.east - east_offset) / east_extent};
}

Location Standardization::invert(const Location& s) const noexcept {
  return {s.north * east_extent + north_offset, s.east * east_extent + east_offset};
}

std::vector<Location> Standardization::apply(std::span<const Location> raw) const {
  std::vector<Location> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(apply(r));
  return out;
}

Standardization fit_standardization(std::span<const Location> raw, std::optional<double> extent_override) {
  if (raw.size() < 2) throw std::invalid_argument("standardize: need at least two locations");
  Standardization s;
  double east_max = raw.front().east;
  s.east_offset = raw.front().east;
  s.north_offset = raw.front().north;
  for (const auto& r : raw) {
    if (!std::isfinite(r.east) || !std::isfinite(r.north)) throw std::invalid_argument("standardize: non-finite coordinate");
    s.east_offset = std::min(s.east_offset, r.east);
    s.north_offset = std::min(s.north_offset, r.north);
    east_max = std::max(east_max, r.east);
  }
  if (extent_override && *extent_override > 0.0) {
    s.east_extent = *extent_override;
  } else {
    s.east_extent = east_max - s.east_offset;
  }
  if (!(east_max > s.east_offset) || !(s.east_extent > 0.0)) {
    throw std::invalid_argument("standardize: degenerate east extent (all locations share one east coordinate)");
  }
  return s;
}

}  // namespace asdyn
