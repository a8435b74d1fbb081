#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace asdyn {

/// Input error carrying the file and 1-based line number in its message.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits one CSV record on commas. Double-quoted fields may contain commas
/// and doubled quotes; surrounding whitespace and a trailing CR are removed.
[[nodiscard]] std::vector<std::string> split_csv_line(std::string_view line);

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

/// Parses a finite number occupying the whole field, or throws ParseError
/// naming source, line and column.
[[nodiscard]] double parse_double(std::string_view field, const std::string& source, std::size_t line,
                                  const std::string& column);

}  // namespace asdyn
