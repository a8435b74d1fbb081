#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace asdyn {

/// A named contiguous slice of a flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool scalar = false;
};

/// Ordered, non-overlapping blocks that partition [0, dim).
class ParameterLayout {
 public:
  /// Appends a vector-valued block.
  ParameterLayout& add(std::string name, std::size_t size);
  ParameterLayout& add_scalar(std::string name);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<ParameterBlock>& blocks() const noexcept { return blocks_; }
  [[nodiscard]] const ParameterBlock* find(const std::string& name) const noexcept;
  /// Throws std::out_of_range naming the missing block.
  [[nodiscard]] const ParameterBlock& at(const std::string& name) const;

  /// One name per coordinate: scalars as `name`, vectors as `name[1]` .. `name[n]`.
  [[nodiscard]] std::vector<std::string> column_names() const;
  /// Inverse of column_names(). Throws on malformed or non-contiguous names.
  [[nodiscard]] static ParameterLayout from_column_names(const std::vector<std::string>& names);

  friend bool operator==(const ParameterLayout& a, const ParameterLayout& b);

 private:
  std::vector<ParameterBlock> blocks_;
  std::size_t dim_ = 0;
};

}  // namespace asdyn
