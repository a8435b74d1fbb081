#include "asdyn/parameter_layout.hpp"

#include <stdexcept>

namespace asdyn {

ParameterLayout& ParameterLayout::add_scalar(std::string name) {
  add(std::move(name), 1);
  blocks_.back().scalar = true;
  return *this;
}

ParameterLayout& ParameterLayout::add(std::string name, std::size_t size) {
  if (name.empty() || name.find_first_of("[],") != std::string::npos) {
    throw std::invalid_argument("invalid parameter block name '" + name + "'");
  }
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter block '" + name + "'");
  blocks_.push_back({std::move(name), dim_, size});
  dim_ += size;
  return *this;
}

const ParameterBlock* ParameterLayout::find(const std::string& name) const noexcept {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

const ParameterBlock& ParameterLayout::at(const std::string& name) const {
  if (const auto* b = find(name)) return *b;
  throw std::out_of_range("parameter block '" + name + "' not present in layout");
}

std::vector<std::string> ParameterLayout::column_names() const {
  std::vector<std::string> out;
  out.reserve(dim_);
  for (const auto& b : blocks_) {
    if (b.scalar) {
      out.push_back(b.name);
    } else {
      for (std::size_t i = 0; i < b.size; ++i) out.push_back(b.name + "[" + std::to_string(i + 1) + "]");
    }
  }
  return out;
}

ParameterLayout ParameterLayout::from_column_names(const std::vector<std::string>& names) {
  ParameterLayout layout;
  std::string current;
  std::size_t count = 0;
  bool indexed = false;
  auto flush = [&] {
    if (current.empty()) return;
    if (indexed) {
      layout.add(current, count);
    } else {
      layout.add_scalar(current);
    }
  };
  for (const auto& col : names) {
    const auto open = col.find('[');
    if (open == std::string::npos) {
      flush();
      current = col;
      count = 1;
      indexed = false;
      continue;
    }
    if (col.back() != ']') throw std::invalid_argument("malformed column name '" + col + "'");
    const std::string base = col.substr(0, open);
    const std::size_t index = std::stoul(col.substr(open + 1, col.size() - open - 2));
    if (base == current && indexed) {
      if (index != count + 1) throw std::invalid_argument("non-contiguous column '" + col + "'");
      ++count;
    } else {
      if (index != 1) throw std::invalid_argument("vector block must start at index 1: '" + col + "'");
      flush();
      current = base;
      count = 1;
      indexed = true;
    }
  }
  flush();
  return layout;
}

bool operator==(const ParameterLayout& a, const ParameterLayout& b) {
  if (a.blocks_.size() != b.blocks_.size()) return false;
  for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
    const auto& x = a.blocks_[i];
    const auto& y = b.blocks_[i];
    if (x.name != y.name || x.size != y.size || x.scalar != y.scalar) return false;
  }
  return true;
}

}  // namespace asdyn
