#pragma once

namespace asdyn {

/// A planar location. Units depend on context: metres for raw survey data,
/// east-extent units after standardization.
struct Location {
  double north = 0.0;
  double east = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

}  // namespace asdyn
