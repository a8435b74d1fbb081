#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "asdyn/diagnostics.hpp"
#include "asdyn/draws.hpp"

namespace asdyn {

/// CSV with columns `chain,draw,<parameter names>`; chain and draw are 1-based.
/// Values are written with 17 significant digits so reading back is exact.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);
/// Inverse of write_draws_csv. Chains must be contiguous and of equal length.
/// Per-chain sampler statistics are not stored and come back empty.
[[nodiscard]] PosteriorDraws read_draws_csv(std::istream& in, const std::string& source = "<draws>");
[[nodiscard]] PosteriorDraws read_draws_csv(const std::string& path);

/// Sampler statistics plus per-parameter R-hat and bulk ESS (null when undefined).
[[nodiscard]] nlohmann::json diagnostics_json(const DiagnosticsReport& report, const PosteriorDraws& draws);

}  // namespace asdyn
