#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Synthetic day profiles and series used by the built-in case, the CLI
// defaults and the test suites. None of these are measured data.
namespace mgsched::synthetic {

// $/kWh, 24 values: cheap night, expensive midday, shoulder evening.
std::vector<double> price_profile();

// Multipliers on base bus loads, 24 values.
std::vector<double> load_factor_profile();

// kW, 24 values for the built-in wind unit.
std::vector<double> wind_profile();

// Hourly wind-like series in MW: daily sine plus AR(1) noise, strictly
// positive. Used for forecaster training.
std::vector<double> wind_series(std::size_t points, std::uint64_t seed);

// `base + scale * e` where e is unit-variance AR(1) noise (coefficient 0.8),
// clamped to [lo, hi]. The same seed gives the same e for every scale, so
// perturbation magnitudes compare exactly.
std::vector<double> perturb(const std::vector<double>& base, double scale,
                            std::uint64_t seed, double lo, double hi);

}  // namespace mgsched::synthetic
