#include "mgsched/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mgsched/random.hpp"

namespace mgsched::synthetic {

std::vector<double> price_profile() {
  return {0.20, 0.18, 0.16, 0.15, 0.17, 0.22, 0.35, 0.50,
          0.65, 0.85, 0.95, 1.05, 1.10, 1.02, 0.93, 0.84,
          0.76, 0.81, 0.90, 0.79, 0.61, 0.45, 0.32, 0.26};
}

std::vector<double> load_factor_profile() {
  return {0.34, 0.32, 0.30, 0.30, 0.31, 0.34, 0.42, 0.48,
          0.60, 0.68, 0.72, 0.75, 0.76, 0.75, 0.73, 0.71,
          0.74, 0.80, 0.84, 0.80, 0.70, 0.60, 0.50, 0.43};
}

std::vector<double> wind_profile() {
  return {320, 360, 410, 450, 480, 470, 430, 380,
          330, 290, 260, 240, 230, 240, 270, 310,
          360, 420, 480, 530, 560, 540, 480, 400};
}

std::vector<double> wind_series(std::size_t points, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(points);
  double noise = 0.0;
  for (std::size_t t = 0; t < points; ++t) {
    noise = 0.8 * noise + 0.03 * rng.normal();
    const double daily = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
    const double weekly = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 168.0);
    out[t] = std::max(0.02, 0.5 + 0.25 * daily + 0.08 * weekly + noise);
  }
  return out;
}

std::vector<double> perturb(const std::vector<double>& base, double scale,
                            std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  constexpr double phi = 0.8;
  const double innovation = std::sqrt(1.0 - phi * phi);
  std::vector<double> out(base.size());
  double e = rng.normal();
  for (std::size_t t = 0; t < base.size(); ++t) {
    if (t > 0) e = phi * e + innovation * rng.normal();
    out[t] = std::clamp(base[t] + scale * e, lo, hi);
  }
  return out;
}

}  // namespace mgsched::synthetic
