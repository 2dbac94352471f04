#include "mgsched/constraints.hpp"

#include <algorithm>
#include <cstdio>

namespace mgsched {

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::GenLimit: return "gen-limit";
    case ConstraintKind::GridLimit: return "grid-limit";
    case ConstraintKind::Feeder: return "feeder";
    case ConstraintKind::Reserve: return "reserve";
    case ConstraintKind::Voltage: return "voltage";
    case ConstraintKind::Ramp: return "ramp";
    case ConstraintKind::SocBounds: return "soc-bounds";
    case ConstraintKind::ChargeRate: return "charge-rate";
  }
  return "unknown";
}

std::size_t ConstraintReport::count(ConstraintKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [kind](const Violation& v) { return v.kind == kind; }));
}

void ConstraintReport::append(const ConstraintReport& other) {
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  unsolved_hours.insert(unsolved_hours.end(), other.unsolved_hours.begin(),
                        other.unsolved_hours.end());
  max_voltage_deviation = std::max(max_voltage_deviation, other.max_voltage_deviation);
}

std::string describe(const Violation& v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v.magnitude);
  std::string out(to_string(v.kind));
  if (v.hour >= 0) out += " hour " + std::to_string(v.hour + 1);
  out += " " + v.entity + " by " + buf;
  return out;
}

}  // namespace mgsched
