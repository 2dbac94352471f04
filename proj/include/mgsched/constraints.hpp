#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mgsched {

enum class ConstraintKind {
  GenLimit,
  GridLimit,
  Feeder,
  Reserve,
  Voltage,
  Ramp,
  SocBounds,
  ChargeRate,
};

std::string_view to_string(ConstraintKind kind);

struct Violation {
  ConstraintKind kind;
  int hour;            // 0-based; -1 when not tied to an hour
  std::string entity;  // e.g. "bus 18", "line 17-18", "mt1"
  double magnitude;    // kW, kWh or pu depending on kind
};

struct ConstraintReport {
  std::vector<Violation> violations;
  // Hours (0-based) whose power flow did not solve.
  std::vector<int> unsolved_hours;
  // Largest |V - 1| seen over the checked buses (and hours).
  double max_voltage_deviation = 0.0;

  bool feasible() const { return violations.empty() && unsolved_hours.empty(); }
  std::size_t count(ConstraintKind kind) const;
  void append(const ConstraintReport& other);
};

std::string describe(const Violation& v);

}  // namespace mgsched
