#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mgsched {

// Powers in kW, energies in kWh, impedances in ohm, prices in $/kWh and
// transition costs in $. Bus ids are the external (1-based) numbering.

struct Bus {
  int id = 0;
  double v_min = 0.95;
  double v_max = 1.05;
  double load_p = 0.0;
  double load_q = 0.0;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double resistance = 0.0;
  double reactance = 0.0;
  double capacity = 0.0;
};

struct DispatchableUnit {
  std::string name;
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double bid = 0.0;
  double startup_cost = 0.0;
  double shutdown_cost = 0.0;
  double ramp_up = 0.0;
  double ramp_down = 0.0;
};

// Positive power discharges into the network, negative power charges.
struct StorageUnit {
  std::string name;
  int bus = 0;
  double p_charge_max = 0.0;
  double p_discharge_max = 0.0;
  double energy_min = 0.0;
  double energy_max = 0.0;
  double energy_initial = 0.0;
  double eta_charge = 1.0;
  double eta_discharge = 1.0;
  double bid = 0.0;
  double startup_cost = 0.0;
  double shutdown_cost = 0.0;
};

// Non-dispatchable: whatever the wind series says is injected, capped at p_max.
struct WindUnit {
  std::string name;
  int bus = 0;
  double p_max = 0.0;
  double bid = 0.0;
};

// The point of common coupling. Import is positive. Priced by Profiles::price.
struct GridTie {
  int bus = 1;
  double p_min = 0.0;
  double p_max = 0.0;
};

struct Profiles {
  std::vector<double> price;
  std::vector<double> load_factor;
  std::vector<double> wind_actual;
  std::vector<double> wind_forecast;
  std::vector<double> reserve;

  std::size_t hours() const { return price.size(); }
};

enum class ProfileKind { Price, LoadFactor, WindActual, WindForecast, Reserve };

std::vector<double>& profile(Profiles& p, ProfileKind kind);
const std::vector<double>& profile(const Profiles& p, ProfileKind kind);

struct NetworkCase {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<DispatchableUnit> dispatchables;
  std::vector<StorageUnit> storages;
  std::vector<WindUnit> wind;
  GridTie grid_tie;
  Profiles profiles;
  double base_mva = 10.0;
  double base_kv = 12.66;

  // Position of a bus id in `buses`, if present.
  std::optional<std::size_t> bus_index(int id) const;
  std::size_t slack_index() const;
  std::size_t hours() const { return profiles.hours(); }
  double total_base_load() const;
};

bool operator==(const Bus&, const Bus&);
bool operator==(const Line&, const Line&);
bool operator==(const DispatchableUnit&, const DispatchableUnit&);
bool operator==(const StorageUnit&, const StorageUnit&);
bool operator==(const WindUnit&, const WindUnit&);
bool operator==(const GridTie&, const GridTie&);
bool operator==(const Profiles&, const Profiles&);
bool operator==(const NetworkCase&, const NetworkCase&);

struct ValidationIssue {
  std::string path;  // e.g. "lines[3].to_bus"
  std::string message;
};

// Checks every invariant of the data model and returns all violations found.
std::vector<ValidationIssue> validate_case(const NetworkCase& c);

// Standard 33-bus radial feeder with the unit set of the reference microgrid
// and the synthetic day profiles from `synthetic.hpp`.
NetworkCase ieee33_case();

// --- serialization -------------------------------------------------------

// Parses and validates. Throws Error{Parse} or Error{Validation}.
NetworkCase load_case(const std::filesystem::path& path);
NetworkCase parse_case(const std::string& text);
void save_case(const NetworkCase& c, const std::filesystem::path& path);
std::string serialize_case(const NetworkCase& c);

// `hour,value` CSV with hours 1..N in order.
std::vector<double> load_profile_csv(const std::filesystem::path& path);
std::vector<double> parse_profile_csv(const std::string& text);
void save_profile_csv(const std::vector<double>& values,
                      const std::filesystem::path& path);

}  // namespace mgsched
