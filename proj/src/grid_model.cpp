#include "mgsched/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "format.hpp"
#include "json.hpp"
#include "mgsched/error.hpp"
#include "mgsched/synthetic.hpp"

namespace mgsched {

using detail::read_file;
using detail::write_file;
using nlohmann::json;

std::vector<double>& profile(Profiles& p, ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Price: return p.price;
    case ProfileKind::LoadFactor: return p.load_factor;
    case ProfileKind::WindActual: return p.wind_actual;
    case ProfileKind::WindForecast: return p.wind_forecast;
    case ProfileKind::Reserve: return p.reserve;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown profile kind");
}

const std::vector<double>& profile(const Profiles& p, ProfileKind kind) {
  return profile(const_cast<Profiles&>(p), kind);
}

std::optional<std::size_t> NetworkCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t NetworkCase::slack_index() const {
  auto idx = bus_index(grid_tie.bus);
  if (!idx) throw Error(ErrorCode::Validation, "grid tie bus does not exist");
  return *idx;
}

double NetworkCase::total_base_load() const {
  return std::accumulate(buses.begin(), buses.end(), 0.0,
                         [](double acc, const Bus& b) { return acc + b.load_p; });
}

bool operator==(const Bus& a, const Bus& b) {
  return a.id == b.id && a.v_min == b.v_min && a.v_max == b.v_max &&
         a.load_p == b.load_p && a.load_q == b.load_q;
}
bool operator==(const Line& a, const Line& b) {
  return a.from_bus == b.from_bus && a.to_bus == b.to_bus && a.resistance == b.resistance &&
         a.reactance == b.reactance && a.capacity == b.capacity;
}
bool operator==(const DispatchableUnit& a, const DispatchableUnit& b) {
  return a.name == b.name && a.bus == b.bus && a.p_min == b.p_min && a.p_max == b.p_max &&
         a.bid == b.bid && a.startup_cost == b.startup_cost &&
         a.shutdown_cost == b.shutdown_cost && a.ramp_up == b.ramp_up &&
         a.ramp_down == b.ramp_down;
}
bool operator==(const StorageUnit& a, const StorageUnit& b) {
  return a.name == b.name && a.bus == b.bus && a.p_charge_max == b.p_charge_max &&
         a.p_discharge_max == b.p_discharge_max && a.energy_min == b.energy_min &&
         a.energy_max == b.energy_max && a.energy_initial == b.energy_initial &&
         a.eta_charge == b.eta_charge && a.eta_discharge == b.eta_discharge &&
         a.bid == b.bid && a.startup_cost == b.startup_cost &&
         a.shutdown_cost == b.shutdown_cost;
}
bool operator==(const WindUnit& a, const WindUnit& b) {
  return a.name == b.name && a.bus == b.bus && a.p_max == b.p_max && a.bid == b.bid;
}
bool operator==(const GridTie& a, const GridTie& b) {
  return a.bus == b.bus && a.p_min == b.p_min && a.p_max == b.p_max;
}
bool operator==(const Profiles& a, const Profiles& b) {
  return a.price == b.price && a.load_factor == b.load_factor &&
         a.wind_actual == b.wind_actual && a.wind_forecast == b.wind_forecast &&
         a.reserve == b.reserve;
}
bool operator==(const NetworkCase& a, const NetworkCase& b) {
  return a.buses == b.buses && a.lines == b.lines && a.dispatchables == b.dispatchables &&
         a.storages == b.storages && a.wind == b.wind && a.grid_tie == b.grid_tie &&
         a.profiles == b.profiles && a.base_mva == b.base_mva && a.base_kv == b.base_kv;
}

// --- validation -----------------------------------------------------------

namespace {

class IssueSink {
 public:
  void add(std::string path, std::string message) {
    issues_.push_back({std::move(path), std::move(message)});
  }
  std::vector<ValidationIssue> take() { return std::move(issues_); }

 private:
  std::vector<ValidationIssue> issues_;
};

std::string at(const char* array, std::size_t i, const char* field) {
  return std::string(array) + "[" + std::to_string(i) + "]." + field;
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<ValidationIssue> validate_case(const NetworkCase& c) {
  IssueSink sink;
  if (!(c.base_mva > 0.0)) sink.add("base_mva", "must be positive");
  if (!(c.base_kv > 0.0)) sink.add("base_kv", "must be positive");
  if (c.buses.empty()) sink.add("buses", "no buses");

  std::map<int, std::size_t> ids;
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const Bus& b = c.buses[i];
    if (!ids.emplace(b.id, i).second) sink.add(at("buses", i, "id"), "duplicate bus id");
    if (!(b.v_min > 0.0 && b.v_min < b.v_max)) {
      sink.add(at("buses", i, "v_min"), "voltage bounds must satisfy 0 < v_min < v_max");
    }
    if (!(b.load_p >= 0.0)) sink.add(at("buses", i, "load_p"), "load must be >= 0");
    if (!(b.load_q >= 0.0)) sink.add(at("buses", i, "load_q"), "load must be >= 0");
  }
  auto known = [&](int id) { return ids.count(id) > 0; };

  std::vector<std::size_t> parent(c.buses.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t i = 0; i < c.lines.size(); ++i) {
    const Line& l = c.lines[i];
    bool ends_ok = true;
    if (!known(l.from_bus)) {
      sink.add(at("lines", i, "from_bus"), "unknown bus " + std::to_string(l.from_bus));
      ends_ok = false;
    }
    if (!known(l.to_bus)) {
      sink.add(at("lines", i, "to_bus"), "unknown bus " + std::to_string(l.to_bus));
      ends_ok = false;
    }
    if (l.from_bus == l.to_bus) {
      sink.add(at("lines", i, "to_bus"), "line must join two distinct buses");
      ends_ok = false;
    }
    if (!(l.resistance >= 0.0)) sink.add(at("lines", i, "resistance"), "must be >= 0");
    if (!std::isfinite(l.reactance)) sink.add(at("lines", i, "reactance"), "must be finite");
    if (!(l.capacity > 0.0)) sink.add(at("lines", i, "capacity"), "must be positive");
    if (ends_ok) {
      auto a = find_root(parent, ids[l.from_bus]);
      auto b = find_root(parent, ids[l.to_bus]);
      parent[a] = b;
    }
  }
  if (!c.buses.empty()) {
    const auto root = find_root(parent, 0);
    for (std::size_t i = 1; i < c.buses.size(); ++i) {
      if (find_root(parent, i) != root) {
        sink.add("lines", "graph not connected: bus " + std::to_string(c.buses[i].id) +
                              " unreachable");
        break;
      }
    }
  }

  for (std::size_t i = 0; i < c.dispatchables.size(); ++i) {
    const auto& u = c.dispatchables[i];
    if (!known(u.bus)) sink.add(at("dispatchables", i, "bus"), "unknown bus " + std::to_string(u.bus));
    if (!(u.p_min >= 0.0 && u.p_min <= u.p_max)) {
      sink.add(at("dispatchables", i, "p_min"), "power bounds must satisfy 0 <= p_min <= p_max");
    }
    if (!(u.bid >= 0.0)) sink.add(at("dispatchables", i, "bid"), "bid must be >= 0");
    if (!(u.startup_cost >= 0.0)) sink.add(at("dispatchables", i, "startup_cost"), "must be >= 0");
    if (!(u.shutdown_cost >= 0.0)) sink.add(at("dispatchables", i, "shutdown_cost"), "must be >= 0");
    if (!(u.ramp_up > 0.0)) sink.add(at("dispatchables", i, "ramp_up"), "ramp rate must be positive");
    if (!(u.ramp_down > 0.0)) sink.add(at("dispatchables", i, "ramp_down"), "ramp rate must be positive");
  }

  for (std::size_t i = 0; i < c.storages.size(); ++i) {
    const auto& s = c.storages[i];
    if (!known(s.bus)) sink.add(at("storages", i, "bus"), "unknown bus " + std::to_string(s.bus));
    if (!(s.p_charge_max >= 0.0)) sink.add(at("storages", i, "p_charge_max"), "must be >= 0");
    if (!(s.p_discharge_max >= 0.0)) sink.add(at("storages", i, "p_discharge_max"), "must be >= 0");
    if (!(s.energy_min >= 0.0 && s.energy_min <= s.energy_initial &&
          s.energy_initial <= s.energy_max)) {
      sink.add(at("storages", i, "energy_initial"),
               "energy must satisfy 0 <= energy_min <= energy_initial <= energy_max");
    }
    if (!(s.eta_charge > 0.0 && s.eta_charge <= 1.0)) {
      sink.add(at("storages", i, "eta_charge"), "efficiency out of (0,1]");
    }
    if (!(s.eta_discharge > 0.0 && s.eta_discharge <= 1.0)) {
      sink.add(at("storages", i, "eta_discharge"), "efficiency out of (0,1]");
    }
    if (!(s.bid >= 0.0)) sink.add(at("storages", i, "bid"), "bid must be >= 0");
    if (!(s.startup_cost >= 0.0)) sink.add(at("storages", i, "startup_cost"), "must be >= 0");
    if (!(s.shutdown_cost >= 0.0)) sink.add(at("storages", i, "shutdown_cost"), "must be >= 0");
  }

  for (std::size_t i = 0; i < c.wind.size(); ++i) {
    const auto& w = c.wind[i];
    if (!known(w.bus)) sink.add(at("wind", i, "bus"), "unknown bus " + std::to_string(w.bus));
    if (!(w.p_max > 0.0)) sink.add(at("wind", i, "p_max"), "must be positive");
    if (!(w.bid >= 0.0)) sink.add(at("wind", i, "bid"), "bid must be >= 0");
  }

  if (!known(c.grid_tie.bus)) {
    sink.add("grid_tie.bus", "unknown bus " + std::to_string(c.grid_tie.bus));
  }
  if (!(c.grid_tie.p_min < c.grid_tie.p_max)) sink.add("grid_tie.p_min", "must be < p_max");

  const Profiles& p = c.profiles;
  const std::size_t hours = p.price.size();
  if (hours == 0) sink.add("profiles.price", "empty profile");
  const std::pair<const char*, const std::vector<double>*> series[] = {
      {"profiles.price", &p.price},
      {"profiles.load_factor", &p.load_factor},
      {"profiles.wind_actual", &p.wind_actual},
      {"profiles.wind_forecast", &p.wind_forecast},
      {"profiles.reserve", &p.reserve},
  };
  for (const auto& [name, values] : series) {
    if (values->size() != hours) {
      sink.add(name, "length " + std::to_string(values->size()) + " differs from price length " +
                         std::to_string(hours));
    }
    if (!finite_all(*values)) {
      sink.add(name, "non-finite value");
    } else if (std::any_of(values->begin(), values->end(), [](double x) { return x < 0.0; })) {
      sink.add(name, "negative value");
    }
  }
  return sink.take();
}

// --- built-in case --------------------------------------------------------

NetworkCase ieee33_case() {
  // from, to, R (ohm), X (ohm)
  static constexpr double kLines[32][4] = {
      {1, 2, 0.0922, 0.0470},   {2, 3, 0.4930, 0.2511},   {3, 4, 0.3660, 0.1864},
      {4, 5, 0.3811, 0.1941},   {5, 6, 0.8190, 0.7070},   {6, 7, 0.1872, 0.6188},
      {7, 8, 0.7114, 0.2351},   {8, 9, 1.0300, 0.7400},   {9, 10, 1.0440, 0.7400},
      {10, 11, 0.1966, 0.0650}, {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
      {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260}, {15, 16, 0.7463, 0.5450},
      {16, 17, 1.2890, 1.7210}, {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},
      {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784}, {21, 22, 0.7089, 0.9373},
      {3, 23, 0.4512, 0.3083},  {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
      {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447}, {27, 28, 1.0590, 0.9337},
      {28, 29, 0.8042, 0.7006}, {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630},
      {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302},
  };
  // kW, kVAr for buses 1..33
  static constexpr double kLoads[33][2] = {
      {0, 0},     {100, 60},  {90, 40},   {120, 80},  {60, 30},   {60, 20},  {200, 100},
      {200, 100}, {60, 20},   {60, 20},   {45, 30},   {60, 35},   {60, 35},  {120, 80},
      {60, 10},   {60, 20},   {60, 20},   {90, 40},   {90, 40},   {90, 40},  {90, 40},
      {90, 40},   {90, 50},   {420, 200}, {420, 200}, {60, 25},   {60, 25},  {60, 20},
      {120, 70},  {200, 600}, {150, 70},  {210, 100}, {60, 40},
  };

  NetworkCase c;
  c.base_mva = 10.0;
  c.base_kv = 12.66;
  for (int i = 0; i < 33; ++i) {
    c.buses.push_back({i + 1, 0.95, 1.05, kLoads[i][0], kLoads[i][1]});
  }
  for (const auto& l : kLines) {
    c.lines.push_back({static_cast<int>(l[0]), static_cast<int>(l[1]), l[2], l[3], 5000.0});
  }
  // Transition costs are listed in cents; stored in dollars.
  c.dispatchables.push_back({"mt1", 12, 100.0, 1300.0, 0.645, 0.75, 0.75, 220.0, 220.0});
  c.dispatchables.push_back({"mt2", 25, 90.0, 1100.0, 0.675, 0.70, 0.70, 180.0, 180.0});
  c.storages.push_back({"es1", 18, 250.0, 250.0, 100.0, 2000.0, 500.0, 0.95, 0.95, 0.318, 0.0, 0.0});
  c.wind.push_back({"wt1", 30, 4000.0, 1.073});
  c.grid_tie = {1, -3000.0, 5000.0};

  c.profiles.price = synthetic::price_profile();
  c.profiles.load_factor = synthetic::load_factor_profile();
  c.profiles.wind_actual = synthetic::wind_profile();
  c.profiles.wind_forecast = c.profiles.wind_actual;
  c.profiles.reserve.assign(c.profiles.price.size(), 0.0);
  return c;
}

// --- JSON -----------------------------------------------------------------

namespace {

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorCode::Parse, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, where + "." + key + ": " + e.what());
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return required<T>(j, key, where);
}

const json& array_field(const json& j, const char* key, bool must_exist) {
  static const json empty = json::array();
  if (!j.contains(key)) {
    if (must_exist) throw Error(ErrorCode::Parse, std::string("missing array '") + key + "'");
    return empty;
  }
  if (!j.at(key).is_array()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be an array");
  return j.at(key);
}

std::string indexed(const char* name, std::size_t i) {
  return std::string(name) + "[" + std::to_string(i) + "]";
}

NetworkCase case_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "case document must be a JSON object");
  NetworkCase c;
  c.base_mva = optional_field(j, "base_mva", 10.0, "case");
  c.base_kv = optional_field(j, "base_kv", 12.66, "case");

  const auto& buses = array_field(j, "buses", true);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto w = indexed("buses", i);
    Bus b;
    b.id = required<int>(buses[i], "id", w);
    b.v_min = optional_field(buses[i], "v_min", 0.95, w);
    b.v_max = optional_field(buses[i], "v_max", 1.05, w);
    b.load_p = optional_field(buses[i], "load_p", 0.0, w);
    b.load_q = optional_field(buses[i], "load_q", 0.0, w);
    c.buses.push_back(b);
  }
  const auto& lines = array_field(j, "lines", true);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto w = indexed("lines", i);
    c.lines.push_back({required<int>(lines[i], "from_bus", w), required<int>(lines[i], "to_bus", w),
                       required<double>(lines[i], "resistance", w),
                       required<double>(lines[i], "reactance", w),
                       required<double>(lines[i], "capacity", w)});
  }
  const auto& gens = array_field(j, "dispatchables", false);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto w = indexed("dispatchables", i);
    const auto& g = gens[i];
    DispatchableUnit u;
    u.name = optional_field<std::string>(g, "name", "mt" + std::to_string(i + 1), w);
    u.bus = required<int>(g, "bus", w);
    u.p_min = required<double>(g, "p_min", w);
    u.p_max = required<double>(g, "p_max", w);
    u.bid = required<double>(g, "bid", w);
    u.startup_cost = optional_field(g, "startup_cost", 0.0, w);
    u.shutdown_cost = optional_field(g, "shutdown_cost", 0.0, w);
    u.ramp_up = required<double>(g, "ramp_up", w);
    u.ramp_down = required<double>(g, "ramp_down", w);
    c.dispatchables.push_back(u);
  }
  const auto& stores = array_field(j, "storages", false);
  for (std::size_t i = 0; i < stores.size(); ++i) {
    const auto w = indexed("storages", i);
    const auto& s = stores[i];
    StorageUnit u;
    u.name = optional_field<std::string>(s, "name", "es" + std::to_string(i + 1), w);
    u.bus = required<int>(s, "bus", w);
    u.p_charge_max = required<double>(s, "p_charge_max", w);
    u.p_discharge_max = required<double>(s, "p_discharge_max", w);
    u.energy_min = required<double>(s, "energy_min", w);
    u.energy_max = required<double>(s, "energy_max", w);
    u.energy_initial = required<double>(s, "energy_initial", w);
    u.eta_charge = required<double>(s, "eta_charge", w);
    u.eta_discharge = required<double>(s, "eta_discharge", w);
    u.bid = optional_field(s, "bid", 0.0, w);
    u.startup_cost = optional_field(s, "startup_cost", 0.0, w);
    u.shutdown_cost = optional_field(s, "shutdown_cost", 0.0, w);
    c.storages.push_back(u);
  }
  const auto& winds = array_field(j, "wind", false);
  for (std::size_t i = 0; i < winds.size(); ++i) {
    const auto w = indexed("wind", i);
    c.wind.push_back({optional_field<std::string>(winds[i], "name", "wt" + std::to_string(i + 1), w),
                      required<int>(winds[i], "bus", w), required<double>(winds[i], "p_max", w),
                      optional_field(winds[i], "bid", 0.0, w)});
  }
  if (!j.contains("grid_tie") || !j.at("grid_tie").is_object()) {
    throw Error(ErrorCode::Parse, "missing object 'grid_tie'");
  }
  const auto& g = j.at("grid_tie");
  c.grid_tie = {required<int>(g, "bus", "grid_tie"), required<double>(g, "p_min", "grid_tie"),
                required<double>(g, "p_max", "grid_tie")};

  if (!j.contains("profiles") || !j.at("profiles").is_object()) {
    throw Error(ErrorCode::Parse, "missing object 'profiles'");
  }
  const auto& p = j.at("profiles");
  using Series = std::vector<double>;
  c.profiles.price = required<Series>(p, "price", "profiles");
  c.profiles.load_factor = required<Series>(p, "load_factor", "profiles");
  c.profiles.wind_actual = required<Series>(p, "wind_actual", "profiles");
  c.profiles.wind_forecast = optional_field(p, "wind_forecast", c.profiles.wind_actual, "profiles");
  c.profiles.reserve =
      optional_field(p, "reserve", Series(c.profiles.price.size(), 0.0), "profiles");
  return c;
}

json case_to_json(const NetworkCase& c) {
  json j;
  j["base_mva"] = c.base_mva;
  j["base_kv"] = c.base_kv;
  j["buses"] = json::array();
  for (const auto& b : c.buses) {
    j["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max},
                          {"load_p", b.load_p}, {"load_q", b.load_q}});
  }
  j["lines"] = json::array();
  for (const auto& l : c.lines) {
    j["lines"].push_back({{"from_bus", l.from_bus}, {"to_bus", l.to_bus},
                          {"resistance", l.resistance}, {"reactance", l.reactance},
                          {"capacity", l.capacity}});
  }
  j["dispatchables"] = json::array();
  for (const auto& u : c.dispatchables) {
    j["dispatchables"].push_back(
        {{"name", u.name}, {"bus", u.bus}, {"p_min", u.p_min}, {"p_max", u.p_max},
         {"bid", u.bid}, {"startup_cost", u.startup_cost}, {"shutdown_cost", u.shutdown_cost},
         {"ramp_up", u.ramp_up}, {"ramp_down", u.ramp_down}});
  }
  j["storages"] = json::array();
  for (const auto& s : c.storages) {
    j["storages"].push_back(
        {{"name", s.name}, {"bus", s.bus}, {"p_charge_max", s.p_charge_max},
         {"p_discharge_max", s.p_discharge_max}, {"energy_min", s.energy_min},
         {"energy_max", s.energy_max}, {"energy_initial", s.energy_initial},
         {"eta_charge", s.eta_charge}, {"eta_discharge", s.eta_discharge}, {"bid", s.bid},
         {"startup_cost", s.startup_cost}, {"shutdown_cost", s.shutdown_cost}});
  }
  j["wind"] = json::array();
  for (const auto& w : c.wind) {
    j["wind"].push_back({{"name", w.name}, {"bus", w.bus}, {"p_max", w.p_max}, {"bid", w.bid}});
  }
  j["grid_tie"] = {{"bus", c.grid_tie.bus}, {"p_min", c.grid_tie.p_min}, {"p_max", c.grid_tie.p_max}};
  j["profiles"] = {{"price", c.profiles.price},
                   {"load_factor", c.profiles.load_factor},
                   {"wind_actual", c.profiles.wind_actual},
                   {"wind_forecast", c.profiles.wind_forecast},
                   {"reserve", c.profiles.reserve}};
  return j;
}

}  // namespace

NetworkCase parse_case(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed case document: ") + e.what());
  }
  NetworkCase c = case_from_json(j);
  auto issues = validate_case(c);
  if (!issues.empty()) {
    std::vector<std::string> details;
    for (const auto& issue : issues) details.push_back(issue.path + ": " + issue.message);
    throw Error(ErrorCode::Validation, "invalid case: " + details.front(), details);
  }
  return c;
}

NetworkCase load_case(const std::filesystem::path& path) {
  return parse_case(read_file(path));
}

std::string serialize_case(const NetworkCase& c) { return case_to_json(c).dump(2) + "\n"; }

void save_case(const NetworkCase& c, const std::filesystem::path& path) {
  write_file(path, serialize_case(c));
}

// --- profile CSV ----------------------------------------------------------

std::vector<double> parse_profile_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "profile CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "hour,value") {
    throw Error(ErrorCode::Parse, "profile CSV header must be 'hour,value', got '" + line + "'");
  }
  std::vector<double> values;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::Parse, "profile CSV row " + std::to_string(row) + ": expected 2 fields");
    }
    try {
      std::size_t used = 0;
      const int hour = std::stoi(line.substr(0, comma), &used);
      const std::string rest = line.substr(comma + 1);
      std::size_t used_v = 0;
      const double value = std::stod(rest, &used_v);
      if (used_v != rest.size()) throw std::invalid_argument("trailing characters");
      if (hour != static_cast<int>(values.size()) + 1) {
        throw Error(ErrorCode::Parse, "profile CSV row " + std::to_string(row) + ": hour " +
                                          std::to_string(hour) + " out of sequence");
      }
      values.push_back(value);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "profile CSV row " + std::to_string(row) + ": not numeric");
    }
  }
  if (values.empty()) throw Error(ErrorCode::Parse, "profile CSV has no rows");
  return values;
}

std::vector<double> load_profile_csv(const std::filesystem::path& path) {
  return parse_profile_csv(read_file(path));
}

void save_profile_csv(const std::vector<double>& values, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "hour,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i + 1) << "," << values[i] << "\n";
  write_file(path, out.str());
}

}  // namespace mgsched
