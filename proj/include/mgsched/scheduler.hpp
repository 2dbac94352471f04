#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgsched/constraints.hpp"
#include "mgsched/grid_model.hpp"
#include "mgsched/power_flow.hpp"
#include "mgsched/tlbo.hpp"

namespace mgsched::sched {

enum class WindSource { Actual, Forecast };

// Quadratic penalty weights, per squared unit of violation (kW, kWh or pu).
struct PenaltyWeights {
  double gen_limit = 1e6;
  double grid_limit = 1e6;
  double feeder = 1e6;
  double reserve = 1e6;
  double voltage = 1e10;
  double ramp = 1e6;
  double soc_bounds = 1e6;
  double charge_rate = 1e6;

  double weight(ConstraintKind kind) const;
  PenaltyWeights& set_all(double w);
};

struct Options {
  WindSource wind_source = WindSource::Actual;
  bool include_wind_cost = false;
  // Pull decoded dispatches into their ramp and state-of-charge windows
  // before evaluation.
  bool repair = true;
  // After the search, flip single unit on/off genes while that lowers the
  // objective.
  bool polish_commitment = true;
  PenaltyWeights weights;
  double power_flow_failure_penalty = 1e9;
  double slack_v = 1.0;
  pf::SolverOptions solver;
  // Violations up to these sizes count as satisfied.
  double power_tolerance_kw = 1e-6;
  double voltage_tolerance_pu = 1e-9;
  // Unit status before hour 1, dispatchables then storages. Empty = all off.
  std::vector<bool> initial_on;
  double hours_per_step = 1.0;
};

// Hour-major layout: hour t holds dispatchables 0..G-1 then storages 0..S-1.
struct DecisionVector {
  std::size_t hours = 0;
  std::size_t units = 0;
  std::size_t storages = 0;
  std::vector<double> power;         // kW, hours * devices
  std::vector<std::uint8_t> status;  // 0/1, same layout

  std::size_t devices() const { return units + storages; }
  std::size_t slot(std::size_t t, std::size_t device) const { return t * devices() + device; }

  double& unit_power(std::size_t t, std::size_t i) { return power[slot(t, i)]; }
  double unit_power(std::size_t t, std::size_t i) const { return power[slot(t, i)]; }
  double& storage_power(std::size_t t, std::size_t j) { return power[slot(t, units + j)]; }
  double storage_power(std::size_t t, std::size_t j) const { return power[slot(t, units + j)]; }
  bool unit_on(std::size_t t, std::size_t i) const { return status[slot(t, i)] != 0; }
  bool storage_on(std::size_t t, std::size_t j) const { return status[slot(t, units + j)] != 0; }

  static DecisionVector zeros(const NetworkCase& c);
};

// Raw optimizer vector: the power genes (hour-major, as above) followed by
// the same number of status genes.
std::size_t raw_size(const NetworkCase& c);
tlbo::Bounds search_bounds(const NetworkCase& c);

// Status gene >= 0.5 means on. Unit power is clamped to [p_min, p_max] when
// on and zeroed when off; storage power to [-p_charge_max, p_discharge_max].
DecisionVector decode(std::span<const double> raw, const NetworkCase& c);

// Inverse of decode for a decoded vector (status genes become 0 or 1).
std::vector<double> encode(const DecisionVector& x);

// Sequential hour-by-hour projection into ramp windows (from 0 kW before
// hour 1) and state-of-charge windows. A unit that cannot reach zero within
// its ramp-down limit stays on.
void repair(DecisionVector& x, const NetworkCase& c, const Options& options = {});

// Stored energy after each step. Negative power charges.
std::vector<double> soc_trajectory(const StorageUnit& s, std::span<const double> powers,
                                   double hours_per_step = 1.0);

struct CostBreakdown {
  double generation = 0.0;
  double startup = 0.0;
  double shutdown = 0.0;
  double storage = 0.0;
  double wind = 0.0;
  double grid = 0.0;
  double penalty = 0.0;
  double total = 0.0;

  double operating() const { return generation + startup + shutdown + storage + wind + grid; }
};

struct HourFlow {
  bool converged = false;
  std::string failure;
  pf::InjectionSet injections;
  pf::PowerFlowSolution solution;
  double load_kw = 0.0;
  double wind_kw = 0.0;
};

// Everything computed for one decision vector.
struct Evaluation {
  CostBreakdown cost;
  ConstraintReport report;
  std::vector<double> hourly_cost;           // excludes penalties
  std::vector<HourFlow> flows;               // one per hour
  std::vector<std::vector<double>> soc;      // per storage
};

// Per-hour injections for a decision: loads scaled by the load factor,
// unit-power-factor generation, wind at its buses.
pf::InjectionSet hour_injections(const DecisionVector& x, std::size_t t, const NetworkCase& c,
                                 const Options& options, double* wind_kw = nullptr);

std::vector<HourFlow> solve_hours(const DecisionVector& x, const NetworkCase& c,
                                  const Options& options = {});

CostBreakdown evaluate_cost(const DecisionVector& x, const std::vector<HourFlow>& flows,
                            const NetworkCase& c, const Options& options = {},
                            std::vector<double>* hourly = nullptr);
CostBreakdown evaluate_cost(const DecisionVector& x, const NetworkCase& c,
                            const Options& options = {});

struct PenaltyResult {
  double penalty = 0.0;
  ConstraintReport report;
};

PenaltyResult evaluate_penalties(const DecisionVector& x, const std::vector<HourFlow>& flows,
                                 const NetworkCase& c, const Options& options = {});

Evaluation evaluate(const DecisionVector& x, const NetworkCase& c, const Options& options = {});

// Decode, repair (when enabled) and price a raw optimizer vector, penalties
// included.
DecisionVector prepare(std::span<const double> raw, const NetworkCase& c, const Options& options);
double objective(std::span<const double> raw, const NetworkCase& c, const Options& options = {});

struct ScheduleRow {
  std::size_t hour = 0;  // 1-based
  std::vector<double> unit_kw;
  std::vector<double> storage_kw;
  std::vector<double> soc_kwh;
  double wind_kw = 0.0;
  double grid_kw = 0.0;
  double load_kw = 0.0;
  double loss_kw = 0.0;
  double cost = 0.0;
};

struct Schedule {
  DecisionVector decision;
  std::vector<ScheduleRow> rows;
  std::vector<HourFlow> flows;
  CostBreakdown cost;
  ConstraintReport report;
  double daily_loss_kwh = 0.0;
  double max_voltage_deviation = 0.0;
  std::vector<std::string> unit_names;
  std::vector<std::string> storage_names;
};

// Throws Error{NotConverged} if any hour's power flow fails.
Schedule build_schedule(const DecisionVector& x, const NetworkCase& c, const Options& options = {});

// `hour,storage_kw,<unit>_kw...,wind_kw,grid_kw,soc_kwh,cost`
std::string schedule_csv(const Schedule& s);
// key,value pairs: totals, cost parts, loss, voltage deviation, violations.
std::string summary_csv(const Schedule& s);

struct PlanResult {
  Schedule schedule;
  tlbo::OptResult search;  // best_fitness includes the polish
  std::size_t polish_evaluations = 0;
};

// Greedy first-improvement sweeps over the unit status genes of a raw
// vector, in hour then unit order, until a sweep changes nothing. Returns
// the number of objective calls.
std::size_t polish_commitment(std::vector<double>& raw, double& fitness, const NetworkCase& c,
                              const tlbo::Objective& f);

PlanResult plan_day(const NetworkCase& c, tlbo::Config config, const Options& options = {});

}  // namespace mgsched::sched
