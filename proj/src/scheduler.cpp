#include "mgsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "format.hpp"
#include "mgsched/error.hpp"

namespace mgsched::sched {

using detail::fmt;

double PenaltyWeights::weight(ConstraintKind kind) const {
  switch (kind) {
    case ConstraintKind::GenLimit: return gen_limit;
    case ConstraintKind::GridLimit: return grid_limit;
    case ConstraintKind::Feeder: return feeder;
    case ConstraintKind::Reserve: return reserve;
    case ConstraintKind::Voltage: return voltage;
    case ConstraintKind::Ramp: return ramp;
    case ConstraintKind::SocBounds: return soc_bounds;
    case ConstraintKind::ChargeRate: return charge_rate;
  }
  return 0.0;
}

PenaltyWeights& PenaltyWeights::set_all(double w) {
  gen_limit = grid_limit = feeder = reserve = voltage = ramp = soc_bounds = charge_rate = w;
  return *this;
}

DecisionVector DecisionVector::zeros(const NetworkCase& c) {
  DecisionVector x;
  x.hours = c.hours();
  x.units = c.dispatchables.size();
  x.storages = c.storages.size();
  x.power.assign(x.hours * x.devices(), 0.0);
  x.status.assign(x.hours * x.devices(), 0);
  return x;
}

std::size_t raw_size(const NetworkCase& c) {
  return 2 * c.hours() * (c.dispatchables.size() + c.storages.size());
}

tlbo::Bounds search_bounds(const NetworkCase& c) {
  const std::size_t devices = c.dispatchables.size() + c.storages.size();
  const std::size_t genes = c.hours() * devices;
  tlbo::Bounds b{std::vector<double>(2 * genes, 0.0), std::vector<double>(2 * genes, 1.0)};
  for (std::size_t t = 0; t < c.hours(); ++t) {
    for (std::size_t d = 0; d < devices; ++d) {
      double lo = 0.0;
      double hi = 0.0;
      if (d < c.dispatchables.size()) {
        lo = c.dispatchables[d].p_min;
        hi = c.dispatchables[d].p_max;
      } else {
        const auto& s = c.storages[d - c.dispatchables.size()];
        lo = -s.p_charge_max;
        hi = s.p_discharge_max;
      }
      if (!(hi > lo)) hi = lo + 1.0;
      b.lo[t * devices + d] = lo;
      b.hi[t * devices + d] = hi;
    }
  }
  return b;
}

DecisionVector decode(std::span<const double> raw, const NetworkCase& c) {
  if (raw.size() != raw_size(c)) {
    throw Error(ErrorCode::InvalidArgument, "decision vector length " + std::to_string(raw.size()) +
                                                " does not match expected " +
                                                std::to_string(raw_size(c)));
  }
  DecisionVector x = DecisionVector::zeros(c);
  const std::size_t genes = x.power.size();
  for (std::size_t t = 0; t < x.hours; ++t) {
    for (std::size_t d = 0; d < x.devices(); ++d) {
      const std::size_t k = x.slot(t, d);
      const bool on = raw[genes + k] >= 0.5;
      x.status[k] = on ? 1 : 0;
      if (!on) continue;
      if (d < x.units) {
        const auto& u = c.dispatchables[d];
        x.power[k] = std::clamp(raw[k], u.p_min, u.p_max);
      } else {
        const auto& s = c.storages[d - x.units];
        x.power[k] = std::clamp(raw[k], -s.p_charge_max, s.p_discharge_max);
      }
    }
  }
  return x;
}

std::vector<double> encode(const DecisionVector& x) {
  std::vector<double> raw(2 * x.power.size());
  for (std::size_t k = 0; k < x.power.size(); ++k) {
    raw[k] = x.power[k];
    raw[x.power.size() + k] = x.status[k] ? 1.0 : 0.0;
  }
  return raw;
}

namespace {

bool initially_on(const Options& options, std::size_t device) {
  return device < options.initial_on.size() && options.initial_on[device];
}

double initial_power(const NetworkCase& c, const Options& options, std::size_t unit) {
  return initially_on(options, unit) ? c.dispatchables[unit].p_min : 0.0;
}

}  // namespace

void repair(DecisionVector& x, const NetworkCase& c, const Options& options) {
  const double dt = options.hours_per_step;
  for (std::size_t i = 0; i < x.units; ++i) {
    const auto& u = c.dispatchables[i];
    const double up = u.ramp_up * dt;
    const double down = u.ramp_down * dt;
    // Raise earlier hours towards a high set-point first, so the forward
    // clamp below cuts less of it.
    for (std::size_t t = x.hours; t-- > 1;) {
      const std::size_t k = x.slot(t, i);
      const std::size_t before = x.slot(t - 1, i);
      const double need = x.status[k] ? x.power[k] - up : 0.0;
      const double have = x.status[before] ? x.power[before] : 0.0;
      if (need > have) {
        x.status[before] = 1;
        x.power[before] = std::clamp(need, u.p_min, u.p_max);
      }
    }
    double prev = initial_power(c, options, i);
    for (std::size_t t = 0; t < x.hours; ++t) {
      const std::size_t k = x.slot(t, i);
      if (!x.status[k]) {
        if (prev - down > 0.0) {
          x.status[k] = 1;
          x.power[k] = std::clamp(prev - down, u.p_min, u.p_max);
        }
      } else {
        const double lo = std::max(u.p_min, prev - down);
        const double hi = std::min(u.p_max, prev + up);
        if (lo <= hi) x.power[k] = std::clamp(x.power[k], lo, hi);
      }
      prev = x.power[k];
    }
  }
  for (std::size_t j = 0; j < x.storages; ++j) {
    const auto& s = c.storages[j];
    double energy = s.energy_initial;
    for (std::size_t t = 0; t < x.hours; ++t) {
      double& p = x.storage_power(t, j);
      if (p < 0.0) {
        const double room = std::max(0.0, s.energy_max - energy) / (s.eta_charge * dt);
        p = std::max(p, -room);
        energy += s.eta_charge * -p * dt;
      } else if (p > 0.0) {
        const double avail = std::max(0.0, energy - s.energy_min) * s.eta_discharge / dt;
        p = std::min(p, avail);
        energy -= p * dt / s.eta_discharge;
      }
    }
  }
}

std::vector<double> soc_trajectory(const StorageUnit& s, std::span<const double> powers,
                                   double hours_per_step) {
  std::vector<double> out(powers.size());
  double energy = s.energy_initial;
  for (std::size_t t = 0; t < powers.size(); ++t) {
    const double p = powers[t];
    if (p < 0.0) {
      energy += s.eta_charge * -p * hours_per_step;
    } else {
      energy -= p * hours_per_step / s.eta_discharge;
    }
    out[t] = energy;
  }
  return out;
}

namespace {

std::vector<double> storage_series(const DecisionVector& x, std::size_t j) {
  std::vector<double> p(x.hours);
  for (std::size_t t = 0; t < x.hours; ++t) p[t] = x.storage_power(t, j);
  return p;
}

const std::vector<double>& wind_series(const NetworkCase& c, const Options& options) {
  return options.wind_source == WindSource::Actual ? c.profiles.wind_actual
                                                   : c.profiles.wind_forecast;
}

void check_shape(const DecisionVector& x, const NetworkCase& c) {
  if (x.hours != c.hours() || x.units != c.dispatchables.size() ||
      x.storages != c.storages.size() || x.power.size() != x.hours * x.devices() ||
      x.status.size() != x.power.size()) {
    throw Error(ErrorCode::InvalidArgument, "decision vector shape does not match case");
  }
}

std::vector<HourFlow> solve_hours_with(const DecisionVector& x, const NetworkCase& c,
                                       const Options& options, const pf::AdmittanceMatrix& y) {
  std::vector<HourFlow> flows(x.hours);
  for (std::size_t t = 0; t < x.hours; ++t) {
    HourFlow& h = flows[t];
    h.injections = hour_injections(x, t, c, options, &h.wind_kw);
    h.load_kw = c.total_base_load() * c.profiles.load_factor[t];
    try {
      h.solution = pf::solve(c, y, h.injections, options.slack_v, options.solver);
      h.converged = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotConverged && e.code() != ErrorCode::Singular) throw;
      h.converged = false;
      h.failure = e.what();
    }
  }
  return flows;
}

void add(PenaltyResult& out, const Options& options, ConstraintKind kind, int hour,
         std::string entity, double excess) {
  const double tol =
      kind == ConstraintKind::Voltage ? options.voltage_tolerance_pu : options.power_tolerance_kw;
  if (!(excess > tol)) return;
  out.report.violations.push_back({kind, hour, std::move(entity), excess});
  out.penalty += options.weights.weight(kind) * excess * excess;
}

Evaluation evaluate_with(const DecisionVector& x, const NetworkCase& c, const Options& options,
                         const pf::AdmittanceMatrix& y) {
  Evaluation ev;
  ev.flows = solve_hours_with(x, c, options, y);
  ev.cost = evaluate_cost(x, ev.flows, c, options, &ev.hourly_cost);
  const auto pen = evaluate_penalties(x, ev.flows, c, options);
  ev.cost.penalty = pen.penalty;
  ev.cost.total = ev.cost.operating() + pen.penalty;
  ev.report = pen.report;
  for (std::size_t j = 0; j < x.storages; ++j) {
    ev.soc.push_back(soc_trajectory(c.storages[j], storage_series(x, j), options.hours_per_step));
  }
  return ev;
}

}  // namespace

pf::InjectionSet hour_injections(const DecisionVector& x, std::size_t t, const NetworkCase& c,
                                 const Options& options, double* wind_kw) {
  auto inj = pf::InjectionSet::zeros(c.buses.size());
  const double lf = c.profiles.load_factor[t];
  for (std::size_t b = 0; b < c.buses.size(); ++b) {
    inj.p_kw[b] = -c.buses[b].load_p * lf;
    inj.q_kvar[b] = -c.buses[b].load_q * lf;
  }
  for (std::size_t i = 0; i < x.units; ++i) {
    inj.p_kw[*c.bus_index(c.dispatchables[i].bus)] += x.unit_power(t, i);
  }
  for (std::size_t j = 0; j < x.storages; ++j) {
    inj.p_kw[*c.bus_index(c.storages[j].bus)] += x.storage_power(t, j);
  }
  double capacity = 0.0;
  for (const auto& w : c.wind) capacity += w.p_max;
  const auto& series = wind_series(c, options);
  const double wind = capacity > 0.0 ? std::clamp(series[t], 0.0, capacity) : 0.0;
  for (const auto& w : c.wind) inj.p_kw[*c.bus_index(w.bus)] += wind * w.p_max / capacity;
  if (wind_kw) *wind_kw = wind;
  return inj;
}

std::vector<HourFlow> solve_hours(const DecisionVector& x, const NetworkCase& c,
                                  const Options& options) {
  check_shape(x, c);
  return solve_hours_with(x, c, options, pf::build_admittance(c));
}

CostBreakdown evaluate_cost(const DecisionVector& x, const std::vector<HourFlow>& flows,
                            const NetworkCase& c, const Options& options,
                            std::vector<double>* hourly) {
  check_shape(x, c);
  CostBreakdown cost;
  const double dt = options.hours_per_step;
  if (hourly) hourly->assign(x.hours, 0.0);
  for (std::size_t t = 0; t < x.hours; ++t) {
    double hour_cost = 0.0;
    for (std::size_t d = 0; d < x.devices(); ++d) {
      const bool on = x.status[x.slot(t, d)] != 0;
      const bool was_on = t == 0 ? initially_on(options, d) : x.status[x.slot(t - 1, d)] != 0;
      const double p = x.power[x.slot(t, d)];
      double energy = 0.0, start = 0.0, stop = 0.0;
      if (d < x.units) {
        const auto& u = c.dispatchables[d];
        energy = on ? p * u.bid * dt : 0.0;
        start = (on && !was_on) ? u.startup_cost : 0.0;
        stop = (!on && was_on) ? u.shutdown_cost : 0.0;
        cost.generation += energy;
      } else {
        const auto& s = c.storages[d - x.units];
        energy = on ? std::abs(p) * s.bid * dt : 0.0;
        start = (on && !was_on) ? s.startup_cost : 0.0;
        stop = (!on && was_on) ? s.shutdown_cost : 0.0;
        cost.storage += energy;
      }
      cost.startup += start;
      cost.shutdown += stop;
      hour_cost += energy + start + stop;
    }
    if (options.include_wind_cost && !c.wind.empty()) {
      double capacity = 0.0;
      for (const auto& w : c.wind) capacity += w.p_max;
      for (const auto& w : c.wind) {
        const double e = flows[t].wind_kw * w.p_max / capacity * w.bid * dt;
        cost.wind += e;
        hour_cost += e;
      }
    }
    if (flows[t].converged) {
      const double g = flows[t].solution.slack_p_kw * c.profiles.price[t] * dt;
      cost.grid += g;
      hour_cost += g;
    }
    if (hourly) (*hourly)[t] = hour_cost;
  }
  cost.total = cost.operating();
  return cost;
}

CostBreakdown evaluate_cost(const DecisionVector& x, const NetworkCase& c, const Options& options) {
  return evaluate_cost(x, solve_hours(x, c, options), c, options);
}

PenaltyResult evaluate_penalties(const DecisionVector& x, const std::vector<HourFlow>& flows,
                                 const NetworkCase& c, const Options& options) {
  check_shape(x, c);
  PenaltyResult out;
  const double dt = options.hours_per_step;

  for (std::size_t i = 0; i < x.units; ++i) {
    const auto& u = c.dispatchables[i];
    double prev = initial_power(c, options, i);
    for (std::size_t t = 0; t < x.hours; ++t) {
      const int h = static_cast<int>(t);
      const double p = x.unit_power(t, i);
      if (x.unit_on(t, i)) {
        add(out, options, ConstraintKind::GenLimit, h, u.name, std::max(u.p_min - p, p - u.p_max));
      } else {
        add(out, options, ConstraintKind::GenLimit, h, u.name, std::abs(p));
      }
      const double step = p - prev;
      add(out, options, ConstraintKind::Ramp, h, u.name,
          step >= 0.0 ? step - u.ramp_up * dt : -step - u.ramp_down * dt);
      prev = p;
    }
  }

  for (std::size_t j = 0; j < x.storages; ++j) {
    const auto& s = c.storages[j];
    for (std::size_t t = 0; t < x.hours; ++t) {
      const double p = x.storage_power(t, j);
      const double excess = x.storage_on(t, j)
                                ? std::max(-s.p_charge_max - p, p - s.p_discharge_max)
                                : std::abs(p);
      add(out, options, ConstraintKind::ChargeRate, static_cast<int>(t), s.name, excess);
    }
    const auto soc = soc_trajectory(s, storage_series(x, j), dt);
    for (std::size_t t = 0; t < soc.size(); ++t) {
      add(out, options, ConstraintKind::SocBounds, static_cast<int>(t), s.name,
          std::max(s.energy_min - soc[t], soc[t] - s.energy_max));
    }
  }

  const pf::LimitTolerance tol{options.voltage_tolerance_pu, options.power_tolerance_kw};
  for (std::size_t t = 0; t < x.hours && t < flows.size(); ++t) {
    const int h = static_cast<int>(t);
    if (!flows[t].converged) {
      out.report.unsolved_hours.push_back(h);
      out.penalty += options.power_flow_failure_penalty;
      continue;
    }
    const auto& sol = flows[t].solution;
    add(out, options, ConstraintKind::GridLimit, h, "grid",
        std::max(c.grid_tie.p_min - sol.slack_p_kw, sol.slack_p_kw - c.grid_tie.p_max));

    auto limits = pf::check_limits(sol, c, h, tol);
    out.report.max_voltage_deviation =
        std::max(out.report.max_voltage_deviation, limits.max_voltage_deviation);
    for (const auto& v : limits.violations) add(out, options, v.kind, v.hour, v.entity, v.magnitude);

    double committed = c.grid_tie.p_max;
    for (std::size_t i = 0; i < x.units; ++i) {
      if (x.unit_on(t, i)) committed += c.dispatchables[i].p_max;
    }
    const double reserve = t < c.profiles.reserve.size() ? c.profiles.reserve[t] : 0.0;
    add(out, options, ConstraintKind::Reserve, h, "system",
        flows[t].load_kw + sol.loss_kw + reserve - committed);
  }
  return out;
}

Evaluation evaluate(const DecisionVector& x, const NetworkCase& c, const Options& options) {
  check_shape(x, c);
  return evaluate_with(x, c, options, pf::build_admittance(c));
}

DecisionVector prepare(std::span<const double> raw, const NetworkCase& c, const Options& options) {
  DecisionVector x = decode(raw, c);
  if (options.repair) repair(x, c, options);
  return x;
}

double objective(std::span<const double> raw, const NetworkCase& c, const Options& options) {
  return evaluate(prepare(raw, c, options), c, options).cost.total;
}

Schedule build_schedule(const DecisionVector& x, const NetworkCase& c, const Options& options) {
  Evaluation ev = evaluate(x, c, options);
  for (std::size_t t = 0; t < ev.flows.size(); ++t) {
    if (!ev.flows[t].converged) {
      throw Error(ErrorCode::NotConverged,
                  "hour " + std::to_string(t + 1) + ": " + ev.flows[t].failure);
    }
  }
  Schedule s;
  s.decision = x;
  s.cost = ev.cost;
  s.report = ev.report;
  for (const auto& u : c.dispatchables) s.unit_names.push_back(u.name);
  for (const auto& st : c.storages) s.storage_names.push_back(st.name);
  for (std::size_t t = 0; t < x.hours; ++t) {
    ScheduleRow row;
    row.hour = t + 1;
    for (std::size_t i = 0; i < x.units; ++i) row.unit_kw.push_back(x.unit_power(t, i));
    for (std::size_t j = 0; j < x.storages; ++j) {
      row.storage_kw.push_back(x.storage_power(t, j));
      row.soc_kwh.push_back(ev.soc[j][t]);
    }
    const auto& flow = ev.flows[t];
    row.wind_kw = flow.wind_kw;
    row.grid_kw = flow.solution.slack_p_kw;
    row.load_kw = flow.load_kw;
    row.loss_kw = flow.solution.loss_kw;
    row.cost = ev.hourly_cost[t];
    s.daily_loss_kwh += flow.solution.loss_kw * options.hours_per_step;
    s.rows.push_back(std::move(row));
  }
  s.max_voltage_deviation = ev.report.max_voltage_deviation;
  s.flows = std::move(ev.flows);
  return s;
}

std::string schedule_csv(const Schedule& s) {
  std::ostringstream out;
  const bool single_store = s.storage_names.size() == 1;
  out << "hour";
  for (const auto& name : s.storage_names) out << "," << (single_store ? "storage" : name) << "_kw";
  for (const auto& name : s.unit_names) out << "," << name << "_kw";
  out << ",wind_kw,grid_kw";
  for (const auto& name : s.storage_names) {
    out << "," << (single_store ? std::string("soc") : name + "_soc") << "_kwh";
  }
  out << ",cost\n";
  for (const auto& r : s.rows) {
    out << r.hour;
    for (double v : r.storage_kw) out << "," << fmt(v);
    for (double v : r.unit_kw) out << "," << fmt(v);
    out << "," << fmt(r.wind_kw) << "," << fmt(r.grid_kw);
    for (double v : r.soc_kwh) out << "," << fmt(v);
    out << "," << fmt(r.cost) << "\n";
  }
  return out.str();
}

std::string summary_csv(const Schedule& s) {
  std::ostringstream out;
  out << "key,value\n";
  out << "total_cost," << fmt(s.cost.total) << "\n";
  out << "operating_cost," << fmt(s.cost.operating()) << "\n";
  out << "generation_cost," << fmt(s.cost.generation) << "\n";
  out << "startup_cost," << fmt(s.cost.startup) << "\n";
  out << "shutdown_cost," << fmt(s.cost.shutdown) << "\n";
  out << "storage_cost," << fmt(s.cost.storage) << "\n";
  out << "wind_cost," << fmt(s.cost.wind) << "\n";
  out << "grid_cost," << fmt(s.cost.grid) << "\n";
  out << "penalty," << fmt(s.cost.penalty) << "\n";
  out << "daily_loss_kwh," << fmt(s.daily_loss_kwh) << "\n";
  out << "max_voltage_deviation_pu," << fmt(s.max_voltage_deviation) << "\n";
  out << "violations," << s.report.violations.size() + s.report.unsolved_hours.size() << "\n";
  out << "feasible," << (s.report.feasible() ? 1 : 0) << "\n";
  return out.str();
}

std::size_t polish_commitment(std::vector<double>& raw, double& fitness, const NetworkCase& c,
                              const tlbo::Objective& f) {
  const std::size_t units = c.dispatchables.size();
  const std::size_t devices = units + c.storages.size();
  const std::size_t offset = raw.size() / 2;
  std::size_t evaluations = 0;
  bool improved = true;
  for (int sweep = 0; improved && sweep < 20; ++sweep) {
    improved = false;
    for (std::size_t t = 0; t < c.hours(); ++t) {
      for (std::size_t i = 0; i < units; ++i) {
        double& gene = raw[offset + t * devices + i];
        const double old = gene;
        gene = old >= 0.5 ? 0.0 : 1.0;
        const double value = f(raw);
        ++evaluations;
        if (value < fitness) {
          fitness = value;
          improved = true;
        } else {
          gene = old;
        }
      }
    }
  }
  return evaluations;
}

PlanResult plan_day(const NetworkCase& c, tlbo::Config config, const Options& options) {
  config.bounds = search_bounds(c);
  const auto y = pf::build_admittance(c);
  const tlbo::Objective f = [&](std::span<const double> raw) {
    return evaluate_with(prepare(raw, c, options), c, options, y).cost.total;
  };
  PlanResult result;
  result.search = tlbo::optimize(f, config);
  auto best = result.search.best_position;
  if (options.polish_commitment) {
    result.polish_evaluations = polish_commitment(best, result.search.best_fitness, c, f);
  }
  result.schedule = build_schedule(prepare(best, c, options), c, options);
  return result;
}

}  // namespace mgsched::sched
