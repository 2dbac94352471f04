#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mgsched/error.hpp"
#include "mgsched/scheduler.hpp"
#include "support.hpp"

using namespace mgsched;
using namespace mgsched::sched;

namespace {

// Two buses joined by a lossless line, load L kW at bus 2, an optional
// MT1-like unit at bus 2, `hours` steps of flat profiles.
NetworkCase toy_case(std::size_t hours, double load_kw, bool with_unit) {
  auto c = support::bare_case(2);
  c.lines.push_back({1, 2, 0.0, 0.1, 1e6});
  c.buses[1].load_p = load_kw;
  c.buses[0].v_min = c.buses[1].v_min = 0.5;
  c.buses[0].v_max = c.buses[1].v_max = 1.5;
  if (with_unit) c.dispatchables.push_back({"mt1", 2, 100.0, 1300.0, 0.645, 0.75, 0.75, 1e4, 1e4});
  c.profiles.price.assign(hours, 0.2);
  c.profiles.load_factor.assign(hours, 1.0);
  c.profiles.wind_actual.assign(hours, 0.0);
  c.profiles.wind_forecast.assign(hours, 0.0);
  c.profiles.reserve.assign(hours, 0.0);
  return c;
}

std::vector<double> random_raw(const NetworkCase& c, std::uint64_t seed) {
  Rng rng(seed);
  const auto b = search_bounds(c);
  std::vector<double> raw(b.dim());
  for (std::size_t d = 0; d < raw.size(); ++d) raw[d] = rng.uniform(b.lo[d], b.hi[d]);
  return raw;
}

}  // namespace

TEST_CASE("decode thresholds and clamps") {
  const auto c = ieee33_case();
  auto x = DecisionVector::zeros(c);
  auto raw = encode(x);
  const std::size_t offset = raw.size() / 2;
  raw[x.slot(0, 0)] = 5000.0;
  raw[offset + x.slot(0, 0)] = 0.5;
  raw[x.slot(0, 1)] = 500.0;
  raw[offset + x.slot(0, 1)] = 0.49;
  raw[x.slot(1, 2)] = -400.0;
  raw[offset + x.slot(1, 2)] = 1.0;
  const auto d = decode(raw, c);
  CHECK(d.unit_on(0, 0));
  CHECK(d.unit_power(0, 0) == 1300.0);
  CHECK_FALSE(d.unit_on(0, 1));
  CHECK(d.unit_power(0, 1) == 0.0);
  CHECK(d.storage_power(1, 0) == -250.0);
  CHECK(encode(d).size() == raw.size());
  CHECK(decode(encode(d), c).power == d.power);
}

TEST_CASE("decoded vectors never carry power while off") {
  const auto c = ieee33_case();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = decode(random_raw(c, seed), c);
    for (std::size_t k = 0; k < d.power.size(); ++k) {
      if (!d.status[k]) CHECK(d.power[k] == 0.0);
    }
  }
}

TEST_CASE("state of charge recurrence") {
  StorageUnit s{"es", 2, 250, 250, 100, 2000, 500, 0.95, 0.95, 0.318, 0, 0};
  CHECK(soc_trajectory(s, std::vector<double>{-100.0})[0] == doctest::Approx(595.0).epsilon(1e-12));
  const auto flat = soc_trajectory(s, std::vector<double>(24, 0.0));
  for (double v : flat) CHECK(v == 500.0);
  const auto round = soc_trajectory(s, std::vector<double>{-100.0, 95.0 * 0.95});
  CHECK(round[1] == doctest::Approx(500.0).epsilon(1e-12));

  // Each step's increment is the charge or discharge term for its power.
  const std::vector<double> p{-250, -120, 0, 80, 250, -30};
  const auto soc = soc_trajectory(s, p);
  double prev = 500.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double expect = p[t] < 0 ? -p[t] * 0.95 : -p[t] / 0.95;
    CHECK(std::abs(soc[t] - prev - expect) < 1e-9);
    prev = soc[t];
  }
}

TEST_CASE("grid-only supply costs load times price") {
  auto c = toy_case(3, 400.0, false);
  c.profiles.price = {0.1, 0.2, 0.3};
  const auto x = DecisionVector::zeros(c);
  const auto e = evaluate(x, c);
  CHECK(e.cost.grid == doctest::Approx(400.0 * 0.6).epsilon(1e-9));
  CHECK(e.cost.total == doctest::Approx(240.0).epsilon(1e-9));
  CHECK(e.report.feasible());
  CHECK(e.cost.penalty == 0.0);
}

TEST_CASE("generation and transition costs by hand") {
  auto c = toy_case(2, 300.0, true);
  Options o;
  o.initial_on = {true};
  auto x = DecisionVector::zeros(c);
  x.unit_power(0, 0) = x.unit_power(1, 0) = 200.0;
  x.status[x.slot(0, 0)] = x.status[x.slot(1, 0)] = 1;
  const auto cost = evaluate_cost(x, c, o);
  CHECK(cost.generation == doctest::Approx(258.0).epsilon(1e-12));
  CHECK(cost.startup == 0.0);
  CHECK(cost.shutdown == 0.0);

  SUBCASE("off then on pays one startup") {
    auto y = DecisionVector::zeros(c);
    y.unit_power(1, 0) = 200.0;
    y.status[y.slot(1, 0)] = 1;
    const auto k = evaluate_cost(y, c);
    CHECK(k.startup == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(k.shutdown == 0.0);
  }
}

TEST_CASE("ramp violation magnitude") {
  const auto c = ieee33_case();
  auto x = DecisionVector::zeros(c);
  x.unit_power(1, 0) = 400.0;
  x.status[x.slot(1, 0)] = 1;
  const auto e = evaluate(x, c);
  bool found = false;
  for (const auto& v : e.report.violations) {
    if (v.kind == ConstraintKind::Ramp && v.hour == 1 && v.entity == "mt1") {
      CHECK(v.magnitude == doctest::Approx(180.0).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("penalty is weight times squared violation") {
  auto c = toy_case(1, 500.0, true);
  Options o;
  o.initial_on = {true};
  o.weights.set_all(1000.0);
  auto x = DecisionVector::zeros(c);
  x.unit_power(0, 0) = 1310.0;
  x.status[x.slot(0, 0)] = 1;
  const auto e = evaluate(x, c, o);
  REQUIRE(e.report.violations.size() == 1);
  CHECK(e.report.violations[0].kind == ConstraintKind::GenLimit);
  CHECK(e.report.violations[0].magnitude == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(e.cost.penalty == doctest::Approx(1000.0 * 100.0).epsilon(1e-12));
  CHECK(e.cost.total == doctest::Approx(e.cost.operating() + 1e5).epsilon(1e-12));

  SUBCASE("a larger violation costs more") {
    x.unit_power(0, 0) = 1320.0;
    CHECK(evaluate(x, c, o).cost.penalty > e.cost.penalty);
  }
}

TEST_CASE("state of charge exactly at a bound is feasible") {
  auto c = ieee33_case();
  c.storages[0].energy_max = 500.0 + 250.0 * 0.95;
  auto x = DecisionVector::zeros(c);
  x.storage_power(0, 0) = -250.0;
  x.status[x.slot(0, 2)] = 1;
  CHECK(evaluate(x, c).report.count(ConstraintKind::SocBounds) == 0);
  // Ten more kW of charge leaves the store 9.5 kWh over its cap from hour 1
  // to the end of the day.
  x.storage_power(1, 0) = -10.0;
  x.status[x.slot(1, 2)] = 1;
  const auto report = evaluate(x, c).report;
  CHECK(report.count(ConstraintKind::SocBounds) == 23);
  for (const auto& v : report.violations) {
    if (v.kind != ConstraintKind::SocBounds) continue;
    CHECK(v.hour >= 1);
    CHECK(v.magnitude == doctest::Approx(9.5));
  }
}

TEST_CASE("published hour-5 dispatch is within bounds and ramps") {
  auto c = ieee33_case();
  c.profiles.wind_actual[4] = 321.4;
  auto x = DecisionVector::zeros(c);
  x.storage_power(3, 0) = -250.0;
  x.status[x.slot(3, 2)] = 1;
  x.storage_power(4, 0) = -250.0;
  x.status[x.slot(4, 2)] = 1;
  x.unit_power(4, 1) = 180.0;
  x.status[x.slot(4, 1)] = 1;
  const auto e = evaluate(x, c);
  for (const auto& v : e.report.violations) {
    if (v.hour == 4 || v.hour == 3) {
      CHECK(v.kind != ConstraintKind::Ramp);
      CHECK(v.kind != ConstraintKind::GenLimit);
      CHECK(v.kind != ConstraintKind::ChargeRate);
      CHECK(v.kind != ConstraintKind::SocBounds);
    }
  }
  CHECK(e.flows[4].wind_kw == doctest::Approx(321.4));
}

TEST_CASE("objective is pure and equals the evaluated total") {
  const auto c = ieee33_case();
  const auto raw = random_raw(c, 17);
  const Options o;
  const double a = objective(raw, c, o);
  CHECK(a == objective(raw, c, o));
  CHECK(a == evaluate(prepare(raw, c, o), c, o).cost.total);
}

TEST_CASE("repair removes ramp and state-of-charge violations") {
  const auto c = ieee33_case();
  const Options o;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    CAPTURE(seed);
    const auto x = prepare(random_raw(c, seed), c, o);
    const auto e = evaluate(x, c, o);
    CHECK(e.report.count(ConstraintKind::Ramp) == 0);
    CHECK(e.report.count(ConstraintKind::SocBounds) == 0);
    CHECK(e.report.count(ConstraintKind::GenLimit) == 0);
  }
}

TEST_CASE("hourly costs add up and grid power is the slack injection") {
  const auto c = ieee33_case();
  const Options o;
  const auto s = build_schedule(prepare(random_raw(c, 5), c, o), c, o);
  REQUIRE(s.rows.size() == 24);
  double sum = 0.0;
  for (std::size_t t = 0; t < 24; ++t) {
    sum += s.rows[t].cost;
    CHECK(s.rows[t].grid_kw == s.flows[t].solution.slack_p_kw);
    CHECK(s.rows[t].hour == t + 1);
  }
  CHECK(sum + s.cost.penalty == doctest::Approx(s.cost.total).epsilon(1e-12));
  CHECK(s.cost.operating() + s.cost.penalty == doctest::Approx(s.cost.total).epsilon(1e-12));
  CHECK((s.cost.penalty == 0.0) == s.report.feasible());
}

TEST_CASE("scaling every price scales the cost of a transition-free vector") {
  auto c = ieee33_case();
  const Options o;
  auto x = DecisionVector::zeros(c);
  for (std::size_t t = 0; t < 24; ++t) {
    x.unit_power(t, 1) = 300.0;
    x.status[x.slot(t, 1)] = 1;
  }
  auto y = x;
  y.unit_power(10, 1) = 400.0;
  const double k = 2.5;
  auto scaled = c;
  for (auto& p : scaled.profiles.price) p *= k;
  for (auto& u : scaled.dispatchables) u.bid *= k;
  for (auto& s : scaled.storages) s.bid *= k;
  auto priced = [&](const NetworkCase& cc, const DecisionVector& v) {
    const auto cost = evaluate_cost(v, cc, o);
    return cost.operating() - cost.startup - cost.shutdown;
  };
  CHECK(priced(scaled, x) == doctest::Approx(k * priced(c, x)).epsilon(1e-12));
  CHECK(priced(scaled, y) == doctest::Approx(k * priced(c, y)).epsilon(1e-12));
  CHECK((priced(c, x) < priced(c, y)) == (priced(scaled, x) < priced(scaled, y)));
}

TEST_CASE("schedule CSV layout") {
  const auto c = ieee33_case();
  const Options o;
  const auto s = build_schedule(prepare(random_raw(c, 2), c, o), c, o);
  const auto csv = schedule_csv(s);
  CHECK(csv.rfind("hour,storage_kw,mt1_kw,mt2_kw,wind_kw,grid_kw,soc_kwh,cost\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
  CHECK(summary_csv(s).rfind("key,value\ntotal_cost,", 0) == 0);
}

TEST_CASE("commitment polish never makes a vector worse") {
  const auto c = ieee33_case();
  const Options o;
  const tlbo::Objective f = [&](std::span<const double> r) { return objective(r, c, o); };
  auto raw = random_raw(c, 8);
  double fitness = f(raw);
  const double before = fitness;
  const auto evals = polish_commitment(raw, fitness, c, f);
  CHECK(evals >= 48);
  CHECK(fitness <= before);
  CHECK(fitness == f(raw));
}
