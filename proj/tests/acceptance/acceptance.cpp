#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mgsched/forecast.hpp"
#include "mgsched/grid_model.hpp"
#include "mgsched/power_flow.hpp"
#include "mgsched/scheduler.hpp"
#include "mgsched/synthetic.hpp"
#include "mgsched/tlbo.hpp"
#include "support.hpp"

using namespace mgsched;
namespace fs = std::filesystem;

namespace {

const fs::path work = fs::temp_directory_path() / "mgsched_acceptance";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MGSCHED_CLI) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

// Power flow: Newton-Raphson against Gauss-Seidel on the 33-bus case and
// twenty random feeders.
Outcome power_flow_oracle() {
  std::vector<NetworkCase> cases{ieee33_case()};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) cases.push_back(support::random_radial(seed));
  double worst_gap = 0.0, worst_mismatch = 0.0;
  int worst_iters = 0;
  for (const auto& c : cases) {
    const auto inj = support::base_load(c);
    const auto nr = pf::solve(c, inj);
    const auto gs = support::gauss_seidel(c, inj);
    if (!gs.converged) return {false, "Gauss-Seidel did not converge on a " + std::to_string(c.buses.size()) + "-bus case"};
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
      worst_gap = std::max(worst_gap, std::abs(nr.v[i] - gs.magnitude(i)));
      worst_gap = std::max(worst_gap, std::abs(nr.angle[i] - gs.angle(i)));
    }
    worst_mismatch = std::max(worst_mismatch, nr.max_mismatch);
    worst_iters = std::max(worst_iters, nr.iterations);
  }
  return {worst_gap <= 1e-6 && worst_iters <= 10 && worst_mismatch <= 1e-8,
          "21 cases, max |NR - GS| " + num(worst_gap) + ", max iterations " + std::to_string(worst_iters) +
              ", max mismatch " + num(worst_mismatch)};
}

// TLBO on the 10-dimensional sphere.
Outcome tlbo_sphere() {
  double worst = 0.0;
  bool monotone = true, in_bounds = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    tlbo::Config cfg;
    cfg.population_size = 50;
    cfg.max_iterations = 500;
    cfg.seed = seed;
    cfg.bounds = tlbo::Bounds::uniform(10, -100.0, 100.0);
    const auto r = tlbo::optimize(tlbo::sphere, cfg, [&](std::size_t, const tlbo::Population& pop) {
      for (const auto& ind : pop) {
        for (double v : ind.position) in_bounds = in_bounds && v >= -100.0 && v <= 100.0;
      }
    });
    worst = std::max(worst, r.best_fitness);
    for (std::size_t k = 1; k < r.trace.size(); ++k) monotone = monotone && r.trace[k] <= r.trace[k - 1];
  }
  return {worst < 1e-6 && monotone && in_bounds,
          "worst best fitness " + num(worst) + (monotone ? ", traces monotone" : ", trace increased") +
              (in_bounds ? ", positions in bounds" : ", position out of bounds")};
}

// Worked examples computed by hand.
Outcome hand_oracles() {
  std::vector<std::string> failed;
  auto expect = [&](const std::string& name, double got, double want) {
    if (!(std::abs(got - want) <= 1e-9)) failed.push_back(name + " " + num(got) + " vs " + num(want));
  };
  StorageUnit es{"es", 2, 250, 250, 100, 2000, 500, 0.95, 0.95, 0.318, 0, 0};
  expect("state of charge", sched::soc_trajectory(es, std::vector<double>{-100.0})[0], 500.0 + 100.0 * 0.95);

  const std::vector<double> x{1, 1}, teacher{3, 3}, mean{2, 2}, r{0.5, 0.5};
  const auto moved = tlbo::teacher_candidate(x, teacher, mean, 1, r);
  expect("teacher[0]", moved[0], 1.5);
  expect("teacher[1]", moved[1], 1.5);
  expect("learner", tlbo::learner_candidate(std::vector<double>{0}, std::vector<double>{2}, 0.0, 4.0,
                                            std::vector<double>{0.5})[0],
         -1.0);

  // Zero weights: every gate is 0.5 and the candidate is 0, so c = 0.5 c_prev.
  const auto p = forecast::zero_lstm(2, 1);
  const auto s = forecast::lstm_step(p, Eigen::VectorXd::Constant(2, 0.7), Eigen::VectorXd::Zero(1),
                                     Eigen::VectorXd::Ones(1));
  expect("cell state", s.c(0), 0.5);
  expect("hidden state", s.h(0), 0.5 * std::tanh(0.5));
  const bool rounded = std::abs(s.h(0) - 0.23106) < 5e-6;
  if (!rounded) failed.push_back("hidden state does not round to 0.23106");

  std::string detail = failed.empty() ? "state of charge 595, teacher [1.5,1.5], learner -1, LSTM c 0.5 h " + num(s.h(0))
                                      : "";
  for (const auto& f : failed) detail += f + "; ";
  return {failed.empty(), detail};
}

// Backpropagation through time against central differences.
Outcome gradient_check() {
  forecast::NetworkConfig config;
  config.kind = forecast::ModelKind::Blstm;
  config.window = 5;
  config.horizon = 2;
  config.hidden = 3;
  config.layers = 2;
  config.dropout = 0.0;
  auto net = forecast::make_network(config, 3);
  Rng data(9);
  Eigen::MatrixXd x(5, 4), y(2, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = data.uniform();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = data.uniform();
  std::vector<double> grad, scratch;
  forecast::loss_and_gradient(net, x, y, grad);
  const double h = 1e-4;
  double worst = 0.0;
  std::size_t bad = 0;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double keep = net.params()[k];
    net.params()[k] = keep + h;
    const double plus = forecast::loss_and_gradient(net, x, y, scratch);
    net.params()[k] = keep - h;
    const double minus = forecast::loss_and_gradient(net, x, y, scratch);
    net.params()[k] = keep;
    const double fd = (plus - minus) / (2 * h);
    const double rel = std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-8});
    worst = std::max(worst, rel);
    bad += rel >= 1e-4;
  }
  return {bad == 0, std::to_string(grad.size()) + " parameters, " + std::to_string(bad) +
                        " above 1e-4, worst relative error " + num(worst)};
}

struct ForecastRun {
  int code = -1;
  double blstm_mape = NAN;
  double ann_mape = NAN;
};

ForecastRun forecast_run(const fs::path& dir) {
  fs::create_directories(dir);
  const auto log = dir / "log.txt";
  ForecastRun r;
  r.code = cli("--seed 1 --out-dir " + dir.string() + " forecast synth --points 2000", log);
  if (r.code != 0) return r;
  r.code = cli("--seed 1 --out-dir " + dir.string() + " forecast train --data " + (dir / "wind.csv").string() +
                   " --m 48 --n 24 --split 0.8 --epochs 50 --models blstm,ann",
               log);
  if (r.code != 0) return r;
  const auto rows = read_csv(dir / "metrics.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] == "blstm") r.blstm_mape = std::stod(rows[i][1]);
    if (rows[i][0] == "ann") r.ann_mape = std::stod(rows[i][1]);
  }
  return r;
}

Outcome forecast_direction(const ForecastRun& r) {
  if (r.code != 0) return {false, "forecast CLI exited with " + std::to_string(r.code)};
  return {r.blstm_mape <= r.ann_mape, "test MAPE BLSTM " + num(r.blstm_mape) + " %, MLP " + num(r.ann_mape) + " %"};
}

int schedule_run(const fs::path& dir) {
  fs::create_directories(dir);
  return cli("--seed 1 --out-dir " + dir.string() + " schedule --builtin-33bus --scenario actual --pop 50 --iters 300",
             dir / "log.txt");
}

Outcome economic_behavior(const fs::path& dir, int code) {
  if (code != 0) return {false, "schedule CLI exited with " + std::to_string(code)};
  const auto rows = read_csv(dir / "schedule.csv");
  if (rows.size() != 25) return {false, "schedule has " + std::to_string(rows.size() - 1) + " rows"};
  const auto storage = column(rows[0], "storage_kw");
  const auto mt1 = column(rows[0], "mt1_kw");
  const auto mt2 = column(rows[0], "mt2_kw");
  const auto price = ieee33_case().profiles.price;
  std::vector<std::size_t> order(24);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return price[a] < price[b]; });
  double cheap = 0.0, dear = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    cheap += std::stod(rows[order[k] + 1][storage]);
    dear += std::stod(rows[order[23 - k] + 1][storage]);
  }
  const auto& lowest = rows[order[0] + 1];
  const bool off = std::stod(lowest[mt1]) == 0.0 && std::stod(lowest[mt2]) == 0.0;
  return {cheap < 0.0 && dear > 0.0 && off,
          "storage over cheapest 6 h " + num(cheap) + " kW, over dearest 6 h " + num(dear) + " kW, hour " +
              std::to_string(order[0] + 1) + " turbines " + lowest[mt1] + "/" + lowest[mt2] + " kW"};
}

// Cost gaps for wind forecasts perturbed at noise scales 1:2:4.
Outcome forecast_quality_to_cost() {
  const double base = 40.0;
  int ordered = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = ieee33_case();
    tlbo::Config cfg;
    cfg.population_size = 50;
    cfg.max_iterations = 300;
    cfg.seed = 100 + seed;
    cfg.per_dimension_r = true;
    sched::Options options;
    options.wind_source = sched::WindSource::Forecast;
    std::vector<double> cost;
    for (double scale : {0.0, base, 2 * base, 4 * base}) {
      c.profiles.wind_forecast = scale == 0.0 ? c.profiles.wind_actual
                                              : synthetic::perturb(c.profiles.wind_actual, scale, seed, 0.0,
                                                                   c.wind[0].p_max);
      cost.push_back(sched::plan_day(c, cfg, options).schedule.cost.total);
    }
    const double g1 = std::abs(cost[1] - cost[0]), g2 = std::abs(cost[2] - cost[0]), g3 = std::abs(cost[3] - cost[0]);
    const bool ok = g1 <= g2 && g2 <= g3;
    ordered += ok;
    detail += "seed " + std::to_string(seed) + " gaps " + num(g1) + "/" + num(g2) + "/" + num(g3) +
              (ok ? "" : " (out of order)") + "; ";
  }
  return {ordered >= 4, std::to_string(ordered) + "/5 ordered; " + detail};
}

// Re-solves every hour of an emitted schedule from its CSV.
Outcome feasibility(const std::vector<fs::path>& dirs, const std::vector<int>& codes) {
  const auto c = ieee33_case();
  const sched::Options options;
  double worst = 0.0;
  std::size_t violations = 0;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    if (codes[d] != 0) return {false, "schedule CLI exited with " + std::to_string(codes[d])};
    const auto rows = read_csv(dirs[d] / "schedule.csv");
    if (rows.size() != 25) return {false, "schedule has the wrong number of rows"};
    const auto storage = column(rows[0], "storage_kw");
    std::vector<std::size_t> units;
    for (const auto& u : c.dispatchables) units.push_back(column(rows[0], u.name + "_kw"));
    auto x = sched::DecisionVector::zeros(c);
    for (std::size_t t = 0; t < 24; ++t) {
      for (std::size_t i = 0; i < units.size(); ++i) {
        x.unit_power(t, i) = std::stod(rows[t + 1][units[i]]);
        x.status[x.slot(t, i)] = x.unit_power(t, i) > 0.0;
      }
      x.storage_power(t, 0) = std::stod(rows[t + 1][storage]);
      x.status[x.slot(t, x.units)] = x.storage_power(t, 0) != 0.0;
    }
    const auto eval = sched::evaluate(x, c, options);
    violations += eval.report.violations.size() + eval.report.unsolved_hours.size();
    const auto y = pf::build_admittance(c);
    for (const auto& flow : eval.flows) {
      if (!flow.converged) return {false, "an hour did not solve"};
      worst = std::max(worst, pf::residual(c, y, flow.injections, flow.solution));
    }
    const auto summary = read_csv(dirs[d] / "summary.csv");
    for (const auto& row : summary) {
      if (row[0] == "violations" && std::stod(row[1]) != 0.0) ++violations;
    }
  }
  return {violations == 0 && worst <= 1e-8,
          std::to_string(dirs.size()) + " schedules, " + std::to_string(violations) +
              " violations, worst hourly residual " + num(worst) + " pu"};
}

Outcome determinism(const std::vector<std::pair<fs::path, fs::path>>& pairs) {
  std::size_t compared = 0;
  std::vector<std::string> differ;
  for (const auto& [a, b] : pairs) {
    if (!fs::exists(a) || !fs::exists(b)) {
      differ.push_back(a.filename().string() + " missing");
      continue;
    }
    ++compared;
    if (slurp(a) != slurp(b)) differ.push_back(a.parent_path().filename().string() + "/" + a.filename().string());
  }
  std::string detail = std::to_string(compared) + " file pairs compared";
  for (const auto& d : differ) detail += "; differs: " + d;
  return {differ.empty(), detail};
}

}  // namespace

int main() {
  fs::remove_all(work);
  fs::create_directories(work);
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail
              << "; " << num(secs) << " s)" << std::endl;
  };

  report(1, "power-flow oracle", power_flow_oracle);
  report(2, "TLBO sphere", tlbo_sphere);
  report(3, "hand oracles", hand_oracles);
  report(4, "BLSTM gradient check", gradient_check);

  ForecastRun first;
  report(5, "forecast direction", [&] {
    first = forecast_run(work / "forecast_a");
    return forecast_direction(first);
  });

  int sched_a = -1;
  report(6, "economic behavior", [&] {
    sched_a = schedule_run(work / "schedule_a");
    return economic_behavior(work / "schedule_a", sched_a);
  });

  report(7, "forecast quality to cost", forecast_quality_to_cost);

  // Repeat runs for the determinism check; the second schedule is also
  // checked for feasibility.
  forecast_run(work / "forecast_b");
  const int sched_b = schedule_run(work / "schedule_b");
  cli("--seed 1 --out-dir " + (work / "bench_a").string() + " benchmark", work / "bench_log.txt");
  cli("--seed 1 --out-dir " + (work / "bench_b").string() + " benchmark", work / "bench_log.txt");

  report(8, "feasibility of emitted schedules",
         [&] { return feasibility({work / "schedule_a", work / "schedule_b"}, {sched_a, sched_b}); });

  report(9, "determinism", [&] {
    std::vector<std::pair<fs::path, fs::path>> pairs;
    auto add = [&](const std::string& dir, const std::string& file) {
      pairs.emplace_back(work / (dir + "_a") / file, work / (dir + "_b") / file);
    };
    add("bench", "benchmark.csv");
    for (const char* f : {"wind.csv", "metrics.csv", "predictions.csv", "model_blstm.txt", "model_ann.txt",
                          "loss_blstm.csv", "loss_ann.csv"}) {
      add("forecast", f);
    }
    add("schedule", "schedule.csv");
    add("schedule", "summary.csv");
    return determinism(pairs);
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
