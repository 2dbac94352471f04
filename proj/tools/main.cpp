#include <CLI11.hpp>

#include <mgsched/mgsched.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kDiverged = 3, kInfeasible = 4, kInternal = 5 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(mg_status s) {
  switch (s) {
    case MG_OK: return kOk;
    case MG_ERR_INVALID_ARGUMENT: return kUsage;
    case MG_ERR_PARSE:
    case MG_ERR_VALIDATION:
    case MG_ERR_IO: return kInput;
    case MG_ERR_DIVERGED: return kDiverged;
    case MG_ERR_NOT_CONVERGED:
    case MG_ERR_SINGULAR:
    case MG_ERR_INFEASIBLE: return kInfeasible;
    case MG_ERR_INTERNAL: return kInternal;
  }
  return kInternal;
}

void check(mg_status s, const std::string& what) {
  if (s != MG_OK) throw Failure{exit_code(s), what + ": " + mg_last_error()};
}

struct CaseFree {
  void operator()(mg_case* p) const { mg_case_free(p); }
};
struct ScheduleFree {
  void operator()(mg_schedule* p) const { mg_schedule_free(p); }
};
struct SeriesFree {
  void operator()(mg_series* p) const { mg_series_free(p); }
};
struct ForecasterFree {
  void operator()(mg_forecaster* p) const { mg_forecaster_free(p); }
};
using CasePtr = std::unique_ptr<mg_case, CaseFree>;
using SchedulePtr = std::unique_ptr<mg_schedule, ScheduleFree>;
using SeriesPtr = std::unique_ptr<mg_series, SeriesFree>;
using ForecasterPtr = std::unique_ptr<mg_forecaster, ForecasterFree>;

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{kInput, "cannot write " + path.string()};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

// Header-keyed CSV table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const fs::path& source) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Failure{kInput, source.string() + ": no column " + name};
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kInput, "missing artifact " + path.string()};
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = split(line, ',');
    } else {
      t.rows.push_back(split(line, ','));
      if (t.rows.back().size() != t.header.size()) {
        throw Failure{kInput, path.string() + ": ragged row"};
      }
    }
  }
  if (t.header.empty()) throw Failure{kInput, path.string() + ": empty file"};
  return t;
}

std::string table_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& item : split(s, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Global {
  std::uint64_t seed = 1;
  fs::path out_dir = ".";
};

fs::path output(const Global& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw Failure{kInput, "cannot create " + g.out_dir.string() + ": " + ec.message()};
  return g.out_dir / name;
}

mg_model_kind model_kind(const std::string& name) {
  if (name == "blstm") return MG_MODEL_BLSTM;
  if (name == "lstm") return MG_MODEL_LSTM;
  if (name == "ann" || name == "mlp") return MG_MODEL_ANN;
  throw Failure{kUsage, "unknown model '" + name + "' (expected blstm, lstm or ann)"};
}

SeriesPtr load_series(const std::string& path) {
  mg_series* s = nullptr;
  check(mg_series_load(path.c_str(), &s), "loading " + path);
  return SeriesPtr(s);
}

// ---- forecast ----

struct SynthArgs {
  std::size_t points = 2000;
  std::string out = "wind.csv";
};

void run_synth(const Global& g, const SynthArgs& a) {
  mg_series* raw = nullptr;
  check(mg_series_synthetic(a.points, g.seed, &raw), "generating series");
  SeriesPtr s(raw);
  const auto path = output(g, a.out);
  check(mg_series_save(s.get(), path.string().c_str()), "writing series");
  std::cout << "wrote " << path.string() << " (" << a.points << " hourly points)\n";
}

struct TrainArgs {
  std::string data;
  std::size_t m = 48;
  std::size_t n = 24;
  std::size_t epochs = 250;
  std::string models = "blstm,lstm,ann";
  double lr = 1e-3;
  std::size_t batch = 32;
  std::size_t hidden = 128;
  std::size_t layers = 2;
  double dropout = 0.3;
  double split = 0.8;
  std::string pooling = "final";
};

struct Trained {
  std::string name;
  ForecasterPtr model;
  mg_metrics metrics{};
};

void run_train(const Global& g, const TrainArgs& a) {
  auto series = load_series(a.data);
  const std::size_t size = mg_series_size(series.get());
  const double* data = mg_series_data(series.get());

  mg_forecast_settings base;
  mg_forecast_defaults(&base);
  base.window = a.m;
  base.horizon = a.n;
  base.hidden = a.hidden;
  base.layers = a.layers;
  base.dropout = a.dropout;
  base.pooling = a.pooling == "mean" ? MG_POOL_MEAN : MG_POOL_FINAL;
  base.epochs = a.epochs;
  base.learning_rate = a.lr;
  base.batch_size = a.batch;
  base.seed = g.seed;
  base.split = a.split;

  const auto names = split_list(a.models);
  if (names.empty()) throw Failure{kUsage, "--models is empty"};
  for (const auto& name : names) model_kind(name);

  // Each model trains single-threaded, so running them side by side does
  // not change any result.
  std::vector<std::future<Trained>> jobs;
  for (const auto& name : names) {
    jobs.push_back(std::async(std::launch::async, [&, name] {
      mg_forecast_settings s = base;
      s.kind = model_kind(name);
      Trained t{name, nullptr, {}};
      mg_forecaster* raw = nullptr;
      check(mg_forecaster_train(series.get(), &s, &raw, &t.metrics), "training " + name);
      t.model.reset(raw);
      return t;
    }));
  }
  std::vector<Trained> trained;
  for (auto& j : jobs) trained.push_back(j.get());

  if (size < a.m + a.n) throw Failure{kInput, "series shorter than one window"};
  const std::size_t start = size - a.m - a.n;
  std::vector<double> actual(data + start + a.m, data + size);

  std::string metrics = "model,mape,mae,rmse\n";
  Table predictions;
  predictions.header = {"hour", "actual"};
  std::vector<std::vector<double>> forecasts;
  for (auto& t : trained) {
    const auto model_path = output(g, "model_" + t.name + ".txt");
    check(mg_forecaster_save(t.model.get(), model_path.string().c_str()), "saving model");

    metrics += t.name + "," + (t.metrics.mape_defined ? num(t.metrics.mape) : std::string()) + "," +
               num(t.metrics.mae) + "," + num(t.metrics.rmse) + "\n";

    std::size_t count = 0;
    check(mg_forecaster_loss_trace(t.model.get(), nullptr, 0, &count), "loss trace");
    std::vector<double> trace(count);
    check(mg_forecaster_loss_trace(t.model.get(), trace.data(), count, &count), "loss trace");
    std::string loss = "epoch,loss\n";
    for (std::size_t e = 0; e < trace.size(); ++e) loss += std::to_string(e + 1) + "," + num(trace[e]) + "\n";
    write_text(output(g, "loss_" + t.name + ".csv"), loss);

    std::vector<double> y(a.n);
    check(mg_forecaster_predict(t.model.get(), data + start, a.m, y.data(), y.size()),
          "predicting with " + t.name);
    forecasts.push_back(y);
    predictions.header.push_back(t.name);

    std::vector<double> kw(y.size());
    std::transform(y.begin(), y.end(), kw.begin(), [](double v) { return std::max(0.0, v) * 1000.0; });
    const auto wind_path = output(g, "wind_" + t.name + ".csv");
    check(mg_profile_csv_save(kw.data(), kw.size(), wind_path.string().c_str()), "writing wind");

    std::cout << t.name << ": test mape "
              << (t.metrics.mape_defined ? num(t.metrics.mape) : std::string("undefined"))
              << " mae " << num(t.metrics.mae) << " rmse " << num(t.metrics.rmse) << "\n";
  }
  write_text(output(g, "metrics.csv"), metrics);

  for (std::size_t h = 0; h < a.n; ++h) {
    std::vector<std::string> row{std::to_string(h + 1), num(actual[h])};
    for (const auto& f : forecasts) row.push_back(num(f[h]));
    predictions.rows.push_back(row);
  }
  write_text(output(g, "predictions.csv"), table_csv(predictions));

  std::vector<double> kw(actual.size());
  std::transform(actual.begin(), actual.end(), kw.begin(), [](double v) { return v * 1000.0; });
  const auto actual_path = output(g, "wind_actual.csv");
  check(mg_profile_csv_save(kw.data(), kw.size(), actual_path.string().c_str()), "writing wind");
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::size_t at = 0;  // 0 = after the last point
};

void run_predict(const Global& g, const PredictArgs& a) {
  mg_forecaster* raw = nullptr;
  check(mg_forecaster_load(a.model.c_str(), &raw), "loading " + a.model);
  ForecasterPtr model(raw);
  auto series = load_series(a.data);
  const std::size_t size = mg_series_size(series.get());
  const std::size_t m = mg_forecaster_window(model.get());
  const std::size_t end = a.at ? a.at : size;
  if (end > size || end < m) throw Failure{kInput, "not enough history before the requested point"};
  std::vector<double> y(mg_forecaster_horizon(model.get()));
  check(mg_forecaster_predict(model.get(), mg_series_data(series.get()) + end - m, m, y.data(), y.size()),
        "predicting");
  std::string text = "step,power_mw\n";
  for (std::size_t h = 0; h < y.size(); ++h) text += std::to_string(h + 1) + "," + num(y[h]) + "\n";
  const auto path = output(g, std::string("forecast_") + mg_model_name(mg_forecaster_kind(model.get())) + ".csv");
  write_text(path, text);
  std::cout << text;
}

// ---- scheduling ----

struct ScheduleArgs {
  bool builtin = false;
  std::string case_path;
  std::string price;
  std::string load;
  std::string wind;
  std::string wind_dir;
  std::string scenario = "actual";
  std::size_t pop = 50;
  std::size_t iters = 300;
  std::size_t threads = 0;
  bool scalar_r = false;
  bool wind_cost = false;
  bool no_repair = false;
};

CasePtr load_case(const ScheduleArgs& a) {
  mg_case* raw = nullptr;
  if (!a.case_path.empty()) {
    check(mg_case_load(a.case_path.c_str(), &raw), "loading case");
  } else {
    check(mg_case_builtin_ieee33(&raw), "building case");
  }
  CasePtr c(raw);
  if (!a.price.empty()) check(mg_case_load_profile_csv(c.get(), MG_PROFILE_PRICE, a.price.c_str()), "price");
  if (!a.load.empty()) {
    check(mg_case_load_profile_csv(c.get(), MG_PROFILE_LOAD_FACTOR, a.load.c_str()), "load factors");
  }
  return c;
}

// Scenario wind lives in <dir>/wind_<scenario>.csv. The actual scenario
// falls back to the case's own profile when that file is absent.
void apply_wind(mg_case* c, const ScheduleArgs& a, const Global& g, const std::string& scenario) {
  if (scenario != "actual") model_kind(scenario);
  fs::path path;
  if (!a.wind.empty()) {
    path = a.wind;
  } else {
    path = fs::path(a.wind_dir.empty() ? g.out_dir : fs::path(a.wind_dir)) / ("wind_" + scenario + ".csv");
    if (!fs::exists(path)) {
      if (scenario == "actual") return;
      throw Failure{kInput, "missing wind series " + path.string() + " (run forecast train first)"};
    }
  }
  check(mg_case_load_profile_csv(c, MG_PROFILE_WIND_ACTUAL, path.string().c_str()), "wind " + path.string());
}

mg_schedule_settings settings(const Global& g, const ScheduleArgs& a) {
  mg_schedule_settings s;
  mg_schedule_defaults(&s);
  s.tlbo.population = a.pop;
  s.tlbo.iterations = a.iters;
  s.tlbo.seed = g.seed;
  s.tlbo.per_dimension_r = !a.scalar_r;
  s.tlbo.threads = a.threads;
  s.wind = MG_WIND_ACTUAL;
  s.include_wind_cost = a.wind_cost;
  s.repair = !a.no_repair;
  return s;
}

SchedulePtr plan(const mg_case* c, const mg_schedule_settings& s) {
  mg_schedule* raw = nullptr;
  check(mg_schedule_run(c, &s, &raw), "scheduling");
  return SchedulePtr(raw);
}

mg_schedule_totals totals(const mg_schedule* s) {
  mg_schedule_totals t;
  check(mg_schedule_totals_get(s, &t), "totals");
  return t;
}

void report_violations(const mg_schedule* s, const mg_schedule_totals& t, const std::string& label) {
  std::cerr << label << ": infeasible schedule (" << t.violations << " violations, " << t.unsolved_hours
            << " unsolved hours)\n";
  char buf[512];
  for (std::size_t i = 0; i < t.violations; ++i) {
    if (mg_schedule_violation(s, i, buf, sizeof buf) == MG_OK) std::cerr << "  " << buf << "\n";
  }
}

int run_schedule(const Global& g, const ScheduleArgs& a) {
  auto c = load_case(a);
  apply_wind(c.get(), a, g, a.scenario);
  auto s = plan(c.get(), settings(g, a));
  check(mg_schedule_write_csv(s.get(), output(g, "schedule.csv").string().c_str()), "writing schedule");
  check(mg_schedule_write_summary(s.get(), output(g, "summary.csv").string().c_str()), "writing summary");
  const auto t = totals(s.get());
  std::cout << "scenario " << a.scenario << ": total cost " << num(t.total_cost) << " $, daily loss "
            << num(t.daily_loss_kwh) << " kWh, max voltage deviation " << num(t.max_voltage_deviation_pu)
            << " pu\n";
  if (!t.feasible) {
    report_violations(s.get(), t, a.scenario);
    return kInfeasible;
  }
  return kOk;
}

struct CompareArgs {
  ScheduleArgs schedule;
  std::string scenarios = "actual,blstm,lstm,ann";
};

int run_compare(const Global& g, const CompareArgs& a) {
  const auto names = split_list(a.scenarios);
  if (names.empty() || names.front() != "actual") {
    throw Failure{kUsage, "--scenarios must start with actual (the reference for the cost gap)"};
  }
  std::vector<CasePtr> cases;
  for (const auto& name : names) {
    cases.push_back(load_case(a.schedule));
    apply_wind(cases.back().get(), a.schedule, g, name);
  }
  const auto s = settings(g, a.schedule);
  std::vector<SchedulePtr> plans;
  for (const auto& c : cases) plans.push_back(plan(c.get(), s));

  std::string table = "scenario,total_cost,daily_loss_kwh,max_voltage_deviation_pu,cost_gap,feasible\n";
  const double reference = totals(plans.front().get()).total_cost;
  int code = kOk;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto t = totals(plans[i].get());
    const auto path = output(g, "schedule_" + names[i] + ".csv");
    check(mg_schedule_write_csv(plans[i].get(), path.string().c_str()), "writing schedule");
    const double gap = i == 0 ? 0.0 : std::abs(t.total_cost - reference);
    table += names[i] + "," + num(t.total_cost) + "," + num(t.daily_loss_kwh) + "," +
             num(t.max_voltage_deviation_pu) + "," + num(gap) + "," + (t.feasible ? "1" : "0") + "\n";
    if (!t.feasible) {
      report_violations(plans[i].get(), t, names[i]);
      code = kInfeasible;
    }
  }
  write_text(output(g, "compare.csv"), table);
  std::cout << table;
  return code;
}

struct PlotArgs {
  std::string schedule;
  std::string predictions;
};

void run_plots(const Global& g, const PlotArgs& a) {
  const fs::path schedule_path = a.schedule.empty() ? g.out_dir / "schedule.csv" : fs::path(a.schedule);
  const auto schedule = read_table(schedule_path);
  const auto hour = schedule.column("hour", schedule_path);
  const auto grid = schedule.column("grid_kw", schedule_path);
  const auto cost = schedule.column("cost", schedule_path);
  Table exchange{{"hour", "grid_kw"}, {}};
  Table hourly{{"hour", "cost"}, {}};
  for (const auto& r : schedule.rows) {
    exchange.rows.push_back({r[hour], r[grid]});
    hourly.rows.push_back({r[hour], r[cost]});
  }
  write_text(output(g, "grid_exchange.csv"), table_csv(exchange));
  write_text(output(g, "hourly_cost.csv"), table_csv(hourly));

  const fs::path pred_path = a.predictions.empty() ? g.out_dir / "predictions.csv" : fs::path(a.predictions);
  if (!a.predictions.empty() || fs::exists(pred_path)) {
    const auto pred = read_table(pred_path);
    pred.column("hour", pred_path);
    pred.column("actual", pred_path);
    write_text(output(g, "prediction_vs_actual.csv"), table_csv(pred));
  } else {
    std::cerr << "no " << pred_path.string() << "; prediction_vs_actual.csv skipped\n";
  }
}

void add_schedule_options(CLI::App* cmd, ScheduleArgs& a) {
  auto* builtin = cmd->add_flag("--builtin-33bus", a.builtin, "Use the built-in 33-bus case (default)");
  cmd->add_option("--case", a.case_path, "Case JSON file")->check(CLI::ExistingFile)->excludes(builtin);
  cmd->add_option("--price", a.price, "Price profile CSV (hour,value)")->check(CLI::ExistingFile);
  cmd->add_option("--load", a.load, "Load-factor profile CSV")->check(CLI::ExistingFile);
  cmd->add_option("--wind", a.wind, "Wind profile CSV in kW (overrides the scenario file)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--wind-dir", a.wind_dir, "Directory holding wind_<scenario>.csv (default: out-dir)");
  cmd->add_option("--pop", a.pop, "TLBO population")->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  cmd->add_option("--iters", a.iters, "TLBO iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", a.threads, "Evaluation threads, 0 = all cores");
  cmd->add_flag("--scalar-r", a.scalar_r, "One TLBO step factor per individual instead of per gene");
  cmd->add_flag("--wind-cost", a.wind_cost, "Charge the wind bid");
  cmd->add_flag("--no-repair", a.no_repair, "Evaluate decoded vectors without ramp/SOC repair");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid day-ahead scheduling with wind forecasting"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values");
  Global g;
  std::string out_dir = ".";
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out-dir", out_dir, "Output directory");

  auto* forecast = app.add_subcommand("forecast", "Wind series and forecasters");
  forecast->require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = forecast->add_subcommand("synth", "Write a synthetic hourly wind series");
  synth_cmd->add_option("--points", synth.points, "Number of hours")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--out", synth.out, "File name inside out-dir");

  TrainArgs train;
  auto* train_cmd = forecast->add_subcommand("train", "Train and score forecasters");
  train_cmd->add_option("--data", train.data, "Series CSV (timestamp,power_mw)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--m", train.m, "Input window (hours)")->check(CLI::PositiveNumber);
  train_cmd->add_option("--n", train.n, "Forecast horizon (hours)")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--models", train.models, "Comma list of blstm, lstm, ann");
  train_cmd->add_option("--lr", train.lr, "ADAM learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.batch, "Minibatch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--hidden", train.hidden, "Hidden width")->check(CLI::PositiveNumber);
  train_cmd->add_option("--layers", train.layers, "Layers")->check(CLI::PositiveNumber);
  train_cmd->add_option("--dropout", train.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99));
  train_cmd->add_option("--split", train.split, "Training share")->check(CLI::Range(0.01, 0.99));
  train_cmd->add_option("--pooling", train.pooling, "Head input: final or mean")
      ->check(CLI::IsMember({"final", "mean"}));

  PredictArgs predict;
  auto* predict_cmd = forecast->add_subcommand("predict", "Forecast with a saved model");
  predict_cmd->add_option("--model", predict.model, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--data", predict.data, "Series CSV")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--at", predict.at, "Forecast from this point (default: series end)");

  ScheduleArgs sched;
  auto* sched_cmd = app.add_subcommand("schedule", "Plan one day");
  add_schedule_options(sched_cmd, sched);
  sched_cmd->add_option("--scenario", sched.scenario, "Wind scenario")
      ->check(CLI::IsMember({"actual", "blstm", "lstm", "ann"}));

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Plan every wind scenario and compare costs");
  add_schedule_options(compare_cmd, compare.schedule);
  compare_cmd->add_option("--scenarios", compare.scenarios, "Comma list, starting with actual");

  PlotArgs plots;
  auto* plots_cmd = app.add_subcommand("emit-plots", "Write plot-ready CSV from earlier runs");
  plots_cmd->add_option("--schedule", plots.schedule, "Schedule CSV (default: out-dir/schedule.csv)");
  plots_cmd->add_option("--predictions", plots.predictions, "Predictions CSV (default: out-dir/predictions.csv)");

  auto* bench_cmd = app.add_subcommand("benchmark", "TLBO on sphere, Rosenbrock and Rastrigin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  g.out_dir = out_dir;

  try {
    if (synth_cmd->parsed()) run_synth(g, synth);
    else if (train_cmd->parsed()) run_train(g, train);
    else if (predict_cmd->parsed()) run_predict(g, predict);
    else if (sched_cmd->parsed()) return run_schedule(g, sched);
    else if (compare_cmd->parsed()) return run_compare(g, compare);
    else if (plots_cmd->parsed()) run_plots(g, plots);
    else if (bench_cmd->parsed()) {
      const auto path = output(g, "benchmark.csv");
      check(mg_tlbo_benchmark_csv(g.seed, path.string().c_str()), "benchmark");
      std::ifstream in(path);
      std::cout << in.rdbuf();
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return kOk;
}
