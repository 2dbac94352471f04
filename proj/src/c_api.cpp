#define MGSCHED_BUILDING
#include "mgsched/mgsched.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <thread>

#include "format.hpp"
#include "mgsched/error.hpp"
#include "mgsched/forecast.hpp"
#include "mgsched/grid_model.hpp"
#include "mgsched/scheduler.hpp"
#include "mgsched/synthetic.hpp"
#include "mgsched/tlbo.hpp"

using namespace mgsched;

struct mg_case {
  NetworkCase value;
};

struct mg_schedule {
  sched::Schedule schedule;
  std::vector<double> trace;
  std::size_t evaluations = 0;
};

struct mg_series {
  std::vector<double> values;
};

struct mg_forecaster {
  forecast::Network net;
  std::vector<double> loss_trace;
};

namespace {

thread_local std::string last_error;

mg_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return MG_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return MG_ERR_PARSE;
    case ErrorCode::Validation: return MG_ERR_VALIDATION;
    case ErrorCode::Io: return MG_ERR_IO;
    case ErrorCode::NotConverged: return MG_ERR_NOT_CONVERGED;
    case ErrorCode::Singular: return MG_ERR_SINGULAR;
    case ErrorCode::Diverged: return MG_ERR_DIVERGED;
    case ErrorCode::Infeasible: return MG_ERR_INFEASIBLE;
  }
  return MG_ERR_INTERNAL;
}

mg_status fail(mg_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
mg_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const Error& e) {
    std::string msg = e.what();
    for (const auto& d : e.details()) msg += "\n  " + d;
    return fail(to_status(e.code()), std::move(msg));
  } catch (const std::bad_alloc&) {
    return fail(MG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MG_ERR_INTERNAL, "unknown error");
  }
}

mg_status null_arg(const char* name) {
  return fail(MG_ERR_INVALID_ARGUMENT, std::string(name) + " is NULL");
}

ProfileKind profile_kind(mg_profile p) {
  switch (p) {
    case MG_PROFILE_PRICE: return ProfileKind::Price;
    case MG_PROFILE_LOAD_FACTOR: return ProfileKind::LoadFactor;
    case MG_PROFILE_WIND_ACTUAL: return ProfileKind::WindActual;
    case MG_PROFILE_WIND_FORECAST: return ProfileKind::WindForecast;
    case MG_PROFILE_RESERVE: return ProfileKind::Reserve;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown profile id " + std::to_string(p));
}

mg_status copy_out(const std::vector<double>& v, double* out, std::size_t capacity,
                   std::size_t* count) {
  if (count) *count = v.size();
  if (out) std::copy_n(v.begin(), std::min(capacity, v.size()), out);
  return MG_OK;
}

tlbo::Config tlbo_config(const mg_tlbo_settings& s) {
  tlbo::Config c;
  c.population_size = s.population;
  c.max_iterations = s.iterations;
  c.seed = s.seed;
  c.per_dimension_r = s.per_dimension_r != 0;
  c.threads = s.threads ? static_cast<unsigned>(s.threads)
                        : std::max(1u, std::thread::hardware_concurrency());
  return c;
}

forecast::ModelKind model_kind(mg_model_kind k) {
  switch (k) {
    case MG_MODEL_BLSTM: return forecast::ModelKind::Blstm;
    case MG_MODEL_LSTM: return forecast::ModelKind::Lstm;
    case MG_MODEL_ANN: return forecast::ModelKind::Mlp;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind " + std::to_string(k));
}

mg_model_kind model_id(forecast::ModelKind k) {
  switch (k) {
    case forecast::ModelKind::Blstm: return MG_MODEL_BLSTM;
    case forecast::ModelKind::Lstm: return MG_MODEL_LSTM;
    case forecast::ModelKind::Mlp: return MG_MODEL_ANN;
  }
  return MG_MODEL_BLSTM;
}

void fill_metrics(const forecast::Metrics& m, mg_metrics* out) {
  if (!out) return;
  out->mape_defined = m.mape.has_value();
  out->mape = m.mape.value_or(0.0);
  out->mae = m.mae;
  out->rmse = m.rmse;
}

}  // namespace

extern "C" {

const char* mg_last_error(void) { return last_error.c_str(); }

const char* mg_status_name(mg_status status) {
  switch (status) {
    case MG_OK: return "ok";
    case MG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MG_ERR_PARSE: return "parse error";
    case MG_ERR_VALIDATION: return "validation error";
    case MG_ERR_IO: return "i/o error";
    case MG_ERR_NOT_CONVERGED: return "not converged";
    case MG_ERR_SINGULAR: return "singular";
    case MG_ERR_DIVERGED: return "diverged";
    case MG_ERR_INFEASIBLE: return "infeasible";
    case MG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mg_status mg_case_builtin_ieee33(mg_case** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mg_case{ieee33_case()};
    return MG_OK;
  });
}

mg_status mg_case_load(const char* path, mg_case** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mg_case{load_case(path)};
    return MG_OK;
  });
}

mg_status mg_case_save(const mg_case* c, const char* path) {
  if (!c) return null_arg("case");
  if (!path) return null_arg("path");
  return guarded([&] {
    save_case(c->value, path);
    return MG_OK;
  });
}

void mg_case_free(mg_case* c) { delete c; }

size_t mg_case_hours(const mg_case* c) { return c ? c->value.hours() : 0; }

size_t mg_case_bus_count(const mg_case* c) { return c ? c->value.buses.size() : 0; }

mg_status mg_case_set_profile(mg_case* c, mg_profile which, const double* values, size_t count) {
  if (!c) return null_arg("case");
  if (!values && count) return null_arg("values");
  return guarded([&] {
    NetworkCase updated = c->value;
    profile(updated.profiles, profile_kind(which)).assign(values, values + count);
    const auto issues = validate_case(updated);
    if (!issues.empty()) {
      std::vector<std::string> details;
      for (const auto& i : issues) details.push_back(i.path + ": " + i.message);
      throw Error(ErrorCode::Validation, "profile rejected", std::move(details));
    }
    c->value = std::move(updated);
    return MG_OK;
  });
}

mg_status mg_case_get_profile(const mg_case* c, mg_profile which, double* out, size_t capacity,
                              size_t* count) {
  if (!c) return null_arg("case");
  return guarded([&] {
    return copy_out(profile(c->value.profiles, profile_kind(which)), out, capacity, count);
  });
}

mg_status mg_case_load_profile_csv(mg_case* c, mg_profile which, const char* path) {
  if (!c) return null_arg("case");
  if (!path) return null_arg("path");
  return guarded([&] {
    const auto values = load_profile_csv(path);
    return mg_case_set_profile(c, which, values.data(), values.size());
  });
}

mg_status mg_profile_csv_save(const double* values, size_t count, const char* path) {
  if (!values && count) return null_arg("values");
  if (!path) return null_arg("path");
  return guarded([&] {
    save_profile_csv(std::vector<double>(values, values + count), path);
    return MG_OK;
  });
}

void mg_tlbo_defaults(mg_tlbo_settings* out) {
  if (!out) return;
  const tlbo::Config c;
  out->population = c.population_size;
  out->iterations = c.max_iterations;
  out->seed = c.seed;
  out->per_dimension_r = c.per_dimension_r;
  out->threads = c.threads;
}

mg_status mg_tlbo_benchmark_csv(uint64_t seed, const char* path) {
  if (!path) return null_arg("path");
  return guarded([&] {
    detail::write_file(path, tlbo::benchmark_csv(tlbo::benchmark_suite(seed)));
    return MG_OK;
  });
}

void mg_schedule_defaults(mg_schedule_settings* out) {
  if (!out) return;
  mg_tlbo_defaults(&out->tlbo);
  const sched::Options o;
  out->wind = o.wind_source == sched::WindSource::Actual ? MG_WIND_ACTUAL : MG_WIND_FORECAST;
  out->include_wind_cost = o.include_wind_cost;
  out->repair = o.repair;
}

mg_status mg_schedule_run(const mg_case* c, const mg_schedule_settings* settings,
                          mg_schedule** out) {
  if (!c) return null_arg("case");
  if (!settings) return null_arg("settings");
  if (!out) return null_arg("out");
  return guarded([&] {
    sched::Options o;
    o.wind_source = settings->wind == MG_WIND_FORECAST ? sched::WindSource::Forecast
                                                       : sched::WindSource::Actual;
    o.include_wind_cost = settings->include_wind_cost != 0;
    o.repair = settings->repair != 0;
    auto plan = sched::plan_day(c->value, tlbo_config(settings->tlbo), o);
    *out = new mg_schedule{std::move(plan.schedule), std::move(plan.search.trace),
                           plan.search.evaluations + plan.polish_evaluations};
    return MG_OK;
  });
}

void mg_schedule_free(mg_schedule* s) { delete s; }

size_t mg_schedule_hours(const mg_schedule* s) { return s ? s->schedule.rows.size() : 0; }

size_t mg_schedule_unit_count(const mg_schedule* s) {
  return s ? s->schedule.unit_names.size() : 0;
}

size_t mg_schedule_storage_count(const mg_schedule* s) {
  return s ? s->schedule.storage_names.size() : 0;
}

mg_status mg_schedule_totals_get(const mg_schedule* s, mg_schedule_totals* out) {
  if (!s) return null_arg("schedule");
  if (!out) return null_arg("out");
  const auto& sc = s->schedule;
  out->total_cost = sc.cost.total;
  out->operating_cost = sc.cost.operating();
  out->generation_cost = sc.cost.generation;
  out->startup_cost = sc.cost.startup;
  out->shutdown_cost = sc.cost.shutdown;
  out->storage_cost = sc.cost.storage;
  out->wind_cost = sc.cost.wind;
  out->grid_cost = sc.cost.grid;
  out->penalty = sc.cost.penalty;
  out->daily_loss_kwh = sc.daily_loss_kwh;
  out->max_voltage_deviation_pu = sc.max_voltage_deviation;
  out->violations = sc.report.violations.size();
  out->unsolved_hours = sc.report.unsolved_hours.size();
  out->feasible = sc.report.feasible();
  out->evaluations = s->evaluations;
  return MG_OK;
}

static mg_status check_hour(const mg_schedule* s, size_t hour) {
  if (!s) return null_arg("schedule");
  if (hour >= s->schedule.rows.size()) {
    return fail(MG_ERR_INVALID_ARGUMENT, "hour index " + std::to_string(hour) + " out of range");
  }
  return MG_OK;
}

mg_status mg_schedule_hour_get(const mg_schedule* s, size_t hour, mg_schedule_hour* out) {
  if (const auto st = check_hour(s, hour); st != MG_OK) return st;
  if (!out) return null_arg("out");
  const auto& row = s->schedule.rows[hour];
  out->wind_kw = row.wind_kw;
  out->grid_kw = row.grid_kw;
  out->load_kw = row.load_kw;
  out->loss_kw = row.loss_kw;
  out->cost = row.cost;
  out->max_mismatch_pu = s->schedule.flows[hour].solution.max_mismatch;
  return MG_OK;
}

mg_status mg_schedule_unit_kw(const mg_schedule* s, size_t hour, size_t unit, double* out) {
  if (const auto st = check_hour(s, hour); st != MG_OK) return st;
  if (!out) return null_arg("out");
  const auto& v = s->schedule.rows[hour].unit_kw;
  if (unit >= v.size()) return fail(MG_ERR_INVALID_ARGUMENT, "unit index out of range");
  *out = v[unit];
  return MG_OK;
}

mg_status mg_schedule_storage_kw(const mg_schedule* s, size_t hour, size_t storage, double* out) {
  if (const auto st = check_hour(s, hour); st != MG_OK) return st;
  if (!out) return null_arg("out");
  const auto& v = s->schedule.rows[hour].storage_kw;
  if (storage >= v.size()) return fail(MG_ERR_INVALID_ARGUMENT, "storage index out of range");
  *out = v[storage];
  return MG_OK;
}

mg_status mg_schedule_soc_kwh(const mg_schedule* s, size_t hour, size_t storage, double* out) {
  if (const auto st = check_hour(s, hour); st != MG_OK) return st;
  if (!out) return null_arg("out");
  const auto& v = s->schedule.rows[hour].soc_kwh;
  if (storage >= v.size()) return fail(MG_ERR_INVALID_ARGUMENT, "storage index out of range");
  *out = v[storage];
  return MG_OK;
}

mg_status mg_schedule_best_trace(const mg_schedule* s, double* out, size_t capacity,
                                 size_t* count) {
  if (!s) return null_arg("schedule");
  return copy_out(s->trace, out, capacity, count);
}

mg_status mg_schedule_violation(const mg_schedule* s, size_t index, char* buffer,
                                size_t capacity) {
  if (!s) return null_arg("schedule");
  if (!buffer || capacity == 0) return null_arg("buffer");
  const auto& v = s->schedule.report.violations;
  if (index >= v.size()) return fail(MG_ERR_INVALID_ARGUMENT, "violation index out of range");
  return guarded([&] {
    const std::string text = describe(v[index]);
    const std::size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
    return MG_OK;
  });
}

mg_status mg_schedule_write_csv(const mg_schedule* s, const char* path) {
  if (!s) return null_arg("schedule");
  if (!path) return null_arg("path");
  return guarded([&] {
    detail::write_file(path, sched::schedule_csv(s->schedule));
    return MG_OK;
  });
}

mg_status mg_schedule_write_summary(const mg_schedule* s, const char* path) {
  if (!s) return null_arg("schedule");
  if (!path) return null_arg("path");
  return guarded([&] {
    detail::write_file(path, sched::summary_csv(s->schedule));
    return MG_OK;
  });
}

mg_status mg_series_load(const char* path, mg_series** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mg_series{forecast::load_series_csv(path)};
    return MG_OK;
  });
}

mg_status mg_series_from_values(const double* values, size_t count, mg_series** out) {
  if (!values && count) return null_arg("values");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mg_series{std::vector<double>(values, values + count)};
    return MG_OK;
  });
}

mg_status mg_series_synthetic(size_t points, uint64_t seed, mg_series** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mg_series{synthetic::wind_series(points, seed)};
    return MG_OK;
  });
}

mg_status mg_series_save(const mg_series* s, const char* path) {
  if (!s) return null_arg("series");
  if (!path) return null_arg("path");
  return guarded([&] {
    forecast::save_series_csv(s->values, path);
    return MG_OK;
  });
}

void mg_series_free(mg_series* s) { delete s; }

size_t mg_series_size(const mg_series* s) { return s ? s->values.size() : 0; }

const double* mg_series_data(const mg_series* s) { return s ? s->values.data() : nullptr; }

mg_status mg_perturb(const double* base, size_t count, double scale, uint64_t seed, double lo,
                     double hi, double* out) {
  if (!base && count) return null_arg("base");
  if (!out && count) return null_arg("out");
  return guarded([&] {
    const auto v = synthetic::perturb(std::vector<double>(base, base + count), scale, seed, lo, hi);
    std::copy(v.begin(), v.end(), out);
    return MG_OK;
  });
}

void mg_forecast_defaults(mg_forecast_settings* out) {
  if (!out) return;
  const forecast::NetworkConfig n;
  const forecast::TrainConfig t;
  out->kind = model_id(n.kind);
  out->window = n.window;
  out->horizon = n.horizon;
  out->hidden = n.hidden;
  out->layers = n.layers;
  out->dropout = n.dropout;
  out->pooling = n.pooling == forecast::Pooling::Final ? MG_POOL_FINAL : MG_POOL_MEAN;
  out->epochs = t.epochs;
  out->learning_rate = t.learning_rate;
  out->beta1 = t.beta1;
  out->beta2 = t.beta2;
  out->epsilon = t.epsilon;
  out->batch_size = t.batch_size;
  out->seed = t.seed;
  out->split = t.split;
}

const char* mg_model_name(mg_model_kind kind) {
  switch (kind) {
    case MG_MODEL_BLSTM: return "blstm";
    case MG_MODEL_LSTM: return "lstm";
    case MG_MODEL_ANN: return "ann";
  }
  return "unknown";
}

mg_status mg_metrics_compute(const double* predicted, const double* actual, size_t count,
                             mg_metrics* out) {
  if (!predicted || !actual) return null_arg("predicted/actual");
  if (!out) return null_arg("out");
  return guarded([&] {
    fill_metrics(forecast::evaluate({predicted, count}, {actual, count}), out);
    return MG_OK;
  });
}

mg_status mg_forecaster_train(const mg_series* series, const mg_forecast_settings* s,
                              mg_forecaster** out, mg_metrics* test_metrics) {
  if (!series) return null_arg("series");
  if (!s) return null_arg("settings");
  if (!out) return null_arg("out");
  return guarded([&] {
    forecast::NetworkConfig n;
    n.kind = model_kind(s->kind);
    n.window = s->window;
    n.horizon = s->horizon;
    n.hidden = s->hidden;
    n.layers = s->layers;
    n.dropout = s->dropout;
    n.pooling = s->pooling == MG_POOL_MEAN ? forecast::Pooling::Mean : forecast::Pooling::Final;
    forecast::TrainConfig t;
    t.epochs = s->epochs;
    t.learning_rate = s->learning_rate;
    t.beta1 = s->beta1;
    t.beta2 = s->beta2;
    t.epsilon = s->epsilon;
    t.batch_size = s->batch_size;
    t.seed = s->seed;
    t.split = s->split;
    auto report = forecast::fit_and_evaluate(series->values, n, t);
    fill_metrics(report.test, test_metrics);
    *out = new mg_forecaster{std::move(report.trained.net), std::move(report.trained.loss_trace)};
    return MG_OK;
  });
}

mg_status mg_forecaster_load(const char* path, mg_forecaster** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mg_forecaster{forecast::load_network(path), {}};
    return MG_OK;
  });
}

mg_status mg_forecaster_save(const mg_forecaster* f, const char* path) {
  if (!f) return null_arg("forecaster");
  if (!path) return null_arg("path");
  return guarded([&] {
    forecast::save_network(f->net, path);
    return MG_OK;
  });
}

void mg_forecaster_free(mg_forecaster* f) { delete f; }

mg_model_kind mg_forecaster_kind(const mg_forecaster* f) {
  return f ? model_id(f->net.config().kind) : MG_MODEL_BLSTM;
}

size_t mg_forecaster_window(const mg_forecaster* f) { return f ? f->net.config().window : 0; }

size_t mg_forecaster_horizon(const mg_forecaster* f) { return f ? f->net.config().horizon : 0; }

mg_status mg_forecaster_loss_trace(const mg_forecaster* f, double* out, size_t capacity,
                                   size_t* count) {
  if (!f) return null_arg("forecaster");
  return copy_out(f->loss_trace, out, capacity, count);
}

mg_status mg_forecaster_predict(const mg_forecaster* f, const double* window, size_t window_len,
                                double* out, size_t out_len) {
  if (!f) return null_arg("forecaster");
  if (!window) return null_arg("window");
  if (!out) return null_arg("out");
  return guarded([&] {
    if (out_len < f->net.config().horizon) {
      throw Error(ErrorCode::InvalidArgument, "output buffer shorter than the horizon");
    }
    const auto y = forecast::predict(f->net, {window, window_len});
    std::copy(y.begin(), y.end(), out);
    return MG_OK;
  });
}

}  // extern "C"
