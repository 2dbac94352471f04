/* C interface to the microgrid scheduling library.
 *
 * Every function that can fail returns mg_status; on failure mg_last_error()
 * gives a message for the calling thread. Objects are opaque and owned by
 * the caller, who releases them with the matching *_free function (which
 * accepts NULL). */
#ifndef MGSCHED_H
#define MGSCHED_H

#include <stddef.h>
#include <stdint.h>

#if defined(MGSCHED_BUILDING)
#define MG_API __attribute__((visibility("default")))
#else
#define MG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mg_status {
  MG_OK = 0,
  MG_ERR_INVALID_ARGUMENT = 1,
  MG_ERR_PARSE = 2,
  MG_ERR_VALIDATION = 3,
  MG_ERR_IO = 4,
  MG_ERR_NOT_CONVERGED = 5,
  MG_ERR_SINGULAR = 6,
  MG_ERR_DIVERGED = 7,
  MG_ERR_INFEASIBLE = 8,
  MG_ERR_INTERNAL = 9
} mg_status;

MG_API const char* mg_last_error(void);
MG_API const char* mg_status_name(mg_status status);

/* ---- cases ---- */

typedef struct mg_case mg_case;

typedef enum mg_profile {
  MG_PROFILE_PRICE = 0,
  MG_PROFILE_LOAD_FACTOR = 1,
  MG_PROFILE_WIND_ACTUAL = 2,
  MG_PROFILE_WIND_FORECAST = 3,
  MG_PROFILE_RESERVE = 4
} mg_profile;

MG_API mg_status mg_case_builtin_ieee33(mg_case** out);
MG_API mg_status mg_case_load(const char* path, mg_case** out);
MG_API mg_status mg_case_save(const mg_case* c, const char* path);
MG_API void mg_case_free(mg_case* c);

MG_API size_t mg_case_hours(const mg_case* c);
MG_API size_t mg_case_bus_count(const mg_case* c);

/* Replaces one 24-value (or case-length) profile. */
MG_API mg_status mg_case_set_profile(mg_case* c, mg_profile which, const double* values,
                                     size_t count);
/* Copies up to `capacity` values into `out`; `*count` receives the length. */
MG_API mg_status mg_case_get_profile(const mg_case* c, mg_profile which, double* out,
                                     size_t capacity, size_t* count);
MG_API mg_status mg_case_load_profile_csv(mg_case* c, mg_profile which, const char* path);

/* Writes an `hour,value` profile file. */
MG_API mg_status mg_profile_csv_save(const double* values, size_t count, const char* path);

/* ---- optimizer settings ---- */

typedef struct mg_tlbo_settings {
  size_t population;
  size_t iterations;
  uint64_t seed;
  int per_dimension_r; /* nonzero: one r per gene instead of per individual */
  size_t threads;      /* 0 = hardware concurrency; results do not depend on it */
} mg_tlbo_settings;

MG_API void mg_tlbo_defaults(mg_tlbo_settings* out);

/* Runs the sphere, Rosenbrock and Rastrigin benchmarks and writes
 * `function,dim,pop,iters,seed,best_fitness,evals`. */
MG_API mg_status mg_tlbo_benchmark_csv(uint64_t seed, const char* path);

/* ---- scheduling ---- */

typedef enum mg_wind_source { MG_WIND_ACTUAL = 0, MG_WIND_FORECAST = 1 } mg_wind_source;

typedef struct mg_schedule_settings {
  mg_tlbo_settings tlbo;
  mg_wind_source wind;
  int include_wind_cost;
  int repair;
} mg_schedule_settings;

MG_API void mg_schedule_defaults(mg_schedule_settings* out);

typedef struct mg_schedule mg_schedule;

typedef struct mg_schedule_totals {
  double total_cost;
  double operating_cost;
  double generation_cost;
  double startup_cost;
  double shutdown_cost;
  double storage_cost;
  double wind_cost;
  double grid_cost;
  double penalty;
  double daily_loss_kwh;
  double max_voltage_deviation_pu;
  size_t violations;
  size_t unsolved_hours;
  int feasible;
  size_t evaluations;
} mg_schedule_totals;

typedef struct mg_schedule_hour {
  double wind_kw;
  double grid_kw;
  double load_kw;
  double loss_kw;
  double cost;
  double max_mismatch_pu;
} mg_schedule_hour;

/* Optimizes the case and decodes the best vector. An infeasible optimum is
 * still returned (check totals.feasible); MG_ERR_NOT_CONVERGED means the
 * final schedule has an hour whose power flow cannot be solved. */
MG_API mg_status mg_schedule_run(const mg_case* c, const mg_schedule_settings* settings,
                                 mg_schedule** out);
MG_API void mg_schedule_free(mg_schedule* s);

MG_API size_t mg_schedule_hours(const mg_schedule* s);
MG_API size_t mg_schedule_unit_count(const mg_schedule* s);
MG_API size_t mg_schedule_storage_count(const mg_schedule* s);
MG_API mg_status mg_schedule_totals_get(const mg_schedule* s, mg_schedule_totals* out);
MG_API mg_status mg_schedule_hour_get(const mg_schedule* s, size_t hour, mg_schedule_hour* out);
MG_API mg_status mg_schedule_unit_kw(const mg_schedule* s, size_t hour, size_t unit, double* out);
MG_API mg_status mg_schedule_storage_kw(const mg_schedule* s, size_t hour, size_t storage,
                                        double* out);
MG_API mg_status mg_schedule_soc_kwh(const mg_schedule* s, size_t hour, size_t storage,
                                     double* out);
MG_API mg_status mg_schedule_best_trace(const mg_schedule* s, double* out, size_t capacity,
                                        size_t* count);

/* Human-readable description of violation `index` (0 <= index < violations). */
MG_API mg_status mg_schedule_violation(const mg_schedule* s, size_t index, char* buffer,
                                       size_t capacity);

/* `hour,storage_kw,mt1_kw,mt2_kw,wind_kw,grid_kw,soc_kwh,cost` rows. */
MG_API mg_status mg_schedule_write_csv(const mg_schedule* s, const char* path);
/* `key,value` totals. */
MG_API mg_status mg_schedule_write_summary(const mg_schedule* s, const char* path);

/* ---- series ---- */

typedef struct mg_series mg_series;

MG_API mg_status mg_series_load(const char* path, mg_series** out);
MG_API mg_status mg_series_from_values(const double* values, size_t count, mg_series** out);
/* Hourly wind-like series in MW: daily sine plus AR(1) noise. */
MG_API mg_status mg_series_synthetic(size_t points, uint64_t seed, mg_series** out);
MG_API mg_status mg_series_save(const mg_series* s, const char* path);
MG_API void mg_series_free(mg_series* s);
MG_API size_t mg_series_size(const mg_series* s);
MG_API const double* mg_series_data(const mg_series* s);

/* out[i] = clamp(base[i] + scale * e[i], lo, hi) with e seeded unit-variance
 * AR(1) noise; the same seed gives the same e for every scale. */
MG_API mg_status mg_perturb(const double* base, size_t count, double scale, uint64_t seed,
                            double lo, double hi, double* out);

/* ---- forecasting ---- */

typedef enum mg_model_kind { MG_MODEL_BLSTM = 0, MG_MODEL_LSTM = 1, MG_MODEL_ANN = 2 } mg_model_kind;
typedef enum mg_pooling { MG_POOL_FINAL = 0, MG_POOL_MEAN = 1 } mg_pooling;

typedef struct mg_forecast_settings {
  mg_model_kind kind;
  size_t window;
  size_t horizon;
  size_t hidden;
  size_t layers;
  double dropout;
  mg_pooling pooling;
  size_t epochs;
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  size_t batch_size;
  uint64_t seed;
  double split;
} mg_forecast_settings;

MG_API void mg_forecast_defaults(mg_forecast_settings* out);
MG_API const char* mg_model_name(mg_model_kind kind);

typedef struct mg_metrics {
  double mape; /* percent; only meaningful when mape_defined */
  int mape_defined;
  double mae;
  double rmse;
} mg_metrics;

MG_API mg_status mg_metrics_compute(const double* predicted, const double* actual, size_t count,
                                    mg_metrics* out);

typedef struct mg_forecaster mg_forecaster;

/* Splits the series, trains on the first part and scores the rest. */
MG_API mg_status mg_forecaster_train(const mg_series* series, const mg_forecast_settings* settings,
                                     mg_forecaster** out, mg_metrics* test_metrics);
MG_API mg_status mg_forecaster_load(const char* path, mg_forecaster** out);
MG_API mg_status mg_forecaster_save(const mg_forecaster* f, const char* path);
MG_API void mg_forecaster_free(mg_forecaster* f);

MG_API mg_model_kind mg_forecaster_kind(const mg_forecaster* f);
MG_API size_t mg_forecaster_window(const mg_forecaster* f);
MG_API size_t mg_forecaster_horizon(const mg_forecaster* f);
/* Mean training loss per epoch; empty for a loaded model. */
MG_API mg_status mg_forecaster_loss_trace(const mg_forecaster* f, double* out, size_t capacity,
                                          size_t* count);
/* `window` raw values in, `horizon` raw values out. */
MG_API mg_status mg_forecaster_predict(const mg_forecaster* f, const double* window,
                                       size_t window_len, double* out, size_t out_len);

#ifdef __cplusplus
}
#endif

#endif
