#ifndef AIRSHOCK_H
#define AIRSHOCK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AirshockStatus {
  AIRSHOCK_STATUS_OK = 0,
  // A required pointer was null or a string was not UTF-8.
  AIRSHOCK_STATUS_INVALID_ARGUMENT = 1,
  AIRSHOCK_STATUS_IO = 2,
  AIRSHOCK_STATUS_PARSE = 3,
  AIRSHOCK_STATUS_AIRPORT_CODE = 4,
  AIRSHOCK_STATUS_VALIDATION = 5,
  AIRSHOCK_STATUS_INTERNAL = 6,
  AIRSHOCK_STATUS_PANIC = 7,
} AirshockStatus;

// Route corpus with its airport table.
typedef struct AirshockCorpus AirshockCorpus;

typedef struct AirshockCurve AirshockCurve;

// Baseline or scenario forecasts, carrying the airport table used for region filters.
typedef struct AirshockForecasts AirshockForecasts;

typedef struct AirshockLossTable AirshockLossTable;

typedef struct AirshockProfile AirshockProfile;

// One period of a loss table. Periods are indexed 0..=3 for Q1..Q4 and 4 for the year.
typedef struct AirshockLossRow {
  double revenue_loss_musd;
  double loss_share;
  double jobs_lost_m;
  double gdp_lost_busd;
  double economy_gdp_share;
} AirshockLossRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none.
// The pointer stays valid until the next failing call on the same thread.
const char *airshock_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *airshock_version(void);

// Loads a route-series CSV and its airport table.
//
// # Safety
// Paths must be NUL-terminated strings; `out` must be writable.
enum AirshockStatus airshock_corpus_load(const char *series_path,
                                         const char *airports_path,
                                         struct AirshockCorpus **out);

// Synthetic corpus from the default synthetic profile.
//
// # Safety
// `out` must be writable.
enum AirshockStatus airshock_corpus_synthetic(uint64_t seed,
                                              uintptr_t n_routes,
                                              struct AirshockCorpus **out);

// Routes whose peak monthly passengers reach `threshold`, as a new corpus.
//
// # Safety
// `corpus` must be a live handle; `out` must be writable.
enum AirshockStatus airshock_corpus_filter(const struct AirshockCorpus *corpus,
                                           uint32_t threshold,
                                           struct AirshockCorpus **out);

// Number of routes, or 0 for a null handle.
//
// # Safety
// `corpus` must be null or a live handle.
uintptr_t airshock_corpus_route_count(const struct AirshockCorpus *corpus);

// # Safety
// `corpus` must be null or a handle not freed before.
void airshock_corpus_free(struct AirshockCorpus *corpus);

// Baseline forecasts for every route of `corpus`, with the default Wuhan
// origin and the given January cut-off day (23 reproduces the default).
//
// # Safety
// `corpus` must be a live handle; `out` must be writable.
enum AirshockStatus airshock_forecast_corpus(const struct AirshockCorpus *corpus,
                                             uint32_t wuhan_cutoff_day,
                                             struct AirshockForecasts **out);

// # Safety
// `forecasts` must be null or a live handle.
uintptr_t airshock_forecasts_len(const struct AirshockForecasts *forecasts);

// Sum of expected passengers over all routes for `year` (2019 covers Nov-Dec only).
//
// # Safety
// `forecasts` must be a live handle; `out` must be writable.
enum AirshockStatus airshock_forecasts_total_passengers(const struct AirshockForecasts *forecasts,
                                                        int32_t year,
                                                        double *out);

// Sum of expected revenue (US$) over all routes for `year`.
//
// # Safety
// `forecasts` must be a live handle; `out` must be writable.
enum AirshockStatus airshock_forecasts_total_revenue(const struct AirshockForecasts *forecasts,
                                                     int32_t year,
                                                     double *out);

// Writes the forecasts as CSV, atomically.
//
// # Safety
// `forecasts` must be a live handle; `path` a NUL-terminated string.
enum AirshockStatus airshock_forecasts_write_csv(const struct AirshockForecasts *forecasts,
                                                 const char *path);

// Scales 2020 passenger volumes by `curve`, producing new forecasts.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum AirshockStatus airshock_forecasts_apply_curve(const struct AirshockForecasts *forecasts,
                                                   const struct AirshockCurve *curve,
                                                   struct AirshockForecasts **out);

// # Safety
// `forecasts` must be null or a handle not freed before.
void airshock_forecasts_free(struct AirshockForecasts *forecasts);

// A bundled scenario curve by name (SARS, MERS, COVID-12, COVID-L, EUROC, EUROC-12, EUROC-L).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum AirshockStatus airshock_curve_builtin(const char *name, struct AirshockCurve **out);

// Loads a `name=` / `m1=`..`m12=` curve file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum AirshockStatus airshock_curve_load(const char *path, struct AirshockCurve **out);

// Multiplier of 2020 month `month` (1..=12).
//
// # Safety
// `curve` must be a live handle; `out` must be writable.
enum AirshockStatus airshock_curve_multiplier(const struct AirshockCurve *curve,
                                              uint8_t month,
                                              double *out);

// # Safety
// `curve` must be null or a handle not freed before.
void airshock_curve_free(struct AirshockCurve *curve);

// `world`, `eu27`, or a path to a profile file.
//
// # Safety
// `name_or_path` must be a NUL-terminated string; `out` must be writable.
enum AirshockStatus airshock_profile_resolve(const char *name_or_path,
                                             struct AirshockProfile **out);

// # Safety
// `profile` must be null or a handle not freed before.
void airshock_profile_free(struct AirshockProfile *profile);

// Loss table of `scenario` against `baseline` for a region spec such as
// `global` or `origin_in:EU27`. The baseline's airport table resolves countries.
//
// # Safety
// Handles must be live; `region` a NUL-terminated string; `out` writable.
enum AirshockStatus airshock_assess(const struct AirshockForecasts *baseline,
                                    const struct AirshockForecasts *scenario,
                                    const char *region,
                                    const struct AirshockProfile *profile,
                                    double pass_through,
                                    struct AirshockLossTable **out);

// Row `period` (0..=3 quarters, 4 for the year) of a loss table.
//
// # Safety
// `table` must be a live handle; `out` must be writable.
enum AirshockStatus airshock_loss_table_row(const struct AirshockLossTable *table,
                                            uintptr_t period,
                                            struct AirshockLossRow *out);

// # Safety
// `table` must be null or a handle not freed before.
void airshock_loss_table_free(struct AirshockLossTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AIRSHOCK_H */
