#ifndef SEMCOM_H
#define SEMCOM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of an API call.
typedef enum {
  SEMCOM_STATUS_OK = 0,
  // A required pointer argument was null.
  SEMCOM_STATUS_NULL_POINTER = 1,
  // An argument was out of range, mis-sized or not valid UTF-8.
  SEMCOM_STATUS_INVALID_ARGUMENT = 2,
  // Bad configuration, unknown policy or unknown dataset.
  SEMCOM_STATUS_CONFIG = 3,
  // Reading or writing a file failed.
  SEMCOM_STATUS_IO = 4,
  // A numerical routine failed (for example a covariance that is not
  // positive definite).
  SEMCOM_STATUS_NUMERICAL = 5,
  // A Rust panic was caught at the boundary.
  SEMCOM_STATUS_PANIC = 6,
} SemcomStatus;

// Opaque system configuration.
typedef struct SemcomConfig SemcomConfig;

// Opaque online controller, driven one slot at a time by the caller.
typedef struct SemcomController SemcomController;

// Opaque finished simulation run.
typedef struct SemcomRun SemcomRun;

// Run-level metrics. Averages are arithmetic means of per-user means.
typedef struct {
  uint64_t slots;
  uint64_t users;
  double avg_satisfaction_pct;
  double avg_psnr_db;
  double avg_latency_ms;
  // Objective per slot, averaged over slots.
  double objective;
  double inference_ms_mean;
  double update_ms_mean;
} SemcomSummary;

// Metrics of one user.
typedef struct {
  uint32_t user_id;
  double satisfaction_pct;
  double mean_psnr_db;
  double mean_latency_ms;
} SemcomUserSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none failed.
// The pointer stays valid until the next failing call on the same thread.
const char *semcom_last_error(void);

// Library version as a static NUL-terminated string.
const char *semcom_version(void);

// Built-in four-user configuration.
//
// # Safety
// `out` must be valid for a pointer write.
SemcomStatus semcom_config_default(SemcomConfig **out);

// Parses a TOML configuration held in memory.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be valid for a pointer write.
SemcomStatus semcom_config_parse(const char *toml, SemcomConfig **out);

// Loads a TOML configuration file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for a pointer write.
SemcomStatus semcom_config_load(const char *path, SemcomConfig **out);

// # Safety
// `cfg` must be a live handle or null.
SemcomStatus semcom_config_set_seed(SemcomConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a live handle or null.
SemcomStatus semcom_config_set_slots(SemcomConfig *cfg, uint64_t slots);

// # Safety
// `cfg` must be a live handle or null; `out` must be valid for a write.
SemcomStatus semcom_config_num_users(const SemcomConfig *cfg, size_t *out);

// # Safety
// `cfg` must be null or a handle from this library that has not been freed.
void semcom_config_free(SemcomConfig *cfg);

// Runs one policy (`proposed`, `psnr_max`, `latency_min` or
// `psnr_feasible`) over the configured number of slots.
//
// # Safety
// `cfg` must be a live handle; `policy` a NUL-terminated string; `out` valid
// for a pointer write.
SemcomStatus semcom_simulate(const SemcomConfig *cfg, const char *policy, SemcomRun **out);

// # Safety
// `run` must be a live handle; `out` valid for a write.
SemcomStatus semcom_run_summary(const SemcomRun *run, SemcomSummary *out);

// Metrics of the user at position `index` (0-based, configuration order).
//
// # Safety
// `run` must be a live handle; `out` valid for a write.
SemcomStatus semcom_run_user_summary(const SemcomRun *run, size_t index, SemcomUserSummary *out);

// Writes `records.csv` and `summary.json` into `dir`, creating it if needed.
//
// # Safety
// `run` and `cfg` must be live handles; `dir` a NUL-terminated string.
SemcomStatus semcom_run_write(const SemcomRun *run, const SemcomConfig *cfg, const char *dir);

// # Safety
// `run` must be null or a handle from this library that has not been freed.
void semcom_run_free(SemcomRun *run);

// Creates an online controller. The configuration is copied.
//
// # Safety
// `cfg` must be a live handle; `out` valid for a pointer write.
SemcomStatus semcom_controller_new(const SemcomConfig *cfg, SemcomController **out);

// Chooses the compression ratios for slot `t` from the per-user SNRs (dB).
// `n` must equal the number of configured users; `cr_out` receives `n` values.
//
// # Safety
// `ctl` must be a live handle; `snr_db` readable and `cr_out` writable for `n` values.
SemcomStatus semcom_controller_decide(SemcomController *ctl,
                                      uint64_t t,
                                      const double *snr_db,
                                      size_t n,
                                      double *cr_out);

// Feeds back the quality reported for slot `t` at the CRs actually used.
//
// # Safety
// `ctl` must be a live handle; `snr_db`, `cr` and `quality_db` readable for `n` values.
SemcomStatus semcom_controller_observe(SemcomController *ctl,
                                       uint64_t t,
                                       const double *snr_db,
                                       const double *cr,
                                       const double *quality_db,
                                       size_t n);

// # Safety
// `ctl` must be null or a handle from this library that has not been freed.
void semcom_controller_free(SemcomController *ctl);

// Splits `total_rate` (bits/s) over `n` users in proportion to
// `sqrt(eps * source_dim)` and reports each user's latency in seconds.
//
// # Safety
// `eps` and `source_dim` readable, `rates_out` and `latency_out` writable for `n` values.
SemcomStatus semcom_allocate_rates(const double *eps,
                                   const uint64_t *source_dim,
                                   size_t n,
                                   double total_rate,
                                   uint32_t bits_per_symbol,
                                   double *rates_out,
                                   double *latency_out);

// Standard-normal quantile of `confidence`, which must lie in (0, 1).
//
// # Safety
// `out` must be valid for a write.
SemcomStatus semcom_confidence_to_beta(double confidence, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMCOM_H */
