#ifndef FDAM_H
#define FDAM_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FdamStatus {
  FDAM_STATUS_OK = 0,
  FDAM_STATUS_NULL_POINTER = 1,
  FDAM_STATUS_INVALID_UTF8 = 2,
  FDAM_STATUS_INVALID_CONFIG = 3,
  FDAM_STATUS_SIMULATION = 4,
  FDAM_STATUS_IO = 5,
  FDAM_STATUS_OUT_OF_RANGE = 6,
  FDAM_STATUS_BUFFER_TOO_SMALL = 7,
  FDAM_STATUS_PANIC = 8,
} FdamStatus;

/**
 * Validated campaign configuration with its pulse and Farrow filter.
 */
typedef struct FdamCampaign FdamCampaign;

/**
 * Sorted result rows of a finished campaign.
 */
typedef struct FdamResults FdamResults;

typedef struct FdamRow {
  /**
   * 0 = iDAM, 1 = fDAM, 2 = OFDM.
   */
  uint32_t scheme;
  /**
   * 0 = ZF, 1 = MRT, 2 = MMSE.
   */
  uint32_t beamformer;
  double snr_db;
  uint64_t trial;
  uint64_t errors;
  uint64_t symbols;
  double ser;
  double sinr_emp_db;
  double sinr_ana_db;
  double se_bps_hz;
  double papr_p50_db;
  double papr_p99_db;
  uint64_t seed;
} FdamRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread, NUL-terminated, into `buf`.
 * `needed` (optional) receives the required size including the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
enum FdamStatus fdam_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * Parse and validate a `key = value` configuration.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `out` must be writable.
 */
enum FdamStatus fdam_campaign_new(const char *config, struct FdamCampaign **out);

/**
 * # Safety
 * `campaign` must come from [`fdam_campaign_new`] or be null.
 */
void fdam_campaign_free(struct FdamCampaign *campaign);

/**
 * Run every trial.
 *
 * # Safety
 * `campaign` must be a live handle; `out` must be writable.
 */
enum FdamStatus fdam_campaign_run(const struct FdamCampaign *campaign, struct FdamResults **out);

/**
 * Text record of the channel drawn for `trial`, NUL-terminated.
 *
 * # Safety
 * `campaign` must be a live handle; `buf` valid for `len` bytes.
 */
enum FdamStatus fdam_campaign_channel_record(const struct FdamCampaign *campaign,
                                             uint64_t trial,
                                             char *buf,
                                             size_t len,
                                             size_t *needed);

/**
 * # Safety
 * `results` must be a live handle.
 */
size_t fdam_results_len(const struct FdamResults *results);

/**
 * # Safety
 * `results` must be a live handle; `out` must be writable.
 */
enum FdamStatus fdam_results_row(const struct FdamResults *results,
                                 size_t index,
                                 struct FdamRow *out);

/**
 * Write the results CSV and its `.meta` sidecar.
 *
 * # Safety
 * `results` must be a live handle; `path` a NUL-terminated string.
 */
enum FdamStatus fdam_results_write_csv(const struct FdamResults *results, const char *path);

/**
 * # Safety
 * `results` must come from [`fdam_campaign_run`] or be null.
 */
void fdam_results_free(struct FdamResults *results);

/**
 * Farrow response error at offset `mu` and frequency `f` (cycles/sample).
 *
 * # Safety
 * `magnitude_error` and `phase_delay_error` must be writable.
 */
enum FdamStatus fdam_farrow_deviation(size_t order,
                                      double mu,
                                      double f,
                                      double *magnitude_error,
                                      double *phase_delay_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDAM_H */
