#ifndef ECOSCHOOL_H
#define ECOSCHOOL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EsStatus {
  ES_STATUS_OK = 0,
  ES_STATUS_NULL_ARGUMENT = 1,
  ES_STATUS_INVALID_UTF8 = 2,
  ES_STATUS_NOT_FOUND = 3,
  ES_STATUS_VALIDATION = 4,
  ES_STATUS_BAD_REQUEST = 5,
  ES_STATUS_UNAUTHORIZED = 6,
  ES_STATUS_IO = 7,
  ES_STATUS_PANIC = 99,
} EsStatus;

/**
 * Opaque engine handle.
 */
typedef struct EsEngine EsEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Code of the last failure on this thread, or null. Valid until the next call.
 */
const char *es_last_error_code(void);

/**
 * Message of the last failure on this thread, or null. Valid until the next call.
 */
const char *es_last_error_message(void);

/**
 * Static version string.
 */
const char *es_version(void);

/**
 * Opens (or creates) a store directory.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum EsStatus es_engine_open(const char *path, struct EsEngine **out);

/**
 * A store that lives only as long as the handle.
 *
 * # Safety
 * `out` must be writable.
 */
enum EsStatus es_engine_in_memory(struct EsEngine **out);

/**
 * # Safety
 * `engine` must come from `es_engine_open`/`es_engine_in_memory` and not be used afterwards. Null is ignored.
 */
void es_engine_free(struct EsEngine *engine);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is ignored.
 */
void es_string_free(char *s);

/**
 * Registers a JSON site document; `out_json` receives the summary.
 *
 * # Safety
 * Pointers must be valid; `site_json` nul-terminated.
 */
enum EsStatus es_register_site(const struct EsEngine *engine,
                               const char *site_json,
                               char **out_json);

/**
 * Registers a JSON building profile; `out_json` receives the stored version.
 *
 * # Safety
 * Pointers must be valid; `profile_json` nul-terminated.
 */
enum EsStatus es_register_profile(const struct EsEngine *engine,
                                  const char *profile_json,
                                  char **out_json);

/**
 * Ingests `len` bytes of CSV. `out_json` receives the session summary even
 * when the session aborts, in which case the status is `BadRequest`.
 *
 * # Safety
 * `data` must point to `len` readable bytes.
 */
enum EsStatus es_ingest_csv(const struct EsEngine *engine,
                            const uint8_t *data,
                            size_t len,
                            char **out_json);

/**
 * Runs a built-in scenario by name, or a JSON scenario document. With
 * `ingest` nonzero the site is registered and the stream stored.
 * `out_csv` receives the generated stream.
 *
 * # Safety
 * Pointers must be valid; `scenario` nul-terminated.
 */
enum EsStatus es_simulate(const struct EsEngine *engine,
                          const char *scenario,
                          int32_t ingest,
                          char **out_csv);

/**
 * Runs one analysis and returns the same JSON body the HTTP service sends.
 *
 * `operation` is one of `buildings`, `energy`, `baseline`, `analyze_week`,
 * `evaluate`, `waste`, `contrast`, `progress`, `live`, `report`, `export`.
 * `request_json` holds the operation's parameters plus an optional
 * `building`; null or empty means `{}`. `export` returns CSV.
 *
 * # Safety
 * Pointers must be valid; strings nul-terminated.
 */
enum EsStatus es_query(const struct EsEngine *engine,
                       const char *operation,
                       const char *request_json,
                       char **out);

/**
 * Trapezoidal energy in kWh of `n` power samples (W at Unix seconds, ascending)
 * over `[window_start, window_end]`. Stretches longer than `max_gap_secs`
 * are not integrated; then the status is `Validation` with code
 * `GapExceeded` and the outputs hold the covered part.
 *
 * # Safety
 * `ts` and `watts` must point to `n` values; outputs must be writable.
 */
enum EsStatus es_integrate_power(const int64_t *ts,
                                 const double *watts,
                                 size_t n,
                                 int64_t window_start,
                                 int64_t window_end,
                                 int64_t max_gap_secs,
                                 double *out_kwh,
                                 double *out_coverage);

/**
 * Reduction of flexible consumption, `1 - saving / comparison`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EsStatus es_reduction_fraction(double comparison, double saving, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECOSCHOOL_H */
