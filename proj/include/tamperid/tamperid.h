/* C interface to the tamperid library: binary-observation FIR identification
 * under bit-flip tampering, the probe-based attack estimator, the adaptive
 * tracking controller and the Monte Carlo experiment runner.
 *
 * Every function returns a tamperid_status. On failure the message and (for
 * configuration errors) the offending key are available from
 * tamperid_last_error() / tamperid_last_error_key() on the calling thread
 * until the next call into the library.
 */
#ifndef TAMPERID_TAMPERID_H
#define TAMPERID_TAMPERID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TAMPERID_BUILDING)
#    define TAMPERID_API __declspec(dllexport)
#  else
#    define TAMPERID_API __declspec(dllimport)
#  endif
#else
#  define TAMPERID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tamperid_status {
  TAMPERID_OK = 0,
  TAMPERID_ERR_INVALID_ARGUMENT = 1, /* null handle, bad buffer, bad index */
  TAMPERID_ERR_CONFIG = 2,           /* see tamperid_last_error_key() */
  TAMPERID_ERR_DIMENSION = 3,
  TAMPERID_ERR_NUMERICAL = 4,
  TAMPERID_ERR_IO = 5,
  TAMPERID_ERR_INTERNAL = 6
} tamperid_status;

typedef struct tamperid_config tamperid_config;
typedef struct tamperid_result tamperid_result;
typedef struct tamperid_estimator tamperid_estimator;

typedef struct tamperid_replica_summary {
  double sq_error; /* |theta_hat_N - theta|^2 */
  double p_hat;
  double q_hat;
  double tracking_cost; /* J_N, NaN without a controller */
  double regret;        /* cumulative */
  int64_t guarded_steps;
  int64_t bound_violations;
  int64_t gain_repairs;
} tamperid_replica_summary;

TAMPERID_API const char* tamperid_version(void);
TAMPERID_API const char* tamperid_status_name(tamperid_status status);
TAMPERID_API const char* tamperid_last_error(void);
TAMPERID_API const char* tamperid_last_error_key(void);

/* Presets. Each preset expands to one or more runs. */
TAMPERID_API size_t tamperid_preset_count(void);
TAMPERID_API const char* tamperid_preset_name(size_t index);
TAMPERID_API tamperid_status tamperid_preset_runs(const char* name, size_t* count);
TAMPERID_API tamperid_status tamperid_preset_create(const char* name, size_t run, tamperid_config** out);

/* Configuration: flat key=value map with defaults for every key. */
TAMPERID_API tamperid_status tamperid_config_create(tamperid_config** out);
TAMPERID_API tamperid_status tamperid_config_parse(const char* text, tamperid_config** out);
TAMPERID_API tamperid_status tamperid_config_load(const char* path, tamperid_config** out);
TAMPERID_API void tamperid_config_destroy(tamperid_config* config);
TAMPERID_API tamperid_status tamperid_config_set(tamperid_config* config, const char* key, const char* value);
/* `assignment` is "key=value". */
TAMPERID_API tamperid_status tamperid_config_apply(tamperid_config* config, const char* assignment);
/* Copies into buf (NUL-terminated) when it fits; *needed gets the size
 * including the terminator. buf may be NULL to query the size. */
TAMPERID_API tamperid_status tamperid_config_get(const tamperid_config* config, const char* key, char* buf,
                                                 size_t buflen, size_t* needed);
TAMPERID_API tamperid_status tamperid_config_dump(const tamperid_config* config, char* buf, size_t buflen,
                                                  size_t* needed);
TAMPERID_API tamperid_status tamperid_config_validate(const tamperid_config* config);

/* Runs every replica. out_dir may be NULL (nothing written); threads = 0
 * uses TAMPERID_THREADS or the hardware concurrency. On a replica failure
 * the completed prefix is still written (status=partial) and the error is
 * returned; *out is left NULL. */
TAMPERID_API tamperid_status tamperid_run(const tamperid_config* config, const char* out_dir, int emit_gnuplot,
                                          unsigned threads, tamperid_result** out);
TAMPERID_API void tamperid_result_destroy(tamperid_result* result);
TAMPERID_API tamperid_status tamperid_result_name(const tamperid_result* result, char* buf, size_t buflen,
                                                  size_t* needed);
TAMPERID_API tamperid_status tamperid_result_length(const tamperid_result* result, size_t* n);
/* Column names follow the CSV header. `out` must hold tamperid_result_length
 * values. */
TAMPERID_API tamperid_status tamperid_result_column(const tamperid_result* result, const char* column, double* out,
                                                    size_t n);
TAMPERID_API tamperid_status tamperid_result_envelope_constant(const tamperid_result* result, double* out);
TAMPERID_API tamperid_status tamperid_result_replica_count(const tamperid_result* result, size_t* n);
/* theta may be NULL; otherwise it must hold dim entries. */
TAMPERID_API tamperid_status tamperid_result_replica(const tamperid_result* result, size_t index,
                                                     tamperid_replica_summary* summary, double* theta, size_t dim);

/* Stand-alone estimator built from a config (algorithm, parameter set, noise,
 * sensor threshold, channel or defense). For the -up algorithms the estimator
 * owns a defense state fed through tamperid_estimator_ingest_probe. */
TAMPERID_API tamperid_status tamperid_estimator_create(const tamperid_config* config, tamperid_estimator** out);
TAMPERID_API void tamperid_estimator_destroy(tamperid_estimator* estimator);
TAMPERID_API tamperid_status tamperid_estimator_dim(const tamperid_estimator* estimator, size_t* dim);
/* bit: received (possibly tampered) observation, 0 or 1. */
TAMPERID_API tamperid_status tamperid_estimator_update(tamperid_estimator* estimator, const double* phi, size_t dim,
                                                       int bit);
TAMPERID_API tamperid_status tamperid_estimator_ingest_probe(tamperid_estimator* estimator, int sent, int received);
TAMPERID_API tamperid_status tamperid_estimator_theta(const tamperid_estimator* estimator, double* out, size_t dim);
TAMPERID_API tamperid_status tamperid_estimator_attack_estimate(const tamperid_estimator* estimator, double* p,
                                                                double* q);

#ifdef __cplusplus
}
#endif

#endif
