#ifndef GRAVECHO_H
#define GRAVECHO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GeConvention {
  GE_CONVENTION_PAPER_NUMBERS = 0,
  GE_CONVENTION_LN2_LITERAL = 1,
} GeConvention;

/**
 * Status codes; 1-4 match the command-line exit codes.
 */
typedef enum GeStatus {
  GE_STATUS_OK = 0,
  GE_STATUS_IO = 1,
  GE_STATUS_CONFIG = 2,
  GE_STATUS_NUMERICAL = 3,
  GE_STATUS_NO_ECHO = 4,
  GE_STATUS_NULL_ARGUMENT = 5,
  GE_STATUS_BUFFER_TOO_SMALL = 6,
  GE_STATUS_OUT_OF_RANGE = 7,
  GE_STATUS_PANIC = 8,
} GeStatus;

/**
 * The outcome of [`ge_run`].
 */
typedef struct GeResult GeResult;

/**
 * A resolved scenario with its physics settings.
 */
typedef struct GeScenario GeScenario;

typedef struct GeEchoMetrics {
  uint32_t m;
  double a;
  double b;
  double tau;
  double efficiency;
  double fidelity;
} GeEchoMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ge_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ge_version(void);

/**
 * Build a scenario from a built-in preset name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum GeStatus ge_scenario_from_preset(const char *name, struct GeScenario **out);

/**
 * Build a scenario from TOML run-config text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum GeStatus ge_scenario_from_config(const char *toml, struct GeScenario **out);

/**
 * Switch the linewidth convention of a scenario.
 *
 * # Safety
 * `scenario` must come from a `ge_scenario_from_*` call and not be freed.
 */
enum GeStatus ge_scenario_set_convention(struct GeScenario *scenario, enum GeConvention convention);

/**
 * Number of targets in the scenario (0 for null).
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
size_t ge_scenario_target_count(const struct GeScenario *scenario);

/**
 * # Safety
 * `scenario` must be null or a live handle; it is invalid afterwards.
 */
void ge_scenario_free(struct GeScenario *scenario);

/**
 * Simulate and analyse a scenario. Missing echoes do not fail the run; see
 * [`ge_result_metrics_status`].
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum GeStatus ge_run(const struct GeScenario *scenario, struct GeResult **out);

/**
 * # Safety
 * `result` must be null or a live handle; it is invalid afterwards.
 */
void ge_result_free(struct GeResult *result);

/**
 * Samples per boundary record (0 for null).
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ge_result_len(const struct GeResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ge_result_target_count(const struct GeResult *result);

/**
 * Copy the drive Ω(t) entering the first target. `times` may be null.
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum GeStatus ge_result_copy_input(const struct GeResult *result,
                                   double *times,
                                   double *re,
                                   double *im,
                                   size_t len);

/**
 * Copy the field leaving target `target` (1-based). `times` may be null.
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum GeStatus ge_result_copy_output(const struct GeResult *result,
                                    size_t target,
                                    double *times,
                                    double *re,
                                    double *im,
                                    size_t len);

/**
 * Why no metrics exist: `GE_STATUS_OK` when they do or were not requested.
 *
 * # Safety
 * `result` must be a live handle.
 */
enum GeStatus ge_result_metrics_status(const struct GeResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ge_result_metrics_count(const struct GeResult *result);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum GeStatus ge_result_metric(const struct GeResult *result,
                               size_t index,
                               struct GeEchoMetrics *out);

/**
 * Spectrum points (0 when no spectrum was computed).
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ge_result_spectrum_len(const struct GeResult *result);

/**
 * Copy S(ω) with ω in units of Γ0.
 *
 * # Safety
 * Both buffers must hold `len` doubles.
 */
enum GeStatus ge_result_copy_spectrum(const struct GeResult *result,
                                      double *omega_gamma0,
                                      double *s,
                                      size_t len);

/**
 * Redshift gradient K (rad s^-1 m^-1) for the default constants.
 */
double ge_redshift_gradient(void);

/**
 * Δ(z, x, θ) in rad/s for the default constants.
 */
double ge_detuning(double z, double x, double theta);

/**
 * Detuning in units of Γ0 under a convention.
 */
double ge_detuning_gamma0(double z, double x, double theta, enum GeConvention convention);

/**
 * Speed (m/s) at which the transverse Doppler shift cancels the detuning at `z`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GeStatus ge_critical_speed(double z, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAVECHO_H */
