#ifndef PRESPA_H
#define PRESPA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define PRESPA_OK 0

#define PRESPA_ERR_NULL_POINTER 1

// Bad argument, configuration or dimension.
#define PRESPA_ERR_INVALID_ARGUMENT 2

// A numerical routine failed (integration, fit, optimizer, truncation...).
#define PRESPA_ERR_NUMERICAL 3

#define PRESPA_ERR_IO 4

#define PRESPA_ERR_BUFFER_TOO_SMALL 5

// An internal panic was caught at the boundary.
#define PRESPA_ERR_PANIC 6

#define PRESPA_PROFILE_DESK 0

#define PRESPA_PROFILE_PAPER 1

#define PRESPA_CODE_OPTIMAL 0

#define PRESPA_CODE_EXPERIMENTAL 1

// Logical cardinal states, in the order +Z, −Z, +X, −X, +Y, −Y.
#define PRESPA_CARDINAL_PLUS_Z 0

#define PRESPA_CARDINAL_MINUS_Z 1

#define PRESPA_CARDINAL_PLUS_X 2

#define PRESPA_CARDINAL_MINUS_X 3

#define PRESPA_CARDINAL_PLUS_Y 4

#define PRESPA_CARDINAL_MINUS_Y 5

// A resolved run configuration.
typedef struct PrespaConfig PrespaConfig;

// The outcome of one simulation command.
typedef struct PrespaResult PrespaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *prespa_version(void);

// Message for the last failed call on this thread, or NULL after a
// successful call. Valid until the next library call on the same thread.
const char *prespa_last_error_message(void);

// Default configuration for `profile_id` (`PRESPA_PROFILE_*`).
//
// # Safety
// `out` must be valid for writing a pointer.
int32_t prespa_config_new(int32_t profile_id, struct PrespaConfig **out);

// Parses a JSON configuration merged over the defaults of `profile_id`.
//
// # Safety
// `json` must be NUL-terminated; `out` must be valid for writing a pointer.
int32_t prespa_config_from_json(const char *json, int32_t profile_id, struct PrespaConfig **out);

// # Safety
// `cfg` must be a live handle from this library.
int32_t prespa_config_set_seed(struct PrespaConfig *cfg, uint64_t seed);

// Pretty-printed JSON of the full configuration.
//
// # Safety
// `cfg` must be a live handle; `buf` must hold `cap` bytes or be NULL;
// `needed` may be NULL.
int32_t prespa_config_to_json(const struct PrespaConfig *cfg,
                              char *buf,
                              uintptr_t cap,
                              uintptr_t *needed);

// # Safety
// `cfg` must be NULL or a handle not yet freed.
void prespa_config_free(struct PrespaConfig *cfg);

// Runs the command-line subcommand `command` (for example `"budget"` or
// `"trajectory"`) without writing files. A run whose internal check fails
// still returns `PRESPA_OK`; see [`prespa_result_failure`].
//
// # Safety
// `cfg` must be a live handle, `command` NUL-terminated and `out` valid for
// writing a pointer.
int32_t prespa_run(const struct PrespaConfig *cfg, const char *command, struct PrespaResult **out);

// The run's table in CSV form.
//
// # Safety
// As for [`prespa_config_to_json`].
int32_t prespa_result_csv(const struct PrespaResult *res,
                          char *buf,
                          uintptr_t cap,
                          uintptr_t *needed);

// The run's summary as a compact JSON object.
//
// # Safety
// As for [`prespa_config_to_json`].
int32_t prespa_result_summary_json(const struct PrespaResult *res,
                                   char *buf,
                                   uintptr_t cap,
                                   uintptr_t *needed);

// Human-readable report lines.
//
// # Safety
// As for [`prespa_config_to_json`].
int32_t prespa_result_report(const struct PrespaResult *res,
                             char *buf,
                             uintptr_t cap,
                             uintptr_t *needed);

// Failure description of a completed run; an empty string when it passed.
//
// # Safety
// As for [`prespa_config_to_json`].
int32_t prespa_result_failure(const struct PrespaResult *res,
                              char *buf,
                              uintptr_t cap,
                              uintptr_t *needed);

// # Safety
// `res` must be NULL or a handle not yet freed.
void prespa_result_free(struct PrespaResult *res);

// Writes ⟨n⟩ and ⟨n²⟩ of the two code words as
// `{n_zero, n_one, n2_zero, n2_one}`.
//
// # Safety
// `out` must point to 4 writable doubles.
int32_t prespa_codeword_moments(int32_t code_id, double *out);

// Probabilities of 0..=jmax compound loss-and-recovery jumps after
// exposure `kappa_t` for a logical cardinal state in a cavity of dimension
// `dim`. `probs` receives `jmax + 1` values; `deficit` (may be NULL) the
// probability of more than `jmax` jumps.
//
// # Safety
// `probs` must point to `probs_len` writable doubles.
int32_t prespa_jump_count_probs(int32_t code_id,
                                int32_t cardinal_id,
                                uintptr_t dim,
                                double kappa_t,
                                uintptr_t jmax,
                                double *probs,
                                uintptr_t probs_len,
                                double *deficit);

// Total longitudinal and transverse logical error rates (ms⁻¹) of the
// configured budget (the built-in reference when `budget.input` is unset).
//
// # Safety
// `cfg` must be a live handle; both outputs must be writable.
int32_t prespa_budget_totals(const struct PrespaConfig *cfg,
                             double *longitudinal,
                             double *transverse);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRESPA_H */
