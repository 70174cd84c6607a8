#ifndef MPD_H
#define MPD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MPD_STATUS_OK = 0,
  MPD_STATUS_NULL_POINTER = 1,
  MPD_STATUS_INVALID_ARGUMENT = 2,
  MPD_STATUS_DIMENSION_MISMATCH = 3,
  MPD_STATUS_CONFIG = 4,
  MPD_STATUS_NUMERICAL = 5,
  MPD_STATUS_IO = 6,
  MPD_STATUS_PANIC = 7,
} MpdStatus;

typedef enum {
  MPD_ALGORITHM_PGD = 0,
  MPD_ALGORITHM_MPD = 1,
  MPD_ALGORITHM_MPD_NC = 2,
  MPD_ALGORITHM_THETA_ONLY = 3,
  MPD_ALGORITHM_X_ONLY = 4,
} MpdAlgorithm;

/**
 * A latent-variable model with its data.
 */
typedef struct MpdModel MpdModel;

/**
 * A particle system advancing under one algorithm.
 */
typedef struct MpdSampler MpdSampler;

/**
 * Damping, inverse mass and step size of each component.
 */
typedef struct {
  double gamma_theta;
  double eta_theta;
  double gamma_x;
  double eta_x;
  double h_theta;
  double h_x;
} MpdParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mpd_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * always NUL-terminated when `len > 0`) and returns the full length including
 * the NUL, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t mpd_last_error(char *buf, uintptr_t len);

/**
 * Closed-form maximum-likelihood estimate of ToyHM: the mean of `y`.
 *
 * # Safety
 * `y` must point to `n` doubles and `out` must be writable.
 */
MpdStatus mpd_toyhm_mle(const double *y, uintptr_t n, double *out);

/**
 * # Safety
 * `y` must point to `n` doubles and `out` must be writable.
 */
MpdStatus mpd_toyhm_new(const double *y, uintptr_t n, double sigma2, MpdModel **out);

/**
 * Builds a model from the JSON `model` section of an experiment config.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
MpdStatus mpd_model_from_json(const char *json, MpdModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void mpd_model_free(MpdModel *model);

/**
 * # Safety
 * `model` must be a live handle; `dim_theta` and `dim_x` must be writable.
 */
MpdStatus mpd_model_dims(const MpdModel *model, uintptr_t *dim_theta, uintptr_t *dim_x);

/**
 * `ℓ(θ, x) = log p_θ(y, x)`.
 *
 * # Safety
 * `model` must be a live handle, `theta` and `x` must point to the given
 * number of doubles and `out` must be writable.
 */
MpdStatus mpd_model_log_joint(const MpdModel *model,
                              const double *theta,
                              uintptr_t n_theta,
                              const double *x,
                              uintptr_t n_x,
                              double *out);

/**
 * `∇_θ ℓ` into `out`, which must hold exactly `dim_theta` doubles.
 *
 * # Safety
 * As [`mpd_model_log_joint`], with `out` pointing to `n_out` writable doubles.
 */
MpdStatus mpd_model_grad_theta(const MpdModel *model,
                               const double *theta,
                               uintptr_t n_theta,
                               const double *x,
                               uintptr_t n_x,
                               double *out,
                               uintptr_t n_out);

/**
 * `∇_x ℓ` into `out`, which must hold exactly `dim_x` doubles.
 *
 * # Safety
 * As [`mpd_model_grad_theta`].
 */
MpdStatus mpd_model_grad_x(const MpdModel *model,
                           const double *theta,
                           uintptr_t n_theta,
                           const double *x,
                           uintptr_t n_x,
                           double *out,
                           uintptr_t n_out);

/**
 * Mean and covariance of one exact step of the scalar latent dynamics with
 * the gradient `grad` frozen, started from `(x0, u0)`.
 *
 * # Safety
 * All output pointers must be writable.
 */
MpdStatus mpd_transition_moments(double x0,
                                 double u0,
                                 double grad,
                                 double gamma,
                                 double eta,
                                 double h,
                                 double *mean_x,
                                 double *mean_u,
                                 double *var_x,
                                 double *cov_ux,
                                 double *var_u);

/**
 * Starts `particles` particles from `N(0, I)` with zero momenta. The model
 * is copied, so `model` may be freed afterwards. `theta0` may be null for
 * the model's default initial parameter.
 *
 * # Safety
 * `model` must be a live handle, `params` readable, `theta0` null or
 * pointing to `n_theta0` doubles, and `out` writable.
 */
MpdStatus mpd_sampler_new(const MpdModel *model,
                          const MpdParams *params,
                          MpdAlgorithm algorithm,
                          uintptr_t particles,
                          const double *theta0,
                          uintptr_t n_theta0,
                          uint64_t seed,
                          MpdSampler **out);

/**
 * # Safety
 * `sampler` must be null or a handle from this library not yet freed.
 */
void mpd_sampler_free(MpdSampler *sampler);

/**
 * Advances `steps` iterations; fails with `MPD_STATUS_NUMERICAL` once the
 * state stops being finite.
 *
 * # Safety
 * `sampler` must be a live handle not used concurrently.
 */
MpdStatus mpd_sampler_step(MpdSampler *sampler, uint64_t steps);

/**
 * Copies `θ` into `out`, which must hold exactly `dim_theta` doubles.
 *
 * # Safety
 * `sampler` must be a live handle and `out` point to `len` writable doubles.
 */
MpdStatus mpd_sampler_theta(const MpdSampler *sampler, double *out, uintptr_t len);

/**
 * Copies the particle positions, row-major `particles × dim_x`, into `out`.
 *
 * # Safety
 * `sampler` must be a live handle and `out` point to `len` writable doubles.
 */
MpdStatus mpd_sampler_particles(const MpdSampler *sampler, double *out, uintptr_t len);

/**
 * Runs an experiment config given as JSON and returns its summary as a JSON
 * string to be released with [`mpd_string_free`]. When `out_dir` is not
 * null the trace and summary files are written there too.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string, `out_dir` null or one, and
 * `summary_json` writable.
 */
MpdStatus mpd_run_json(const char *config_json, const char *out_dir, char **summary_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void mpd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPD_H */
