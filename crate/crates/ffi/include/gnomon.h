#ifndef GNOMON_H
#define GNOMON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GnomonStatus {
  GNOMON_STATUS_OK = 0,
  GNOMON_STATUS_NULL_POINTER,
  GNOMON_STATUS_PANIC,
  GNOMON_STATUS_NEGATIVE_CURVATURE,
  GNOMON_STATUS_FLAT_CURVATURE,
  GNOMON_STATUS_OUTSIDE_HEMISPHERE,
  GNOMON_STATUS_NONPOSITIVE_RADIUS,
  GNOMON_STATUS_IMAGINARY_ALPHA,
  GNOMON_STATUS_IMAGINARY_M_PRIME,
  GNOMON_STATUS_SINGULAR_ORBIT,
  GNOMON_STATUS_STIFF,
  GNOMON_STATUS_UNBOUND,
  GNOMON_STATUS_NO_TURNING_POINTS,
  GNOMON_STATUS_HYPERGEOMETRIC_POLE,
  GNOMON_STATUS_EIGENSOLVER,
  GNOMON_STATUS_RESOLUTION,
  GNOMON_STATUS_INVALID_ARGUMENT,
  GNOMON_STATUS_WRONG_SYSTEM,
  GNOMON_STATUS_IO,
  /**
   * The caller's buffer is too small; the required length is reported.
   */
  GNOMON_STATUS_BUFFER_TOO_SMALL,
} GnomonStatus;

typedef enum GnomonKind {
  GNOMON_KIND_COULOMB = 0,
  GNOMON_KIND_OSCILLATOR = 1,
} GnomonKind;

/**
 * A system kind with its curvature and screening constant.
 */
typedef struct GnomonSystem GnomonSystem;

/**
 * An integrated orbit.
 */
typedef struct GnomonTrajectory GnomonTrajectory;

typedef struct GnomonState {
  double x1;
  double x2;
  double p1;
  double p2;
} GnomonState;

typedef struct GnomonSample {
  double t;
  struct GnomonState state;
  double r;
  /**
   * Unwrapped azimuth.
   */
  double theta;
  double energy;
  double lz;
} GnomonSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *gnomon_last_error(void);

/**
 * Static NUL-terminated name of a status, e.g. `ERR_IMAGINARY_ALPHA`.
 */
const char *gnomon_status_name(enum GnomonStatus status);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum GnomonStatus gnomon_system_new(enum GnomonKind kind,
                                    double lambda,
                                    double k,
                                    struct GnomonSystem **out);

/**
 * # Safety
 * `sys` must come from [`gnomon_system_new`] and not be freed twice. Null is
 * ignored.
 */
void gnomon_system_free(struct GnomonSystem *sys);

/**
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_hamiltonian(const struct GnomonSystem *sys,
                                     struct GnomonState state,
                                     double *out);

/**
 * Equations of motion `(xdot, pdot)` at `state`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_equations_of_motion(const struct GnomonSystem *sys,
                                             struct GnomonState state,
                                             struct GnomonState *out);

/**
 * Effective angular frequency ratio `alpha` for angular momentum `lz`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_alpha(const struct GnomonSystem *sys, double lz, double *out);

/**
 * Analytic energy of level `(m, n)`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_energy_level(const struct GnomonSystem *sys,
                                      int64_t m,
                                      uint32_t n,
                                      double *out);

/**
 * Lowest `n_levels` finite-difference eigenvalues for angular number `m`,
 * written to `out[0..n_levels]`.
 *
 * # Safety
 * `out` must hold `n_levels` doubles.
 */
enum GnomonStatus gnomon_numeric_levels(const struct GnomonSystem *sys,
                                        int64_t m,
                                        size_t n_levels,
                                        double *out);

/**
 * Largest residual over the classical algebra identities at `n_samples`
 * random states drawn from `seed`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_verify_algebra(const struct GnomonSystem *sys,
                                        size_t n_samples,
                                        uint64_t seed,
                                        double *out);

/**
 * Integrates from `state` to `t_end` at relative tolerance `rel_tol`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_integrate(const struct GnomonSystem *sys,
                                   struct GnomonState state,
                                   double t_end,
                                   double rel_tol,
                                   struct GnomonTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`gnomon_integrate`] and not be freed twice.
 */
void gnomon_trajectory_free(struct GnomonTrajectory *traj);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `traj` must be valid or null.
 */
size_t gnomon_trajectory_len(const struct GnomonTrajectory *traj);

/**
 * # Safety
 * Pointers must be valid; `out` writable.
 */
enum GnomonStatus gnomon_trajectory_sample(const struct GnomonTrajectory *traj,
                                           size_t index,
                                           struct GnomonSample *out);

/**
 * Largest `|H(t) - H(0)|` and `|Lz(t) - Lz(0)|` over the samples.
 *
 * # Safety
 * Pointers must be valid; outputs writable.
 */
enum GnomonStatus gnomon_trajectory_drift(const struct GnomonTrajectory *traj,
                                          double *energy,
                                          double *lz);

/**
 * Copies up to `capacity` turning-point times into `times` and stores the
 * total count in `count`. Returns `BufferTooSmall` (with `count` set) when
 * `capacity` is short.
 *
 * # Safety
 * `times` must hold `capacity` doubles (may be null when `capacity` is 0).
 */
enum GnomonStatus gnomon_trajectory_turning_times(const struct GnomonTrajectory *traj,
                                                  double *times,
                                                  size_t capacity,
                                                  size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GNOMON_H */
