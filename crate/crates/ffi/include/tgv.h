#ifndef TGV_H
#define TGV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TgvStatus {
  TGV_STATUS_OK = 0,
  TGV_STATUS_NULL_POINTER = 1,
  TGV_STATUS_INVALID_ARGUMENT = 2,
  TGV_STATUS_CONFIG = 3,
  TGV_STATUS_NUMERICAL = 4,
  TGV_STATUS_CHECKPOINT = 5,
  TGV_STATUS_ANALYSIS = 6,
  TGV_STATUS_IO = 7,
  TGV_STATUS_PANIC = 8,
} TgvStatus;

/**
 * Opaque solver handle.
 */
typedef struct TgvSolver TgvSolver;

/**
 * Solver parameters. Initialize with [`tgv_config_default`].
 */
typedef struct TgvConfig {
  size_t n;
  double nu;
  double dt;
  double t_end;
  uint64_t diag_stride;
  uint64_t checkpoint_stride;
  /**
   * 0 explicit, 1 integrating factor.
   */
  uint32_t viscous_scheme;
} TgvConfig;

/**
 * Result of [`tgv_scale_comparison`].
 */
typedef struct TgvScaleReport {
  double epsilon_2k;
  double log_r;
  double log_rho;
  bool dominant;
  bool reversed_regime;
} TgvScaleReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call into this library on the same
 * thread.
 */
const char *tgv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tgv_version(void);

/**
 * Fill `out` with the reference parameters (N=256, nu=1/1600, dt=0.001, t_end=20).
 */
enum TgvStatus tgv_config_default(struct TgvConfig *out);

/**
 * Create a solver at the Taylor-Green initial state.
 */
enum TgvStatus tgv_solver_create(const struct TgvConfig *config, struct TgvSolver **out);

/**
 * Create a solver from a `key = value` config file.
 */
enum TgvStatus tgv_solver_create_from_file(const char *path, struct TgvSolver **out);

/**
 * Release a solver. Null is ignored.
 */
void tgv_solver_free(struct TgvSolver *solver);

/**
 * Advance `steps` RK4 steps. On a numerical blow-up the state is left at the
 * last finite step.
 */
enum TgvStatus tgv_solver_step(struct TgvSolver *solver, uint64_t steps);

enum TgvStatus tgv_solver_time(const struct TgvSolver *solver, double *t);

enum TgvStatus tgv_solver_step_index(const struct TgvSolver *solver, uint64_t *step);

/**
 * Kinetic energy `0.5 <|u|^2>`.
 */
enum TgvStatus tgv_solver_energy(const struct TgvSolver *solver, double *out);

/**
 * Enstrophy `0.5 <|curl u|^2>`.
 */
enum TgvStatus tgv_solver_enstrophy(const struct TgvSolver *solver, double *out);

/**
 * Natural log of the sup norm of the order-`order` derivative of the velocity.
 */
enum TgvStatus tgv_solver_log_sup_norm(const struct TgvSolver *solver, uint32_t order, double *out);

/**
 * `ln R^k` for the current state.
 */
enum TgvStatus tgv_solver_log_ratio(const struct TgvSolver *solver, uint32_t k, double *out);

/**
 * Write the current state to a checkpoint file.
 */
enum TgvStatus tgv_solver_save_checkpoint(const struct TgvSolver *solver, const char *path);

/**
 * Replace the solver state with a checkpoint. The checkpoint must match the
 * solver's N, nu and dt.
 */
enum TgvStatus tgv_solver_load_checkpoint(struct TgvSolver *solver, const char *path);

/**
 * Fit `ln R^k = gamma ln(T* - t)` over samples with `T* - t` in `[beta_min, 1]`.
 */
enum TgvStatus tgv_fit_gamma(const double *t,
                             const double *log_ratio,
                             size_t len,
                             double t_star,
                             double beta_min,
                             double *gamma);

/**
 * Fit `gamma_k = k^-a` through the origin in log-log space; `k = 1` is ignored.
 */
enum TgvStatus tgv_fit_alpha(const uint32_t *k, const double *gamma, size_t len, double *a);

/**
 * `4 (k + 1) / k^alpha`.
 */
double tgv_epsilon_2k(uint32_t k, double alpha);

/**
 * Compare the sparseness and analyticity scales for `ln ||D^{2k} u||_inf`.
 */
enum TgvStatus tgv_scale_comparison(double log_norm_2k,
                                    uint32_t k,
                                    double alpha,
                                    struct TgvScaleReport *out);

/**
 * Time of the global maximum of `values`, refined by a parabola through the
 * neighbouring samples.
 */
enum TgvStatus tgv_detect_peak(const double *t,
                               const double *values,
                               size_t len,
                               double *t_star,
                               size_t *index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TGV_H */
