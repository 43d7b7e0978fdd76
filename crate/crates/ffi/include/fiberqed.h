#ifndef FIBERQED_H
#define FIBERQED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes of every fallible call.
 */
typedef enum FqStatus {
  FQ_STATUS_OK = 0,
  FQ_STATUS_NULL_POINTER = 1,
  FQ_STATUS_INVALID_INPUT = 2,
  FQ_STATUS_CONFIG = 3,
  FQ_STATUS_IO = 4,
  FQ_STATUS_NUMERICAL = 5,
  FQ_STATUS_OUT_OF_RANGE = 6,
  FQ_STATUS_PANIC = 7,
} FqStatus;

/*
 Parsed and validated run configuration.
 */
typedef struct FqConfig FqConfig;

/*
 Force model built from a configuration, with the atomic mass and integrator settings.
 */
typedef struct FqModel FqModel;

/*
 Recorded trajectory.
 */
typedef struct FqTrajectory FqTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL.
 The pointer stays valid until the next `fq_*` call on this thread.
 */
const char *fq_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *fq_version(void);

/*
 Load a TOML configuration from `path`.
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FqStatus fq_config_load(const char *path, struct FqConfig **out);

/*
 `config` must come from [`fq_config_load`] or be NULL.
 */
void fq_config_free(struct FqConfig *config);

/*
 Override the integrator seed.
 `config` must be a live handle.
 */
enum FqStatus fq_config_set_seed(struct FqConfig *config, uint64_t seed);

/*
 Build the force model of `config`. The configuration is copied.
 `config` must be a live handle and `out` a valid pointer.
 */
enum FqStatus fq_model_new(const struct FqConfig *config, struct FqModel **out);

/*
 `model` must come from [`fq_model_new`] or be NULL.
 */
void fq_model_free(struct FqModel *model);

/*
 Mean force including friction at position `r[3]` and velocity `v[3]`, into `force[3]`.
 All pointers must be valid; `r`, `v` and `force` must hold three doubles.
 */
enum FqStatus fq_model_force(const struct FqModel *model,
                             const double *r,
                             const double *v,
                             double *force);

/*
 Momentum diffusion tensor at `r[3]`, row-major into `d[9]`.
 All pointers must be valid; `r` holds three doubles and `d` nine.
 */
enum FqStatus fq_model_diffusion(const struct FqModel *model, const double *r, double *d);

/*
 Value and transverse gradient of `HG_{l,m}` with waist `w0` at `(x, y)`.
 `value` must be valid and `gradient` must hold two doubles.
 */
enum FqStatus fq_hermite_gaussian(uint32_t l,
                                  uint32_t m,
                                  double w0,
                                  double x,
                                  double y,
                                  double *value,
                                  double *gradient);

/*
 Integrate one trajectory with the model's integrator settings and `seed`.
 A non-finite force yields `Numerical` and still stores the partial trajectory.
 `model` must be a live handle and `out` a valid pointer.
 */
enum FqStatus fq_simulate(const struct FqModel *model, uint64_t seed, struct FqTrajectory **out);

/*
 `traj` must come from [`fq_simulate`] or be NULL.
 */
void fq_trajectory_free(struct FqTrajectory *traj);

/*
 Number of recorded samples; 0 for NULL.
 `traj` must be a live handle or NULL.
 */
size_t fq_trajectory_len(const struct FqTrajectory *traj);

/*
 Sample `index` as `t, x, y, z, vx, vy, vz` into `row[7]`.
 `traj` must be a live handle and `row` must hold seven doubles.
 */
enum FqStatus fq_trajectory_sample(const struct FqTrajectory *traj, size_t index, double *row);

/*
 Trapping time and whether it is censored at `t_max`.
 All pointers must be valid.
 */
enum FqStatus fq_trajectory_trapping_time(const struct FqTrajectory *traj,
                                          double *time,
                                          bool *censored);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIBERQED_H */
