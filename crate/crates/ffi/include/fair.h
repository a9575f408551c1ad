#ifndef FAIR_H
#define FAIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FairKernelFamily {
  FAIR_KERNEL_FAMILY_GAUSSIAN = 0,
  FAIR_KERNEL_FAMILY_MATERN = 1,
  FAIR_KERNEL_FAMILY_EXPONENTIAL = 2,
} FairKernelFamily;

typedef enum FairStatus {
  FAIR_STATUS_OK = 0,
  FAIR_STATUS_NULL_POINTER = 1,
  FAIR_STATUS_INVALID_ARGUMENT = 2,
  FAIR_STATUS_DIMENSION_MISMATCH = 3,
  FAIR_STATUS_NOT_POSITIVE_DEFINITE = 4,
  FAIR_STATUS_NUMERICAL = 5,
  FAIR_STATUS_PANIC = 6,
} FairStatus;

// Opaque FAIR engine: grid, transformed indicators and, once set, a kernel.
typedef struct FairEngine FairEngine;

// Opaque list of polygons.
typedef struct FairRegions FairRegions;

// `nu` is read for Matérn only.
typedef struct FairKernel {
  enum FairKernelFamily family;
  double sigma2;
  double theta;
  double nu;
} FairKernel;

// Cell `(i, j)` has its lower-left corner at
// `(origin_x + i dx, origin_y + j dy)`; flat index `i * ny + j`.
typedef struct FairGrid {
  double origin_x;
  double origin_y;
  size_t nx;
  size_t ny;
  double dx;
  double dy;
} FairGrid;

typedef struct FairMetrics {
  double rmsed;
  double maed;
  // NaN when either matrix is not positive definite.
  double kl;
} FairMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library on the same thread.
const char *fair_last_error(void);

struct FairRegions *fair_regions_new(void);

// Appends a polygon given as `n_vertices` interleaved `x, y` pairs.
//
// # Safety
// `regions` must come from [`fair_regions_new`]; `xy` must hold
// `2 * n_vertices` doubles.
enum FairStatus fair_regions_add(struct FairRegions *regions, const double *xy, size_t n_vertices);

// # Safety
// `regions` must be null or come from [`fair_regions_new`].
size_t fair_regions_len(const struct FairRegions *regions);

// # Safety
// `regions` must be null or come from [`fair_regions_new`], and not be
// used afterwards.
void fair_regions_free(struct FairRegions *regions);

// Builds the FAIR grid for `sizing_kernel` at `resolution` cells per axis,
// widened by `padding`, and transforms every region. `supersample` 0 means
// exact cell coverage.
//
// # Safety
// Pointers must be valid; `*out` receives a handle for [`fair_engine_free`].
enum FairStatus fair_engine_new(const struct FairRegions *regions,
                                const struct FairKernel *sizing_kernel,
                                size_t resolution,
                                double padding,
                                uint32_t supersample,
                                struct FairEngine **out);

// # Safety
// `engine` must come from [`fair_engine_new`]; `out` must be writable.
enum FairStatus fair_engine_grid(const struct FairEngine *engine, struct FairGrid *out);

// # Safety
// `engine` must be null or come from [`fair_engine_new`], and not be used
// afterwards.
void fair_engine_free(struct FairEngine *engine);

// Regional covariance matrix into `out` (`len == n * n`).
//
// # Safety
// Pointers must be valid; `out` must hold `len` doubles.
enum FairStatus fair_engine_cov_matrix(struct FairEngine *engine,
                                       const struct FairKernel *kernel,
                                       double *out,
                                       size_t len);

// Kriging surface for weights `beta` on the engine grid, zero mean; `out`
// holds `nx * ny` values in grid order.
//
// # Safety
// Pointers must be valid; `beta` holds `n_beta` doubles, `out` holds `len`.
enum FairStatus fair_engine_predict(struct FairEngine *engine,
                                    const struct FairKernel *kernel,
                                    const double *beta,
                                    size_t n_beta,
                                    double *out,
                                    size_t len);

// Direct (Riemann) covariance matrix on the same grid FAIR would use.
//
// # Safety
// Pointers must be valid; `out` must hold `len` doubles.
enum FairStatus fair_direct_cov_matrix(const struct FairRegions *regions,
                                       const struct FairKernel *kernel,
                                       size_t resolution,
                                       double padding,
                                       double *out,
                                       size_t len);

// Gaussian negative log-likelihood of `z` under mean `mu` (NULL for zero)
// and covariance `K + tau2 I`.
//
// # Safety
// `k` holds `n * n` doubles, `z` and a non-null `mu` hold `n`.
enum FairStatus fair_neg_log_lik(const double *k,
                                 size_t n,
                                 const double *z,
                                 const double *mu,
                                 double tau2,
                                 double *out);

// Solves `(K + tau2 I) beta = z - mu` into `beta` (`n` doubles).
//
// # Safety
// As [`fair_neg_log_lik`]; `beta` holds `n` doubles.
enum FairStatus fair_kriging_weights(const double *k,
                                     size_t n,
                                     const double *z,
                                     const double *mu,
                                     double tau2,
                                     double *beta);

// Nearest positive definite matrix by eigenvalue clipping.
//
// # Safety
// `k` and `out` hold `n * n` doubles; they may alias.
enum FairStatus fair_nearest_pd(const double *k, size_t n, double *out);

// Differences between two `n x n` covariance matrices.
//
// # Safety
// `a` and `b` hold `n * n` doubles; `out` must be writable.
enum FairStatus fair_metrics(const double *a, const double *b, size_t n, struct FairMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIR_H */
