#ifndef SPECDOS_H
#define SPECDOS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SPECDOS_OK 0

#define SPECDOS_ERR_NULL 1

#define SPECDOS_ERR_INVALID 2

#define SPECDOS_ERR_NUMERICAL 3

#define SPECDOS_ERR_ORACLE_CAP 4

#define SPECDOS_ERR_IO 5

#define SPECDOS_ERR_PARSE 6

#define SPECDOS_ERR_PANIC 7

/**
 * Output buffers are too small; the required length has been written.
 */
#define SPECDOS_ERR_BUFFER 8

typedef enum SpecdosMethod {
  SPECDOS_METHOD_KPM = 0,
  SPECDOS_METHOD_KPM_JACKSON = 1,
  SPECDOS_METHOD_KPML = 2,
  SPECDOS_METHOD_SPECTROSCOPIC = 3,
  SPECDOS_METHOD_DELTA_CHEB = 4,
  SPECDOS_METHOD_DGL = 5,
  SPECDOS_METHOD_LANCZOS = 6,
  SPECDOS_METHOD_HAYDOCK = 7,
  SPECDOS_METHOD_CDOS = 8,
  SPECDOS_METHOD_EXACT = 9,
} SpecdosMethod;

/**
 * Opaque sparse symmetric matrix.
 */
typedef struct SpecdosMatrix SpecdosMatrix;

/**
 * Estimator settings. `method` holds a `SpecdosMethod` value; `sigma` and
 * `eta` are unset when NaN; a zero `grid_points` picks the grid size
 * automatically.
 */
typedef struct SpecdosConfig {
  int32_t method;
  size_t degree;
  size_t n_vec;
  double sigma;
  double eta;
  size_t grid_points;
  uint64_t seed;
  bool product_formula;
} SpecdosConfig;

typedef struct SpecdosBump {
  double center_x;
  double center_y;
  double height;
  double width;
} SpecdosBump;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *specdos_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated) and returns its full length in bytes, excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `capacity` bytes.
 */
size_t specdos_last_error_message(char *buf, size_t capacity);

/**
 * Writes the defaults for `method` (a `SpecdosMethod` value) to `out`:
 * degree 100, 100 probe vectors, sigma and eta unset.
 *
 * # Safety
 * `out` must be valid for writes.
 */
int32_t specdos_config_default(int32_t method, struct SpecdosConfig *out);

/**
 * Loads a Matrix Market file (real or integer, general or symmetric).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
int32_t specdos_matrix_load_mtx(const char *path, struct SpecdosMatrix **out);

/**
 * Modified 2D Laplacian on an `nx` x `ny` grid. With `n_bumps == 0` and a
 * null `bumps` the benchmark potential is used; pass a non-null pointer
 * with zero length for the plain Laplacian.
 *
 * # Safety
 * `bumps` must be null or valid for `n_bumps` reads; `out` must be valid
 * for writes.
 */
int32_t specdos_matrix_laplacian2d(size_t nx,
                                   size_t ny,
                                   const struct SpecdosBump *bumps,
                                   size_t n_bumps,
                                   struct SpecdosMatrix **out);

/**
 * # Safety
 * `m` must be a live handle; `dim` must be valid for writes.
 */
int32_t specdos_matrix_dim(const struct SpecdosMatrix *m, size_t *dim);

/**
 * Releases a matrix. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void specdos_matrix_free(struct SpecdosMatrix *m);

/**
 * Estimates the interval containing the spectrum with `steps` Lanczos
 * steps and a relative `margin`.
 *
 * # Safety
 * `m` must be a live handle; `lower` and `upper` must be valid for writes.
 */
int32_t specdos_spectral_interval(const struct SpecdosMatrix *m,
                                  size_t steps,
                                  double margin,
                                  uint64_t seed,
                                  double *lower,
                                  double *upper);

/**
 * Runs an estimator and writes the density in original coordinates into
 * `lambda` and `phi`, each of `capacity` elements. The number of points
 * goes to `len`; if it exceeds `capacity`, nothing else is written and
 * `SPECDOS_ERR_BUFFER` is returned. `matvecs` may be null.
 *
 * # Safety
 * `m` and `config` must be valid; `lambda` and `phi` must be valid for
 * `capacity` writes; `len` must be valid for writes.
 */
int32_t specdos_estimate(const struct SpecdosMatrix *m,
                         const struct SpecdosConfig *config,
                         double *lambda,
                         double *phi,
                         size_t capacity,
                         size_t *len,
                         size_t *matvecs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECDOS_H */
