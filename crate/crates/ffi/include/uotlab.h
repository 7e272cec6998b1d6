#ifndef UOTLAB_H
#define UOTLAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UotEntropyKind {
  UOT_ENTROPY_KIND_BALANCED = 0,
  UOT_ENTROPY_KIND_KL = 1,
  UOT_ENTROPY_KIND_CHI2 = 2,
} UotEntropyKind;

typedef enum UotStatus {
  UOT_STATUS_OK = 0,
  UOT_STATUS_NULL_POINTER = 1,
  UOT_STATUS_INVALID_ARGUMENT = 2,
  UOT_STATUS_INVALID_UTF8 = 3,
  UOT_STATUS_OUTSIDE_SUPPORT = 4,
  UOT_STATUS_CONJUGATE_OVERFLOW = 5,
  UOT_STATUS_OPTIMIZATION_FAILED = 6,
  UOT_STATUS_UNSUPPORTED = 7,
  UOT_STATUS_IO = 8,
  UOT_STATUS_NUMERICAL = 9,
  UOT_STATUS_PANIC = 10,
} UotStatus;

/**
 * Opaque weighted point cloud.
 */
typedef struct UotMeasure UotMeasure;

/**
 * Opaque potential with its certified class.
 */
typedef struct UotPotential UotPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *uot_last_error(void);

/**
 * Release a string returned by the library. Null is ignored.
 */
void uot_string_free(char *s);

/**
 * Build a measure from `n` points stored row-major in `points` (`n * dim`
 * values) and `n` nonnegative weights.
 */
enum UotStatus uot_measure_new(const double *points,
                               size_t n,
                               size_t dim,
                               const double *weights,
                               struct UotMeasure **out);

void uot_measure_free(struct UotMeasure *m);

enum UotStatus uot_measure_len(const struct UotMeasure *m, size_t *out);

enum UotStatus uot_measure_mass(const struct UotMeasure *m, double *out);

/**
 * `z(x) = λ/2 |x|² + <a, x> + b`, certified on the ball of `radius`.
 */
enum UotStatus uot_potential_quad_shift(double lambda,
                                        const double *a,
                                        size_t dim,
                                        double b,
                                        double radius,
                                        struct UotPotential **out);

/**
 * Build a potential from its JSON description, e.g.
 * `{"kind":"max_quad","lambda":1,"theta":[...],"dim":2}`.
 */
enum UotStatus uot_potential_from_json(const char *json, double radius, struct UotPotential **out);

/**
 * JSON description of a potential; release with [`uot_string_free`].
 */
enum UotStatus uot_potential_to_json(const struct UotPotential *z, char **out);

void uot_potential_free(struct UotPotential *z);

enum UotStatus uot_potential_eval(const struct UotPotential *z,
                                  const double *x,
                                  size_t dim,
                                  double *out);

/**
 * Convex conjugate `z*(y)`.
 */
enum UotStatus uot_potential_conjugate(const struct UotPotential *z,
                                       const double *y,
                                       size_t dim,
                                       double *out);

/**
 * Semi-dual objective `J(z)` for the pair `(mu, nu)` on the ball of `radius`.
 */
enum UotStatus uot_semidual_value(const struct UotMeasure *mu,
                                  const struct UotMeasure *nu,
                                  enum UotEntropyKind kind,
                                  double tau,
                                  const struct UotPotential *z,
                                  double radius,
                                  double *out);

/**
 * Solve the discrete primal problem. `objective` receives the optimal value;
 * `json`, when not null, receives the full solution summary.
 */
enum UotStatus uot_primal_solve(const struct UotMeasure *mu,
                                const struct UotMeasure *nu,
                                enum UotEntropyKind kind,
                                double tau,
                                double *objective,
                                char **json);

/**
 * Stability inequality of `z` against the optimal `z0`, as JSON.
 */
enum UotStatus uot_stability_json(const struct UotMeasure *mu,
                                  const struct UotMeasure *nu,
                                  enum UotEntropyKind kind,
                                  double tau,
                                  const struct UotPotential *z,
                                  const struct UotPotential *z0,
                                  double radius,
                                  char **out);

/**
 * Rate exponent of the plug-in semi-dual estimator for smoothness `alpha`
 * in dimension `d`.
 */
double uot_rate_exponent_ours(double alpha, double d);

/**
 * Rate exponent of the Hutter and Rigollet estimator.
 */
double uot_rate_exponent_hr(double alpha, double d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UOTLAB_H */
