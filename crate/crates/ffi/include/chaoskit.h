#ifndef CHAOSKIT_H
#define CHAOSKIT_H

/* Generated by cbindgen from src/lib.rs; edits are overwritten. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChaosStatus {
  CHAOS_STATUS_OK = 0,
  CHAOS_STATUS_NULL_POINTER = 1,
  CHAOS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Output buffer shorter than required.
   */
  CHAOS_STATUS_BUFFER_TOO_SMALL = 3,
  CHAOS_STATUS_UNSUPPORTED_FIELD = 4,
  CHAOS_STATUS_NOT_FIRST_ORDER = 5,
  CHAOS_STATUS_NEGATIVE_VARIANCE = 6,
  CHAOS_STATUS_UNSTABLE_STEP = 7,
  CHAOS_STATUS_SINGULAR_DIAGONAL = 8,
  CHAOS_STATUS_PANIC = 9,
} ChaosStatus;

typedef enum ChaosKernelKind {
  CHAOS_KERNEL_KIND_WIENER = 0,
  /**
   * Parameter: Hurst index.
   */
  CHAOS_KERNEL_KIND_FBM = 1,
  /**
   * Parameter: rate `b`.
   */
  CHAOS_KERNEL_KIND_OU_STABLE = 2,
  CHAOS_KERNEL_KIND_OU_UNSTABLE = 3,
} ChaosKernelKind;

/**
 * Field model on a uniform time grid.
 */
typedef struct ChaosField ChaosField;

/**
 * Chaos coefficients of a scalar Wick-linear equation.
 */
typedef struct ChaosSodeSolution ChaosSodeSolution;

typedef struct ChaosNormBound {
  double k0;
  double k1;
  /**
   * `(k0 + k1)²`
   */
  double bound;
} ChaosNormBound;

typedef struct ChaosParabolicity {
  bool holds;
  /**
   * NaN when the condition holds on the whole grid.
   */
  double first_violation_t;
} ChaosParabolicity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and truncated
 * to `len` bytes. Returns the full message length plus one.
 */
size_t chaoskit_last_error(char *buf, size_t len);

/**
 * Static NUL-terminated version string.
 */
const char *chaoskit_version(void);

enum ChaosStatus chaoskit_field_new(enum ChaosKernelKind kind,
                                    double param,
                                    double t_end,
                                    size_t n_cells,
                                    size_t basis_dim,
                                    struct ChaosField **out);

void chaoskit_field_free(struct ChaosField *field);

/**
 * Number of time nodes, `n_cells + 1`.
 */
enum ChaosStatus chaoskit_field_n_nodes(const struct ChaosField *field, size_t *out);

/**
 * `R(t,t)` on the grid nodes.
 */
enum ChaosStatus chaoskit_field_variance(const struct ChaosField *field, double *buf, size_t len);

enum ChaosStatus chaoskit_field_covariance(const struct ChaosField *field,
                                           double t,
                                           double s,
                                           double *out);

/**
 * `M̃_k(t_j) = ∫_0^{t_j} (𝒦* m_k)`, `1 ≤ k ≤ basis_dim`.
 */
enum ChaosStatus chaoskit_field_mtilde(const struct ChaosField *field,
                                       size_t k,
                                       double *buf,
                                       size_t len);

enum ChaosStatus chaoskit_field_norm_bound(const struct ChaosField *field,
                                           struct ChaosNormBound *out);

/**
 * Discrete estimate of the operator norm of `𝒦*`.
 */
enum ChaosStatus chaoskit_field_galerkin_norm(const struct ChaosField *field, double *out);

/**
 * Samples `X(t_j)` at every node; `buf` receives `n_paths × n_nodes` values,
 * path-major.
 */
enum ChaosStatus chaoskit_sample_paths(const struct ChaosField *field,
                                       size_t n_paths,
                                       uint64_t seed,
                                       double *buf,
                                       size_t len);

/**
 * Solves `du = a u dt + σ u ⋄ dX`, `u(0) = u0`, with constant `a`, `σ`.
 * `prune_tol ≤ 0` keeps every coefficient.
 */
enum ChaosStatus chaoskit_sode_solve(const struct ChaosField *field,
                                     size_t max_order,
                                     size_t max_dim,
                                     double drift,
                                     double sigma,
                                     double u0,
                                     double prune_tol,
                                     struct ChaosSodeSolution **out);

void chaoskit_sode_free(struct ChaosSodeSolution *sol);

/**
 * Number of stored chaos coefficients.
 */
enum ChaosStatus chaoskit_sode_indices(const struct ChaosSodeSolution *sol, size_t *out);

/**
 * `E u(t_j)` and `E u(t_j)²`; either buffer may be null.
 */
enum ChaosStatus chaoskit_sode_moments(const struct ChaosSodeSolution *sol,
                                       double *mean,
                                       double *second_moment,
                                       size_t len);

/**
 * Non-explosion condition of `du = a u_xx dt + σ u_x ⋄ dX` on the field's grid.
 */
enum ChaosStatus chaoskit_heat_parabolicity(const struct ChaosField *field,
                                            double a,
                                            double sigma,
                                            struct ChaosParabolicity *out);

/**
 * `E u(t_node, x_i)` of the heat equation on the periodic grid
 * `x_i = i·length/n_x`; fails with `NegativeVariance` where the condition is
 * violated.
 */
enum ChaosStatus chaoskit_heat_mean(const struct ChaosField *field,
                                    double a,
                                    double sigma,
                                    double length,
                                    const double *u0,
                                    size_t n_x,
                                    size_t node,
                                    double *buf,
                                    size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAOSKIT_H */
