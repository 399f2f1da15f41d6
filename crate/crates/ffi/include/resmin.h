#ifndef RESMIN_H
#define RESMIN_H

/* Generated by cbindgen from the resmin-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum ResminStatus {
  RESMIN_STATUS_OK = 0,
  RESMIN_STATUS_INVALID_ARGUMENT = 1,
  RESMIN_STATUS_SOLVER_FAILURE = 2,
  RESMIN_STATUS_INTERNAL_ERROR = 3,
  RESMIN_STATUS_NULL_POINTER = 4,
} ResminStatus;

/**
 * Opaque result table: named columns of f64 rows.
 */
typedef struct ResminTable ResminTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message (UTF-8, NUL-terminated) into `buf`.
 * Returns the full message length in bytes (excluding the terminator);
 * the copy is truncated to `cap - 1` bytes. `buf` may be NULL to query
 * the length.
 */
uintptr_t resmin_last_error(char *buf, uintptr_t cap);

/**
 * Library version string (static storage).
 */
const char *resmin_version(void);

/**
 * Duality map of an l_p coefficient vector: out_i receives the l_q image
 * J(v)_i = ||v||_p^{2-p} |v_i|^{p-1} sign(v_i). `out` must hold `len`
 * doubles and may alias `v`.
 *
 * # Safety
 * `v` and `out` must point to `len` readable/writable doubles.
 */
enum ResminStatus resmin_lp_duality_map(double p, const double *v, uintptr_t len, double *out);

/**
 * Best l_p approximation of `y` over the span of `n_basis` vectors stored
 * column-major in `basis` (each of length `len`). Writes the coefficients
 * (length `n_basis`) and, when non-NULL, the best approximation itself
 * (length `len`).
 *
 * # Safety
 * Pointers must reference buffers of the documented sizes.
 */
enum ResminStatus resmin_lp_best_approx(double p,
                                        const double *y,
                                        uintptr_t len,
                                        const double *basis,
                                        uintptr_t n_basis,
                                        double tol,
                                        double *coeffs_out,
                                        double *y0_out);

/**
 * Banach-Mazur constant of l_p: 2^{|2/p - 1|} (closed form, pure).
 */
double resmin_c_bm(double p);

/**
 * Asymmetric-orthogonality constant of l_p(R^2) by grid + golden-section
 * maximization.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ResminStatus resmin_c_ao(double p, uintptr_t grid, double *out);

/**
 * Best-approximation projection constant of l_p(R^2) (nested search).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ResminStatus resmin_c_best(double p, uintptr_t grid, double *out);

/**
 * Geometric constants over an exponent list. Columns:
 * p, c_bm, c_ao, one_plus_c_ao, c_best.
 *
 * # Safety
 * `p_values` must point to `n_p` doubles.
 */
struct ResminTable *resmin_run_constants(const double *p_values, uintptr_t n_p, uintptr_t grid);

/**
 * Cell-average convergence study for the discontinuous-solution
 * advection scenario. Columns: p, n, h, lp_error.
 *
 * # Safety
 * `n_values` must point to `n_n` usizes.
 */
struct ResminTable *resmin_run_cell_average_study(double p,
                                                  const uintptr_t *n_values,
                                                  uintptr_t n_n);

/**
 * Gibbs overshoot study. Columns: p, k, overshoot, ideal_overshoot.
 *
 * # Safety
 * `p_values` / `k_values` must point to `n_p` / `n_k` entries.
 */
struct ResminTable *resmin_run_gibbs_study(const double *p_values,
                                           uintptr_t n_p,
                                           uintptr_t n_elem,
                                           const uintptr_t *k_values,
                                           uintptr_t n_k);

/**
 * Laplace convergence study; `alpha < 0` selects the smooth f = e^x case,
 * otherwise the manufactured u = x^alpha - x. Columns:
 * n, h, energy_error, r_energy, lp_error, r_lq.
 *
 * # Safety
 * `n_values` must point to `n_n` usizes.
 */
struct ResminTable *resmin_run_laplace_study(double p,
                                             double alpha,
                                             uintptr_t k_trial,
                                             uintptr_t k_test,
                                             const uintptr_t *n_values,
                                             uintptr_t n_n);

/**
 * Graded-mesh instability study. Columns:
 * eps, galerkin, ideal, inexact, oracle_ideal, oracle_inexact, exact_rm.
 *
 * # Safety
 * `eps_values` must point to `n_eps` doubles.
 */
struct ResminTable *resmin_run_graded_study(double p,
                                            double alpha,
                                            const double *eps_values,
                                            uintptr_t n_eps);

/**
 * Number of rows; 0 for NULL tables.
 */
uintptr_t resmin_table_rows(const struct ResminTable *t);

/**
 * Number of columns; 0 for NULL tables.
 */
uintptr_t resmin_table_cols(const struct ResminTable *t);

/**
 * Fetch one cell.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ResminStatus resmin_table_get(const struct ResminTable *t,
                                   uintptr_t row,
                                   uintptr_t col,
                                   double *out);

/**
 * Column name; owned by the table, NULL when out of range.
 */
const char *resmin_table_column_name(const struct ResminTable *t, uintptr_t col);

/**
 * Free a table returned by a study runner. NULL is a no-op.
 *
 * # Safety
 * `t` must be a pointer previously returned by a study runner, not yet
 * freed.
 */
void resmin_table_free(struct ResminTable *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESMIN_H */
