#ifndef DILATION_H
#define DILATION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DilStatus {
  DIL_STATUS_OK = 0,
  DIL_STATUS_NULL_POINTER = 1,
  DIL_STATUS_INVALID_ARGUMENT = 2,
  DIL_STATUS_DIMENSION_MISMATCH = 3,
  DIL_STATUS_NOT_A_CONTRACTION = 4,
  DIL_STATUS_NOT_COMMUTING = 5,
  DIL_STATUS_NUMERICAL = 6,
  DIL_STATUS_IO = 7,
  DIL_STATUS_PANIC = 8,
} DilStatus;

typedef enum DilDilationMode {
  DIL_DILATION_MODE_FRAZHO_BUNCE = 0,
  DIL_DILATION_MODE_ARVESON = 1,
} DilDilationMode;

/**
 * Same numbering as the command-line exit codes.
 */
typedef enum DilVerdict {
  DIL_VERDICT_FEASIBLE = 0,
  DIL_VERDICT_INFEASIBLE = 2,
  DIL_VERDICT_INDETERMINATE = 3,
} DilVerdict;

/**
 * Opaque dilation of a row.
 */
typedef struct DilDilation DilDilation;

/**
 * Opaque complex matrix.
 */
typedef struct DilMatrix DilMatrix;

/**
 * Opaque row `[T_1 … T_n]` of square matrices.
 */
typedef struct DilRow DilRow;

typedef struct DilLiftResult {
  double achieved_norm;
  double lower_bound;
  double norm_x;
  double commutation_residual;
  double dilation_residual;
  size_t iterations;
  /**
   * A `DilVerdict` value.
   */
  int32_t verdict;
} DilLiftResult;

typedef struct DilCounterexampleResult {
  double algebraic_margin;
  double lower_bound;
  double solver_margin;
  double row_norm;
  bool certified;
  bool margins_agree;
  /**
   * A `DilVerdict` value.
   */
  int32_t verdict;
} DilCounterexampleResult;

typedef struct DilNpResult {
  double pick_min_eigenvalue;
  double norm_x;
  double achieved_norm;
  double max_node_residual;
  /**
   * A `DilVerdict` value.
   */
  int32_t verdict;
} DilNpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length including the NUL,
 * or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t dil_last_error_message(char *buf, size_t len);

/**
 * NUL-terminated crate version; static storage.
 */
const char *dil_version(void);

/**
 * New `rows × cols` matrix from `2·rows·cols` interleaved doubles.
 *
 * # Safety
 * `data` must be valid for `2·rows·cols` reads; `out` must be writable.
 */
enum DilStatus dil_matrix_new(size_t rows, size_t cols, const double *data, struct DilMatrix **out);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t dil_matrix_rows(const struct DilMatrix *m);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t dil_matrix_cols(const struct DilMatrix *m);

/**
 * Copy the entries into `data` (row-major, interleaved); `len` counts doubles.
 *
 * # Safety
 * `m` must be a live handle and `data` valid for `len` writes.
 */
enum DilStatus dil_matrix_copy(const struct DilMatrix *m, double *data, size_t len);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum DilStatus dil_matrix_norm(const struct DilMatrix *m, double *out);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void dil_matrix_free(struct DilMatrix *m);

/**
 * New row from `n` square matrices of equal size; the matrices are copied.
 *
 * # Safety
 * `blocks` must hold `n` live matrix handles; `out` must be writable.
 */
enum DilStatus dil_row_new(const struct DilMatrix *const *blocks, size_t n, struct DilRow **out);

/**
 * # Safety
 * `t` must be null or a live row handle.
 */
size_t dil_row_len(const struct DilRow *t);

/**
 * # Safety
 * `t` must be null or a live row handle.
 */
size_t dil_row_dim(const struct DilRow *t);

/**
 * `‖Σ T_i T_i*‖^{1/2}`.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum DilStatus dil_row_norm(const struct DilRow *t, double *out);

/**
 * # Safety
 * `t` must be null or a handle not yet freed.
 */
void dil_row_free(struct DilRow *t);

/**
 * Dimensions of the full and symmetric Fock spaces truncated at degree `d`.
 *
 * # Safety
 * `n_full` and `n_sym` must be writable.
 */
enum DilStatus dil_fock_dims(size_t n, size_t d, size_t *n_full, size_t *n_sym);

/**
 * Dilate a row contraction at truncation degree `d`.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum DilStatus dil_dilate(const struct DilRow *t,
                          enum DilDilationMode mode,
                          size_t d,
                          double tol,
                          struct DilDilation **out);

/**
 * # Safety
 * `dil` must be null or a live dilation handle.
 */
size_t dil_dilation_dim(const struct DilDilation *dil);

/**
 * The `i`-th dilating operator `V_i`, as a new matrix handle.
 *
 * # Safety
 * `dil` must be a live handle; `out` must be writable.
 */
enum DilStatus dil_dilation_operator(const struct DilDilation *dil,
                                     size_t i,
                                     struct DilMatrix **out);

/**
 * The isometric embedding of the original space, as a new matrix handle.
 *
 * # Safety
 * `dil` must be a live handle; `out` must be writable.
 */
enum DilStatus dil_dilation_embedding(const struct DilDilation *dil, struct DilMatrix **out);

/**
 * # Safety
 * `dil` must be null or a handle not yet freed.
 */
void dil_dilation_free(struct DilDilation *dil);

/**
 * Minimal-norm lifting of `X` (commuting with `T`) through the dilation of
 * `T` at degree `d`. The verdict is feasible once a lifting of norm at most
 * `‖X‖ + slack` is found. `z_out` may be null.
 *
 * # Safety
 * `t` and `x` must be live handles; `result` must be writable; `z_out`
 * must be null or writable.
 */
enum DilStatus dil_lift(const struct DilRow *t,
                        const struct DilMatrix *x,
                        enum DilDilationMode mode,
                        size_t d,
                        double tol,
                        double slack,
                        struct DilLiftResult *result,
                        struct DilMatrix **z_out);

/**
 * The commuting counterexample with parameters `r`, `eps`: algebraic
 * obstruction margin and the solver's certified bound at target norm 1.
 *
 * # Safety
 * `result` must be writable.
 */
enum DilStatus dil_counterexample(double r,
                                  double eps,
                                  size_t d,
                                  double tol,
                                  struct DilCounterexampleResult *result);

/**
 * Scalar Nevanlinna-Pick problem with `count` nodes in the unit ball of
 * `ℂⁿ`. `nodes` holds `count·n` interleaved complex coordinates, `targets`
 * holds `count`. When `coefficients` is non-null it receives the
 * multiplier's coefficients in the degree-graded multi-index order
 * (`2·coefficients_len` doubles; `coefficients_len` must equal the
 * symmetric Fock dimension at degree `d`).
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `result` must be writable.
 */
enum DilStatus dil_np_scalar(size_t n,
                             size_t count,
                             const double *nodes,
                             const double *targets,
                             size_t d,
                             double tol,
                             struct DilNpResult *result,
                             double *coefficients,
                             size_t coefficients_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DILATION_H */
