#ifndef PARETO_DESCENT_H
#define PARETO_DESCENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_POINTER = 1,
  PD_STATUS_INVALID_ARGUMENT = 2,
  PD_STATUS_UNKNOWN_PROBLEM = 3,
  PD_STATUS_DIMENSION_MISMATCH = 4,
  PD_STATUS_NUMERICAL_FAILURE = 5,
  PD_STATUS_PANIC = 6,
} PdStatus;

typedef enum PdTermination {
  PD_TERMINATION_CRITICAL_POINT = 0,
  PD_TERMINATION_MAX_ITER = 1,
  PD_TERMINATION_LINESEARCH_FAILURE = 2,
  PD_TERMINATION_SUBPROBLEM_FAILURE = 3,
} PdTermination;

/**
 * Opaque problem handle.
 */
typedef struct PdProblem PdProblem;

/**
 * Opaque run report handle.
 */
typedef struct PdReport PdReport;

/**
 * Writes `F(x)` (`m` values) to `out`; returns 0 on success.
 */
typedef int (*PdEvalFn)(void *user_data, const double *x, size_t n, double *out, size_t m);

/**
 * Writes the row-major `m × n` Jacobian to `out`; returns 0 on success.
 */
typedef int (*PdJacobianFn)(void *user_data, const double *x, size_t n, double *out, size_t m);

typedef struct PdSolverConfig {
  double beta;
  double sigma;
  double eps_critical;
  uint64_t max_iter;
  uint32_t max_j;
  double tol_gap;
  uint64_t max_inner;
  double eps_subproblem;
} PdSolverConfig;

/**
 * Scalar data of one trajectory record.
 */
typedef struct PdRecord {
  uint64_t k;
  double t;
  uint32_t j;
  double alpha_upper;
  double alpha_lower;
  double norm_v;
  bool sigma_certified;
  uint64_t inner_iterations;
} PdRecord;

typedef struct PdDiagnostics {
  bool monotone_ok;
  bool level_set_ok;
  bool summability_ok;
  bool fejer_ok;
  bool proximity_ok;
  bool descent_chain_ok;
  bool all_ok;
} PdDiagnostics;

typedef struct PdDirection {
  double alpha_lower;
  double alpha_upper;
  bool sigma_certified;
  bool critical;
  uint64_t inner_iterations;
} PdDirection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread; empty if none. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *pd_last_error_message(void);

/**
 * Looks up a builtin problem by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PdStatus pd_problem_builtin(const char *name, struct PdProblem **out);

/**
 * Wraps C callbacks as a problem. `jacobian` may be null, in which case
 * central differences are used. A callback returning non-zero makes the
 * evaluation fail with `PD_STATUS_NUMERICAL_FAILURE`.
 *
 * # Safety
 * The callbacks must be safe to call with `user_data` from any thread for
 * the lifetime of the handle; `out` must be writable.
 */
enum PdStatus pd_problem_from_callbacks(size_t n,
                                        size_t m,
                                        PdEvalFn eval,
                                        PdJacobianFn jacobian,
                                        void *user_data,
                                        struct PdProblem **out);

/**
 * # Safety
 * `problem` must be a live handle; `n` and `m` must be writable.
 */
enum PdStatus pd_problem_dims(const struct PdProblem *problem, size_t *n, size_t *m);

/**
 * Frees a problem handle; null is ignored.
 *
 * # Safety
 * `problem` must come from this library and not be used afterwards.
 */
void pd_problem_free(struct PdProblem *problem);

/**
 * # Safety
 * `out` must be writable.
 */
enum PdStatus pd_solver_config_default(struct PdSolverConfig *out);

/**
 * Runs the solver from `x0` (length `n`) and computes the diagnostics.
 * `config` may be null for defaults.
 *
 * # Safety
 * `problem` must be live, `x0` readable for `n` doubles, `config` null or
 * readable, `out` writable.
 */
enum PdStatus pd_solve(const struct PdProblem *problem,
                       const double *x0,
                       size_t n,
                       const struct PdSolverConfig *config,
                       struct PdReport **out);

/**
 * # Safety
 * `report` must be live; `out` writable.
 */
enum PdStatus pd_report_termination(const struct PdReport *report, enum PdTermination *out);

/**
 * Number of records, including the terminal record.
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum PdStatus pd_report_num_records(const struct PdReport *report, size_t *out);

/**
 * # Safety
 * `report` must be live; `out` writable.
 */
enum PdStatus pd_report_final_alpha(const struct PdReport *report, double *out);

/**
 * Copies the final point into `buf`, which must hold exactly `n` values.
 *
 * # Safety
 * `report` must be live; `buf` writable for `len` doubles.
 */
enum PdStatus pd_report_final_x(const struct PdReport *report, double *buf, size_t len);

/**
 * # Safety
 * `report` must be live; `out` writable.
 */
enum PdStatus pd_report_record(const struct PdReport *report, size_t k, struct PdRecord *out);

/**
 * Copies iterate `x^k` into `buf` (length `n`).
 *
 * # Safety
 * `report` must be live; `buf` writable for `len` doubles.
 */
enum PdStatus pd_report_record_x(const struct PdReport *report, size_t k, double *buf, size_t len);

/**
 * Copies `F(x^k)` into `buf` (length `m`).
 *
 * # Safety
 * `report` must be live; `buf` writable for `len` doubles.
 */
enum PdStatus pd_report_record_fx(const struct PdReport *report, size_t k, double *buf, size_t len);

/**
 * Copies direction `v^k` into `buf` (length `n`).
 *
 * # Safety
 * `report` must be live; `buf` writable for `len` doubles.
 */
enum PdStatus pd_report_record_v(const struct PdReport *report, size_t k, double *buf, size_t len);

/**
 * # Safety
 * `report` must be live; `out` writable.
 */
enum PdStatus pd_report_diagnostics(const struct PdReport *report, struct PdDiagnostics *out);

/**
 * Frees a report handle; null is ignored.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void pd_report_free(struct PdReport *report);

/**
 * Solves the direction subproblem for a row-major `m × n` Jacobian with
 * default subproblem settings. `sigma = 0` requests the exact direction.
 * `v_out` receives `n` values and `w_out` (nullable) `m` weights.
 *
 * # Safety
 * `jacobian` readable for `m·n` doubles; `v_out` writable for `n`;
 * `w_out` null or writable for `m`; `info` null or writable.
 */
enum PdStatus pd_direction_solve(const double *jacobian,
                                 size_t m,
                                 size_t n,
                                 double sigma,
                                 double *v_out,
                                 double *w_out,
                                 struct PdDirection *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARETO_DESCENT_H */
