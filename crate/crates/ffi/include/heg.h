#ifndef HEG_H
#define HEG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HegStatus {
  HEG_STATUS_OK = 0,
  HEG_STATUS_NULL_POINTER = 1,
  HEG_STATUS_INVALID_ARGUMENT = 2,
  HEG_STATUS_SOLVER_FAILURE = 3,
  HEG_STATUS_NOT_CERTIFIED = 4,
  HEG_STATUS_PANIC = 5,
} HegStatus;

typedef enum HegManifoldKind {
  HEG_MANIFOLD_KIND_EUCLIDEAN = 0,
  HEG_MANIFOLD_KIND_LOG_POSITIVE_ORTHANT = 1,
} HegManifoldKind;

typedef enum HegRunStatus {
  HEG_RUN_STATUS_CONVERGED = 0,
  HEG_RUN_STATUS_MAX_ITERATIONS = 1,
  HEG_RUN_STATUS_ABORTED = 2,
} HegRunStatus;

/*
 Manifold, feasible box and linear bifunction.
 */
typedef struct HegProblem HegProblem;

/*
 Result of [`heg_solve`].
 */
typedef struct HegRun HegRun;

/*
 Solver settings. `multi_starts < 0` picks the library default.
 */
typedef struct HegSolverOptions {
  double lambda0;
  double mu;
  double stop_tol;
  size_t max_outer;
  double inner_tol;
  size_t inner_max_iters;
  int64_t multi_starts;
  uint64_t seed;
} HegSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Last error message on this thread, or null. Valid until the next failing call.
 */
const char *heg_last_error(void);

struct HegSolverOptions heg_solver_options_default(void);

/*
 Oligopoly problem on the `n`-dimensional log-metric positive orthant.

 # Safety
 Every array must hold `n` doubles; `out` must be writable.
 */
enum HegStatus heg_problem_nash_cournot(size_t n,
                                        const double *a,
                                        const double *b,
                                        const double *alpha,
                                        const double *beta,
                                        const double *lower,
                                        const double *upper,
                                        struct HegProblem **out);

/*
 `f(x, y) = <C x + D y + q, y - x>` on a single-kind manifold; `c` and `d`
 are row-major `n x n`.

 # Safety
 `c` and `d` must hold `n * n` doubles, the other arrays `n`; `out` must be writable.
 */
enum HegStatus heg_problem_linear(enum HegManifoldKind kind,
                                  size_t n,
                                  const double *c,
                                  const double *d,
                                  const double *q,
                                  const double *lower,
                                  const double *upper,
                                  struct HegProblem **out);

/*
 # Safety
 `problem` must be null or a handle from a `heg_problem_*` constructor, freed once.
 */
void heg_problem_free(struct HegProblem *problem);

/*
 Dimension of the problem, 0 for a null handle.

 # Safety
 `problem` must be null or a live handle.
 */
size_t heg_problem_dim(const struct HegProblem *problem);

/*
 Geodesic distance between two points of the problem's manifold.

 # Safety
 `x` and `y` must hold `dim` doubles; `out` must be writable.
 */
enum HegStatus heg_distance(const struct HegProblem *problem,
                            const double *x,
                            const double *y,
                            double *out);

/*
 Runs the solver from `x0`. An aborted run still returns a handle and
 `HEG_STATUS_OK`; query it with [`heg_run_status`].

 # Safety
 `x0` must hold `dim` doubles; `options` may be null (defaults); `out` must be writable.
 */
enum HegStatus heg_solve(const struct HegProblem *problem,
                         const double *x0,
                         const struct HegSolverOptions *options,
                         struct HegRun **out);

/*
 # Safety
 `run` must be null or a handle from [`heg_solve`], freed once.
 */
void heg_run_free(struct HegRun *run);

/*
 # Safety
 `run` must be a live handle; `out` must be writable.
 */
enum HegStatus heg_run_status(const struct HegRun *run, enum HegRunStatus *out);

/*
 Number of recorded iterations, 0 for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
size_t heg_run_iterations(const struct HegRun *run);

/*
 `eps` and `lambda` of iteration `n`; either output may be null.

 # Safety
 `run` must be a live handle; non-null outputs must be writable.
 */
enum HegStatus heg_run_record(const struct HegRun *run, size_t n, double *eps, double *lambda);

/*
 Copies the final point into `out`, which must have room for `len >= dim` doubles.

 # Safety
 `run` must be a live handle; `out` must hold `len` writable doubles.
 */
enum HegStatus heg_run_final_point(const struct HegRun *run, double *out, size_t len);

/*
 Checks `min_y f(x, y) >= -slack` on a uniform chart grid. Returns
 `HEG_STATUS_NOT_CERTIFIED` when the check fails; `worst_value` may be null.

 # Safety
 `x` must hold `dim` doubles; non-null outputs must be writable.
 */
enum HegStatus heg_certify(const struct HegProblem *problem,
                           const double *x,
                           size_t points_per_axis,
                           double slack,
                           double *worst_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEG_H */
