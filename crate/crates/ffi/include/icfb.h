#ifndef ICFB_H
#define ICFB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Scheme selector for [`icfb_rate_solve`].
 */
typedef enum {
  ICFB_SCHEME_PROPOSED = 0,
  ICFB_SCHEME_KRAMER = 1,
  ICFB_SCHEME_NO_INTERFERENCE = 2,
} IcfbScheme;

/*
 Result codes of every fallible call.
 */
typedef enum {
  ICFB_STATUS_OK = 0,
  /*
   Arguments outside their domain.
   */
  ICFB_STATUS_INVALID_ARGUMENT = 1,
  /*
   The problem has no feasible or defined answer.
   */
  ICFB_STATUS_INFEASIBLE = 2,
  /*
   A required pointer was null.
   */
  ICFB_STATUS_NULL_POINTER = 3,
  /*
   Requested user count has no Hadamard construction.
   */
  ICFB_STATUS_UNSUPPORTED_ORDER = 4,
  /*
   A Rust panic was caught at the boundary.
   */
  ICFB_STATUS_PANIC = 5,
} IcfbStatus;

/*
 Opaque steady-state rate solution.
 */
typedef struct IcfbRateSolution IcfbRateSolution;

/*
 Opaque coding schedule.
 */
typedef struct IcfbSchedule IcfbSchedule;

/*
 Opaque Monte Carlo session outcome.
 */
typedef struct IcfbSessionResult IcfbSessionResult;

/*
 Per-user statistics copied out of a session result.
 */
typedef struct {
  double p_e;
  double rate_bits;
  double avg_power;
  uint64_t retransmissions;
} IcfbUserStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failed call on this thread, or null if none.
 The caller owns the string and releases it with [`icfb_string_free`].
 */
char *icfb_last_error(void);

/*
 Release a string returned by this library.

 # Safety
 `s` must be null or a pointer obtained from this library that has not
 been freed yet.
 */
void icfb_string_free(char *s);

/*
 `½ log2(1 + P)`.

 # Safety
 `out` must be null or valid for one `double` write.
 */
IcfbStatus icfb_rate_no_interference(double p, double *out);

/*
 Closed-form per-user GDoF at `alpha`.

 # Safety
 `out` must be null or valid for one `double` write.
 */
IcfbStatus icfb_gdof_closed_form(double alpha, double *out);

/*
 Solve one scheme at `(M, a, P)`; on success `*out` receives a new handle.

 An infeasible steady state is still returned with status `Ok`; query it
 with [`icfb_rate_solution_feasible`].

 # Safety
 `out` must be null or valid for one pointer write.
 */
IcfbStatus icfb_rate_solve(IcfbScheme scheme,
                           uintptr_t m,
                           double a,
                           double p,
                           IcfbRateSolution **out);

/*
 Release a rate solution.

 # Safety
 `sol` must be null or a handle from [`icfb_rate_solve`] not freed yet.
 */
void icfb_rate_solution_free(IcfbRateSolution *sol);

/*
 Symmetric rate in bits per channel use; NaN for a null handle.

 # Safety
 `sol` must be null or a live handle.
 */
double icfb_rate_solution_r_sym(const IcfbRateSolution *sol);

/*
 `b` of the steady triple; NaN for a null handle.

 # Safety
 `sol` must be null or a live handle.
 */
double icfb_rate_solution_b(const IcfbRateSolution *sol);

/*
 `β` of the steady triple; NaN for a null handle.

 # Safety
 `sol` must be null or a live handle.
 */
double icfb_rate_solution_beta(const IcfbRateSolution *sol);

/*
 1 when all steady-state checks pass, 0 otherwise or for a null handle.

 # Safety
 `sol` must be null or a live handle.
 */
int32_t icfb_rate_solution_feasible(const IcfbRateSolution *sol);

/*
 Copy up to `len` eigenvalues into `buf`; `*count` receives `M`.

 # Safety
 `sol` must be a live handle, `buf` valid for `len` writes (or null when
 `len` is 0) and `count` null or valid for one write.
 */
IcfbStatus icfb_rate_solution_lambdas(const IcfbRateSolution *sol,
                                      double *buf,
                                      uintptr_t len,
                                      uintptr_t *count);

/*
 Schedule steering the identity covariance into `sol`'s steady state.

 # Safety
 `sol` must be a live handle and `out` valid for one pointer write.
 */
IcfbStatus icfb_schedule_from_solution(const IcfbRateSolution *sol, IcfbSchedule **out);

/*
 Constant no-interference schedule at power `p` for `m` users.

 # Safety
 `out` must be valid for one pointer write.
 */
IcfbStatus icfb_schedule_no_interference(double p, uintptr_t m, IcfbSchedule **out);

/*
 Greedy constant-power schedule for `horizon` steps.

 # Safety
 `out` must be valid for one pointer write.
 */
IcfbStatus icfb_schedule_greedy(uintptr_t m,
                                double a,
                                double p,
                                uintptr_t horizon,
                                IcfbSchedule **out);

/*
 Release a schedule.

 # Safety
 `sched` must be null or a schedule handle not freed yet.
 */
void icfb_schedule_free(IcfbSchedule *sched);

/*
 Run `trials` sessions over channel `(M, a, P)` with `sched`.

 # Safety
 `sched` must be a live handle and `out` valid for one pointer write.
 */
IcfbStatus icfb_run_session(uintptr_t m,
                            double a,
                            double p,
                            const IcfbSchedule *sched,
                            uintptr_t horizon,
                            double rate_fraction,
                            uint64_t trials,
                            uint64_t seed,
                            int32_t retransmit,
                            IcfbSessionResult **out);

/*
 Number of users in a session result; 0 for a null handle.

 # Safety
 `res` must be null or a live handle.
 */
uintptr_t icfb_session_result_users(const IcfbSessionResult *res);

/*
 Target rate of the session in bits per channel use; NaN for a null handle.

 # Safety
 `res` must be null or a live handle.
 */
double icfb_session_result_rate(const IcfbSessionResult *res);

/*
 Largest relative IFS reconstruction error seen; NaN for a null handle.

 # Safety
 `res` must be null or a live handle.
 */
double icfb_session_result_max_ifs_error(const IcfbSessionResult *res);

/*
 Copy the statistics of 0-based `user` into `*out`.

 # Safety
 `res` must be a live handle and `out` valid for one write.
 */
IcfbStatus icfb_session_result_user(const IcfbSessionResult *res,
                                    uintptr_t user,
                                    IcfbUserStats *out);

/*
 Release a session result.

 # Safety
 `res` must be null or a session handle not freed yet.
 */
void icfb_session_result_free(IcfbSessionResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ICFB_H */
