//! C ABI over the icfb rate solvers and the feedback-code simulator.
//!
//! Objects cross the boundary as opaque handles created by `icfb_*_new` or
//! solver calls and released by the matching `icfb_*_free`. Every fallible
//! call returns an [`IcfbStatus`]; the text of the most recent error on the
//! calling thread is available from [`icfb_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use icfb::cli::{kramer_solution, proposed_solution};
use icfb::codec::{run_session, CodeSchedule, SessionConfig, SessionResult};
use icfb::rates::{gdof_closed_form, rate_no_interference_m, RateSolution};
use icfb::{ChannelParams, Error};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcfbStatus {
    Ok = 0,
    /// Arguments outside their domain.
    InvalidArgument = 1,
    /// The problem has no feasible or defined answer.
    Infeasible = 2,
    /// A required pointer was null.
    NullPointer = 3,
    /// Requested user count has no Hadamard construction.
    UnsupportedOrder = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Scheme selector for [`icfb_rate_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcfbScheme {
    Proposed = 0,
    Kramer = 1,
    NoInterference = 2,
}

/// Opaque steady-state rate solution.
pub struct IcfbRateSolution(RateSolution);

/// Opaque coding schedule.
pub struct IcfbSchedule(CodeSchedule);

/// Opaque Monte Carlo session outcome.
pub struct IcfbSessionResult(SessionResult);

/// Per-user statistics copied out of a session result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcfbUserStats {
    pub p_e: f64,
    pub rate_bits: f64,
    pub avg_power: f64,
    pub retransmissions: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IcfbStatus {
    match e {
        Error::UnsupportedOrder(_) => IcfbStatus::UnsupportedOrder,
        e if e.is_infeasible() => IcfbStatus::Infeasible,
        _ => IcfbStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (IcfbStatus, String)>) -> IcfbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IcfbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside icfb".into());
            IcfbStatus::Panic
        }
    }
}

fn lib<T>(r: icfb::Result<T>) -> Result<T, (IcfbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (IcfbStatus, String) {
    (IcfbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (IcfbStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (IcfbStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the most recent failed call on this thread, or null if none.
/// The caller owns the string and releases it with [`icfb_string_free`].
#[no_mangle]
pub extern "C" fn icfb_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(c) => c.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn icfb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `½ log2(1 + P)`.
///
/// # Safety
/// `out` must be null or valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_no_interference(p: f64, out: *mut f64) -> IcfbStatus {
    guard(|| {
        let sol = lib(rate_no_interference_m(p, 1))?;
        write_out(out, sol.r_sym, "out")
    })
}

/// Closed-form per-user GDoF at `alpha`.
///
/// # Safety
/// `out` must be null or valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn icfb_gdof_closed_form(alpha: f64, out: *mut f64) -> IcfbStatus {
    guard(|| {
        let d = lib(gdof_closed_form(alpha))?;
        write_out(out, d, "out")
    })
}

/// Solve one scheme at `(M, a, P)`; on success `*out` receives a new handle.
///
/// An infeasible steady state is still returned with status `Ok`; query it
/// with [`icfb_rate_solution_feasible`].
///
/// # Safety
/// `out` must be null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solve(
    scheme: IcfbScheme,
    m: usize,
    a: f64,
    p: f64,
    out: *mut *mut IcfbRateSolution,
) -> IcfbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = lib(ChannelParams::new(m, a, p))?;
        let sol = match scheme {
            IcfbScheme::Proposed => lib(proposed_solution(&params))?,
            IcfbScheme::Kramer => lib(kramer_solution(&params))?,
            IcfbScheme::NoInterference => {
                if a != 0.0 {
                    return Err((IcfbStatus::InvalidArgument, "no-interference needs a = 0".into()));
                }
                lib(rate_no_interference_m(p, m))?
            }
        };
        write_out(out, Box::into_raw(Box::new(IcfbRateSolution(sol))), "out")
    })
}

/// Release a rate solution.
///
/// # Safety
/// `sol` must be null or a handle from [`icfb_rate_solve`] not freed yet.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solution_free(sol: *mut IcfbRateSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Symmetric rate in bits per channel use; NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solution_r_sym(sol: *const IcfbRateSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.0.r_sym)
}

/// `b` of the steady triple; NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solution_b(sol: *const IcfbRateSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.0.b)
}

/// `β` of the steady triple; NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solution_beta(sol: *const IcfbRateSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.0.beta)
}

/// 1 when all steady-state checks pass, 0 otherwise or for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solution_feasible(sol: *const IcfbRateSolution) -> i32 {
    sol.as_ref().map_or(0, |s| i32::from(s.0.feasible()))
}

/// Copy up to `len` eigenvalues into `buf`; `*count` receives `M`.
///
/// # Safety
/// `sol` must be a live handle, `buf` valid for `len` writes (or null when
/// `len` is 0) and `count` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn icfb_rate_solution_lambdas(
    sol: *const IcfbRateSolution,
    buf: *mut f64,
    len: usize,
    count: *mut usize,
) -> IcfbStatus {
    guard(|| {
        let s = handle(sol, "sol")?;
        let n = s.0.lambdas.len();
        if !count.is_null() {
            count.write(n);
        }
        if len > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(s.0.lambdas.as_ptr(), buf, n.min(len));
        }
        Ok(())
    })
}

/// Schedule steering the identity covariance into `sol`'s steady state.
///
/// # Safety
/// `sol` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn icfb_schedule_from_solution(
    sol: *const IcfbRateSolution,
    out: *mut *mut IcfbSchedule,
) -> IcfbStatus {
    guard(|| {
        let s = handle(sol, "sol")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sched = lib(CodeSchedule::from_solution(&s.0))?;
        write_out(out, Box::into_raw(Box::new(IcfbSchedule(sched))), "out")
    })
}

/// Constant no-interference schedule at power `p` for `m` users.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn icfb_schedule_no_interference(
    p: f64,
    m: usize,
    out: *mut *mut IcfbSchedule,
) -> IcfbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sched = lib(CodeSchedule::no_interference(p, m))?;
        write_out(out, Box::into_raw(Box::new(IcfbSchedule(sched))), "out")
    })
}

/// Greedy constant-power schedule for `horizon` steps.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn icfb_schedule_greedy(
    m: usize,
    a: f64,
    p: f64,
    horizon: usize,
    out: *mut *mut IcfbSchedule,
) -> IcfbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = lib(ChannelParams::new(m, a, p))?;
        let sched = lib(CodeSchedule::greedy(&params, horizon))?;
        write_out(out, Box::into_raw(Box::new(IcfbSchedule(sched))), "out")
    })
}

/// Release a schedule.
///
/// # Safety
/// `sched` must be null or a schedule handle not freed yet.
#[no_mangle]
pub unsafe extern "C" fn icfb_schedule_free(sched: *mut IcfbSchedule) {
    if !sched.is_null() {
        drop(Box::from_raw(sched));
    }
}

/// Run `trials` sessions over channel `(M, a, P)` with `sched`.
///
/// # Safety
/// `sched` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn icfb_run_session(
    m: usize,
    a: f64,
    p: f64,
    sched: *const IcfbSchedule,
    horizon: usize,
    rate_fraction: f64,
    trials: u64,
    seed: u64,
    retransmit: i32,
    out: *mut *mut IcfbSessionResult,
) -> IcfbStatus {
    guard(|| {
        let s = handle(sched, "sched")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = lib(ChannelParams::new(m, a, p))?;
        let cfg = SessionConfig {
            horizon,
            rate_fraction,
            trials,
            seed,
            retransmit: retransmit != 0,
        };
        let res = lib(run_session(&params, &s.0, &cfg))?;
        write_out(out, Box::into_raw(Box::new(IcfbSessionResult(res))), "out")
    })
}

/// Number of users in a session result; 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_session_result_users(res: *const IcfbSessionResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.users.len())
}

/// Target rate of the session in bits per channel use; NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_session_result_rate(res: *const IcfbSessionResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.rate)
}

/// Largest relative IFS reconstruction error seen; NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icfb_session_result_max_ifs_error(res: *const IcfbSessionResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.max_ifs_error)
}

/// Copy the statistics of 0-based `user` into `*out`.
///
/// # Safety
/// `res` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn icfb_session_result_user(
    res: *const IcfbSessionResult,
    user: usize,
    out: *mut IcfbUserStats,
) -> IcfbStatus {
    guard(|| {
        let r = handle(res, "res")?;
        let u = r
            .0
            .users
            .get(user)
            .ok_or_else(|| (IcfbStatus::InvalidArgument, format!("user {user} out of range")))?;
        write_out(
            out,
            IcfbUserStats {
                p_e: u.p_e,
                rate_bits: u.rate_bits,
                avg_power: u.avg_power,
                retransmissions: u.retransmissions,
            },
            "out",
        )
    })
}

/// Release a session result.
///
/// # Safety
/// `res` must be null or a session handle not freed yet.
#[no_mangle]
pub unsafe extern "C" fn icfb_session_result_free(res: *mut IcfbSessionResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
