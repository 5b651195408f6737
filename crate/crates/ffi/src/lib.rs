//! C ABI over `heg-core`.
//!
//! Problems and runs are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`HegStatus`]; on failure the
//! message is available from [`heg_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heg_core::bifunction::NashCournotModel;
use heg_core::extragradient::{RunOutcome, Solver};
use heg_core::manifold::Component;
use heg_core::oracle::{certify_equilibrium, Grid, DEFAULT_BUDGET};
use heg_core::{BoxSet, ComponentKind, Error, LinearBifunction, Manifold, ProxConfig, RunStatus, SolverConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HegStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    NotCertified = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HegManifoldKind {
    Euclidean = 0,
    LogPositiveOrthant = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HegRunStatus {
    Converged = 0,
    MaxIterations = 1,
    Aborted = 2,
}

/// Solver settings. `multi_starts < 0` picks the library default.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HegSolverOptions {
    pub lambda0: f64,
    pub mu: f64,
    pub stop_tol: f64,
    pub max_outer: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub multi_starts: i64,
    pub seed: u64,
}

/// Manifold, feasible box and linear bifunction.
pub struct HegProblem {
    manifold: Manifold,
    set: BoxSet,
    f: LinearBifunction,
}

/// Result of [`heg_solve`].
pub struct HegRun {
    outcome: RunOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: HegStatus, msg: impl Into<String>) -> HegStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> HegStatus {
    let status = match e {
        Error::Aborted { .. } | Error::NonFinite(_) => HegStatus::SolverFailure,
        _ => HegStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `body`, turning panics into [`HegStatus::Panic`].
fn guard(body: impl FnOnce() -> HegStatus) -> HegStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(HegStatus::Panic, "panic inside heg"),
    }
}

/// # Safety
/// `p` must be null or point to `n` readable doubles.
unsafe fn slice<'a>(p: *const f64, n: usize) -> Option<&'a [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

macro_rules! require {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(HegStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

fn pairs(lower: &[f64], upper: &[f64]) -> Vec<[f64; 2]> {
    lower.iter().zip(upper).map(|(&l, &u)| [l, u]).collect()
}

/// Last error message on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn heg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn heg_solver_options_default() -> HegSolverOptions {
    let s = SolverConfig::default();
    HegSolverOptions {
        lambda0: s.lambda0,
        mu: s.mu,
        stop_tol: s.stop_tol,
        max_outer: s.max_outer,
        inner_tol: s.inner.tol,
        inner_max_iters: s.inner.max_iters,
        multi_starts: s.inner.multi_starts.map_or(-1, |k| k as i64),
        seed: s.inner.seed,
    }
}

/// Oligopoly problem on the `n`-dimensional log-metric positive orthant.
///
/// # Safety
/// Every array must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_problem_nash_cournot(
    n: usize,
    a: *const f64,
    b: *const f64,
    alpha: *const f64,
    beta: *const f64,
    lower: *const f64,
    upper: *const f64,
    out: *mut *mut HegProblem,
) -> HegStatus {
    guard(|| {
        require!(a, b, alpha, beta, lower, upper, out);
        let (lower, upper) = (slice(lower, n).unwrap(), slice(upper, n).unwrap());
        let model = NashCournotModel {
            a: slice(a, n).unwrap().to_vec(),
            b: slice(b, n).unwrap().to_vec(),
            alpha: slice(alpha, n).unwrap().to_vec(),
            beta: slice(beta, n).unwrap().to_vec(),
            bounds: pairs(lower, upper),
        };
        let built = Manifold::log_orthant(n).and_then(|m| {
            let f = model.build()?;
            let set = model.feasible_set(&m)?;
            Ok(HegProblem { manifold: m, set, f })
        });
        match built {
            Ok(p) => {
                *out = Box::into_raw(Box::new(p));
                HegStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `f(x, y) = <C x + D y + q, y - x>` on a single-kind manifold; `c` and `d`
/// are row-major `n x n`.
///
/// # Safety
/// `c` and `d` must hold `n * n` doubles, the other arrays `n`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_problem_linear(
    kind: HegManifoldKind,
    n: usize,
    c: *const f64,
    d: *const f64,
    q: *const f64,
    lower: *const f64,
    upper: *const f64,
    out: *mut *mut HegProblem,
) -> HegStatus {
    guard(|| {
        require!(c, d, q, lower, upper, out);
        let Some(nn) = n.checked_mul(n) else {
            return fail(HegStatus::InvalidArgument, "dimension overflows");
        };
        let rows = |m: &[f64]| m.chunks(n.max(1)).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let kind = match kind {
            HegManifoldKind::Euclidean => ComponentKind::Euclidean,
            HegManifoldKind::LogPositiveOrthant => ComponentKind::LogPositiveOrthant,
        };
        let built = Manifold::new(vec![Component { kind, dim: n }]).and_then(|m| {
            let f = LinearBifunction::from_rows(
                &rows(slice(c, nn).unwrap()),
                &rows(slice(d, nn).unwrap()),
                slice(q, n).unwrap(),
            )?;
            let set = BoxSet::new(&m, slice(lower, n).unwrap().to_vec(), slice(upper, n).unwrap().to_vec())?;
            Ok(HegProblem { manifold: m, set, f })
        });
        match built {
            Ok(p) => {
                *out = Box::into_raw(Box::new(p));
                HegStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from a `heg_problem_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn heg_problem_free(problem: *mut HegProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Dimension of the problem, 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heg_problem_dim(problem: *const HegProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.manifold.dim())
}

/// Geodesic distance between two points of the problem's manifold.
///
/// # Safety
/// `x` and `y` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_distance(
    problem: *const HegProblem,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> HegStatus {
    guard(|| {
        require!(problem, x, y, out);
        let p = &*problem;
        let n = p.manifold.dim();
        let result = p.manifold.point(slice(x, n).unwrap().to_vec()).and_then(|x| {
            let y = p.manifold.point(slice(y, n).unwrap().to_vec())?;
            p.manifold.distance(&x, &y)
        });
        match result {
            Ok(d) => {
                *out = d;
                HegStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs the solver from `x0`. An aborted run still returns a handle and
/// `HEG_STATUS_OK`; query it with [`heg_run_status`].
///
/// # Safety
/// `x0` must hold `dim` doubles; `options` may be null (defaults); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_solve(
    problem: *const HegProblem,
    x0: *const f64,
    options: *const HegSolverOptions,
    out: *mut *mut HegRun,
) -> HegStatus {
    guard(|| {
        require!(problem, x0, out);
        let p = &*problem;
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| heg_solver_options_default());
        let cfg = SolverConfig {
            lambda0: o.lambda0,
            mu: o.mu,
            stop_tol: o.stop_tol,
            max_outer: o.max_outer,
            inner: ProxConfig {
                tol: o.inner_tol,
                max_iters: o.inner_max_iters,
                multi_starts: usize::try_from(o.multi_starts).ok(),
                seed: o.seed,
            },
        };
        let result = p
            .manifold
            .point(slice(x0, p.manifold.dim()).unwrap().to_vec())
            .and_then(|x0| Solver::new(&p.f, &p.manifold, &p.set, cfg)?.run(&x0));
        match result {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(HegRun { outcome }));
                HegStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `run` must be null or a handle from [`heg_solve`], freed once.
#[no_mangle]
pub unsafe extern "C" fn heg_run_free(run: *mut HegRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_run_status(run: *const HegRun, out: *mut HegRunStatus) -> HegStatus {
    guard(|| {
        require!(run, out);
        *out = match (*run).outcome.status {
            RunStatus::Converged => HegRunStatus::Converged,
            RunStatus::MaxIterations => HegRunStatus::MaxIterations,
            RunStatus::Aborted => HegRunStatus::Aborted,
        };
        HegStatus::Ok
    })
}

/// Number of recorded iterations, 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heg_run_iterations(run: *const HegRun) -> usize {
    run.as_ref().map_or(0, |r| r.outcome.trace.len())
}

/// `eps` and `lambda` of iteration `n`; either output may be null.
///
/// # Safety
/// `run` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_run_record(run: *const HegRun, n: usize, eps: *mut f64, lambda: *mut f64) -> HegStatus {
    guard(|| {
        require!(run);
        let Some(r) = (*run).outcome.trace.records.as_slice().get(n) else {
            return fail(HegStatus::InvalidArgument, format!("iteration {n} was not recorded"));
        };
        if !eps.is_null() {
            *eps = r.eps;
        }
        if !lambda.is_null() {
            *lambda = r.lambda;
        }
        HegStatus::Ok
    })
}

/// Copies the final point into `out`, which must have room for `len >= dim` doubles.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn heg_run_final_point(run: *const HegRun, out: *mut f64, len: usize) -> HegStatus {
    guard(|| {
        require!(run, out);
        let x = (*run).outcome.final_x.coords();
        if len < x.len() {
            return fail(
                HegStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", x.len()),
            );
        }
        std::slice::from_raw_parts_mut(out, x.len()).copy_from_slice(x);
        HegStatus::Ok
    })
}

/// Checks `min_y f(x, y) >= -slack` on a uniform chart grid. Returns
/// `HEG_STATUS_NOT_CERTIFIED` when the check fails; `worst_value` may be null.
///
/// # Safety
/// `x` must hold `dim` doubles; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn heg_certify(
    problem: *const HegProblem,
    x: *const f64,
    points_per_axis: usize,
    slack: f64,
    worst_value: *mut f64,
) -> HegStatus {
    guard(|| {
        require!(problem, x);
        let p = &*problem;
        let result = p
            .manifold
            .point(slice(x, p.manifold.dim()).unwrap().to_vec())
            .and_then(|x| {
                let grid = Grid::uniform(&p.set, points_per_axis, DEFAULT_BUDGET)?;
                certify_equilibrium(&p.f, &p.manifold, &p.set, &x, &grid, slack)
            });
        match result {
            Ok(cert) => {
                if !worst_value.is_null() {
                    *worst_value = cert.worst_value;
                }
                if cert.certified {
                    HegStatus::Ok
                } else {
                    fail(
                        HegStatus::NotCertified,
                        format!("f(x, {:?}) = {:e} < -{slack}", cert.worst_y, cert.worst_value),
                    )
                }
            }
            Err(e) => from_error(e),
        }
    })
}
