//! C interface to `tgv-core`.
//!
//! Every fallible function returns a [`TgvStatus`]. On failure the message is
//! available from [`tgv_last_error_message`] on the same thread. Solvers are
//! opaque handles created by `tgv_solver_create*` and released with
//! [`tgv_solver_free`]. A handle may be used from one thread at a time.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access implied by their
//! type; arrays must hold at least the stated length; strings must be
//! NUL-terminated UTF-8. Null pointers are reported as
//! `TgvStatus::NullPointer`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use tgv_core::analysis::{self, RatioSeries};
use tgv_core::checkpoint::Checkpoint;
use tgv_core::config::{SolverConfig, ViscousScheme};
use tgv_core::diagnostics;
use tgv_core::integrator::{Solver, SolverState};
use tgv_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Checkpoint = 5,
    Analysis = 6,
    Io = 7,
    Panic = 8,
}

/// Solver parameters. Initialize with [`tgv_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TgvConfig {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub diag_stride: u64,
    pub checkpoint_stride: u64,
    /// 0 explicit, 1 integrating factor.
    pub viscous_scheme: u32,
}

/// Result of [`tgv_scale_comparison`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TgvScaleReport {
    pub epsilon_2k: f64,
    pub log_r: f64,
    pub log_rho: f64,
    pub dominant: bool,
    pub reversed_regime: bool,
}

/// Opaque solver handle.
pub struct TgvSolver {
    solver: Solver,
    state: SolverState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> TgvStatus {
    match err {
        Error::InvalidGrid(_) | Error::Config(_) | Error::ConfigLine { .. } => TgvStatus::Config,
        Error::GridMismatch { .. } | Error::Checkpoint { .. } => TgvStatus::Checkpoint,
        Error::ZeroField | Error::BlowUp { .. } => TgvStatus::Numerical,
        Error::Analysis(_) => TgvStatus::Analysis,
        Error::Csv { .. } | Error::Io { .. } => TgvStatus::Io,
    }
}

struct Fail(TgvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(TgvStatus::InvalidArgument, msg.to_string())
}

fn null(what: &str) -> Fail {
    Fail(TgvStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TgvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TgvStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            TgvStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn solver_ref<'a>(p: *const TgvSolver) -> Result<&'a TgvSolver, Fail> {
    p.as_ref().ok_or_else(|| null("solver"))
}

unsafe fn solver_mut<'a>(p: *mut TgvSolver) -> Result<&'a mut TgvSolver, Fail> {
    p.as_mut().ok_or_else(|| null("solver"))
}

fn to_core(c: &TgvConfig) -> Result<SolverConfig, Fail> {
    let viscous = match c.viscous_scheme {
        0 => ViscousScheme::Explicit,
        1 => ViscousScheme::IntegratingFactor,
        v => return Err(invalid(&format!("unknown viscous scheme {v}"))),
    };
    Ok(SolverConfig {
        n: c.n,
        nu: c.nu,
        dt: c.dt,
        t_end: c.t_end,
        diag_stride: c.diag_stride,
        checkpoint_stride: c.checkpoint_stride,
        viscous,
        ..SolverConfig::default()
    })
}

fn into_handle(cfg: SolverConfig, out: &mut *mut TgvSolver) -> Result<(), Fail> {
    let solver = Solver::new(cfg)?;
    let state = solver.initial_state();
    *out = Box::into_raw(Box::new(TgvSolver { solver, state }));
    Ok(())
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn tgv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tgv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fill `out` with the reference parameters (N=256, nu=1/1600, dt=0.001, t_end=20).
#[no_mangle]
pub unsafe extern "C" fn tgv_config_default(out: *mut TgvConfig) -> TgvStatus {
    guard(|| {
        let d = SolverConfig::default();
        *out_arg(out, "out")? = TgvConfig {
            n: d.n,
            nu: d.nu,
            dt: d.dt,
            t_end: d.t_end,
            diag_stride: d.diag_stride,
            checkpoint_stride: d.checkpoint_stride,
            viscous_scheme: 0,
        };
        Ok(())
    })
}

/// Create a solver at the Taylor-Green initial state.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_create(config: *const TgvConfig, out: *mut *mut TgvSolver) -> TgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        into_handle(to_core(c)?, out)
    })
}

/// Create a solver from a `key = value` config file.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_create_from_file(path: *const c_char, out: *mut *mut TgvSolver) -> TgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let cfg = SolverConfig::load(&path_arg(path)?)?;
        into_handle(cfg, out)
    })
}

/// Release a solver. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_free(solver: *mut TgvSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Advance `steps` RK4 steps. On a numerical blow-up the state is left at the
/// last finite step.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_step(solver: *mut TgvSolver, steps: u64) -> TgvStatus {
    guard(|| {
        let s = solver_mut(solver)?;
        for _ in 0..steps {
            s.state = s.solver.rk4_step(&s.state)?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tgv_solver_time(solver: *const TgvSolver, t: *mut f64) -> TgvStatus {
    guard(|| {
        *out_arg(t, "t")? = solver_ref(solver)?.state.t;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tgv_solver_step_index(solver: *const TgvSolver, step: *mut u64) -> TgvStatus {
    guard(|| {
        *out_arg(step, "step")? = solver_ref(solver)?.state.step_index;
        Ok(())
    })
}

/// Kinetic energy `0.5 <|u|^2>`.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_energy(solver: *const TgvSolver, out: *mut f64) -> TgvStatus {
    guard(|| {
        *out_arg(out, "out")? = diagnostics::energy(&solver_ref(solver)?.state.field);
        Ok(())
    })
}

/// Enstrophy `0.5 <|curl u|^2>`.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_enstrophy(solver: *const TgvSolver, out: *mut f64) -> TgvStatus {
    guard(|| {
        *out_arg(out, "out")? = diagnostics::enstrophy(&solver_ref(solver)?.state.field);
        Ok(())
    })
}

/// Natural log of the sup norm of the order-`order` derivative of the velocity.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_log_sup_norm(solver: *const TgvSolver, order: u32, out: *mut f64) -> TgvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let out = out_arg(out, "out")?;
        *out = s.solver.spectral().log_sup_norm(&s.state.field, order)?.value;
        Ok(())
    })
}

/// `ln R^k` for the current state.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_log_ratio(solver: *const TgvSolver, k: u32, out: *mut f64) -> TgvStatus {
    guard(|| {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        let s = solver_ref(solver)?;
        let out = out_arg(out, "out")?;
        *out = diagnostics::ratio_log(s.solver.spectral(), &s.state.field, k)?;
        Ok(())
    })
}

/// Write the current state to a checkpoint file.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_save_checkpoint(solver: *const TgvSolver, path: *const c_char) -> TgvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let cfg = s.solver.config();
        let ck = Checkpoint {
            n: cfg.n,
            nu: cfg.nu,
            dt: cfg.dt,
            t: s.state.t,
            step_index: s.state.step_index,
            field: s.state.field.clone(),
        };
        ck.save(&path_arg(path)?)?;
        Ok(())
    })
}

/// Replace the solver state with a checkpoint. The checkpoint must match the
/// solver's N, nu and dt.
#[no_mangle]
pub unsafe extern "C" fn tgv_solver_load_checkpoint(solver: *mut TgvSolver, path: *const c_char) -> TgvStatus {
    guard(|| {
        let path = path_arg(path)?;
        let s = solver_mut(solver)?;
        let ck = Checkpoint::load(&path)?;
        let cfg = s.solver.config();
        if ck.n != cfg.n {
            return Err(Error::GridMismatch {
                expected: cfg.n,
                found: ck.n,
            }
            .into());
        }
        if ck.nu != cfg.nu || ck.dt != cfg.dt {
            return Err(Fail(
                TgvStatus::Checkpoint,
                format!(
                    "checkpoint nu/dt ({}, {}) differ from solver ({}, {})",
                    ck.nu, ck.dt, cfg.nu, cfg.dt
                ),
            ));
        }
        s.state = s.solver.state_at(ck.field, ck.step_index)?;
        Ok(())
    })
}

/// Fit `ln R^k = gamma ln(T* - t)` over samples with `T* - t` in `[beta_min, 1]`.
#[no_mangle]
pub unsafe extern "C" fn tgv_fit_gamma(
    t: *const f64,
    log_ratio: *const f64,
    len: usize,
    t_star: f64,
    beta_min: f64,
    gamma: *mut f64,
) -> TgvStatus {
    guard(|| {
        let t = slice_arg(t, len, "t")?;
        let y = slice_arg(log_ratio, len, "log_ratio")?;
        let gamma = out_arg(gamma, "gamma")?;
        let series = RatioSeries {
            t: t.to_vec(),
            log_ratios: BTreeMap::from([(1, y.to_vec())]),
            n: None,
            nu: None,
            dt: None,
        };
        *gamma = analysis::fit_gamma(&series, 1, t_star, beta_min)?.gamma;
        Ok(())
    })
}

/// Fit `gamma_k = k^-a` through the origin in log-log space; `k = 1` is ignored.
#[no_mangle]
pub unsafe extern "C" fn tgv_fit_alpha(k: *const u32, gamma: *const f64, len: usize, a: *mut f64) -> TgvStatus {
    guard(|| {
        let k = slice_arg(k, len, "k")?;
        let g = slice_arg(gamma, len, "gamma")?;
        let a = out_arg(a, "a")?;
        let pairs: Vec<(u32, f64)> = k.iter().copied().zip(g.iter().copied()).collect();
        *a = analysis::fit_alpha(&pairs)?.a;
        Ok(())
    })
}

/// `4 (k + 1) / k^alpha`.
#[no_mangle]
pub extern "C" fn tgv_epsilon_2k(k: u32, alpha: f64) -> f64 {
    analysis::epsilon_2k(k, alpha)
}

/// Compare the sparseness and analyticity scales for `ln ||D^{2k} u||_inf`.
#[no_mangle]
pub unsafe extern "C" fn tgv_scale_comparison(
    log_norm_2k: f64,
    k: u32,
    alpha: f64,
    out: *mut TgvScaleReport,
) -> TgvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        let r = analysis::scale_comparison(log_norm_2k, k, alpha);
        *out = TgvScaleReport {
            epsilon_2k: r.epsilon_2k,
            log_r: r.log_r,
            log_rho: r.log_rho,
            dominant: r.dominant,
            reversed_regime: r.reversed_regime,
        };
        Ok(())
    })
}

/// Time of the global maximum of `values`, refined by a parabola through the
/// neighbouring samples.
#[no_mangle]
pub unsafe extern "C" fn tgv_detect_peak(
    t: *const f64,
    values: *const f64,
    len: usize,
    t_star: *mut f64,
    index: *mut usize,
) -> TgvStatus {
    guard(|| {
        let t = slice_arg(t, len, "t")?;
        let v = slice_arg(values, len, "values")?;
        let p = analysis::detect_peak(t, v)?;
        *out_arg(t_star, "t_star")? = p.t_star;
        if let Some(i) = index.as_mut() {
            *i = p.index;
        }
        Ok(())
    })
}
