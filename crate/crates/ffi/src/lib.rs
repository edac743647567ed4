//! C interface to `mbp-rk`.
//!
//! Objects are opaque handles created by `*_new`/`*_from_*` style calls and
//! released with the matching `*_free`. Every fallible call returns an
//! [`MbpStatus`]; on failure `mbp_last_error()` describes the problem on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mbp_rk::certificate::{certify, step_bounds_with_mode, BoundMode, StabilityCertificate};
use mbp_rk::integrator::{simulate, SimulationConfig, TauChoice};
use mbp_rk::spatial::{Grid, InitialCondition};
use mbp_rk::tableau::{parse_tableau_json, ButcherTableau};
use mbp_rk::trace::{check_trace, read_trace_csv, SimulationTrace};
use mbp_rk::{presets, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownScheme = 3,
    ParseError = 4,
    InvalidTableau = 5,
    NotCertifiable = 6,
    NotMbp = 7,
    BoundViolation = 8,
    ConfigError = 9,
    IoError = 10,
    BufferTooSmall = 11,
    OutOfRange = 12,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbpBoundMode {
    /// `min(h^2 / (4 eps), eps / 4)`.
    Safe = 0,
    /// `min(4 h^2 / eps, eps / 4)`.
    Relaxed = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbpTauMode {
    Fixed = 0,
    AutoMbp = 1,
    AutoEnergy = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbpInitialKind {
    /// Uniform samples in [-1, 1]; `ic_param` is the seed.
    Random = 0,
    /// `cos(k x)`; `ic_param` is `k`.
    Cosine = 1,
}

pub struct MbpTableau(ButcherTableau);

pub struct MbpCertificate(StabilityCertificate);

pub struct MbpTrace(SimulationTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbpCertificateSummary {
    pub stages: usize,
    pub mbp: bool,
    pub energy_dissipative: bool,
    /// Both certificates hold.
    pub energy_guaranteed: bool,
    pub lambda_min: f64,
    /// NaN when the scheme is not SSP.
    pub ssp_ratio: f64,
    pub has_witness: bool,
    pub witness_i: usize,
    pub witness_k: usize,
}

/// Unavailable bounds are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbpStepBounds {
    pub epsilon: f64,
    pub h: f64,
    pub tau0_safe: f64,
    pub tau0_relaxed: f64,
    pub tau0: f64,
    pub tau_ssp: f64,
    pub tau_lambda: f64,
    pub tau_energy: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbpSimConfig {
    pub epsilon: f64,
    pub grid_n: usize,
    pub t_final: f64,
    pub tau_mode: MbpTauMode,
    /// Used when `tau_mode` is `Fixed`.
    pub tau: f64,
    pub ic_kind: MbpInitialKind,
    pub ic_param: u64,
    pub bound_mode: MbpBoundMode,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbpTraceRow {
    pub step: usize,
    pub time: f64,
    pub max_norm: f64,
    pub energy: f64,
    pub energy_delta: f64,
    pub stage_max_norm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbpTraceVerdict {
    pub rows: usize,
    pub worst_max_norm: f64,
    pub worst_max_norm_step: usize,
    /// NaN for a trace holding only the initial row.
    pub worst_energy_delta: f64,
    pub mbp_pass: bool,
    pub energy_pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> MbpStatus {
    match e {
        Error::UnknownScheme(_) => MbpStatus::UnknownScheme,
        Error::Parse(_) => MbpStatus::ParseError,
        Error::InvalidTableau(_) | Error::ShapeMismatch(_) | Error::InvalidForm(_) => MbpStatus::InvalidTableau,
        Error::NotMbp => MbpStatus::NotMbp,
        Error::BoundViolation { .. } => MbpStatus::BoundViolation,
        Error::Config(_) | Error::NonPositiveLambda { .. } => MbpStatus::ConfigError,
        Error::Io { .. } => MbpStatus::IoError,
        _ => MbpStatus::NotCertifiable,
    }
}

struct Fail(MbpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail(status: MbpStatus, msg: &str) -> Fail {
    Fail(status, msg.to_owned())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MbpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MbpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MbpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(MbpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MbpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(MbpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(MbpStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(fail(MbpStatus::NullPointer, "buffer is null"));
    }
    if len < src.len() {
        return Err(Fail(
            MbpStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn bound_mode(m: MbpBoundMode) -> BoundMode {
    match m {
        MbpBoundMode::Safe => BoundMode::Safe,
        MbpBoundMode::Relaxed => BoundMode::Relaxed,
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mbp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn mbp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_tableau_from_preset(name: *const c_char, out: *mut *mut MbpTableau) -> MbpStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let t = presets::by_name(name).ok_or_else(|| Error::UnknownScheme(name.to_owned()))?;
        put(out, Box::into_raw(Box::new(MbpTableau(t))))
    })
}

/// Parses a tableau document `{"s": .., "a": [[..]], "b": [..], "c"?: [..], "name"?: ..}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_tableau_from_json(json: *const c_char, out: *mut *mut MbpTableau) -> MbpStatus {
    guard(|| {
        let t = parse_tableau_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(MbpTableau(t))))
    })
}

/// Number of stages, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live tableau handle.
#[no_mangle]
pub unsafe extern "C" fn mbp_tableau_stages(t: *const MbpTableau) -> usize {
    t.as_ref().map_or(0, |t| t.0.stages())
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mbp_tableau_free(t: *mut MbpTableau) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live tableau handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_certify(t: *const MbpTableau, out: *mut *mut MbpCertificate) -> MbpStatus {
    guard(|| {
        let cert = certify(&handle(t, "tableau")?.0)?;
        put(out, Box::into_raw(Box::new(MbpCertificate(cert))))
    })
}

/// # Safety
/// `c` must be a live certificate handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_certificate_summary(
    c: *const MbpCertificate,
    out: *mut MbpCertificateSummary,
) -> MbpStatus {
    guard(|| {
        let c = &handle(c, "certificate")?.0;
        let w = c.ssp_witness;
        put(
            out,
            MbpCertificateSummary {
                stages: c.stages,
                mbp: c.mbp,
                energy_dissipative: c.energy_dissipative,
                energy_guaranteed: c.energy_guaranteed(),
                lambda_min: c.lambda_min,
                ssp_ratio: c.ssp_ratio.unwrap_or(f64::NAN),
                has_witness: w.is_some(),
                witness_i: w.map_or(0, |w| w.i),
                witness_k: w.map_or(0, |w| w.k),
            },
        )
    })
}

/// Copies `Phi` row-major into `buf`, which must hold `stages * stages`
/// values.
///
/// # Safety
/// `c` must be a live certificate handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mbp_certificate_phi(c: *const MbpCertificate, buf: *mut f64, len: usize) -> MbpStatus {
    guard(|| copy_out(handle(c, "certificate")?.0.phi.as_slice(), buf, len))
}

/// Copies `Delta_E` row-major into `buf`, which must hold `stages * stages`
/// values.
///
/// # Safety
/// `c` must be a live certificate handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mbp_certificate_delta_e(c: *const MbpCertificate, buf: *mut f64, len: usize) -> MbpStatus {
    guard(|| copy_out(handle(c, "certificate")?.0.delta_e.as_slice(), buf, len))
}

/// Step-size bounds for `epsilon` on the periodic grid with `grid_n` points.
///
/// # Safety
/// `c` must be a live certificate handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_certificate_step_bounds(
    c: *const MbpCertificate,
    epsilon: f64,
    grid_n: usize,
    mode: MbpBoundMode,
    out: *mut MbpStepBounds,
) -> MbpStatus {
    guard(|| {
        let c = &handle(c, "certificate")?.0;
        let grid = Grid::new(grid_n)?;
        let b = step_bounds_with_mode(c, epsilon, grid.h(), bound_mode(mode))?;
        put(
            out,
            MbpStepBounds {
                epsilon: b.epsilon,
                h: b.h,
                tau0_safe: b.tau0_safe,
                tau0_relaxed: b.tau0_relaxed,
                tau0: b.tau0,
                tau_ssp: b.tau_ssp.unwrap_or(f64::NAN),
                tau_lambda: b.tau_lambda.unwrap_or(f64::NAN),
                tau_energy: b.tau_energy.unwrap_or(f64::NAN),
            },
        )
    })
}

/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mbp_certificate_free(c: *mut MbpCertificate) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs a simulation. Under the automatic step modes a monitor breach
/// returns `MBP_STATUS_BOUND_VIOLATION` and no trace.
///
/// # Safety
/// `t` must be a live tableau handle, `cfg` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mbp_simulate(
    t: *const MbpTableau,
    cfg: *const MbpSimConfig,
    out: *mut *mut MbpTrace,
) -> MbpStatus {
    guard(|| {
        let t = &handle(t, "tableau")?.0;
        let cfg = handle(cfg, "config")?;
        let tau = match cfg.tau_mode {
            MbpTauMode::Fixed => TauChoice::Fixed(cfg.tau),
            MbpTauMode::AutoMbp => TauChoice::AutoMbp,
            MbpTauMode::AutoEnergy => TauChoice::AutoEnergy,
        };
        let ic = match cfg.ic_kind {
            MbpInitialKind::Random => InitialCondition::Random(cfg.ic_param),
            MbpInitialKind::Cosine => InitialCondition::Cosine(
                u32::try_from(cfg.ic_param).map_err(|_| fail(MbpStatus::InvalidArgument, "cosine mode out of range"))?,
            ),
        };
        let mut sc = SimulationConfig::new(t.clone(), cfg.epsilon, cfg.grid_n, cfg.t_final, tau, ic);
        sc.bound_mode = bound_mode(cfg.bound_mode);
        let trace = simulate(&sc)?;
        put(out, Box::into_raw(Box::new(MbpTrace(trace))))
    })
}

/// Number of rows including the initial one, or 0 for a null handle.
///
/// # Safety
/// `tr` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_len(tr: *const MbpTrace) -> usize {
    tr.as_ref().map_or(0, |t| t.0.rows.len())
}

/// Step size used by the run, or NaN for a null handle.
///
/// # Safety
/// `tr` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_tau(tr: *const MbpTrace) -> f64 {
    tr.as_ref().map_or(f64::NAN, |t| t.0.meta.tau)
}

/// Largest max-norm over all stages of all steps, or NaN for a null handle.
///
/// # Safety
/// `tr` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_max_stage_norm(tr: *const MbpTrace) -> f64 {
    tr.as_ref().map_or(f64::NAN, |t| t.0.max_stage_norm())
}

/// Number of soft monitor warnings recorded by the run.
///
/// # Safety
/// `tr` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_warning_count(tr: *const MbpTrace) -> usize {
    tr.as_ref().map_or(0, |t| t.0.warnings.len())
}

/// # Safety
/// `tr` must be a live trace handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_row(tr: *const MbpTrace, index: usize, out: *mut MbpTraceRow) -> MbpStatus {
    guard(|| {
        let rows = &handle(tr, "trace")?.0.rows;
        let r = rows
            .get(index)
            .ok_or_else(|| Fail(MbpStatus::OutOfRange, format!("row {index} of {}", rows.len())))?;
        put(
            out,
            MbpTraceRow {
                step: r.step,
                time: r.time,
                max_norm: r.max_norm,
                energy: r.energy,
                energy_delta: r.energy_delta,
                stage_max_norm: r.stage_max_norm,
            },
        )
    })
}

/// Copies the final state into `buf`, which must hold `grid_n` values.
///
/// # Safety
/// `tr` must be a live trace handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_final_state(tr: *const MbpTrace, buf: *mut f64, len: usize) -> MbpStatus {
    guard(|| copy_out(handle(tr, "trace")?.0.final_state.values(), buf, len))
}

/// # Safety
/// `tr` must be a live trace handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_write_csv(tr: *const MbpTrace, path: *const c_char) -> MbpStatus {
    guard(|| {
        let tr = &handle(tr, "trace")?.0;
        tr.write_csv(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `tr` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mbp_trace_free(tr: *mut MbpTrace) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Re-checks the monitors of a trace CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mbp_check_trace_csv(path: *const c_char, out: *mut MbpTraceVerdict) -> MbpStatus {
    guard(|| {
        let parsed = read_trace_csv(Path::new(str_arg(path, "path")?))?;
        let v = check_trace(&parsed.rows)?;
        put(
            out,
            MbpTraceVerdict {
                rows: v.rows,
                worst_max_norm: v.worst_max_norm,
                worst_max_norm_step: v.worst_max_norm_step,
                worst_energy_delta: v.worst_energy_delta.unwrap_or(f64::NAN),
                mbp_pass: v.mbp_pass(),
                energy_pass: v.energy_pass(),
            },
        )
    })
}
