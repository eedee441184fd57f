//! C interface: opaque cell and solution handles, integer status codes, and a
//! thread-local message for the last failure.
//!
//! Every handle returned through an out-pointer is owned by the caller and
//! must be released with the matching `lb_*_free`. No function unwinds into
//! C; panics come back as `LB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use laminate_bloch::assembly::Medium;
use laminate_bloch::cli::config::parse_config_str;
use laminate_bloch::materials::{derive_coefficients, CouplingFactor, PhaseInput, SOFC_THICKNESS};
use laminate_bloch::numerics::{Precision, PrecisionMode};
use laminate_bloch::spectrum::{classify, solve_floquet, Classification, FloquetSolution, SolveOptions, Thresholds};
use laminate_bloch::transfer::{CellSpec, LayerSpec};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numeric = 4,
    IndexOutOfRange = 5,
    Panic = 6,
}

/// Branch classification of one multiplier.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbClassification {
    ShearPropagating = 0,
    ShearEvanescent = 1,
    CompressionalPropagating = 2,
    CompressionalEvanescent = 3,
    ThermalDamping = 4,
    DiffusiveDamping = 5,
    Mixed = 6,
}

impl From<Classification> for LbClassification {
    fn from(c: Classification) -> Self {
        match c {
            Classification::ShearPropagating => Self::ShearPropagating,
            Classification::ShearEvanescent => Self::ShearEvanescent,
            Classification::CompressionalPropagating => Self::CompressionalPropagating,
            Classification::CompressionalEvanescent => Self::CompressionalEvanescent,
            Classification::ThermalDamping => Self::ThermalDamping,
            Classification::DiffusiveDamping => Self::DiffusiveDamping,
            Classification::Mixed => Self::Mixed,
        }
    }
}

/// One Floquet multiplier λ = e^{i(k2r* + i k2i*)}. λ itself can overflow a
/// double, so it is given through ln λ = ln_abs + i·arg.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbMultiplier {
    pub k2r_star: f64,
    pub k2i_star: f64,
    pub ln_abs: f64,
    pub arg: f64,
    pub classification: LbClassification,
    /// Index of the reciprocal partner 1/λ.
    pub partner: u32,
}

/// Opaque unit cell.
pub struct LbCell {
    cell: CellSpec,
}

/// Opaque Floquet solution at one (k₁, ω).
pub struct LbSolution {
    solution: FloquetSolution,
    omega: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl std::fmt::Display) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string().into_bytes());
}

fn guard(f: impl FnOnce() -> LbStatus) -> LbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            LbStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, LbStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(LbStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        set_error(format!("string is not UTF-8: {e}"));
        LbStatus::InvalidArgument
    })
}

fn publish<T>(out: *mut *mut T, value: T) -> LbStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    LbStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// The two-layer SOFC cell (1 mm + 1 mm), fully coupled.
///
/// # Safety
/// `out` must be null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn lb_cell_sofc_bilayer(out: *mut *mut LbCell) -> LbStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return LbStatus::NullPointer;
        }
        let layer = |p: PhaseInput| {
            derive_coefficients(&p).map(|c| LayerSpec { medium: Medium::Isotropic(c), thickness: SOFC_THICKNESS })
        };
        let layers = match (layer(PhaseInput::sofc_phase1()), layer(PhaseInput::sofc_phase2())) {
            (Ok(a), Ok(b)) => vec![a, b],
            (Err(e), _) | (_, Err(e)) => {
                set_error(e);
                return LbStatus::Config;
            }
        };
        match CellSpec::new(layers) {
            Ok(cell) => publish(out, LbCell { cell }),
            Err(e) => {
                set_error(e);
                LbStatus::Config
            }
        }
    })
}

/// Builds the cell of a run-configuration JSON document (only `cell` is
/// used; the rest is validated).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn lb_cell_from_config_json(json: *const c_char, out: *mut *mut LbCell) -> LbStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return LbStatus::NullPointer;
        }
        let text = match c_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config_str(text, std::path::Path::new(".")) {
            Ok(cfg) => publish(out, LbCell { cell: cfg.cell }),
            Err(e) => {
                set_error(e);
                LbStatus::Config
            }
        }
    })
}

/// Copy of `cell` with every coupling coefficient scaled by `delta` ≥ 0.
///
/// # Safety
/// `cell` must be a live handle; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn lb_cell_with_coupling(cell: *const LbCell, delta: f64, out: *mut *mut LbCell) -> LbStatus {
    guard(|| {
        if cell.is_null() || out.is_null() {
            set_error("null pointer argument");
            return LbStatus::NullPointer;
        }
        match CouplingFactor::new(delta) {
            Ok(d) => publish(out, LbCell { cell: (*cell).cell.with_coupling(d) }),
            Err(e) => {
                set_error(e);
                LbStatus::InvalidArgument
            }
        }
    })
}

/// Cell period L in meters, or NaN for a null handle.
///
/// # Safety
/// `cell` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_cell_period(cell: *const LbCell) -> f64 {
    if cell.is_null() {
        return f64::NAN;
    }
    (*cell).cell.period()
}

/// # Safety
/// `cell` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lb_cell_free(cell: *mut LbCell) {
    if !cell.is_null() {
        drop(Box::from_raw(cell));
    }
}

/// The eight Floquet multipliers at real k₁* = k₁L and ω* (rad/s).
/// `precision` is "auto", "double", "dd", "qd" or "mp:<bits>"; null means auto.
///
/// # Safety
/// `cell` must be a live handle, `precision` null or NUL-terminated, `out`
/// valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn lb_solve_floquet(
    cell: *const LbCell,
    k1_star: f64,
    omega_star: f64,
    precision: *const c_char,
    seed: u64,
    out: *mut *mut LbSolution,
) -> LbStatus {
    guard(|| {
        if cell.is_null() || out.is_null() {
            set_error("null pointer argument");
            return LbStatus::NullPointer;
        }
        if !(k1_star.is_finite() && omega_star.is_finite() && omega_star >= 0.0) {
            set_error("k1_star must be finite and omega_star finite and >= 0");
            return LbStatus::InvalidArgument;
        }
        let mode = if precision.is_null() {
            PrecisionMode::Auto
        } else {
            match c_str(precision).map(str::parse::<PrecisionMode>) {
                Ok(Ok(m)) => m,
                Ok(Err(e)) => {
                    set_error(e);
                    return LbStatus::InvalidArgument;
                }
                Err(s) => return s,
            }
        };
        let cell = &(*cell).cell;
        let opts = SolveOptions { qr_cross_check: false, seed, ..Default::default() };
        match solve_floquet(cell, k1_star / cell.period(), omega_star, mode, &opts) {
            Ok(solution) => publish(out, LbSolution { solution, omega: omega_star }),
            Err(e) => {
                set_error(e);
                LbStatus::Numeric
            }
        }
    })
}

/// Number of multipliers (8), or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_solution_len(sol: *const LbSolution) -> usize {
    if sol.is_null() {
        return 0;
    }
    (*sol).solution.multipliers.len()
}

/// Significand bits the solution was computed with, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_solution_precision_bits(sol: *const LbSolution) -> u32 {
    if sol.is_null() {
        return 0;
    }
    let p: Precision = (*sol).solution.precision;
    p.bits()
}

/// log2 |det T − 1| of the solved cell transfer matrix.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_solution_log2_det_residual(sol: *const LbSolution) -> f64 {
    if sol.is_null() {
        return f64::NAN;
    }
    (*sol).solution.log2_det_residual
}

/// Multiplier `index` with the default band threshold (|k2i*| < 1e-6).
///
/// # Safety
/// `sol` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lb_solution_multiplier(sol: *const LbSolution, index: usize, out: *mut LbMultiplier) -> LbStatus {
    guard(|| {
        if sol.is_null() || out.is_null() {
            set_error("null pointer argument");
            return LbStatus::NullPointer;
        }
        let s = &*sol;
        let Some(m) = s.solution.multipliers.get(index) else {
            set_error(format!("index {index} out of range 0..{}", s.solution.multipliers.len()));
            return LbStatus::IndexOutOfRange;
        };
        let ln = m.lambda.ln();
        *out = LbMultiplier {
            k2r_star: m.k2r,
            k2i_star: m.k2i,
            ln_abs: ln.re,
            arg: ln.im,
            classification: classify(&m.vector, s.omega, m.k2i, &Thresholds::default()).into(),
            partner: m.partner as u32,
        };
        LbStatus::Ok
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lb_solution_free(sol: *mut LbSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(lb_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn null_out_is_reported() {
        assert_eq!(unsafe { lb_cell_sofc_bilayer(ptr::null_mut()) }, LbStatus::NullPointer);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { lb_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, "null out pointer".len());
    }
}
