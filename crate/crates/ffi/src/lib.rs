//! C interface to `qdbounds`.
//!
//! Operators are opaque handles created by `qdb_operator_*` and released with
//! [`qdb_operator_free`]. Every call returns a [`QdbStatus`]; on failure the
//! message is available from [`qdb_last_error`] on the same thread. Panics
//! are caught at the boundary and reported as `QDB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qdbounds::cli::config::OperatorConfig;
use qdbounds::commutator::{commutator_residual, WeightSequence};
use qdbounds::dynamics::{abel_moment, correlator, DynamicsOptions, StateVector};
use qdbounds::greens::{resolvent_identity_residual, Energy, GreensSolver};
use qdbounds::lattice_operator::{spectrum_bound, OperatorSpec, Window};
use qdbounds::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Panic = 5,
}

/// Opaque operator handle.
pub struct QdbOperator {
    spec: OperatorSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn classify(e: &Error) -> QdbStatus {
    match e {
        Error::InvalidArgument { .. } | Error::EmptyWindow { .. } | Error::WindowTooSmall(_) => {
            QdbStatus::InvalidArgument
        }
        Error::Config(_) | Error::KernelInvariant(_) | Error::PotentialOutOfRange { .. } => {
            QdbStatus::Config
        }
        _ => QdbStatus::Numerical,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (QdbStatus, String)>) -> QdbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            QdbStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QdbStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (QdbStatus, String)>;
}

impl<T> OrStatus<T> for qdbounds::Result<T> {
    fn or_status(self) -> Result<T, (QdbStatus, String)> {
        self.map_err(|e| (classify(&e), e.to_string()))
    }
}

fn null(what: &str) -> (QdbStatus, String) {
    (QdbStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn op_ref<'a>(op: *const QdbOperator) -> Result<&'a OperatorSpec, (QdbStatus, String)> {
    op.as_ref().map(|o| &o.spec).ok_or_else(|| null("op"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (QdbStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qdb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qdb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build an operator from a TOML table with `coupling`, `kernel` and
/// `potential` keys, in the scenario format.
///
/// # Safety
/// `toml` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_operator_from_toml(
    toml: *const c_char,
    out: *mut *mut QdbOperator,
) -> QdbStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml).to_str().map_err(|e| {
            (
                QdbStatus::InvalidArgument,
                format!("toml is not UTF-8: {e}"),
            )
        })?;
        let spec = OperatorConfig::parse(text)
            .and_then(|c| c.build())
            .or_status()?;
        write(out, Box::into_raw(Box::new(QdbOperator { spec })), "out")
    })
}

/// Kernel `e^{-|n|}`, potential `2 cos(2 pi x)` at the golden mean, `theta = 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_operator_long_range_cosine(
    coupling: f64,
    out: *mut *mut QdbOperator,
) -> QdbStatus {
    guard(|| {
        if !coupling.is_finite() {
            return Err((QdbStatus::InvalidArgument, "coupling must be finite".into()));
        }
        let spec = OperatorSpec::long_range_cosine(coupling);
        write(out, Box::into_raw(Box::new(QdbOperator { spec })), "out")
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `op` must come from a `qdb_operator_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qdb_operator_free(op: *mut QdbOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Upper bound `K` on the spectrum.
///
/// # Safety
/// `op` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_spectrum_bound(op: *const QdbOperator, out: *mut f64) -> QdbStatus {
    guard(|| write(out, spectrum_bound(op_ref(op)?), "out"))
}

/// `G(m, n; E + i eta)` for the operator restricted to `[lo, hi]`.
///
/// # Safety
/// `op` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_greens_entry(
    op: *const QdbOperator,
    lo: i64,
    hi: i64,
    energy: f64,
    eta: f64,
    m: i64,
    n: i64,
    re: *mut f64,
    im: *mut f64,
) -> QdbStatus {
    guard(|| {
        let spec = op_ref(op)?;
        let w = Window::finite(lo, hi).or_status()?;
        let solver =
            GreensSolver::new(spec, &w, Energy::new(energy, eta).or_status()?).or_status()?;
        let col = solver.column(n).or_status()?;
        let i = w.index(m).ok_or_else(|| {
            (
                QdbStatus::InvalidArgument,
                format!("site {m} outside [{lo}, {hi}]"),
            )
        })?;
        write(re, col[i].re, "re")?;
        write(im, col[i].im, "im")
    })
}

/// Largest violation of the two-block resolvent identity split after `split`.
///
/// # Safety
/// `op` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_resolvent_identity_residual(
    op: *const QdbOperator,
    lo: i64,
    hi: i64,
    split: i64,
    energy: f64,
    eta: f64,
    out: *mut f64,
) -> QdbStatus {
    guard(|| {
        let spec = op_ref(op)?;
        let w = Window::finite(lo, hi).or_status()?;
        let r = resolvent_identity_residual(spec, &w, split, Energy::new(energy, eta).or_status()?)
            .or_status()?;
        write(out, r, "out")
    })
}

/// Abel-averaged moment of order `p` at time scale `t` for a state started at `site`.
///
/// # Safety
/// `op` must be a live handle; `value` and `error_bar` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_abel_moment(
    op: *const QdbOperator,
    site: i64,
    p: f64,
    t: f64,
    value: *mut f64,
    error_bar: *mut f64,
) -> QdbStatus {
    guard(|| {
        let spec = op_ref(op)?;
        let m = abel_moment(
            spec,
            &StateVector::delta(site),
            p,
            t,
            &DynamicsOptions::default(),
        )
        .or_status()?;
        write(value, m.value, "value")?;
        write(error_bar, m.error_bar, "error_bar")
    })
}

/// Time-averaged correlator `a(j, n, T)` by the time route and the energy route.
///
/// # Safety
/// `op` must be a live handle; `a_time` and `a_energy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_correlator(
    op: *const QdbOperator,
    j: i64,
    n: i64,
    t: f64,
    a_time: *mut f64,
    a_energy: *mut f64,
) -> QdbStatus {
    guard(|| {
        let spec = op_ref(op)?;
        let c = correlator(spec, j, n, t, &DynamicsOptions::default()).or_status()?;
        write(a_time, c.a_time, "a_time")?;
        write(a_energy, c.a_energy, "a_energy")
    })
}

/// Relative interior residual of the commutator decomposition for the
/// operator's kernel and weights `amp e^{-rate |k|}`, `|k| <= radius`.
///
/// # Safety
/// `op` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_commutator_residual(
    op: *const QdbOperator,
    gamma_amp: f64,
    gamma_rate: f64,
    gamma_radius: u32,
    p: u32,
    window_size: u32,
    out: *mut f64,
) -> QdbStatus {
    guard(|| {
        let spec = op_ref(op)?;
        let gamma = WeightSequence::exponential(gamma_amp, gamma_rate, gamma_radius as usize)
            .or_status()?;
        let w = Window::centered(window_size as usize).or_status()?;
        let r = commutator_residual(&spec.kernel, &gamma, p, &w).or_status()?;
        write(out, r.relative, "out")
    })
}
