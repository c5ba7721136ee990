//! C ABI over `finsler-core`.
//!
//! Metrics live behind opaque [`FinslerMetricHandle`] pointers. Every fallible
//! call returns a [`FinslerStatus`]; the message of the most recent failure on
//! the calling thread is available from [`finsler_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use finsler_core::averaging::{self, Measure};
use finsler_core::indicatrix::{self, SphereGrid};
use finsler_core::metric::FinslerMetric;
use finsler_core::{report, tensor, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinslerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad spec, expression, dimension or argument.
    InvalidInput = 3,
    /// Singular matrices, non-convergence, loss of positive-definiteness.
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque handle to a validated metric.
pub struct FinslerMetricHandle {
    inner: FinslerMetric,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FinslerStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_input_error() {
            FinslerStatus::InvalidInput
        } else {
            FinslerStatus::Numerical
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> FinslerStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FinslerStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            FinslerStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FinslerStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn metric_ref<'a>(handle: *const FinslerMetricHandle) -> Result<&'a FinslerMetric, Failure> {
    handle.as_ref().map(|h| &h.inner).ok_or_else(|| null("metric"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(FinslerStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn vector(p: *const f64, n: usize, dim: usize, what: &str) -> Result<Vec<f64>, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if n != dim {
        return Err(Failure(
            FinslerStatus::InvalidInput,
            format!("`{what}` has {n} components, metric dimension is {dim}"),
        ));
    }
    Ok(std::slice::from_raw_parts(p, n).to_vec())
}

unsafe fn write_out(values: &[f64], out: *mut f64, out_len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if out_len < values.len() {
        return Err(Failure(
            FinslerStatus::BufferTooSmall,
            format!("output needs {} slots, got {out_len}", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn finsler_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn finsler_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a metric spec.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
/// The handle written to `out` must be released with [`finsler_metric_free`].
#[no_mangle]
pub unsafe extern "C" fn finsler_metric_from_json(json: *const c_char, out: *mut *mut FinslerMetricHandle) -> FinslerStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = FinslerMetric::from_json(text(json, "json")?)?;
        *out = Box::into_raw(Box::new(FinslerMetricHandle { inner }));
        Ok(())
    })
}

/// Releases a metric handle. NULL is ignored.
///
/// # Safety
/// `handle` must come from [`finsler_metric_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn finsler_metric_free(handle: *mut FinslerMetricHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Dimension of the metric, or 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn finsler_metric_dimension(handle: *const FinslerMetricHandle) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.dimension())
}

/// `F(x, y)`.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn finsler_metric_f(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> FinslerStatus {
    guard(|| {
        let m = metric_ref(handle)?;
        let dim = m.dimension();
        let v = m.f(&vector(x, n, dim, "x")?, &vector(y, n, dim, "y")?)?;
        write_out(&[v], out, 1)
    })
}

unsafe fn table_call<F>(handle: *const FinslerMetricHandle, x: *const f64, y: *const f64, n: usize, out: *mut f64, out_len: usize, f: F) -> FinslerStatus
where
    F: FnOnce(&FinslerMetric, &[f64], &[f64]) -> Result<Vec<f64>, Error>,
{
    guard(|| {
        let m = metric_ref(handle)?;
        let dim = m.dimension();
        let values = f(m, &vector(x, n, dim, "x")?, &vector(y, n, dim, "y")?)?;
        write_out(&values, out, out_len)
    })
}

/// `g_ij` row-major into `out` (`n²` slots).
///
/// # Safety
/// `x`, `y` must point to `n` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn finsler_fundamental_tensor(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> FinslerStatus {
    table_call(handle, x, y, n, out, out_len, |m, x, y| Ok(tensor::fundamental_tensor(m, x, y)?.components))
}

/// `A_ijk` into `out` (`n³` slots).
///
/// # Safety
/// As [`finsler_fundamental_tensor`].
#[no_mangle]
pub unsafe extern "C" fn finsler_cartan_tensor(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> FinslerStatus {
    table_call(handle, x, y, n, out, out_len, |m, x, y| Ok(tensor::cartan_tensor(m, x, y)?.components))
}

/// Chern coefficients `Γ^i_jk` at `[i][j][k]` into `out` (`n³` slots).
///
/// # Safety
/// As [`finsler_fundamental_tensor`].
#[no_mangle]
pub unsafe extern "C" fn finsler_chern_coefficients(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> FinslerStatus {
    table_call(handle, x, y, n, out, out_len, |m, x, y| Ok(tensor::chern_coefficients(m, x, y)?.chern.components))
}

/// Landsberg tensor `Ȧ_ijk` into `out` (`n³` slots).
///
/// # Safety
/// As [`finsler_fundamental_tensor`].
#[no_mangle]
pub unsafe extern "C" fn finsler_landsberg_tensor(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> FinslerStatus {
    table_call(handle, x, y, n, out, out_len, |m, x, y| Ok(tensor::landsberg_tensor(m, x, y)?.0.components))
}

/// `vol(I_x)` on a sphere grid of the given resolution.
///
/// # Safety
/// `x` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn finsler_indicatrix_volume(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    n: usize,
    resolution: usize,
    out: *mut f64,
) -> FinslerStatus {
    guard(|| {
        let m = metric_ref(handle)?;
        let x = vector(x, n, m.dimension(), "x")?;
        let grid = SphereGrid::build(n, resolution)?;
        write_out(&[indicatrix::volume(m, &x, &grid)?], out, 1)
    })
}

/// Averaged metric `h_ij(x)` into `out` (`n²` slots). `measure` may be NULL for the spec's measure.
///
/// # Safety
/// `measure` must be NULL or NUL-terminated; `x` must point to `n` doubles and
/// `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn finsler_averaged_metric(
    handle: *const FinslerMetricHandle,
    measure: *const c_char,
    x: *const f64,
    n: usize,
    resolution: usize,
    out: *mut f64,
    out_len: usize,
) -> FinslerStatus {
    guard(|| {
        let m = metric_ref(handle)?;
        let x = vector(x, n, m.dimension(), "x")?;
        let measure = if measure.is_null() {
            Measure::from_metric(m)?
        } else {
            Measure::parse(m, text(measure, "measure")?)?
        };
        let grid = SphereGrid::build(n, resolution)?;
        write_out(&averaging::averaged_metric(m, &measure, &x, &grid)?.h, out, out_len)
    })
}

/// Full analysis report as JSON. The string written to `out` must be released
/// with [`finsler_string_free`].
///
/// # Safety
/// `x`, `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn finsler_analyze_json(
    handle: *const FinslerMetricHandle,
    x: *const f64,
    y: *const f64,
    n: usize,
    tolerance: f64,
    out: *mut *mut c_char,
) -> FinslerStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = metric_ref(handle)?;
        let dim = m.dimension();
        let r = report::analyze(m, &vector(x, n, dim, "x")?, &vector(y, n, dim, "y")?, tolerance)?;
        let json = serde_json_string(&r)?;
        *out = CString::new(json)
            .map_err(|_| Failure(FinslerStatus::Numerical, "report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

fn serde_json_string(r: &report::AnalysisReport) -> Result<String, Failure> {
    finsler_core::report::to_json(r).map_err(Failure::from)
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn finsler_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
