//! C ABI for specdos.
//!
//! Every fallible function returns a status code (`SPECDOS_OK` on success)
//! and records a message retrievable with [`specdos_last_error_message`] on
//! the calling thread. Matrices are opaque handles owned by the caller and
//! released with [`specdos_matrix_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use specdos::density::Method;
use specdos::matrix::{
    load_matrix_market, GaussianBump, IntervalOptions, LaplacianSpec, SparseSymmetricMatrix,
};
use specdos::pipeline::{run_method, spectral_interval, EstimatorConfig};
use specdos::DosError;

pub const SPECDOS_OK: i32 = 0;
pub const SPECDOS_ERR_NULL: i32 = 1;
pub const SPECDOS_ERR_INVALID: i32 = 2;
pub const SPECDOS_ERR_NUMERICAL: i32 = 3;
pub const SPECDOS_ERR_ORACLE_CAP: i32 = 4;
pub const SPECDOS_ERR_IO: i32 = 5;
pub const SPECDOS_ERR_PARSE: i32 = 6;
pub const SPECDOS_ERR_PANIC: i32 = 7;
/// Output buffers are too small; the required length has been written.
pub const SPECDOS_ERR_BUFFER: i32 = 8;

/// Opaque sparse symmetric matrix.
pub struct SpecdosMatrix {
    inner: SparseSymmetricMatrix,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecdosMethod {
    Kpm = 0,
    KpmJackson = 1,
    Kpml = 2,
    Spectroscopic = 3,
    DeltaCheb = 4,
    Dgl = 5,
    Lanczos = 6,
    Haydock = 7,
    Cdos = 8,
    Exact = 9,
}

const METHODS: [SpecdosMethod; 10] = [
    SpecdosMethod::Kpm,
    SpecdosMethod::KpmJackson,
    SpecdosMethod::Kpml,
    SpecdosMethod::Spectroscopic,
    SpecdosMethod::DeltaCheb,
    SpecdosMethod::Dgl,
    SpecdosMethod::Lanczos,
    SpecdosMethod::Haydock,
    SpecdosMethod::Cdos,
    SpecdosMethod::Exact,
];

fn method_from_raw(raw: i32) -> Result<Method, DosError> {
    METHODS
        .into_iter()
        .find(|m| *m as i32 == raw)
        .map(Method::from)
        .ok_or_else(|| DosError::InvalidParameter(format!("unknown method code {raw}")))
}

impl From<SpecdosMethod> for Method {
    fn from(m: SpecdosMethod) -> Self {
        match m {
            SpecdosMethod::Kpm => Method::Kpm,
            SpecdosMethod::KpmJackson => Method::KpmJackson,
            SpecdosMethod::Kpml => Method::Kpml,
            SpecdosMethod::Spectroscopic => Method::Spectroscopic,
            SpecdosMethod::DeltaCheb => Method::DeltaCheb,
            SpecdosMethod::Dgl => Method::Dgl,
            SpecdosMethod::Lanczos => Method::Lanczos,
            SpecdosMethod::Haydock => Method::Haydock,
            SpecdosMethod::Cdos => Method::Cdos,
            SpecdosMethod::Exact => Method::Exact,
        }
    }
}

/// Estimator settings. `method` holds a `SpecdosMethod` value; `sigma` and
/// `eta` are unset when NaN; a zero `grid_points` picks the grid size
/// automatically.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SpecdosConfig {
    pub method: i32,
    pub degree: usize,
    pub n_vec: usize,
    pub sigma: f64,
    pub eta: f64,
    pub grid_points: usize,
    pub seed: u64,
    pub product_formula: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SpecdosBump {
    pub center_x: f64,
    pub center_y: f64,
    pub height: f64,
    pub width: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &DosError) -> i32 {
    match err {
        DosError::OracleCap { .. } => SPECDOS_ERR_ORACLE_CAP,
        DosError::Io { .. } => SPECDOS_ERR_IO,
        DosError::Parse { .. } | DosError::Unsupported(_) => SPECDOS_ERR_PARSE,
        e if e.is_numerical() => SPECDOS_ERR_NUMERICAL,
        _ => SPECDOS_ERR_INVALID,
    }
}

enum Failure {
    Null(&'static str),
    Buffer(usize),
    Dos(DosError),
}

impl From<DosError> for Failure {
    fn from(e: DosError) -> Self {
        Failure::Dos(e)
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SPECDOS_OK
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SPECDOS_ERR_NULL
        }
        Ok(Err(Failure::Buffer(need))) => {
            set_error(format!("output buffers need {need} elements"));
            SPECDOS_ERR_BUFFER
        }
        Ok(Err(Failure::Dos(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SPECDOS_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn write_out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    unsafe { p.write(value) };
    Ok(())
}

fn boxed(inner: SparseSymmetricMatrix) -> *mut SpecdosMatrix {
    Box::into_raw(Box::new(SpecdosMatrix { inner }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn specdos_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns its full length in bytes, excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn specdos_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Writes the defaults for `method` (a `SpecdosMethod` value) to `out`:
/// degree 100, 100 probe vectors, sigma and eta unset.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn specdos_config_default(method: i32, out: *mut SpecdosConfig) -> i32 {
    guard(|| {
        let cfg = EstimatorConfig::new(method_from_raw(method)?);
        let c = SpecdosConfig {
            method,
            degree: cfg.degree,
            n_vec: cfg.n_vec,
            sigma: f64::NAN,
            eta: f64::NAN,
            grid_points: 0,
            seed: cfg.seed,
            product_formula: false,
        };
        write_out(out, c, "out")
    })
}

/// Loads a Matrix Market file (real or integer, general or symmetric).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn specdos_matrix_load_mtx(
    path: *const c_char,
    out: *mut *mut SpecdosMatrix,
) -> i32 {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| DosError::InvalidParameter("path is not valid UTF-8".into()))?;
        let m = load_matrix_market(path)?;
        write_out(out, boxed(m), "out")
    })
}

/// Modified 2D Laplacian on an `nx` x `ny` grid. With `n_bumps == 0` and a
/// null `bumps` the benchmark potential is used; pass a non-null pointer
/// with zero length for the plain Laplacian.
///
/// # Safety
/// `bumps` must be null or valid for `n_bumps` reads; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn specdos_matrix_laplacian2d(
    nx: usize,
    ny: usize,
    bumps: *const SpecdosBump,
    n_bumps: usize,
    out: *mut *mut SpecdosMatrix,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let mut spec = LaplacianSpec::benchmark();
        spec.nx = nx;
        spec.ny = ny;
        if !bumps.is_null() {
            spec.bumps = std::slice::from_raw_parts(bumps, n_bumps)
                .iter()
                .map(|b| GaussianBump::new(b.center_x, b.center_y, b.height, b.width))
                .collect();
        } else if n_bumps > 0 {
            return Err(Failure::Null("bumps"));
        }
        let m = spec.build()?;
        write_out(out, boxed(m), "out")
    })
}

/// # Safety
/// `m` must be a live handle; `dim` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn specdos_matrix_dim(m: *const SpecdosMatrix, dim: *mut usize) -> i32 {
    guard(|| {
        let m = deref(m, "matrix")?;
        write_out(dim, m.inner.dim(), "dim")
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn specdos_matrix_free(m: *mut SpecdosMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Estimates the interval containing the spectrum with `steps` Lanczos
/// steps and a relative `margin`.
///
/// # Safety
/// `m` must be a live handle; `lower` and `upper` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn specdos_spectral_interval(
    m: *const SpecdosMatrix,
    steps: usize,
    margin: f64,
    seed: u64,
    lower: *mut f64,
    upper: *mut f64,
) -> i32 {
    guard(|| {
        let m = deref(m, "matrix")?;
        if lower.is_null() || upper.is_null() {
            return Err(Failure::Null("lower/upper"));
        }
        let (iv, _) = spectral_interval(&m.inner, IntervalOptions { steps, margin, seed })?;
        write_out(lower, iv.lower, "lower")?;
        write_out(upper, iv.upper, "upper")
    })
}

/// Runs an estimator and writes the density in original coordinates into
/// `lambda` and `phi`, each of `capacity` elements. The number of points
/// goes to `len`; if it exceeds `capacity`, nothing else is written and
/// `SPECDOS_ERR_BUFFER` is returned. `matvecs` may be null.
///
/// # Safety
/// `m` and `config` must be valid; `lambda` and `phi` must be valid for
/// `capacity` writes; `len` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn specdos_estimate(
    m: *const SpecdosMatrix,
    config: *const SpecdosConfig,
    lambda: *mut f64,
    phi: *mut f64,
    capacity: usize,
    len: *mut usize,
    matvecs: *mut usize,
) -> i32 {
    guard(|| {
        let m = deref(m, "matrix")?;
        let c = *deref(config, "config")?;
        let method = method_from_raw(c.method)?;
        if len.is_null() {
            return Err(Failure::Null("len"));
        }
        let cfg = EstimatorConfig {
            degree: c.degree,
            n_vec: c.n_vec,
            sigma: (!c.sigma.is_nan()).then_some(c.sigma),
            eta: (!c.eta.is_nan()).then_some(c.eta),
            grid_points: (c.grid_points > 0).then_some(c.grid_points),
            seed: c.seed,
            product_formula: c.product_formula,
            ..EstimatorConfig::new(method)
        };
        let run = run_method(&m.inner, &cfg, None)?;
        let est = run.original();
        *len = est.len();
        if est.len() > capacity {
            return Err(Failure::Buffer(est.len()));
        }
        if lambda.is_null() || phi.is_null() {
            return Err(Failure::Null("lambda/phi"));
        }
        ptr::copy_nonoverlapping(est.grid.as_ptr(), lambda, est.len());
        ptr::copy_nonoverlapping(est.values.as_ptr(), phi, est.len());
        if !matvecs.is_null() {
            *matvecs = est.params.matvecs;
        }
        Ok(())
    })
}
