//! C ABI over the `partdist` library.
//!
//! Objects cross the boundary as opaque heap handles (`PdDensity`, `PdPovm`)
//! that the caller releases with the matching `*_free` function. Every
//! fallible call returns a [`PdStatus`]; the message of the most recent
//! failure on the calling thread is available from [`pd_last_error`].
//!
//! Matrices are passed as separate row-major real and imaginary `double`
//! arrays; a null imaginary pointer means a real matrix.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use partdist::matops::{self, CMatrix, C64};
use partdist::measurement::{self, Family, Povm};
use partdist::quantum;
use partdist::state::{self, DensityMatrix, Seed};
use partdist::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    InvalidInput = 1,
    DimensionMismatch = 2,
    NotPsd = 3,
    NotHermitian = 4,
    Normalization = 5,
    Internal = 6,
    Parse = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdFamily {
    /// Element traces at most one, at most `d^2` outcomes.
    A = 0,
    /// Element traces at least one.
    B = 1,
}

impl From<PdFamily> for Family {
    fn from(f: PdFamily) -> Self {
        match f {
            PdFamily::A => Family::A,
            PdFamily::B => Family::B,
        }
    }
}

/// Opaque density matrix.
pub struct PdDensity(DensityMatrix);

/// Opaque POVM.
pub struct PdPovm(Povm);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PdStatus {
    match e {
        Error::Input(_) => PdStatus::InvalidInput,
        Error::DimensionMismatch { .. } => PdStatus::DimensionMismatch,
        Error::NotPsd { .. } => PdStatus::NotPsd,
        Error::NotHermitian { .. } => PdStatus::NotHermitian,
        Error::Normalization { .. } => PdStatus::Normalization,
        Error::Internal(_) => PdStatus::Internal,
        Error::Parse { .. } => PdStatus::Parse,
        Error::Io(_) => PdStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> PdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PdStatus::NullPointer
        }
        Err(_) => {
            set_error("panic inside partdist".into());
            PdStatus::Panic
        }
    }
}

unsafe fn read<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> FfiResult<()> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn matrix_from(re: *const f64, im: *const f64, rows: usize, cols: usize) -> FfiResult<CMatrix> {
    if re.is_null() {
        return Err(Failure::Null("re"));
    }
    let len = rows * cols;
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(im, len))
    };
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let idx = i * cols + j;
        C64::new(re[idx], im.map_or(0.0, |v| v[idx]))
    }))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validates and copies a `dim x dim` density matrix.
///
/// # Safety
/// `re` (and `im` unless null) must point to `dim * dim` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_density_new(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut PdDensity,
) -> PdStatus {
    guard(|| {
        let rho = DensityMatrix::new(matrix_from(re, im, dim, dim)?)?;
        write(out, Box::into_raw(Box::new(PdDensity(rho))), "out")
    })
}

/// Haar-random pure state.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_density_random_pure(dim: usize, seed: u64, out: *mut *mut PdDensity) -> PdStatus {
    guard(|| {
        if dim == 0 {
            return Err(Error::Input("dim must be positive".into()).into());
        }
        let rho = state::random_pure(dim, Seed(seed));
        write(out, Box::into_raw(Box::new(PdDensity(rho))), "out")
    })
}

/// Random mixed state of the given rank.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_density_random_mixed(
    dim: usize,
    rank: usize,
    seed: u64,
    out: *mut *mut PdDensity,
) -> PdStatus {
    guard(|| {
        let rho = state::random_mixed(dim, rank, Seed(seed))?;
        write(out, Box::into_raw(Box::new(PdDensity(rho))), "out")
    })
}

/// # Safety
/// `rho` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pd_density_free(rho: *mut PdDensity) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Dimension of a density matrix, 0 for a null handle.
///
/// # Safety
/// `rho` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_density_dim(rho: *const PdDensity) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

/// Copies the entries into caller buffers of `dim * dim` doubles each.
///
/// # Safety
/// `rho` must be a live handle; `re` and `im` must be writable for
/// `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_density_entries(rho: *const PdDensity, re: *mut f64, im: *mut f64) -> PdStatus {
    guard(|| {
        let m = read(rho, "rho")?.0.matrix();
        if re.is_null() || im.is_null() {
            return Err(Failure::Null("re/im"));
        }
        let d = m.nrows();
        for i in 0..d {
            for j in 0..d {
                *re.add(i * d + j) = m[(i, j)].re;
                *im.add(i * d + j) = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Validates `count` elements of size `dim x dim`, stored one after another.
///
/// # Safety
/// `re` (and `im` unless null) must point to `count * dim * dim` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_povm_new(
    re: *const f64,
    im: *const f64,
    dim: usize,
    count: usize,
    out: *mut *mut PdPovm,
) -> PdStatus {
    guard(|| {
        let stride = dim * dim;
        let elements = (0..count)
            .map(|x| {
                let im_x = if im.is_null() { im } else { im.add(x * stride) };
                if re.is_null() {
                    return Err(Failure::Null("re"));
                }
                matrix_from(re.add(x * stride), im_x, dim, dim)
            })
            .collect::<FfiResult<Vec<_>>>()?;
        let povm = Povm::new(elements)?;
        write(out, Box::into_raw(Box::new(PdPovm(povm))), "out")
    })
}

/// Random rank-one POVM with `m` outcomes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_povm_random_rank_one(dim: usize, m: usize, seed: u64, out: *mut *mut PdPovm) -> PdStatus {
    guard(|| {
        let povm = measurement::random_rank_one_povm(dim, m, Seed(seed))?;
        write(out, Box::into_raw(Box::new(PdPovm(povm))), "out")
    })
}

/// # Safety
/// `povm` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pd_povm_free(povm: *mut PdPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

/// Outcome count, 0 for a null handle.
///
/// # Safety
/// `povm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_povm_len(povm: *const PdPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.len())
}

/// Ky Fan `k`-norm of a `rows x cols` matrix.
///
/// # Safety
/// `re` (and `im` unless null) must point to `rows * cols` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_ky_fan_norm(
    re: *const f64,
    im: *const f64,
    rows: usize,
    cols: usize,
    k: usize,
    out: *mut f64,
) -> PdStatus {
    guard(|| write(out, matops::ky_fan_norm(&matrix_from(re, im, rows, cols)?, k)?, "out"))
}

unsafe fn pair_measure(
    rho0: *const PdDensity,
    rho1: *const PdDensity,
    out: *mut f64,
    f: impl FnOnce(&DensityMatrix, &DensityMatrix) -> partdist::Result<f64>,
) -> PdStatus {
    guard(|| {
        let v = f(&read(rho0, "rho0")?.0, &read(rho1, "rho1")?.0)?;
        write(out, v, "out")
    })
}

/// `D_k = ||rho0 - rho1||_(k) / 2`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_partitioned_trace_distance(
    rho0: *const PdDensity,
    rho1: *const PdDensity,
    k: usize,
    out: *mut f64,
) -> PdStatus {
    pair_measure(rho0, rho1, out, |a, b| quantum::partitioned_trace_distance(a, b, k))
}

/// Uhlmann fidelity `F_0`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_fidelity(rho0: *const PdDensity, rho1: *const PdDensity, out: *mut f64) -> PdStatus {
    pair_measure(rho0, rho1, out, quantum::fidelity)
}

/// Partial fidelity `F_k`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_partial_fidelity(
    rho0: *const PdDensity,
    rho1: *const PdDensity,
    k: usize,
    out: *mut f64,
) -> PdStatus {
    pair_measure(rho0, rho1, out, |a, b| quantum::partial_fidelity(a, b, k))
}

/// Minimal error probability `(1 - D_tr) / 2`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_pe_quantum(rho0: *const PdDensity, rho1: *const PdDensity, out: *mut f64) -> PdStatus {
    pair_measure(rho0, rho1, out, quantum::pe_quantum)
}

/// `SD_k` of the statistics induced by `povm`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_sd_k_povm(
    rho0: *const PdDensity,
    rho1: *const PdDensity,
    povm: *const PdPovm,
    k: usize,
    out: *mut f64,
) -> PdStatus {
    guard(|| {
        let p = &read(povm, "povm")?.0;
        let v = quantum::sd_k_povm(&read(rho0, "rho0")?.0, &read(rho1, "rho1")?.0, p, k)?;
        write(out, v, "out")
    })
}

/// Multi-start estimate of `SD_k` over a POVM family. The best POVM is
/// returned through `best_povm` unless it is null.
///
/// # Safety
/// Handles must be live; `value` must be writable; `best_povm` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn pd_estimate_sd_k(
    rho0: *const PdDensity,
    rho1: *const PdDensity,
    k: usize,
    family: PdFamily,
    budget: usize,
    seed: u64,
    value: *mut f64,
    best_povm: *mut *mut PdPovm,
) -> PdStatus {
    guard(|| {
        let est = quantum::estimate_sd_k(
            &read(rho0, "rho0")?.0,
            &read(rho1, "rho1")?.0,
            k,
            family.into(),
            budget,
            Seed(seed),
        )?;
        write(value, est.value, "value")?;
        if !best_povm.is_null() {
            best_povm.write(Box::into_raw(Box::new(PdPovm(est.best_povm))));
        }
        Ok(())
    })
}
