//! C ABI over the scarlab library.
//!
//! Every fallible function returns a [`ScarlabStatus`]; on failure the message
//! is available from [`scarlab_last_error`] on the same thread. Objects are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use scarlab::basis::{Boundary, ConstrainedBasis, SpinConfiguration};
use scarlab::dynamics::{evolve, Method, QuenchOptions, TimeGrid};
use scarlab::fsa::run_fsa;
use scarlab::spectral::{diagonalize, zero_modes, ZeroModeOptions};
use scarlab::symmetry::{Block, Parity};
use scarlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScarlabStatus {
    Ok = 0,
    Io = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Consistency = 4,
    Accuracy = 5,
    NullPointer = 6,
    Panic = 7,
}

/// Enumerated constrained basis.
pub struct ScarlabBasis {
    inner: Arc<ConstrainedBasis>,
}

/// Sorted eigenvalues of one block.
pub struct ScarlabSpectrum {
    eigenvalues: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ScarlabStatus {
    match err {
        Error::InvalidArgument(_) => ScarlabStatus::InvalidArgument,
        Error::Capacity(_) => ScarlabStatus::Capacity,
        Error::Consistency(_) => ScarlabStatus::Consistency,
        Error::Accuracy(_) => ScarlabStatus::Accuracy,
        Error::Io(_) | Error::Json(_) => ScarlabStatus::Io,
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

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScarlabStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScarlabStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            ScarlabStatus::NullPointer
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ScarlabStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass either NULL or a pointer obtained from this library
    // (or a valid caller-owned object) that outlives the call.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

fn out_slice<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: the caller guarantees `p` points to `len` writable elements.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn boundary(periodic: i32) -> Boundary {
    if periodic != 0 {
        Boundary::Periodic
    } else {
        Boundary::Open
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next scarlab call on the same thread.
#[no_mangle]
pub extern "C" fn scarlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Enumerates the constrained basis of `length` sites (`periodic != 0` for a
/// ring).
#[no_mangle]
pub extern "C" fn scarlab_basis_new(length: u32, periodic: i32, out: *mut *mut ScarlabBasis) -> ScarlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let basis = ConstrainedBasis::enumerate(length as usize, boundary(periodic))?;
        let handle = Box::into_raw(Box::new(ScarlabBasis { inner: Arc::new(basis) }));
        // SAFETY: `out` was checked to be non-null.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Releases a basis; NULL is ignored.
#[no_mangle]
pub extern "C" fn scarlab_basis_free(basis: *mut ScarlabBasis) {
    if !basis.is_null() {
        // SAFETY: non-null handles come from `scarlab_basis_new`.
        drop(unsafe { Box::from_raw(basis) });
    }
}

/// Number of states, or 0 for NULL.
#[no_mangle]
pub extern "C" fn scarlab_basis_len(basis: *const ScarlabBasis) -> usize {
    non_null(basis, "basis").map_or(0, |b| b.inner.len())
}

/// Packed bits of state `index` (bit `i` set when site `i` is excited).
#[no_mangle]
pub extern "C" fn scarlab_basis_state(basis: *const ScarlabBasis, index: usize, bits: *mut u32) -> ScarlabStatus {
    guard(|| {
        let b = non_null(basis, "basis")?;
        let out = out_slice(bits, 1, "bits")?;
        out[0] = *b
            .inner
            .states()
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("index {index} out of range")))?;
        Ok(())
    })
}

/// Ordinal of a packed state in the basis.
#[no_mangle]
pub extern "C" fn scarlab_basis_index_of(basis: *const ScarlabBasis, bits: u32, index: *mut usize) -> ScarlabStatus {
    guard(|| {
        let b = non_null(basis, "basis")?;
        let out = out_slice(index, 1, "index")?;
        out[0] = b
            .inner
            .index_of(bits)
            .ok_or_else(|| Error::InvalidArgument(format!("state {bits:#b} is not in the basis")))?;
        Ok(())
    })
}

/// Dense spectrum of the full basis (`momentum < 0`) or of a momentum sector;
/// `inversion` is +1, -1 or 0 for none.
#[no_mangle]
pub extern "C" fn scarlab_spectrum_new(
    basis: *const ScarlabBasis,
    momentum: i32,
    inversion: i32,
    out: *mut *mut ScarlabSpectrum,
) -> ScarlabStatus {
    guard(|| {
        let b = non_null(basis, "basis")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let parity = match inversion {
            0 => None,
            1 => Some(Parity::Even),
            -1 => Some(Parity::Odd),
            other => return Err(Error::InvalidArgument(format!("inversion must be -1, 0 or +1 (got {other})")).into()),
        };
        let block = if momentum < 0 {
            if parity.is_some() {
                return Err(Error::InvalidArgument("inversion needs a momentum sector".into()).into());
            }
            Block::full(b.inner.clone())
        } else {
            Block::sector(b.inner.clone(), momentum as usize, parity)?
        };
        let spectrum = diagonalize(&block, false)?;
        let handle = Box::into_raw(Box::new(ScarlabSpectrum { eigenvalues: spectrum.eigenvalues }));
        // SAFETY: `out` was checked to be non-null.
        unsafe { *out = handle };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn scarlab_spectrum_free(spectrum: *mut ScarlabSpectrum) {
    if !spectrum.is_null() {
        // SAFETY: non-null handles come from `scarlab_spectrum_new`.
        drop(unsafe { Box::from_raw(spectrum) });
    }
}

#[no_mangle]
pub extern "C" fn scarlab_spectrum_len(spectrum: *const ScarlabSpectrum) -> usize {
    non_null(spectrum, "spectrum").map_or(0, |s| s.eigenvalues.len())
}

/// Copies the ascending eigenvalues into `out`, which must hold
/// `scarlab_spectrum_len` entries.
#[no_mangle]
pub extern "C" fn scarlab_spectrum_eigenvalues(spectrum: *const ScarlabSpectrum, out: *mut f64, len: usize) -> ScarlabStatus {
    guard(|| {
        let s = non_null(spectrum, "spectrum")?;
        if len != s.eigenvalues.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len}, spectrum has {}", s.eigenvalues.len())).into());
        }
        out_slice(out, len, "out")?.copy_from_slice(&s.eigenvalues);
        Ok(())
    })
}

/// Runs the forward scattering approximation; `energies` must hold
/// `length + 1` entries.
#[no_mangle]
pub extern "C" fn scarlab_fsa(
    length: u32,
    periodic: i32,
    energies: *mut f64,
    energies_len: usize,
    mean_err: *mut f64,
) -> ScarlabStatus {
    guard(|| {
        let result = run_fsa(length as usize, boundary(periodic))?;
        if energies_len != result.energies.len() {
            return Err(Error::InvalidArgument(format!("energies buffer must hold {} entries", result.energies.len())).into());
        }
        out_slice(energies, energies_len, "energies")?.copy_from_slice(&result.energies);
        out_slice(mean_err, 1, "mean_err")?[0] = result.mean_error();
        Ok(())
    })
}

/// Number of exact zero modes of `H + stagger * sum_i (-1)^i Z_i`, counted in
/// exact arithmetic when `exact != 0`.
#[no_mangle]
pub extern "C" fn scarlab_zero_modes(length: u32, periodic: i32, stagger: f64, exact: i32, count: *mut u64) -> ScarlabStatus {
    guard(|| {
        let out = out_slice(count, 1, "count")?;
        let options = ZeroModeOptions { exact: exact != 0, integer_basis: false, stagger, skip_numerical: exact != 0 };
        let report = zero_modes(length as usize, boundary(periodic), options)?;
        let n = if exact != 0 { report.kernel_dimension_exact } else { report.kernel_dimension };
        out[0] = n.ok_or_else(|| Error::Consistency("zero-mode count missing from report".into()))? as u64;
        Ok(())
    })
}

/// Quenches the product state `initial_bits` and writes fidelity, correlator
/// and half-chain entropy at `t = i * dt`, `i < len`. `method` is 0 for the
/// spectral propagator and 1 for Krylov.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn scarlab_quench(
    basis: *const ScarlabBasis,
    initial_bits: u32,
    dt: f64,
    method: i32,
    fidelity: *mut f64,
    correlator: *mut f64,
    entropy: *mut f64,
    len: usize,
) -> ScarlabStatus {
    guard(|| {
        let b = non_null(basis, "basis")?;
        if len == 0 {
            return Err(Error::InvalidArgument("need at least one time point".into()).into());
        }
        let method = match method {
            0 => Method::Spectral,
            1 => Method::Krylov,
            other => return Err(Error::InvalidArgument(format!("unknown method {other}")).into()),
        };
        let initial = SpinConfiguration::new(initial_bits, b.inner.length(), b.inner.boundary())?;
        let grid = TimeGrid::new(0.0, dt * (len - 1) as f64, dt)?;
        let run = evolve(&b.inner, initial, &grid, &QuenchOptions { method, ..QuenchOptions::default() })?;
        if run.times.len() != len {
            return Err(Error::Consistency(format!("grid produced {} points, expected {len}", run.times.len())).into());
        }
        out_slice(fidelity, len, "fidelity")?.copy_from_slice(&run.fidelity);
        out_slice(correlator, len, "correlator")?.copy_from_slice(&run.correlator);
        out_slice(entropy, len, "entropy")?.copy_from_slice(&run.entropy);
        Ok(())
    })
}
