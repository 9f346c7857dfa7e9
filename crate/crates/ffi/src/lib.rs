//! C ABI for the exptest library.
//!
//! Every fallible call returns an [`ExptestStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be read with [`exptest_last_error`]. Handles are opaque; release them with
//! the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use exptest::montecarlo::{self, NullDistribution};
use exptest::spectral::{self, SpectralConfig};
use exptest::{special, Error, PreparedSample, Sample};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExptestStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NumericFailure = 3,
    Panic = 4,
}

/// A validated sample with its difference table prepared.
pub struct ExptestSample {
    sample: Sample,
    prepared: PreparedSample,
}

/// Simulated null statistics at one `(n, a)`.
pub struct ExptestNullDistribution {
    inner: NullDistribution,
}

/// Result of [`exptest_test`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ExptestOutcome {
    pub statistic: f64,
    pub a: f64,
    pub n: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub replicates: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> ExptestStatus {
    if err.is_input_error() {
        ExptestStatus::InvalidInput
    } else {
        ExptestStatus::NumericFailure
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard<F>(body: F) -> ExptestStatus
where
    F: FnOnce() -> Result<(), ExptestStatus>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ExptestStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            ExptestStatus::Panic
        }
    }
}

fn check<T>(r: exptest::Result<T>) -> Result<T, ExptestStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), ExptestStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(ExptestStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn exptest_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` values into a new sample handle.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_sample_new(
    values: *const f64,
    len: usize,
    out: *mut *mut ExptestSample,
) -> ExptestStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        if len > 0 {
            non_null(values, "values")?;
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(values, len).to_vec()
        };
        let sample = check(Sample::new(data))?;
        let prepared = PreparedSample::from_raw(&sample);
        *out = Box::into_raw(Box::new(ExptestSample { sample, prepared }));
        Ok(())
    })
}

/// # Safety
/// `sample` must come from [`exptest_sample_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn exptest_sample_free(sample: *mut ExptestSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn exptest_sample_len(sample: *const ExptestSample) -> usize {
    sample.as_ref().map_or(0, |s| s.sample.len())
}

/// The statistic `M_{n,a}` of the sample.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_statistic(
    sample: *const ExptestSample,
    a: f64,
    out: *mut f64,
) -> ExptestStatus {
    guard(|| {
        non_null(sample, "sample")?;
        non_null(out, "out")?;
        *out = check((*sample).prepared.statistic(a))?.value;
        Ok(())
    })
}

/// Simulates `replicates` null statistics for samples of size `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_null_simulate(
    n: usize,
    a: f64,
    replicates: usize,
    seed: u64,
    out: *mut *mut ExptestNullDistribution,
) -> ExptestStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let mut dists = check(montecarlo::simulate_null(n, &[a], replicates, seed))?;
        let inner = dists.pop().expect("one grid point");
        *out = Box::into_raw(Box::new(ExptestNullDistribution { inner }));
        Ok(())
    })
}

/// # Safety
/// `dist` must come from [`exptest_null_simulate`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn exptest_null_free(dist: *mut ExptestNullDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_null_critical_value(
    dist: *const ExptestNullDistribution,
    alpha: f64,
    out: *mut f64,
) -> ExptestStatus {
    guard(|| {
        non_null(dist, "distribution")?;
        non_null(out, "out")?;
        *out = check((*dist).inner.critical_value(alpha))?;
        Ok(())
    })
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_null_p_value(
    dist: *const ExptestNullDistribution,
    statistic: f64,
    out: *mut f64,
) -> ExptestStatus {
    guard(|| {
        non_null(dist, "distribution")?;
        non_null(out, "out")?;
        *out = (*dist).inner.p_value(statistic);
        Ok(())
    })
}

/// Tests the sample at tuning `a` against a simulated null distribution.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_test(
    sample: *const ExptestSample,
    a: f64,
    alpha: f64,
    replicates: usize,
    seed: u64,
    out: *mut ExptestOutcome,
) -> ExptestStatus {
    guard(|| {
        non_null(sample, "sample")?;
        non_null(out, "out")?;
        let o = check(montecarlo::run_test(&(*sample).sample, a, alpha, replicates, seed))?;
        *out = ExptestOutcome {
            statistic: o.statistic,
            a: o.a,
            n: o.n,
            alpha: o.alpha,
            critical_value: o.critical_value,
            p_value: o.p_value,
            reject: o.reject,
            replicates: o.replicates,
            seed: o.seed,
        };
        Ok(())
    })
}

/// Largest eigenvalue of the limiting operator on an `m`-point grid over
/// `[0, truncation]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_delta1(a: f64, m: usize, truncation: f64, out: *mut f64) -> ExptestStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = check(spectral::delta1_with(&SpectralConfig::new(a).with_grid(m, truncation)))?.delta1;
        Ok(())
    })
}

/// Exponential integral `Ei(x)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_expi(x: f64, out: *mut f64) -> ExptestStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = check(special::expi(x))?;
        Ok(())
    })
}

/// Second projection `h̃₂(x, y, a)` of the kernel.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exptest_h2_tilde(x: f64, y: f64, a: f64, out: *mut f64) -> ExptestStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = check(special::h2_tilde(x, y, a))?;
        Ok(())
    })
}
