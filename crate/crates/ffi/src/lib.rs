//! C ABI surface for the rank-pruning pipeline.
//!
//! Handles are opaque; every fallible call returns an [`RpStatus`] and
//! writes results through out-pointers. On failure the thread-local
//! message from [`rp_last_error_message`] describes the cause. Strings
//! returned by this library must be released with [`rp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rankprune::data::complete_rates;
use rankprune::logreg::{FitConfig, LogisticModel};
use rankprune::prune::{rank_prune_fit, RankPruneOutput};
use rankprune::{Dataset, Error, NoiseRates};

/// Result codes for all fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateEstimate = 3,
    InfeasibleConfig = 4,
    Panic = 5,
}

/// Opaque dataset handle.
pub struct RpDataset {
    inner: Dataset,
}

/// Opaque trained-model handle carrying the estimated noise rates.
pub struct RpModel {
    model: LogisticModel,
    rates: NoiseRates,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: &Error) -> RpStatus {
    set_error(e.to_string());
    match e {
        Error::DegenerateCounts(_) | Error::EmptyClass(_) | Error::InvalidRates(_) => {
            RpStatus::DegenerateEstimate
        }
        Error::InfeasibleConfig(_) => RpStatus::InfeasibleConfig,
        _ => RpStatus::InvalidInput,
    }
}

fn guarded(f: impl FnOnce() -> RpStatus) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            RpStatus::Panic
        }
    }
}

/// Pointer to the last error message on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a dataset from row-major features and 0/1 observed labels.
///
/// # Safety
/// `features` must point to `n * m` doubles, `labels` to `n` bytes, and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_dataset_new(
    features: *const f64,
    n: usize,
    m: usize,
    labels: *const u8,
    out: *mut *mut RpDataset,
) -> RpStatus {
    if features.is_null() || labels.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return RpStatus::NullPointer;
    }
    let xs = std::slice::from_raw_parts(features, n * m).to_vec();
    let s = std::slice::from_raw_parts(labels, n).to_vec();
    guarded(|| match Dataset::new(xs, m, s, None) {
        Ok(d) => {
            *out = Box::into_raw(Box::new(RpDataset { inner: d }));
            RpStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Loads a dataset from a CSV file with header `f0,...,f{m-1},s[,y]`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_dataset_from_csv(
    path: *const c_char,
    out: *mut *mut RpDataset,
) -> RpStatus {
    if path.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return RpStatus::NullPointer;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8".into());
        return RpStatus::InvalidInput;
    };
    guarded(|| match Dataset::from_csv_path(Path::new(path)) {
        Ok(d) => {
            *out = Box::into_raw(Box::new(RpDataset { inner: d }));
            RpStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Number of examples in the dataset; 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn rp_dataset_len(d: *const RpDataset) -> usize {
    if d.is_null() {
        return 0;
    }
    (*d).inner.n()
}

/// Feature dimension of the dataset; 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn rp_dataset_dim(d: *const RpDataset) -> usize {
    if d.is_null() {
        return 0;
    }
    (*d).inner.m()
}

/// Releases a dataset handle.
///
/// # Safety
/// `d` must be null or a pointer returned by a dataset constructor.
#[no_mangle]
pub unsafe extern "C" fn rp_dataset_free(d: *mut RpDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

unsafe fn fit_impl(
    d: *const RpDataset,
    cv_k: usize,
    seed: u64,
    rates: Option<(f64, f64)>,
    out: *mut *mut RpModel,
) -> RpStatus {
    if d.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return RpStatus::NullPointer;
    }
    let data = &(*d).inner;
    guarded(|| {
        let over = match rates {
            Some((rho1, rho0)) => match complete_rates(rho1, rho0, data.p_s1()) {
                Ok(r) => Some(r),
                Err(e) => return fail(&e),
            },
            None => None,
        };
        let cfg = FitConfig {
            seed,
            ..FitConfig::default()
        };
        match rank_prune_fit(data, &cfg, cv_k, seed, over) {
            Ok(RankPruneOutput { model, rates, .. }) => {
                *out = Box::into_raw(Box::new(RpModel { model, rates }));
                RpStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Estimates noise rates, prunes, and fits a reweighted model.
///
/// # Safety
/// `d` must be a live dataset handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_fit(
    d: *const RpDataset,
    cv_k: usize,
    seed: u64,
    out: *mut *mut RpModel,
) -> RpStatus {
    fit_impl(d, cv_k, seed, None, out)
}

/// Like `rp_fit` but uses the caller's known noise rates instead of
/// estimating them.
///
/// # Safety
/// `d` must be a live dataset handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_fit_known_rates(
    d: *const RpDataset,
    rho1: f64,
    rho0: f64,
    cv_k: usize,
    seed: u64,
    out: *mut *mut RpModel,
) -> RpStatus {
    fit_impl(d, cv_k, seed, Some((rho1, rho0)), out)
}

/// Copies the model's noise rates into the non-null out-pointers.
///
/// # Safety
/// `m` must be a live model handle; out-pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn rp_model_rates(
    m: *const RpModel,
    rho1: *mut f64,
    rho0: *mut f64,
    pi1: *mut f64,
    pi0: *mut f64,
) -> RpStatus {
    if m.is_null() {
        set_error("null model handle".into());
        return RpStatus::NullPointer;
    }
    let r = &(*m).rates;
    if !rho1.is_null() {
        *rho1 = r.rho1;
    }
    if !rho0.is_null() {
        *rho0 = r.rho0;
    }
    if !pi1.is_null() {
        *pi1 = r.pi1;
    }
    if !pi0.is_null() {
        *pi0 = r.pi0;
    }
    RpStatus::Ok
}

/// Predicted probability that the true label is 1 for one feature row.
///
/// # Safety
/// `features` must point to `m_len` doubles matching the model's input
/// dimension; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_model_predict(
    m: *const RpModel,
    features: *const f64,
    m_len: usize,
    out: *mut f64,
) -> RpStatus {
    if m.is_null() || features.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return RpStatus::NullPointer;
    }
    let model = &(*m).model;
    if m_len != model.weights.len() {
        return fail(&Error::DimensionMismatch {
            expected: model.weights.len(),
            got: m_len,
        });
    }
    let row = std::slice::from_raw_parts(features, m_len);
    *out = model.predict_one(row);
    RpStatus::Ok
}

/// Serializes the model to a JSON string owned by the caller.
///
/// # Safety
/// `m` must be a live model handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_model_to_json(m: *const RpModel, out: *mut *mut c_char) -> RpStatus {
    if m.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return RpStatus::NullPointer;
    }
    guarded(|| match (*m).model.to_json() {
        Ok(json) => match CString::new(json) {
            Ok(c) => {
                *out = c.into_raw();
                RpStatus::Ok
            }
            Err(_) => {
                set_error("model JSON contained a NUL byte".into());
                RpStatus::InvalidInput
            }
        },
        Err(e) => fail(&e),
    })
}

/// Releases a model handle.
///
/// # Safety
/// `m` must be null or a pointer returned by a fit call.
#[no_mangle]
pub unsafe extern "C" fn rp_model_free(m: *mut RpModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
