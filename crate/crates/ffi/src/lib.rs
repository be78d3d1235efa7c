//! C ABI for `socint`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `*_free` function. Every fallible call returns a [`SocintStatus`];
//! on failure [`socint_last_error`] describes the most recent error on the
//! calling thread. Results are written through out-pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use socint::coding::min_log_size_for_error;
use socint::dist::{entropy, varentropy};
use socint::randomness::{build_virtual_extractor, extractor_distance, max_log_size_for_distance};
use socint::spectrum::gaussian_second_order;
use socint::tradeoff::{build_joint_pair, delta_uniform_gap};
use socint::{Error, FiniteDistribution, TypeClassTable};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SocintStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CapExceeded = 3,
    ParseError = 4,
    Panic = 5,
}

/// A finite probability distribution.
pub struct SocintDistribution(FiniteDistribution);

/// The type-class table of an i.i.d. source at one block length.
pub struct SocintTable(TypeClassTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SocintStatus {
    match e {
        Error::CapExceeded { .. } => SocintStatus::CapExceeded,
        Error::Parse(_) => SocintStatus::ParseError,
        _ => SocintStatus::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (SocintStatus, String)>) -> SocintStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SocintStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SocintStatus::Panic
        }
    }
}

fn lib<T>(r: socint::Result<T>) -> Result<T, (SocintStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SocintStatus, String)> {
    p.as_ref()
        .ok_or((SocintStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (SocintStatus, String)> {
    if out.is_null() {
        return Err((SocintStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn socint_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn socint_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a distribution from `len` probabilities (labels `0..len`).
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_distribution_new(
    probs: *const f64,
    len: usize,
    out: *mut *mut SocintDistribution,
) -> SocintStatus {
    guard(|| {
        if probs.is_null() {
            return Err((SocintStatus::NullPointer, "probs is null".into()));
        }
        let v = std::slice::from_raw_parts(probs, len).to_vec();
        let d = lib(FiniteDistribution::from_probs(v))?;
        write(out, Box::into_raw(Box::new(SocintDistribution(d))), "out")
    })
}

/// Parses `label:prob,...` or a bare probability list.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_distribution_parse(
    text: *const c_char,
    out: *mut *mut SocintDistribution,
) -> SocintStatus {
    guard(|| {
        if text.is_null() {
            return Err((SocintStatus::NullPointer, "text is null".into()));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (SocintStatus::ParseError, "text is not UTF-8".to_string()))?;
        let d = lib(FiniteDistribution::parse_text(s))?;
        write(out, Box::into_raw(Box::new(SocintDistribution(d))), "out")
    })
}

/// # Safety
/// `d` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socint_distribution_free(d: *mut SocintDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Shannon entropy in nats.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_distribution_entropy(
    d: *const SocintDistribution,
    out: *mut f64,
) -> SocintStatus {
    guard(|| write(out, entropy(&deref(d, "distribution")?.0), "out"))
}

/// Varentropy in nats².
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_distribution_varentropy(
    d: *const SocintDistribution,
    out: *mut f64,
) -> SocintStatus {
    guard(|| write(out, varentropy(&deref(d, "distribution")?.0), "out"))
}

/// Type-class table of the `n`-fold product of `d`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_table_new(
    d: *const SocintDistribution,
    n: u64,
    out: *mut *mut SocintTable,
) -> SocintStatus {
    guard(|| {
        let t = lib(TypeClassTable::iid(&deref(d, "distribution")?.0, n))?;
        write(out, Box::into_raw(Box::new(SocintTable(t))), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socint_table_free(t: *mut SocintTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of type classes in the table.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_table_class_count(
    t: *const SocintTable,
    out: *mut usize,
) -> SocintStatus {
    guard(|| write(out, deref(t, "table")?.0.len(), "out"))
}

/// `ln` of the smallest code size with error at most `eps`.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_min_log_code_size(
    t: *const SocintTable,
    eps: f64,
    out: *mut f64,
) -> SocintStatus {
    guard(|| {
        if !(0.0..1.0).contains(&eps) {
            return Err((
                SocintStatus::InvalidArgument,
                format!("eps = {eps} outside [0, 1)"),
            ));
        }
        write(
            out,
            min_log_size_for_error(&deref(t, "table")?.0, eps),
            "out",
        )
    })
}

/// `ln` of the largest greedy-extractor size with distance at most `eps`,
/// and that extractor's distance.
///
/// # Safety
/// `t` must be a live handle; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_max_log_extractor_size(
    t: *const SocintTable,
    eps: f64,
    out_log_size: *mut f64,
    out_distance: *mut f64,
) -> SocintStatus {
    guard(|| {
        let r = lib(max_log_size_for_distance(&deref(t, "table")?.0, eps))?;
        if out_distance.is_null() {
            return Err((SocintStatus::NullPointer, "out_distance is null".into()));
        }
        write(out_log_size, r.log_size, "out_log_size")?;
        write(out_distance, r.distance, "out_distance")
    })
}

/// Distance to uniform of the greedy extractor onto `floor(e^{log_m})` bins.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_extractor_distance(
    t: *const SocintTable,
    log_m: f64,
    out: *mut f64,
) -> SocintStatus {
    guard(|| {
        if !(log_m >= 0.0 && log_m.is_finite()) {
            return Err((SocintStatus::InvalidArgument, format!("log_m = {log_m}")));
        }
        let ext = build_virtual_extractor(&deref(t, "table")?.0, log_m);
        write(out, extractor_distance(&ext), "out")
    })
}

/// Distance from the table's law to the nearest flat distribution on a subset.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_delta_gap(t: *const SocintTable, out: *mut f64) -> SocintStatus {
    guard(|| write(out, delta_uniform_gap(&deref(t, "table")?.0).value, "out"))
}

/// Builds the joint code/extractor pair at `(a, b)` and reports its decoding
/// error, output distance and the gap they must jointly cover.
///
/// # Safety
/// `t` must be a live handle; all out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_joint_pair(
    t: *const SocintTable,
    a: f64,
    b: f64,
    out_code_error: *mut f64,
    out_extractor_distance: *mut f64,
    out_delta: *mut f64,
) -> SocintStatus {
    guard(|| {
        if !(a.is_finite() && b.is_finite()) {
            return Err((
                SocintStatus::InvalidArgument,
                "a and b must be finite".into(),
            ));
        }
        if out_code_error.is_null() || out_extractor_distance.is_null() || out_delta.is_null() {
            return Err((SocintStatus::NullPointer, "output pointer is null".into()));
        }
        let table = &deref(t, "table")?.0;
        let check = build_joint_pair(table, a, b).verify(table);
        write(out_code_error, check.code_error, "out_code_error")?;
        write(
            out_extractor_distance,
            check.extractor_distance,
            "out_extractor_distance",
        )?;
        write(out_delta, check.delta, "out_delta")
    })
}

/// `√V Φ⁻¹(eps)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socint_gaussian_second_order(
    v: f64,
    eps: f64,
    out: *mut f64,
) -> SocintStatus {
    guard(|| write(out, lib(gaussian_second_order(v, eps))?, "out"))
}
