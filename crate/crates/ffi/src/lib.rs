//! C interface to `splitjet`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns an [`SjStatus`]; on failure
//! [`sj_last_error`] describes the problem until the next call on the same
//! thread. Strings returned through out-parameters are released with
//! [`sj_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use splitjet::field::Field;
use splitjet::jacobian::{determinacy_bound, milnor_number};
use splitjet::jet::Jet;
use splitjet::split::{split, verify_split, SplitResult};
use splitjet::text::{parse_poly, parse_vars};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidField = 3,
    ParseError = 4,
    ComputationError = 5,
    /// The search bound was reached without a certificate.
    NotCertified = 6,
    Panic = 7,
}

pub struct SjField(Field);

pub struct SjJet {
    jet: Jet,
    vars: Vec<String>,
}

pub struct SjSplit {
    result: SplitResult,
    vars: Vec<String>,
    verified: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn run(f: impl FnOnce() -> Result<(), (SjStatus, String)>) -> SjStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SjStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SjStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, (SjStatus, String)> {
    if p.is_null() {
        return Err((SjStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SjStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, (SjStatus, String)> {
    p.as_ref().ok_or((SjStatus::NullPointer, "null handle".into()))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (SjStatus, String)> {
    if out.is_null() {
        return Err((SjStatus::NullPointer, "null output pointer".into()));
    }
    out.write(v);
    Ok(())
}

fn computation<E: std::fmt::Display>(e: E) -> (SjStatus, String) {
    (SjStatus::ComputationError, e.to_string())
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sj_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `q`, `fp:7`, `f2k:4` or `f2k:4:modulus=t4+t+1`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sj_field_parse(spec: *const c_char, out: *mut *mut SjField) -> SjStatus {
    run(|| {
        let field: Field = str_arg(spec)?.parse().map_err(|e| (SjStatus::InvalidField, format!("{e}")))?;
        write_out(out, Box::into_raw(Box::new(SjField(field))))
    })
}

/// # Safety
/// `field` must be null or a handle from [`sj_field_parse`].
#[no_mangle]
pub unsafe extern "C" fn sj_field_free(field: *mut SjField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Parses `text` over `field` in the comma-separated variables `vars`.
///
/// # Safety
/// Pointers must be valid; `out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn sj_jet_parse(
    field: *const SjField,
    text: *const c_char,
    vars: *const c_char,
    precision: u32,
    out: *mut *mut SjJet,
) -> SjStatus {
    run(|| {
        let field = ref_arg(field)?.0;
        let vars = parse_vars(str_arg(vars)?, field).map_err(|e| (SjStatus::ParseError, e.to_string()))?;
        let jet = parse_poly(str_arg(text)?, &vars, field, precision).map_err(|e| (SjStatus::ParseError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(SjJet { jet, vars })))
    })
}

/// # Safety
/// `jet` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sj_jet_free(jet: *mut SjJet) {
    if !jet.is_null() {
        drop(Box::from_raw(jet));
    }
}

/// Canonical text, with `O(deg N+1)` when `annotated` is nonzero.
///
/// # Safety
/// `jet` must be valid; `out` receives a string for [`sj_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sj_jet_to_string(jet: *const SjJet, annotated: i32, out: *mut *mut c_char) -> SjStatus {
    run(|| {
        let j = ref_arg(jet)?;
        let s = if annotated != 0 { j.jet.to_annotated_text(&j.vars) } else { j.jet.to_text(&j.vars) };
        write_out(out, CString::new(s).unwrap().into_raw())
    })
}

/// # Safety
/// `jet` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sj_jet_hessian_rank(jet: *const SjJet, out: *mut usize) -> SjStatus {
    run(|| {
        let r = ref_arg(jet)?.jet.hessian_rank().map_err(computation)?;
        write_out(out, r)
    })
}

/// Milnor number of `jet` read as a polynomial; [`SjStatus::NotCertified`]
/// when no certificate exists up to `max_degree`.
///
/// # Safety
/// `jet` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sj_milnor_number(jet: *const SjJet, max_degree: u32, out: *mut u64) -> SjStatus {
    run(|| {
        let r = milnor_number(&ref_arg(jet)?.jet, max_degree);
        let mu = r.mu.ok_or((SjStatus::NotCertified, format!("no stabilization up to degree {max_degree}")))?;
        write_out(out, mu)
    })
}

/// # Safety
/// `jet` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sj_determinacy_bound(jet: *const SjJet, max_degree: u32, out: *mut u64) -> SjStatus {
    run(|| {
        let b = determinacy_bound(&ref_arg(jet)?.jet, max_degree)
            .ok_or((SjStatus::NotCertified, format!("no bound found up to degree {max_degree}")))?;
        write_out(out, b)
    })
}

/// Splits `jet` at `precision` and checks the result by substitution.
///
/// # Safety
/// `jet` must be valid; `out` receives a handle for [`sj_split_free`].
#[no_mangle]
pub unsafe extern "C" fn sj_split(jet: *const SjJet, precision: u32, out: *mut *mut SjSplit) -> SjStatus {
    run(|| {
        let j = ref_arg(jet)?;
        let result = split(&j.jet, precision).map_err(computation)?;
        let verified = verify_split(&j.jet, &result).map_err(computation)?.is_zero();
        write_out(out, Box::into_raw(Box::new(SjSplit { result, vars: j.vars.clone(), verified })))
    })
}

/// # Safety
/// `split` must be null or a handle from [`sj_split`].
#[no_mangle]
pub unsafe extern "C" fn sj_split_free(split: *mut SjSplit) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

/// # Safety
/// `split` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sj_split_rank(split: *const SjSplit, out: *mut usize) -> SjStatus {
    run(|| write_out(out, ref_arg(split)?.result.rank))
}

/// # Safety
/// `split` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sj_split_verified(split: *const SjSplit, out: *mut bool) -> SjStatus {
    run(|| write_out(out, ref_arg(split)?.verified))
}

/// Residual part as a new jet handle in the tail variables.
///
/// # Safety
/// `split` must be valid; `out` receives a handle for [`sj_jet_free`].
#[no_mangle]
pub unsafe extern "C" fn sj_split_residual(split: *const SjSplit, out: *mut *mut SjJet) -> SjStatus {
    run(|| {
        let s = ref_arg(split)?;
        let vars = s.vars[s.result.rank..].to_vec();
        write_out(out, Box::into_raw(Box::new(SjJet { jet: s.result.residual.clone(), vars })))
    })
}

/// Component `index` of the splitting change as a string.
///
/// # Safety
/// `split` must be valid; `out` receives a string for [`sj_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sj_split_change_component(split: *const SjSplit, index: usize, out: *mut *mut c_char) -> SjStatus {
    run(|| {
        let s = ref_arg(split)?;
        let c = s
            .result
            .change
            .components()
            .get(index)
            .ok_or((SjStatus::ComputationError, format!("component {index} out of range")))?;
        write_out(out, CString::new(c.to_text(&s.vars)).unwrap().into_raw())
    })
}
