//! C ABI for `centrep`.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`CentrepStatus`]; on failure the message is available from
//! [`centrep_last_error`] on the same thread until the next failing call.
//! Strings handed out by the library are NUL-terminated and must be
//! released with [`centrep_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use centrep::error::Error;
use centrep::instance::{random_instance, targeted_instance_sized, Instance, InstanceSpec, Triple};
use centrep::lie::{oracle_check, LieAlgebra};
use centrep::witness::{construct_witness, verify_certificate, CaseTag, WitnessCertificate};

/// Status codes. The first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentrepStatus {
    Ok = 0,
    CheckFailed = 1,
    InvalidInput = 2,
    Hypothesis = 3,
    NullPointer = 4,
    Internal = 5,
}

/// A validated instance `(θ, ε, Ω)`.
pub struct CentrepInstance {
    raw: Instance,
    triple: Triple,
}

/// A witness certificate `(β, α, γ)` for one instance.
pub struct CentrepCertificate {
    cert: WitnessCertificate,
}

/// Bits of the mask written by [`centrep_certificate_verify`].
pub const CENTREP_CHECK_A: u32 = 1;
pub const CENTREP_CHECK_B: u32 = 2;
pub const CENTREP_CHECK_C: u32 = 4;
pub const CENTREP_CHECK_D: u32 = 8;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(s).expect("NULs removed")));
}

fn status_for(e: &Error) -> CentrepStatus {
    match e {
        Error::Hypothesis(_) | Error::Jacobi(_) => CentrepStatus::Hypothesis,
        Error::InvalidInput(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::GradeOutOfRange { .. } => CentrepStatus::InvalidInput,
        _ => CentrepStatus::Internal,
    }
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<CentrepStatus, (CentrepStatus, String)>) -> CentrepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CentrepStatus::Internal
        }
    }
}

fn lift(e: Error) -> (CentrepStatus, String) {
    (status_for(&e), e.to_string())
}

fn null() -> (CentrepStatus, String) {
    (CentrepStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (CentrepStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (CentrepStatus::InvalidInput, "string is not valid UTF-8".into()))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs removed").into_raw()
}

fn wrap_instance(raw: Instance) -> Result<*mut CentrepInstance, (CentrepStatus, String)> {
    let triple = raw.validate().map_err(lift)?;
    Ok(Box::into_raw(Box::new(CentrepInstance { raw, triple })))
}

/// The message of the last failed call on this thread, or NULL. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn centrep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn centrep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn centrep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an instance from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn centrep_instance_from_json(json: *const c_char, out: *mut *mut CentrepInstance) -> CentrepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let text = read_str(json)?;
        let raw: Instance =
            serde_json::from_str(text).map_err(|e| (CentrepStatus::InvalidInput, format!("instance JSON: {e}")))?;
        *out = wrap_instance(raw)?;
        Ok(CentrepStatus::Ok)
    })
}

/// A random instance with `dim_i >= 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn centrep_instance_generate(dim_i: usize, seed: u64, out: *mut *mut CentrepInstance) -> CentrepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let raw = random_instance(&InstanceSpec::new(dim_i, seed)).map_err(lift)?;
        *out = wrap_instance(raw)?;
        Ok(CentrepStatus::Ok)
    })
}

/// An instance that dispatches to the branch named `case_tag`.
///
/// # Safety
/// `case_tag` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn centrep_instance_targeted(
    case_tag: *const c_char,
    dim_i: usize,
    seed: u64,
    out: *mut *mut CentrepInstance,
) -> CentrepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let name = read_str(case_tag)?;
        let tag = CaseTag::parse(name).ok_or((CentrepStatus::InvalidInput, format!("unknown case tag {name:?}")))?;
        let raw = targeted_instance_sized(tag, dim_i, seed).map_err(lift)?;
        *out = wrap_instance(raw)?;
        Ok(CentrepStatus::Ok)
    })
}

/// Ambient dimension `dim_I`, or 0 for NULL.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn centrep_instance_dim(inst: *const CentrepInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.raw.dim)
}

/// Serializes an instance to JSON; release with [`centrep_string_free`].
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn centrep_instance_to_json(inst: *const CentrepInstance, out: *mut *mut c_char) -> CentrepStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        *out = to_c_string(inst.raw.to_json());
        Ok(CentrepStatus::Ok)
    })
}

/// # Safety
/// `inst` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn centrep_instance_free(inst: *mut CentrepInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Builds the witness certificate for an instance.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn centrep_witness_construct(
    inst: *const CentrepInstance,
    out: *mut *mut CentrepCertificate,
) -> CentrepStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let t = &inst.triple;
        let mut cert = construct_witness(&t.epsilon, &t.omega, &t.theta).map_err(lift)?;
        cert.instance_hash = Some(inst.raw.hash());
        *out = Box::into_raw(Box::new(CentrepCertificate { cert }));
        Ok(CentrepStatus::Ok)
    })
}

/// Re-checks conditions (A)-(D) of `cert` against `inst`. Writes the
/// passing checks as `CENTREP_CHECK_*` bits to `mask` (if non-NULL) and
/// returns `CheckFailed` unless all four hold.
///
/// # Safety
/// `cert` and `inst` must be live handles; `mask` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn centrep_certificate_verify(
    cert: *const CentrepCertificate,
    inst: *const CentrepInstance,
    mask: *mut u32,
) -> CentrepStatus {
    guard(|| {
        let cert = cert.as_ref().ok_or_else(null)?;
        let inst = inst.as_ref().ok_or_else(null)?;
        let t = &inst.triple;
        let r = verify_certificate(&cert.cert, &t.epsilon, &t.omega, &t.theta).map_err(lift)?;
        let c = &r.checks;
        let bits = [(c.a, CENTREP_CHECK_A), (c.b, CENTREP_CHECK_B), (c.c, CENTREP_CHECK_C), (c.d, CENTREP_CHECK_D)]
            .iter()
            .filter(|(ok, _)| *ok)
            .fold(0, |m, (_, b)| m | b);
        if !mask.is_null() {
            *mask = bits;
        }
        if c.all() {
            Ok(CentrepStatus::Ok)
        } else {
            Err((CentrepStatus::CheckFailed, format!("certificate checks failed: {c:?}")))
        }
    })
}

/// The branch name of a certificate as a static string, or NULL.
///
/// # Safety
/// `cert` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn centrep_certificate_case_tag(cert: *const CentrepCertificate) -> *const c_char {
    let Some(cert) = cert.as_ref() else { return ptr::null() };
    let s: &'static CStr = match cert.cert.case_tag {
        CaseTag::TrivialEpsZero => c"trivial-eps-zero",
        CaseTag::EpsInS => c"eps-in-S",
        CaseTag::EasyN => c"easy-N",
        CaseTag::EvenM => c"even-M",
        CaseTag::OddMThetaW => c"odd-M-theta-w",
        CaseTag::OddMZTop => c"odd-M-z-top",
        CaseTag::Terminal23 => c"terminal-2-3",
    };
    s.as_ptr()
}

/// Serializes a certificate to JSON; release with [`centrep_string_free`].
///
/// # Safety
/// `cert` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn centrep_certificate_to_json(cert: *const CentrepCertificate, out: *mut *mut c_char) -> CentrepStatus {
    guard(|| {
        let cert = cert.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let s = serde_json::to_string_pretty(&cert.cert).map_err(|e| (CentrepStatus::Internal, e.to_string()))?;
        *out = to_c_string(s);
        Ok(CentrepStatus::Ok)
    })
}

/// # Safety
/// `cert` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn centrep_certificate_free(cert: *mut CentrepCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Cohomological cross-check of `cert` on the algebra built from `inst`.
/// With `search` nonzero the full central-action search also runs.
/// Returns `CheckFailed` when any oracle check fails.
///
/// # Safety
/// `inst` and `cert` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn centrep_oracle_check(
    inst: *const CentrepInstance,
    cert: *const CentrepCertificate,
    search: c_int,
) -> CentrepStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(null)?;
        let cert = cert.as_ref().ok_or_else(null)?;
        let t = &inst.triple;
        let c = &cert.cert;
        let r = oracle_check(&t.theta, &t.epsilon, &t.omega, &c.beta, &c.alpha, &c.gamma, search != 0).map_err(lift)?;
        if r.passed() {
            Ok(CentrepStatus::Ok)
        } else {
            Err((CentrepStatus::CheckFailed, format!("oracle checks failed: {r:?}")))
        }
    })
}

/// Betti numbers of the Lie algebra given as JSON. Writes up to `cap`
/// entries to `betti` and the full count `dim + 1` to `len`.
///
/// # Safety
/// `json` must be a NUL-terminated string, `len` a valid pointer and
/// `betti` valid for `cap` writes (it may be NULL when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn centrep_cohomology_betti(
    json: *const c_char,
    betti: *mut usize,
    cap: usize,
    len: *mut usize,
) -> CentrepStatus {
    guard(|| {
        if len.is_null() || (betti.is_null() && cap > 0) {
            return Err(null());
        }
        let text = read_str(json)?;
        let l: LieAlgebra =
            serde_json::from_str(text).map_err(|e| (CentrepStatus::InvalidInput, format!("algebra JSON: {e}")))?;
        let bad = l.check_jacobi();
        if !bad.is_empty() {
            return Err(lift(Error::Jacobi(bad)));
        }
        let b = l.cohomology().map_err(lift)?.betti();
        *len = b.len();
        for (k, x) in b.iter().take(cap).enumerate() {
            *betti.add(k) = *x;
        }
        Ok(CentrepStatus::Ok)
    })
}
