//! C ABI over `rirkit`.
//!
//! Every entry point returns a [`RirkitStatus`]; on failure the message is kept per thread
//! and can be read with [`rirkit_last_error_message`]. Transfer functions cross the boundary
//! as opaque [`RirkitTf`] handles owned by the caller and released with [`rirkit_tf_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use rirkit::rir::{exact_rir_analyze, pcr_max_search, synth_marginal_perturbation, RirStatus};
use rirkit::{ClassName, Error, ErrorClass, RationalTF};

/// Opaque transfer function handle.
pub struct RirkitTf {
    inner: RationalTF,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RirkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Precondition = 3,
    Verification = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RirkitClass {
    G1Boundary = 0,
    G2Interior = 1,
    G1Interior = 2,
    GnOther = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RirkitVerdictStatus {
    ExactSufficient = 0,
    ExactBoundary = 1,
    NotExact = 2,
    StrictlyGreater = 3,
    Inconclusive = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RirkitVerdict {
    pub status: RirkitVerdictStatus,
    pub class_name: RirkitClass,
    pub n_unstable: usize,
    pub peak_omega: f64,
    pub peak_gain: f64,
    /// Principal phase at the peak.
    pub theta_p: f64,
    pub theta_rate: f64,
    pub rho_threshold: f64,
    pub lower_bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RirkitStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::InvalidInput => RirkitStatus::InvalidInput,
            ErrorClass::Precondition => RirkitStatus::Precondition,
            ErrorClass::Verification => RirkitStatus::Verification,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(RirkitStatus::Verification, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RirkitStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RirkitStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RirkitStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RirkitStatus::Panic
        }
    }
}

unsafe fn tf_ref<'a>(tf: *const RirkitTf) -> Result<&'a RationalTF, Failure> {
    tf.as_ref().map(|t| &t.inner).ok_or_else(|| null("tf"))
}

unsafe fn out_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn coeffs(p: *const f64, len: usize, what: &str) -> Result<Vec<f64>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len).to_vec())
}

fn boxed(inner: RationalTF) -> *mut RirkitTf {
    Box::into_raw(Box::new(RirkitTf { inner }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rirkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn rirkit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a transfer function from descending-power coefficients.
///
/// # Safety
/// `num` and `den` must point to `num_len` and `den_len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_tf_new(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    out: *mut *mut RirkitTf,
) -> RirkitStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        *out = ptr::null_mut();
        let tf = RationalTF::new(coeffs(num, num_len, "num")?, coeffs(den, den_len, "den")?)?;
        *out = boxed(tf);
        Ok(())
    })
}

/// # Safety
/// `tf` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rirkit_tf_free(tf: *mut RirkitTf) {
    if !tf.is_null() {
        drop(Box::from_raw(tf));
    }
}

/// Evaluates the transfer function at the complex point `re + j·im`.
///
/// # Safety
/// `tf` must be a live handle; `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_tf_eval(
    tf: *const RirkitTf,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RirkitStatus {
    guard(|| {
        let g = tf_ref(tf)?;
        let (out_re, out_im) = (out_mut(out_re, "out_re")?, out_mut(out_im, "out_im")?);
        let v = g.evaluate(Complex64::new(re, im))?;
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Peak gain over the unit circle and the frequency in [0, π] where it occurs.
///
/// # Safety
/// `tf` must be a live handle; `out_norm` and `out_omega` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_tf_linf_norm(
    tf: *const RirkitTf,
    out_norm: *mut f64,
    out_omega: *mut f64,
) -> RirkitStatus {
    guard(|| {
        let g = tf_ref(tf)?;
        let (out_norm, out_omega) = (out_mut(out_norm, "out_norm")?, out_mut(out_omega, "out_omega")?);
        let peak = g.linf_norm()?;
        *out_norm = peak.norm;
        *out_omega = peak.omega;
        Ok(())
    })
}

/// Writes up to `capacity` poles outside the unit disk and stores the total count in `out_count`.
/// Pass `capacity = 0` with null buffers to query the count.
///
/// # Safety
/// `tf` must be a live handle; the buffers must hold `capacity` doubles; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_tf_unstable_poles(
    tf: *const RirkitTf,
    out_re: *mut f64,
    out_im: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> RirkitStatus {
    guard(|| {
        let g = tf_ref(tf)?;
        let count = out_mut(out_count, "out_count")?;
        let poles = g.unstable_poles()?;
        *count = poles.len();
        let n = poles.len().min(capacity);
        if n > 0 {
            if out_re.is_null() || out_im.is_null() {
                return Err(null("pole buffers"));
            }
            let (re, im) = (slice::from_raw_parts_mut(out_re, n), slice::from_raw_parts_mut(out_im, n));
            for (k, p) in poles.iter().take(n).enumerate() {
                re[k] = p.re;
                im[k] = p.im;
            }
        }
        Ok(())
    })
}

/// Robust instability radius verdict for an unstable plant.
///
/// # Safety
/// `tf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_analyze(tf: *const RirkitTf, out: *mut RirkitVerdict) -> RirkitStatus {
    guard(|| {
        let g = tf_ref(tf)?;
        let out = out_mut(out, "out")?;
        let v = exact_rir_analyze(g)?;
        *out = RirkitVerdict {
            status: match v.status {
                RirStatus::ExactSufficient => RirkitVerdictStatus::ExactSufficient,
                RirStatus::ExactBoundary => RirkitVerdictStatus::ExactBoundary,
                RirStatus::NotExact => RirkitVerdictStatus::NotExact,
                RirStatus::StrictlyGreater => RirkitVerdictStatus::StrictlyGreater,
                RirStatus::Inconclusive => RirkitVerdictStatus::Inconclusive,
            },
            class_name: match v.class.class_name {
                ClassName::G1Boundary => RirkitClass::G1Boundary,
                ClassName::G2Interior => RirkitClass::G2Interior,
                ClassName::G1Interior => RirkitClass::G1Interior,
                ClassName::GnOther => RirkitClass::GnOther,
            },
            n_unstable: v.class.n_unstable,
            peak_omega: v.class.peak_omega,
            peak_gain: v.class.peak_gain,
            theta_p: v.theta_p,
            theta_rate: v.theta_rate,
            rho_threshold: v.rho_threshold,
            lower_bound: v.lower_bound,
        };
        Ok(())
    })
}

/// Same verdict as [`rirkit_analyze`] serialized as JSON. Free the string with [`rirkit_string_free`].
///
/// # Safety
/// `tf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_analyze_json(tf: *const RirkitTf, out: *mut *mut c_char) -> RirkitStatus {
    guard(|| {
        let g = tf_ref(tf)?;
        let out = out_mut(out, "out")?;
        *out = ptr::null_mut();
        let json = serde_json::to_string(&exact_rir_analyze(g)?)?;
        *out = CString::new(json).map_err(|e| Failure(RirkitStatus::Verification, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rirkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stable perturbation of minimal peak gain that drives the loop onto the unit circle.
/// The new handle goes to `out_f`; its peak gain to `out_norm` when non-null.
///
/// # Safety
/// `tf` must be a live handle; `out_f` must be writable; `out_norm` may be null.
#[no_mangle]
pub unsafe extern "C" fn rirkit_synthesize(
    tf: *const RirkitTf,
    out_f: *mut *mut RirkitTf,
    out_norm: *mut f64,
) -> RirkitStatus {
    guard(|| {
        let g = tf_ref(tf)?;
        let out_f = out_mut(out_f, "out_f")?;
        *out_f = ptr::null_mut();
        let s = synth_marginal_perturbation(g)?;
        if let Some(n) = out_norm.as_mut() {
            *n = s.f_norm;
        }
        *out_f = boxed(s.f);
        Ok(())
    })
}

/// Randomized search for the largest all-pass phase rate at `omega_p` given phase `theta_p`.
///
/// # Safety
/// `out_best` and `out_bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rirkit_pcr_max_search(
    omega_p: f64,
    theta_p: f64,
    max_order: usize,
    trials: usize,
    seed: u64,
    out_best: *mut f64,
    out_bound: *mut f64,
) -> RirkitStatus {
    guard(|| {
        let (best, bound) = (out_mut(out_best, "out_best")?, out_mut(out_bound, "out_bound")?);
        let s = pcr_max_search(omega_p, theta_p, max_order, trials, seed)?;
        *best = s.best;
        *bound = s.bound;
        Ok(())
    })
}

/// Reads the message as an owned string; test and Rust-caller convenience.
pub fn last_error() -> Option<String> {
    let p = rirkit_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}
