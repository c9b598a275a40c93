//! C ABI over `l2t-core`.
//!
//! Objects are created from JSON (same schemas as the `l2t` command line),
//! returned as opaque handles and released with the matching `_free`
//! function. Every call returns an [`L2tStatus`]; on failure the message is
//! available from [`l2t_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use l2t_core::alexander::{alexander_graph_curve, Normalization};
use l2t_core::chain::{torsion_subset, BasedChainComplex, TorsionStatus};
use l2t_core::cli::parse_json;
use l2t_core::error::L2tError;
use l2t_core::laurent::LaurentElement;
use l2t_core::mahler::{mahler_measure, QuadConfig};
use l2t_core::manifolds::{thurston_norm_graph, torsion_graph_manifold, GraphManifold};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L2tStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotWeaklyAcyclic = 3,
    NotDeterminantClass = 4,
    Panic = 5,
}

/// Laurent polynomial over C[Z^k].
pub struct L2tLaurent(LaurentElement);

/// Based chain complex over C[Z^k].
pub struct L2tComplex(BasedChainComplex);

/// Graph manifold with fiber images.
pub struct L2tGraph(GraphManifold);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(L2tStatus, String);

impl From<L2tError> for Failure {
    fn from(e: L2tError) -> Self {
        let status = match e {
            L2tError::NotWeaklyAcyclic => L2tStatus::NotWeaklyAcyclic,
            _ => L2tStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> L2tStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => L2tStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            L2tStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(L2tStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(L2tStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = v;
    Ok(())
}

unsafe fn from_json<T: serde::de::DeserializeOwned, H>(
    json: *const c_char,
    out: *mut *mut H,
    wrap: impl FnOnce(T) -> H,
) -> Result<(), Failure> {
    let text = read_str(json, "json")?;
    if out.is_null() {
        return Err(null("out"));
    }
    let v: T = parse_json(text, "json").map_err(|e| Failure(L2tStatus::InvalidInput, e.to_string()))?;
    *out = Box::into_raw(Box::new(wrap(v)));
    Ok(())
}

fn config(tol: f64) -> Result<QuadConfig, Failure> {
    let cfg = QuadConfig::with_tol(tol);
    cfg.validate()?;
    Ok(cfg)
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn l2t_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn l2t_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_laurent_from_json(json: *const c_char, out: *mut *mut L2tLaurent) -> L2tStatus {
    guard(|| from_json(json, out, L2tLaurent))
}

/// # Safety
/// `p` must come from `l2t_laurent_from_json` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn l2t_laurent_free(p: *mut L2tLaurent) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_complex_from_json(json: *const c_char, out: *mut *mut L2tComplex) -> L2tStatus {
    guard(|| from_json(json, out, L2tComplex))
}

/// # Safety
/// `p` must come from `l2t_complex_from_json` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn l2t_complex_free(p: *mut L2tComplex) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_graph_from_json(json: *const c_char, out: *mut *mut L2tGraph) -> L2tStatus {
    guard(|| {
        from_json(json, out, L2tGraph)?;
        (**out).0.validate().map_err(|e| {
            drop(Box::from_raw(*out));
            *out = std::ptr::null_mut();
            Failure::from(e)
        })
    })
}

/// # Safety
/// `p` must come from `l2t_graph_from_json` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn l2t_graph_free(p: *mut L2tGraph) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Mahler measure; `tol` is the quadrature tolerance for several variables.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_mahler(p: *const L2tLaurent, tol: f64, out: *mut f64) -> L2tStatus {
    guard(|| {
        let p = handle(p, "polynomial")?;
        let r = mahler_measure(&p.0, &config(tol)?)?;
        write_out(out, r.value)
    })
}

/// L2-torsion by the subset method. Status failures are reported through
/// the return code.
///
/// # Safety
/// `c` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_torsion(c: *const L2tComplex, tol: f64, seed: u64, out: *mut f64) -> L2tStatus {
    guard(|| {
        let c = handle(c, "complex")?;
        let v = torsion_subset(&c.0, seed, &config(tol)?)?;
        match v.status {
            TorsionStatus::Ok => write_out(out, v.value),
            TorsionStatus::NotWeaklyAcyclic => Err(Failure(L2tStatus::NotWeaklyAcyclic, "not weakly acyclic".into())),
            TorsionStatus::NotDeterminantClass => {
                Err(Failure(L2tStatus::NotDeterminantClass, "not of determinant class".into()))
            }
        }
    })
}

/// Closed-form twisted torsion of a graph manifold.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_graph_torsion(m: *const L2tGraph, out: *mut f64) -> L2tStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        write_out(out, torsion_graph_manifold(&m.0)?)
    })
}

/// Thurston norm of the class stored on the pieces.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_graph_thurston_norm(m: *const L2tGraph, out: *mut f64) -> L2tStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        write_out(out, thurston_norm_graph(&m.0)?)
    })
}

/// L2-Alexander torsion of a graph manifold at `t` for the stored class;
/// nonzero `symmetric` selects the symmetric normalization.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2t_graph_alexander(m: *const L2tGraph, t: f64, symmetric: c_int, out: *mut f64) -> L2tStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        let norm = if symmetric != 0 { Normalization::Symmetric } else { Normalization::Raw };
        let c = alexander_graph_curve(&m.0, None, &[t], norm)?;
        write_out(out, c.samples[0].value.unwrap_or(f64::NAN))
    })
}
