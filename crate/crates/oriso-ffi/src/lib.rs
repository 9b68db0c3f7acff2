//! C ABI for the oriso library.
//!
//! Objects cross the boundary as opaque handles or JSON strings; every
//! fallible call reports through status codes and a thread-local error
//! message. Strings returned by this library must be released with
//! [`oriso_string_free`], handles with [`oriso_oriented_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::ptr;

use oriso::field::{Config, Tower};
use oriso::io;
use oriso::orientation::{enc, ideal_action, twist, OrientedCurve};
use oriso::quadratic::{enumerate_class_group, QuadForm, QuadOrder};
use oriso::Error;

/// Status codes returned by fallible calls.
pub const ORISO_OK: c_int = 0;
/// Internal or mathematical-precondition error; see oriso_last_error_message.
pub const ORISO_ERR: c_int = 1;
/// Negative mathematical answer (not divisible, no shift, no solution).
pub const ORISO_NEGATIVE: c_int = 2;
/// Malformed arguments (null pointers, bad UTF-8, bad JSON).
pub const ORISO_INVALID_ARG: c_int = 3;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> c_int {
    match err {
        Error::NoShift | Error::NoSolution => ORISO_NEGATIVE,
        _ => ORISO_ERR,
    }
}

/// An oriented supersingular curve together with its field tower. Opaque.
pub struct OrisoOriented {
    tower: Tower,
    inner: OrientedCurve,
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn oriso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// The last error message raised on this thread, or null. Free the result
/// with oriso_string_free.
#[no_mangle]
pub extern "C" fn oriso_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(c) => c.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by an oriso function and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn oriso_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parse an oriented curve from its JSON encoding. Returns null on failure
/// (see oriso_last_error_message). max_ext_degree 0 and prime_cap 0 select
/// the defaults.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn oriso_oriented_from_json(
    json: *const c_char,
    max_ext_degree: u32,
    prime_cap: u64,
) -> *mut OrisoOriented {
    let Some(text) = (unsafe { cstr_arg(json) }) else {
        set_error("null or non-UTF8 json argument");
        return ptr::null_mut();
    };
    let parsed: Result<io::OrientedWire, _> = serde_json::from_str(text);
    let wire = match parsed {
        Ok(w) => w,
        Err(e) => {
            set_error(format!("json: {e}"));
            return ptr::null_mut();
        }
    };
    let mut config = Config::default();
    if max_ext_degree > 0 {
        config.ext_cap = max_ext_degree;
    }
    if prime_cap > 0 {
        config.prime_cap = prime_cap;
    }
    let tower = Tower::new(wire.p, config);
    match io::oriented_from_wire(&tower, &wire) {
        Ok(inner) => Box::into_raw(Box::new(OrisoOriented { tower, inner })),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Release an oriented-curve handle.
///
/// # Safety
/// `h` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn oriso_oriented_free(h: *mut OrisoOriented) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// JSON encoding of the handle. Free with oriso_string_free.
///
/// # Safety
/// `h` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oriso_oriented_to_json(h: *const OrisoOriented) -> *mut c_char {
    let Some(obj) = (unsafe { h.as_ref() }) else {
        set_error("null handle");
        return ptr::null_mut();
    };
    match io::oriented_to_wire(&obj.inner).and_then(|w| Ok(serde_json::to_string_pretty(&w)?)) {
        Ok(s) => string_out(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Hex of the canonical class encoding. Free with oriso_string_free.
///
/// # Safety
/// `h` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oriso_enc_hex(h: *const OrisoOriented) -> *mut c_char {
    let Some(obj) = (unsafe { h.as_ref() }) else {
        set_error("null handle");
        return ptr::null_mut();
    };
    match enc(&obj.inner) {
        Ok(key) => string_out(key.hex()),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// The O-twist of the oriented curve, as a fresh handle.
///
/// # Safety
/// `h` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oriso_twist(h: *const OrisoOriented) -> *mut OrisoOriented {
    let Some(obj) = (unsafe { h.as_ref() }) else {
        set_error("null handle");
        return ptr::null_mut();
    };
    let out = OrisoOriented { tower: obj.tower.clone(), inner: twist(&obj.inner) };
    Box::into_raw(Box::new(out))
}

/// Act by the ideal class of the form (a, b, c). Returns a fresh handle or
/// null on failure.
///
/// # Safety
/// `h` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oriso_act(
    h: *const OrisoOriented,
    a: i64,
    b: i64,
    c: i64,
) -> *mut OrisoOriented {
    let Some(obj) = (unsafe { h.as_ref() }) else {
        set_error("null handle");
        return ptr::null_mut();
    };
    let form = QuadForm::new(a as i128, b as i128, c as i128);
    match ideal_action(&obj.inner, &form) {
        Ok(y) => Box::into_raw(Box::new(OrisoOriented { tower: obj.tower.clone(), inner: y })),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Divide the chain in `chain_json` by n. On success writes a JSON result
/// through `out`; returns ORISO_NEGATIVE (with null output) when the
/// quotient does not exist.
///
/// # Safety
/// `chain_json` must be a valid NUL-terminated string and `out` a valid
/// location to store a string pointer.
#[no_mangle]
pub unsafe extern "C" fn oriso_divide_json(
    chain_json: *const c_char,
    n: u64,
    out: *mut *mut c_char,
) -> c_int {
    if out.is_null() {
        set_error("null out pointer");
        return ORISO_INVALID_ARG;
    }
    unsafe { *out = ptr::null_mut() };
    let Some(text) = (unsafe { cstr_arg(chain_json) }) else {
        set_error("null or non-UTF8 json argument");
        return ORISO_INVALID_ARG;
    };
    let wire: io::ChainWire = match serde_json::from_str(text) {
        Ok(w) => w,
        Err(e) => {
            set_error(format!("json: {e}"));
            return ORISO_INVALID_ARG;
        }
    };
    let tower = Tower::new(wire.p, Config::default());
    let result = io::chain_from_wire(&tower, &wire)
        .and_then(|chain| oriso::division::divide_by_integer(&chain.into(), n as u128));
    match result {
        Ok(oriso::division::Divided::Quotient(psi)) => {
            match io::chain_to_wire(&psi).and_then(|w| Ok(serde_json::to_string_pretty(&w)?)) {
                Ok(s) => {
                    unsafe { *out = string_out(s) };
                    ORISO_OK
                }
                Err(e) => {
                    set_error(e.to_string());
                    ORISO_ERR
                }
            }
        }
        Ok(oriso::division::Divided::NotDivisible) => ORISO_NEGATIVE,
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Vectorise: find the ideal class sending x to y. Writes the JSON result
/// through `out`.
///
/// # Safety
/// `x` and `y` must be live handles and `out` a valid output location.
#[no_mangle]
pub unsafe extern "C" fn oriso_vectorise_json(
    x: *const OrisoOriented,
    y: *const OrisoOriented,
    epsilon: c_double,
    seed: u64,
    out: *mut *mut c_char,
) -> c_int {
    if out.is_null() {
        set_error("null out pointer");
        return ORISO_INVALID_ARG;
    }
    unsafe { *out = ptr::null_mut() };
    let (Some(xo), Some(yo)) = (unsafe { x.as_ref() }, unsafe { y.as_ref() }) else {
        set_error("null handle");
        return ORISO_INVALID_ARG;
    };
    match oriso::vectorisation::vectorise(&xo.inner, &yo.inner, epsilon, seed) {
        Ok(r) => {
            let body = serde_json::json!({
                "schema": "oriso/vectorise-result/v1",
                "ideal": {"a": r.ideal.a.to_string(), "b": r.ideal.b.to_string(), "c": r.ideal.c.to_string()},
                "twisted": r.twisted,
                "prime_factor_count": r.prime_factor_count,
                "smooth_bound": r.smooth_bound,
            });
            unsafe { *out = string_out(body.to_string()) };
            ORISO_OK
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Enumerated class group of a discriminant as JSON.
///
/// # Safety
/// `out` must be a valid location to store a string pointer.
#[no_mangle]
pub unsafe extern "C" fn oriso_classgroup_json(disc: i64, out: *mut *mut c_char) -> c_int {
    if out.is_null() {
        set_error("null out pointer");
        return ORISO_INVALID_ARG;
    }
    unsafe { *out = ptr::null_mut() };
    let result = QuadOrder::from_disc(disc as i128)
        .and_then(|order| enumerate_class_group(&order, 1_000_000));
    match result {
        Ok(cg) => {
            let body = serde_json::json!({
                "schema": "oriso/classgroup-result/v1",
                "disc": disc.to_string(),
                "h": cg.h().to_string(),
                "elements": cg.elements.iter().map(|f| serde_json::json!({
                    "a": f.a.to_string(), "b": f.b.to_string(), "c": f.c.to_string(),
                })).collect::<Vec<_>>(),
            });
            unsafe { *out = string_out(body.to_string()) };
            ORISO_OK
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}
