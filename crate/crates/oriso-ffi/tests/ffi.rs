//! Exercises the C ABI from Rust: handle lifecycle, JSON round trips,
//! actions, vectorisation and the negative-answer status code.

use std::ffi::{CStr, CString};

use oriso::curve::Curve;
use oriso::field::{Config, Fe, Tower};
use oriso::io;
use oriso::isogeny::{IsogenyChain, IsogenyExpr};
use oriso::orientation::OrientedCurve;
use oriso::quadratic::QuadOrder;

use oriso_ffi::*;

fn gaussian_json() -> String {
    let t = Tower::new(31, Config::default());
    let e = Curve::canonical_model(&t, &Fe::from_u64(&t.base(), 1728)).unwrap();
    let auts = oriso::curve::automorphisms(&e).unwrap();
    let pts = e.sample_points(1, 3).unwrap();
    let base = t.base();
    let i = Fe { ctx: base.clone(), c: vec![0, 1] };
    let found = auts
        .into_iter()
        .find(|a| {
            pts.iter().all(|p| {
                let q = a.apply(p).unwrap();
                let (x, y) = p.xy.as_ref().unwrap();
                let (qx, qy) = q.xy.as_ref().unwrap();
                let k = qx.ctx.k;
                *qx == t.embed(&x.neg(), k).unwrap()
                    && *qy == t.embed(&i, k).unwrap().mul(&t.embed(y, k).unwrap())
            })
        })
        .unwrap();
    let theta = IsogenyExpr::from_chain(IsogenyChain::from_isomorphism(found)).unwrap();
    let x = OrientedCurve::new(e, QuadOrder::from_disc(-4).unwrap(), theta).unwrap();
    serde_json::to_string(&io::oriented_to_wire(&x).unwrap()).unwrap()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { oriso_string_free(p) };
    s
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(oriso_version()) };
    assert!(!v.to_str().unwrap().is_empty());
}

#[test]
fn oriented_lifecycle_and_enc() {
    let json = CString::new(gaussian_json()).unwrap();
    let h = unsafe { oriso_oriented_from_json(json.as_ptr(), 0, 0) };
    assert!(!h.is_null());
    let k1 = take_string(unsafe { oriso_enc_hex(h) });
    let k2 = take_string(unsafe { oriso_enc_hex(h) });
    assert_eq!(k1, k2);
    // twist differs, double twist returns
    let tw = unsafe { oriso_twist(h) };
    assert!(!tw.is_null());
    let kt = take_string(unsafe { oriso_enc_hex(tw) });
    assert_ne!(kt, k1);
    let tw2 = unsafe { oriso_twist(tw) };
    assert_eq!(take_string(unsafe { oriso_enc_hex(tw2) }), k1);
    // JSON round trip through the ABI
    let out = take_string(unsafe { oriso_oriented_to_json(h) });
    let again = CString::new(out).unwrap();
    let h2 = unsafe { oriso_oriented_from_json(again.as_ptr(), 0, 0) };
    assert!(!h2.is_null());
    assert_eq!(take_string(unsafe { oriso_enc_hex(h2) }), k1);
    unsafe {
        oriso_oriented_free(h);
        oriso_oriented_free(tw);
        oriso_oriented_free(tw2);
        oriso_oriented_free(h2);
    }
}

#[test]
fn act_and_vectorise_through_abi() {
    let json = CString::new(gaussian_json()).unwrap();
    let h = unsafe { oriso_oriented_from_json(json.as_ptr(), 0, 0) };
    assert!(!h.is_null());
    // ramified prime (2, 2, 1) for disc -4 acts trivially on the class
    let moved = unsafe { oriso_act(h, 2, 2, 1) };
    assert!(!moved.is_null());
    assert_eq!(
        take_string(unsafe { oriso_enc_hex(moved) }),
        take_string(unsafe { oriso_enc_hex(h) })
    );
    let mut out: *mut std::ffi::c_char = std::ptr::null_mut();
    let status = unsafe { oriso_vectorise_json(h, moved, 1.0, 7, &mut out) };
    assert_eq!(status, ORISO_OK);
    let body = take_string(out);
    assert!(body.contains("\"twisted\":false"));
    unsafe {
        oriso_oriented_free(h);
        oriso_oriented_free(moved);
    }
}

#[test]
fn divide_reports_negative_answers() {
    // the multiplication-by-2 chain on y^2 = x^3 + x over F_31
    let t = Tower::new(31, Config::default());
    let e = Curve::canonical_model(&t, &Fe::from_u64(&t.base(), 1728)).unwrap();
    let chain = IsogenyChain::scalar(&e, 2);
    let wire = io::chain_to_wire(&chain).unwrap();
    let json = CString::new(serde_json::to_string(&wire).unwrap()).unwrap();
    let mut out: *mut std::ffi::c_char = std::ptr::null_mut();
    let ok = unsafe { oriso_divide_json(json.as_ptr(), 2, &mut out) };
    assert_eq!(ok, ORISO_OK);
    let _ = take_string(out);
    let mut out2: *mut std::ffi::c_char = std::ptr::null_mut();
    let neg = unsafe { oriso_divide_json(json.as_ptr(), 3, &mut out2) };
    assert_eq!(neg, ORISO_NEGATIVE);
    assert!(out2.is_null());
}

#[test]
fn classgroup_and_errors() {
    let mut out: *mut std::ffi::c_char = std::ptr::null_mut();
    let ok = unsafe { oriso_classgroup_json(-47, &mut out) };
    assert_eq!(ok, ORISO_OK);
    let body = take_string(out);
    assert!(body.contains("\"h\":\"5\""));
    // invalid discriminant raises an error with a message
    let mut out2: *mut std::ffi::c_char = std::ptr::null_mut();
    let bad = unsafe { oriso_classgroup_json(-6, &mut out2) };
    assert_eq!(bad, ORISO_ERR);
    let msg = take_string(unsafe { oriso_last_error_message() });
    assert!(msg.contains("discriminant"));
    // null-argument handling
    let bad_arg = unsafe { oriso_oriented_from_json(std::ptr::null(), 0, 0) };
    assert!(bad_arg.is_null());
}
