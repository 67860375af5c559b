use std::ffi::{CStr, CString};
use std::ptr;

use splitjet_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    sj_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(sj_last_error()).to_str().unwrap().to_string()
}

unsafe fn field(spec: &str) -> *mut SjField {
    let mut f = ptr::null_mut();
    assert_eq!(sj_field_parse(c(spec).as_ptr(), &mut f), SjStatus::Ok);
    f
}

unsafe fn jet(f: *const SjField, text: &str, vars: &str, prec: u32) -> *mut SjJet {
    let mut j = ptr::null_mut();
    assert_eq!(sj_jet_parse(f, c(text).as_ptr(), c(vars).as_ptr(), prec, &mut j), SjStatus::Ok);
    j
}

#[test]
fn split_round_trip() {
    unsafe {
        let q = field("q");
        let j = jet(q, "x^2 + x*y^2", "x,y", 4);
        let mut s = ptr::null_mut();
        assert_eq!(sj_split(j, 4, &mut s), SjStatus::Ok);
        let mut rank = 0usize;
        assert_eq!(sj_split_rank(s, &mut rank), SjStatus::Ok);
        assert_eq!(rank, 1);
        let mut ok = false;
        assert_eq!(sj_split_verified(s, &mut ok), SjStatus::Ok);
        assert!(ok);
        let mut r = ptr::null_mut();
        assert_eq!(sj_split_residual(s, &mut r), SjStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(sj_jet_to_string(r, 0, &mut text), SjStatus::Ok);
        assert_eq!(take_string(text), "-1/4*y^4");
        assert_eq!(sj_split_change_component(s, 0, &mut text), SjStatus::Ok);
        assert_eq!(take_string(text), "x - 1/2*y^2");
        assert_eq!(sj_split_change_component(s, 5, &mut text), SjStatus::ComputationError);
        sj_jet_free(r);
        sj_split_free(s);
        sj_jet_free(j);
        sj_field_free(q);
    }
}

#[test]
fn invariants_through_the_abi() {
    unsafe {
        let f2 = field("fp:2");
        let j = jet(f2, "x1*x2 + x3^2", "x1,x2,x3", 4);
        let mut rank = 0usize;
        assert_eq!(sj_jet_hessian_rank(j, &mut rank), SjStatus::Ok);
        assert_eq!(rank, 2);
        sj_jet_free(j);
        sj_field_free(f2);

        let q = field("q");
        let j = jet(q, "x^3 + y^3", "x,y", 6);
        let mut mu = 0u64;
        assert_eq!(sj_milnor_number(j, 12, &mut mu), SjStatus::Ok);
        assert_eq!(mu, 4);
        sj_jet_free(j);
        let j = jet(q, "x^2 + y^2", "x,y", 6);
        let mut b = 0u64;
        assert_eq!(sj_determinacy_bound(j, 12, &mut b), SjStatus::Ok);
        assert_eq!(b, 2);
        sj_jet_free(j);
        let j = jet(q, "x^2", "x,y", 6);
        assert_eq!(sj_milnor_number(j, 6, &mut mu), SjStatus::NotCertified);
        assert!(!last_error().is_empty());
        sj_jet_free(j);
        sj_field_free(q);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(sj_field_parse(c("fp:6").as_ptr(), &mut f), SjStatus::InvalidField);
        assert!(f.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(sj_field_parse(ptr::null(), &mut f), SjStatus::NullPointer);

        let q = field("q");
        assert!(last_error().is_empty());
        let mut j = ptr::null_mut();
        assert_eq!(sj_jet_parse(q, c("x + z").as_ptr(), c("x").as_ptr(), 3, &mut j), SjStatus::ParseError);
        assert!(last_error().contains('z'));
        let j = jet(q, "x^2", "x", 3);
        let mut s = ptr::null_mut();
        assert_eq!(sj_split(j, 1, &mut s), SjStatus::ComputationError);
        assert_eq!(sj_split_rank(ptr::null(), ptr::null_mut()), SjStatus::NullPointer);
        sj_jet_free(j);
        sj_field_free(q);
        sj_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/splitjet.h");
    for name in [
        "sj_last_error",
        "sj_string_free",
        "sj_field_parse",
        "sj_field_free",
        "sj_jet_parse",
        "sj_jet_free",
        "sj_jet_to_string",
        "sj_jet_hessian_rank",
        "sj_milnor_number",
        "sj_determinacy_bound",
        "sj_split",
        "sj_split_free",
        "sj_split_rank",
        "sj_split_verified",
        "sj_split_residual",
        "sj_split_change_component",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct SjJet SjJet;"));
}
