use std::ffi::{CStr, CString};
use std::ptr;

use mcqgen_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn parse(s: &str) -> *mut McqExpr {
    let mut e = ptr::null_mut();
    assert_eq!(mcq_expr_parse_latex(c(s).as_ptr(), &mut e), McqStatus::Ok, "{s}");
    e
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    mcq_string_free(s);
    out
}

#[test]
fn surd_forms_are_equivalent() {
    unsafe {
        let a = parse(r"\frac{\sqrt{2}}{2}");
        let b = parse(r"\frac{1}{\sqrt{2}}");
        let z = parse(r"\frac{\sqrt{3}}{2}");
        let mut v = McqVerdict::Inconclusive;
        assert_eq!(mcq_expr_equivalent(a, b, 42, &mut v), McqStatus::Ok);
        assert_eq!(v, McqVerdict::Equivalent);
        assert_eq!(mcq_expr_equivalent(a, z, 42, &mut v), McqStatus::Ok);
        assert_eq!(v, McqVerdict::Distinct);
        for e in [a, b, z] {
            mcq_expr_free(e);
        }
    }
}

#[test]
fn eval_and_differentiate() {
    unsafe {
        let e = parse(r"x^{3} + \sin(x)");
        let mut d = ptr::null_mut();
        assert_eq!(mcq_expr_differentiate(e, c("x").as_ptr(), &mut d), McqStatus::Ok);
        let name = c("x");
        let names = [name.as_ptr()];
        let mut y = 0.0;
        assert_eq!(mcq_expr_eval(d, names.as_ptr(), [0.5].as_ptr(), 1, &mut y), McqStatus::Ok);
        assert!((y - (0.75 + 0.5f64.cos())).abs() < 1e-12);

        assert_eq!(mcq_expr_eval(e, ptr::null(), ptr::null(), 0, &mut y), McqStatus::UnboundVariable);
        assert!(CStr::from_ptr(mcq_last_error()).to_str().unwrap().contains('x'));

        let mut s = ptr::null_mut();
        assert_eq!(mcq_expr_to_markup(e, &mut s), McqStatus::Ok);
        assert!(take(s).contains("sin"));
        mcq_expr_free(d);
        mcq_expr_free(e);
    }
}

#[test]
fn response_and_validation_round_trip() {
    let raw = r#"{"questions":[{"stem":"What is the exact value of $\\cos\\left(\\frac{\\pi}{3}\\right)$?",
        "options":[
          {"id":"A","latex":"\\frac{1}{2}","feedback":"Correct.","is_correct":true},
          {"id":"B","latex":"-\\frac{1}{2}","feedback":"Sign error.","is_correct":false},
          {"id":"C","latex":"\\frac{\\sqrt{3}}{2}","feedback":"That is sine.","is_correct":false},
          {"id":"D","latex":"1","feedback":"That is cos 0.","is_correct":false}],
        "correct_option_id":"A","topic":"trig","difficulty":"low"}]}"#;
    unsafe {
        let mut qs = ptr::null_mut();
        assert_eq!(mcq_parse_response(c(raw).as_ptr(), &mut qs), McqStatus::Ok);
        let qs = take(qs);
        let mut report = ptr::null_mut();
        assert_eq!(mcq_validate_question(c(&qs).as_ptr(), &mut report), McqStatus::Ok);
        let report: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(report["disposition"]["action"], "accept");
        assert_eq!(report["uniqueness"]["status"], "unique");

        let mut out = ptr::null_mut();
        let broken = raw.replace(r#""feedback":"Sign error.","#, "");
        assert_eq!(mcq_parse_response(c(&broken).as_ptr(), &mut out), McqStatus::MissingField);
        assert!(out.is_null());
    }
}

#[test]
fn null_and_utf8_guards() {
    unsafe {
        let mut e = ptr::null_mut();
        assert_eq!(mcq_expr_parse_latex(c("1").as_ptr(), ptr::null_mut()), McqStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(mcq_expr_parse_latex(bad.as_ptr().cast(), &mut e), McqStatus::InvalidUtf8);
        let mut s = ptr::null_mut();
        assert_eq!(mcq_expr_to_latex(ptr::null(), &mut s), McqStatus::NullPointer);
        mcq_expr_free(ptr::null_mut());
        mcq_string_free(ptr::null_mut());
        assert!(!CStr::from_ptr(mcq_version()).to_bytes().is_empty());
    }
}
