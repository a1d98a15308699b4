//! C ABI over the expression and validation core.
//!
//! Every fallible function returns an [`McqStatus`]; on failure a message is
//! kept per thread and can be read with [`mcq_last_error`]. Expressions are
//! opaque [`McqExpr`] handles released with [`mcq_expr_free`]. Strings handed
//! out by the library are released with [`mcq_string_free`].
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access the function
//! documents. Input strings must be NUL-terminated. Handles must come from
//! this library and must not be used after they are freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcqgen::evalcore::{differentiate, equivalent, eval_numeric, EquivalencePolicy, EvalError, Verdict};
use mcqgen::genai::{parse_response, BackendErrorKind};
use mcqgen::mathexpr::{parse_latex, to_latex, to_semantic_markup, Expr};
use mcqgen::bankserve::service::load_questions;
use mcqgen::validator::{validate, LoopPolicy};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    DomainError = 4,
    UnboundVariable = 5,
    UnsupportedDerivative = 6,
    InvalidArgument = 7,
    SchemaViolation = 10,
    MissingField = 11,
    AmbiguousCorrect = 12,
    MathParseError = 13,
    Truncated = 14,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McqVerdict {
    Equivalent = 0,
    Distinct = 1,
    Inconclusive = 2,
}

/// Opaque parsed expression.
pub struct McqExpr {
    expr: Expr,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: McqStatus, msg: impl Into<String>) -> McqStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> McqStatus) -> McqStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(McqStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, McqStatus> {
    if p.is_null() {
        return Err(fail(McqStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(McqStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn expr_ref<'a>(p: *const McqExpr, what: &str) -> Result<&'a Expr, McqStatus> {
    if p.is_null() {
        return Err(fail(McqStatus::NullPointer, format!("{what} is null")));
    }
    Ok(&(*p).expr)
}

unsafe fn give_string(s: String, out: *mut *mut c_char) -> McqStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            McqStatus::Ok
        }
        Err(_) => fail(McqStatus::InvalidArgument, "result contains a NUL byte"),
    }
}

unsafe fn give_expr(e: Expr, out: *mut *mut McqExpr) -> McqStatus {
    *out = Box::into_raw(Box::new(McqExpr { expr: e }));
    McqStatus::Ok
}

fn kind_status(kind: BackendErrorKind) -> McqStatus {
    match kind {
        BackendErrorKind::SchemaViolation => McqStatus::SchemaViolation,
        BackendErrorKind::MissingField => McqStatus::MissingField,
        BackendErrorKind::AmbiguousCorrect => McqStatus::AmbiguousCorrect,
        BackendErrorKind::MathParseError => McqStatus::MathParseError,
        BackendErrorKind::Truncated => McqStatus::Truncated,
        _ => McqStatus::InvalidArgument,
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! out_ptr {
    ($p:expr) => {
        if $p.is_null() {
            return fail(McqStatus::NullPointer, concat!(stringify!($p), " is null"));
        }
    };
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mcq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mcq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn mcq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mcq_expr_free(e: *mut McqExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Parses LaTeX into a new handle stored in `*out`.
#[no_mangle]
pub unsafe extern "C" fn mcq_expr_parse_latex(latex: *const c_char, out: *mut *mut McqExpr) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let s = tri!(read_str(latex, "latex"));
        match parse_latex(s) {
            Ok(e) => give_expr(e, out),
            Err(e) => fail(McqStatus::ParseError, e.to_string()),
        }
    })
}

/// Canonical LaTeX for the expression; free with `mcq_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mcq_expr_to_latex(e: *const McqExpr, out: *mut *mut c_char) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let e = tri!(expr_ref(e, "expr"));
        give_string(to_latex(e), out)
    })
}

/// Semantic markup for the expression; free with `mcq_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mcq_expr_to_markup(e: *const McqExpr, out: *mut *mut c_char) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let e = tri!(expr_ref(e, "expr"));
        give_string(to_semantic_markup(e), out)
    })
}

/// Evaluates with `count` variable bindings given as parallel arrays.
#[no_mangle]
pub unsafe extern "C" fn mcq_expr_eval(
    e: *const McqExpr,
    names: *const *const c_char,
    values: *const f64,
    count: usize,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let e = tri!(expr_ref(e, "expr"));
        let mut env = HashMap::new();
        if count > 0 {
            if names.is_null() || values.is_null() {
                return fail(McqStatus::NullPointer, "names or values is null");
            }
            for i in 0..count {
                let name = tri!(read_str(*names.add(i), "variable name"));
                env.insert(name.to_string(), *values.add(i));
            }
        }
        match eval_numeric(e, &env) {
            Ok(v) => {
                *out = v;
                McqStatus::Ok
            }
            Err(EvalError::Unbound(v)) => fail(McqStatus::UnboundVariable, format!("unbound variable `{v}`")),
            Err(err) => fail(McqStatus::DomainError, err.to_string()),
        }
    })
}

/// Derivative with respect to `var`, as a new handle.
#[no_mangle]
pub unsafe extern "C" fn mcq_expr_differentiate(
    e: *const McqExpr,
    var: *const c_char,
    out: *mut *mut McqExpr,
) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let e = tri!(expr_ref(e, "expr"));
        let v = tri!(read_str(var, "var"));
        match differentiate(e, v) {
            Ok(d) => give_expr(d, out),
            Err(err) => fail(McqStatus::UnsupportedDerivative, err.to_string()),
        }
    })
}

/// Equivalence under the default policy with the given sampling seed.
#[no_mangle]
pub unsafe extern "C" fn mcq_expr_equivalent(
    a: *const McqExpr,
    b: *const McqExpr,
    seed: u64,
    out: *mut McqVerdict,
) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let a = tri!(expr_ref(a, "a"));
        let b = tri!(expr_ref(b, "b"));
        let policy = EquivalencePolicy {
            seed,
            ..EquivalencePolicy::default()
        };
        *out = match equivalent(a, b, &policy) {
            Verdict::Equivalent => McqVerdict::Equivalent,
            Verdict::Distinct => McqVerdict::Distinct,
            Verdict::Inconclusive(why) => {
                set_error(why);
                McqVerdict::Inconclusive
            }
        };
        McqStatus::Ok
    })
}

/// Parses a model response payload; on success `*out` holds the questions as JSON.
#[no_mangle]
pub unsafe extern "C" fn mcq_parse_response(raw: *const c_char, out: *mut *mut c_char) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let s = tri!(read_str(raw, "raw"));
        match parse_response(s) {
            Ok(qs) => give_string(serde_json::to_string(&qs).expect("questions serialize"), out),
            Err(e) => fail(kind_status(e.kind), e.to_string()),
        }
    })
}

/// Validates one question (JSON) and stores the report (JSON) in `*out`.
#[no_mangle]
pub unsafe extern "C" fn mcq_validate_question(question_json: *const c_char, out: *mut *mut c_char) -> McqStatus {
    guard(|| {
        out_ptr!(out);
        let s = tri!(read_str(question_json, "question_json"));
        let qs = match load_questions(s) {
            Ok(qs) => qs,
            Err(e) => return fail(kind_status(e.kind), e.to_string()),
        };
        let [q] = qs.as_slice() else {
            return fail(McqStatus::InvalidArgument, format!("expected one question, got {}", qs.len()));
        };
        let report = validate(q, &LoopPolicy::default());
        give_string(serde_json::to_string(&report).expect("report serializes"), out)
    })
}
