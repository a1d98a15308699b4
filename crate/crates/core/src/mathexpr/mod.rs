//! Mathematical expressions: parsing, printing, and structural operations.
//!
//! Two input syntaxes feed one tree type: a LaTeX subset (what models and
//! the review UI exchange) and plain infix (what template authors write).
//! Output goes back to LaTeX, to the infix form via `Display`, or to a
//! content-oriented XML markup that round-trips through its own reader.

mod ast;
mod infix;
mod latex;
mod markup;
mod render;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

pub use ast::{
    is_identifier, BinaryOp, Constant, Expr, Func, SourceSpan, UnaryOp, MAX_DEPTH, MAX_NODES,
};
pub use infix::parse_infix;
pub use latex::{parse_latex, MAX_INPUT_BYTES};
pub use markup::{parse_semantic_markup, to_semantic_markup};
pub use render::to_latex;

pub(crate) use infix::{lex_infix, InfixParser, InfixTok};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at {span}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot substitute for `{0}`: it is a differentiation variable")]
pub struct SubstitutionError(pub String);

/// Variables occurring in `e`. A derivative's variable is reported only when
/// the body mentions it.
pub fn free_variables(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_vars(e, &mut out);
    out
}

fn collect_vars(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Variable(v) => {
            out.insert(v.clone());
        }
        Expr::Number(_) | Expr::Constant(_) => {}
        Expr::Unary(_, a) | Expr::Function(_, a) | Expr::Derivative(_, a) => collect_vars(a, out),
        Expr::Binary(_, l, r) => {
            collect_vars(l, out);
            collect_vars(r, out);
        }
    }
}

/// Replaces every free occurrence of the bound names simultaneously.
pub fn substitute(e: &Expr, bindings: &HashMap<String, Expr>) -> Result<Expr, SubstitutionError> {
    if bindings.is_empty() {
        return Ok(e.clone());
    }
    Ok(match e {
        Expr::Variable(v) => bindings.get(v).cloned().unwrap_or_else(|| e.clone()),
        Expr::Number(_) | Expr::Constant(_) => e.clone(),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(substitute(a, bindings)?)),
        Expr::Function(f, a) => Expr::Function(*f, Box::new(substitute(a, bindings)?)),
        Expr::Binary(op, l, r) => Expr::Binary(
            *op,
            Box::new(substitute(l, bindings)?),
            Box::new(substitute(r, bindings)?),
        ),
        Expr::Derivative(var, body) => {
            if bindings.contains_key(var) {
                return Err(SubstitutionError(var.clone()));
            }
            Expr::Derivative(var.clone(), Box::new(substitute(body, bindings)?))
        }
    })
}
