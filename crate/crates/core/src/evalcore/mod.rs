//! Evaluation: exact special values, floating-point evaluation,
//! simplification, differentiation and equivalence checking.

mod closed;
mod diff;
mod equiv;
mod exact;
mod numeric;
pub mod rng;
mod simplify;

use thiserror::Error;

pub use closed::eval_exact;
pub use diff::differentiate;
pub use equiv::{equivalent, EquivalencePolicy, PolicyError, Verdict};
pub use exact::{ExactValue, ExactValueRepr};
pub use numeric::{eval_numeric, SINGULARITY_EPS};
pub use simplify::{simplify, simplify_arithmetic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("value is not representable exactly")]
    NotRepresentable,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("unsupported derivative: {0}")]
    UnsupportedDerivative(String),
}
