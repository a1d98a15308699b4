//! Equivalence checking: exact when possible, seeded sampling otherwise.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mathexpr::{free_variables, Expr};

use super::closed::eval_exact;
use super::diff::expand_derivatives;
use super::numeric::eval_numeric;
use super::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquivalencePolicy {
    pub sample_count: usize,
    pub min_valid_points: usize,
    pub domain_low: f64,
    pub domain_high: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for EquivalencePolicy {
    fn default() -> Self {
        EquivalencePolicy {
            sample_count: 16,
            min_valid_points: 8,
            domain_low: -3.0,
            domain_high: 3.0,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid equivalence policy: {0}")]
pub struct PolicyError(pub String);

impl EquivalencePolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.sample_count == 0 {
            return Err(PolicyError("sample_count must be positive".into()));
        }
        if self.min_valid_points == 0 || self.min_valid_points > self.sample_count {
            return Err(PolicyError("min_valid_points must be in 1..=sample_count".into()));
        }
        if !(self.domain_low.is_finite() && self.domain_high.is_finite())
            || self.domain_low >= self.domain_high
        {
            return Err(PolicyError("domain must be a finite non-empty interval".into()));
        }
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) {
            return Err(PolicyError("tolerances must be non-negative".into()));
        }
        Ok(())
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    Distinct,
    Inconclusive(String),
}

/// Decides whether `a` and `b` denote the same function.
///
/// Closed expressions whose values are exactly representable are compared
/// exactly. Everything else is sampled at `policy.sample_count` seeded
/// points over the sorted union of free variables; points where either side
/// fails to evaluate are skipped.
pub fn equivalent(a: &Expr, b: &Expr, policy: &EquivalencePolicy) -> Verdict {
    if let Err(e) = policy.validate() {
        return Verdict::Inconclusive(e.to_string());
    }
    let (a, b) = match (expand_derivatives(a), expand_derivatives(b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::Inconclusive(e.to_string()),
    };
    let mut vars = free_variables(&a);
    vars.extend(free_variables(&b));
    if vars.is_empty() {
        if let (Ok(x), Ok(y)) = (eval_exact(&a), eval_exact(&b)) {
            return if x == y { Verdict::Equivalent } else { Verdict::Distinct };
        }
    }
    let mut rng = seeded(policy.seed);
    let mut env = HashMap::new();
    let mut valid = 0;
    let mut mismatch = false;
    for _ in 0..policy.sample_count {
        for v in &vars {
            env.insert(v.clone(), rng.gen_range(policy.domain_low..policy.domain_high));
        }
        let (Ok(x), Ok(y)) = (eval_numeric(&a, &env), eval_numeric(&b, &env)) else {
            continue;
        };
        valid += 1;
        if !policy.close(x, y) {
            mismatch = true;
        }
    }
    if valid < policy.min_valid_points {
        return Verdict::Inconclusive(if valid == 0 {
            "no common domain".to_string()
        } else {
            format!(
                "only {valid} of {} sample points in the common domain",
                policy.sample_count
            )
        });
    }
    if mismatch {
        Verdict::Distinct
    } else {
        Verdict::Equivalent
    }
}
