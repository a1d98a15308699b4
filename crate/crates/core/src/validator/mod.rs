//! Structural, key and uniqueness checks plus the regeneration loop.

mod pipeline;

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::evalcore::{equivalent, eval_exact, eval_numeric, EquivalencePolicy, Verdict};
use crate::mathexpr::{parse_latex, to_latex, Expr};
use crate::qmodel::{math_segments, parse_math_segment, OptionBody, Question, Segment};
use crate::genai::{PromptSpec, UNIQUENESS_CLAUSE};

pub use pipeline::{
    generate_validated, generate_validated_with, AcceptedQuestion, LoopError, Rejection, ValidatedBatch,
};

pub const MISSING_FEEDBACK_CLAUSE: &str = "Provide detailed feedback for each option";
pub const DISTINCT_DISTRACTORS_CLAUSE: &str = "All distractors must be mathematically distinct from each other";
pub const KEY_CORRECT_CLAUSE: &str = "Ensure the option marked correct is exactly the value the stem asks for";
pub const STRUCTURE_CLAUSE: &str =
    "Follow the response schema exactly and mark exactly one option as correct, matching correct_option_id";

/// Issue text recorded when the key disagrees with the stem's computable ask.
pub const KEY_FAILS_EXACT_CHECK: &str = "key fails exact check";

pub fn key_exclusion_clause(key_latex: &str) -> String {
    format!("Do not include any option equivalent to {key_latex}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopPolicy {
    pub max_attempts: u32,
    pub equivalence: EquivalencePolicy,
}

impl Default for LoopPolicy {
    fn default() -> Self {
        LoopPolicy {
            max_attempts: 3,
            equivalence: EquivalencePolicy::default(),
        }
    }
}

impl LoopPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        self.equivalence.validate().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionVerdict {
    /// Comparison against the key; the key itself is `equivalent`.
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "options", rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    DuplicateKey(Vec<String>),
    NoCorrect,
    Inconclusive(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "detail", rename_all = "snake_case")]
pub enum Disposition {
    Accept,
    Regenerate(Vec<String>),
    HumanReview(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyCheck {
    /// LaTeX of the expression the stem asks about.
    pub expression: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub question_id: String,
    pub structural_issues: Vec<String>,
    pub option_verdicts: BTreeMap<String, OptionVerdict>,
    pub uniqueness: Uniqueness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_check: Option<KeyCheck>,
    pub feedback_ok: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feedback_issues: Vec<String>,
    pub disposition: Disposition,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.disposition == Disposition::Accept
    }

    pub fn has_inconclusive(&self) -> bool {
        self.option_verdicts
            .values()
            .any(|v| matches!(v.verdict, Verdict::Inconclusive(_)))
    }
}

/// Result of comparing every option with the key.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessCheck {
    pub uniqueness: Uniqueness,
    pub option_verdicts: BTreeMap<String, OptionVerdict>,
    /// Pairs of distractors judged equivalent to each other.
    pub equivalent_distractors: Vec<(String, String)>,
}

fn values(e: &Expr) -> (Option<String>, Option<f64>) {
    let exact = eval_exact(e).ok();
    let numeric = match &exact {
        Some(v) => Some(v.to_f64()),
        None => eval_numeric(e, &HashMap::new()).ok(),
    };
    (exact.map(|v| to_latex(&v.to_expr())), numeric)
}

fn compare(a: &OptionBody, b: &OptionBody, policy: &EquivalencePolicy) -> Verdict {
    match (a, b) {
        (OptionBody::Math(x), OptionBody::Math(y)) => equivalent(x, y, policy),
        (OptionBody::Text(x), OptionBody::Text(y)) if x == y => Verdict::Equivalent,
        _ => Verdict::Distinct,
    }
}

pub fn check_uniqueness(q: &Question, policy: &EquivalencePolicy) -> UniquenessCheck {
    let Some(key) = q.key() else {
        return UniquenessCheck {
            uniqueness: Uniqueness::NoCorrect,
            option_verdicts: BTreeMap::new(),
            equivalent_distractors: Vec::new(),
        };
    };
    let mut verdicts = BTreeMap::new();
    let mut duplicates = Vec::new();
    let mut inconclusive = Vec::new();
    for o in &q.options {
        let verdict = if o.id == key.id {
            Verdict::Equivalent
        } else {
            compare(&o.body_ast, &key.body_ast, policy)
        };
        if o.id != key.id {
            match &verdict {
                Verdict::Equivalent => duplicates.push(o.id.clone()),
                Verdict::Inconclusive(_) => inconclusive.push(o.id.clone()),
                Verdict::Distinct => {}
            }
        }
        let (exact, numeric) = o.body_ast.as_math().map(values).unwrap_or((None, None));
        verdicts.insert(o.id.clone(), OptionVerdict { verdict, exact, numeric });
    }
    let distractors: Vec<_> = q.options.iter().filter(|o| o.id != key.id).collect();
    let mut pairs = Vec::new();
    for (i, a) in distractors.iter().enumerate() {
        for b in &distractors[i + 1..] {
            if compare(&a.body_ast, &b.body_ast, policy) == Verdict::Equivalent {
                let (x, y) = if a.id < b.id { (&a.id, &b.id) } else { (&b.id, &a.id) };
                pairs.push((x.clone(), y.clone()));
            }
        }
    }
    duplicates.sort();
    inconclusive.sort();
    pairs.sort();
    let uniqueness = if !duplicates.is_empty() {
        Uniqueness::DuplicateKey(duplicates)
    } else if !inconclusive.is_empty() {
        Uniqueness::Inconclusive(inconclusive)
    } else {
        Uniqueness::Unique
    };
    UniquenessCheck {
        uniqueness,
        option_verdicts: verdicts,
        equivalent_distractors: pairs,
    }
}

fn exact_value_ask() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)exact\s+value\s+of\s+\$([^$]+)\$").expect("valid regex"))
}

/// The expression in a stem of the form "... exact value of $expr$ ...".
pub fn stem_ask(stem: &str) -> Option<Expr> {
    let caps = exact_value_ask().captures(stem)?;
    parse_latex(caps.get(1)?.as_str().trim()).ok()
}

fn key_check(q: &Question, policy: &EquivalencePolicy) -> Option<KeyCheck> {
    let ask = stem_ask(&q.stem)?;
    let key = q.key()?.body_ast.as_math()?;
    let passed = match equivalent(&ask, key, policy) {
        Verdict::Equivalent => true,
        Verdict::Distinct => false,
        Verdict::Inconclusive(_) => return None,
    };
    Some(KeyCheck {
        expression: to_latex(&ask),
        expected: eval_exact(&ask).ok().map(|v| to_latex(&v.to_expr())),
        passed,
    })
}

fn feedback_issues(q: &Question) -> Vec<String> {
    let mut issues: Vec<String> = q
        .missing_feedback()
        .into_iter()
        .map(|id| format!("option {id}: feedback is empty"))
        .collect();
    for o in &q.options {
        let bad = match math_segments(&o.feedback) {
            Err(e) => Some(e),
            Ok(segs) => segs.into_iter().find_map(|s| match s {
                Segment::Math { text, .. } => parse_math_segment(text).err().map(|e| e.to_string()),
                Segment::Text(_) => None,
            }),
        };
        if let Some(e) = bad {
            issues.push(format!("option {}: feedback math does not render: {e}", o.id));
        }
    }
    issues
}

/// Runs every check and decides what happens to the question.
pub fn validate(q: &Question, policy: &LoopPolicy) -> ValidationReport {
    let eq = &policy.equivalence;
    let mut structural = q.structural_issues();
    let kc = key_check(q, eq);
    if let Some(k) = &kc {
        if !k.passed {
            let expected = k.expected.as_deref().unwrap_or("a different value");
            structural.push(format!("{KEY_FAILS_EXACT_CHECK}: ${}$ is {expected}", k.expression));
        }
    }
    let u = check_uniqueness(q, eq);
    for (a, b) in &u.equivalent_distractors {
        structural.push(format!("distractors {a} and {b} are equivalent"));
    }
    let fb = feedback_issues(q);
    let feedback_ok = fb.is_empty();

    let mut clauses = Vec::new();
    if let Uniqueness::DuplicateKey(_) = &u.uniqueness {
        clauses.push(UNIQUENESS_CLAUSE.to_string());
        if let Some(k) = q.key() {
            clauses.push(key_exclusion_clause(&k.body_latex));
        }
    }
    if !feedback_ok {
        clauses.push(MISSING_FEEDBACK_CLAUSE.to_string());
    }
    if !u.equivalent_distractors.is_empty() {
        clauses.push(DISTINCT_DISTRACTORS_CLAUSE.to_string());
    }
    if kc.as_ref().is_some_and(|k| !k.passed) {
        clauses.push(KEY_CORRECT_CLAUSE.to_string());
    }
    if clauses.is_empty() && !structural.is_empty() {
        clauses.push(STRUCTURE_CLAUSE.to_string());
    }

    let inconclusive: Vec<&String> = u
        .option_verdicts
        .iter()
        .filter(|(_, v)| matches!(v.verdict, Verdict::Inconclusive(_)))
        .map(|(id, _)| id)
        .collect();
    let disposition = if !clauses.is_empty() {
        Disposition::Regenerate(clauses)
    } else if u.uniqueness == Uniqueness::NoCorrect {
        Disposition::Regenerate(vec![STRUCTURE_CLAUSE.to_string()])
    } else if !inconclusive.is_empty() {
        let ids: Vec<&str> = inconclusive.iter().map(|s| s.as_str()).collect();
        Disposition::HumanReview(format!(
            "equivalence with the key is inconclusive for option(s) {} on the sampling domain",
            ids.join(", ")
        ))
    } else {
        Disposition::Accept
    };

    ValidationReport {
        question_id: q.id.clone(),
        structural_issues: structural,
        option_verdicts: u.option_verdicts,
        uniqueness: u.uniqueness,
        key_check: kc,
        feedback_ok,
        feedback_issues: fb,
        disposition,
    }
}

/// Adds the report's regeneration clauses to the spec; repeated calls with
/// the same report leave the spec unchanged.
pub fn adjust_prompt(spec: &PromptSpec, report: &ValidationReport) -> PromptSpec {
    let mut out = spec.clone();
    if let Disposition::Regenerate(clauses) = &report.disposition {
        for c in clauses {
            add_regeneration_clause(&mut out, c);
        }
    }
    out
}

pub(crate) fn add_regeneration_clause(spec: &mut PromptSpec, clause: &str) {
    if clause == UNIQUENESS_CLAUSE && spec.uniqueness_clause {
        return;
    }
    spec.add_clause(clause);
}
