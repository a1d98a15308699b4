//! Parameterized templates: `${name}` placeholders bound to seeded draws.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::DateTime;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalcore::rng::seeded;
use crate::evalcore::{eval_exact, eval_numeric, simplify};
use crate::mathexpr::{
    free_variables, is_identifier, lex_infix, parse_infix, parse_latex, substitute, to_latex, BinaryOp,
    Expr, InfixParser, InfixTok, ParseError, UnaryOp,
};

use super::text::{math_segments, split_relations, Segment};
use super::{option_letter, Difficulty, DistractorStrategy, Provenance, Question, QuestionOption};

/// Rejection-sampling budget for [`draw_variables`].
pub const MAX_DRAW_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VariableKind {
    Int { min: i64, max: i64 },
    /// `p/q` with `1 ≤ q ≤ denominator_max` and `min ≤ p/q ≤ max`.
    Rational { min: i64, max: i64, denominator_max: u32 },
    /// Infix expressions, one picked uniformly.
    Choice { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
    /// Comparisons joined by `and`, e.g. `a != b and a > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionTemplate {
    /// LaTeX with placeholders, or plain text when `text` is set.
    pub body: String,
    pub feedback: String,
    pub is_correct: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub text: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub id: String,
    pub stem_template: String,
    pub option_templates: Vec<OptionTemplate>,
    #[serde(default)]
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub topic: String,
    #[serde(default)]
    pub difficulty: Difficulty,
    #[serde(default)]
    pub distractor_strategies: Vec<DistractorStrategy>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("invalid template: {0}")]
    Invalid(String),
    #[error("constraints unsatisfiable after {0} attempts")]
    ConstraintUnsatisfiable(usize),
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
}

fn parse_err(context: impl Into<String>) -> impl FnOnce(ParseError) -> TemplateError {
    let context = context.into();
    move |source| TemplateError::Parse { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            Cmp::Eq => ord == Ordering::Equal,
            Cmp::Ne => ord != Ordering::Equal,
            Cmp::Lt => ord == Ordering::Less,
            Cmp::Le => ord != Ordering::Greater,
            Cmp::Gt => ord == Ordering::Greater,
            Cmp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone)]
struct Condition {
    comparisons: Vec<(Expr, Cmp, Expr)>,
}

fn parse_condition(src: &str) -> Result<Condition, ParseError> {
    let tokens = lex_infix(src)?;
    let mut p = InfixParser::new(&tokens, src.len());
    let mut comparisons = Vec::new();
    loop {
        let mut lhs = p.expr()?;
        let mut any = false;
        while let Some(InfixTok::Cmp(op)) = p.peek().cloned() {
            let here = p.here();
            p.pos += 1;
            let cmp = match op.as_str() {
                "=" | "==" => Cmp::Eq,
                "!=" => Cmp::Ne,
                "<" => Cmp::Lt,
                "<=" => Cmp::Le,
                ">" => Cmp::Gt,
                ">=" => Cmp::Ge,
                _ => return Err(ParseError::new(here, format!("unknown comparison `{op}`"))),
            };
            let rhs = p.expr()?;
            comparisons.push((lhs, cmp, rhs.clone()));
            lhs = rhs;
            any = true;
        }
        if !any {
            return Err(ParseError::new(p.here(), "expected a comparison"));
        }
        match p.peek() {
            None => break,
            Some(InfixTok::Ident(w)) if w == "and" => p.pos += 1,
            Some(_) => return Err(ParseError::new(p.here(), "expected `and` or end of condition")),
        }
    }
    Ok(Condition { comparisons })
}

/// Orders two closed values, exactly when both are representable.
fn compare(a: &Expr, b: &Expr) -> Option<Ordering> {
    if let (Ok(x), Ok(y)) = (eval_exact(a), eval_exact(b)) {
        if let Some(o) = x.partial_cmp(&y) {
            return Some(o);
        }
    }
    let env = HashMap::new();
    let x = eval_numeric(a, &env).ok()?;
    let y = eval_numeric(b, &env).ok()?;
    if (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0) {
        Some(Ordering::Equal)
    } else {
        x.partial_cmp(&y)
    }
}

impl Condition {
    fn holds(&self, bindings: &HashMap<String, Expr>) -> bool {
        self.comparisons.iter().all(|(l, cmp, r)| {
            let (Ok(l), Ok(r)) = (substitute(l, bindings), substitute(r, bindings)) else {
                return false;
            };
            compare(&l, &r).is_some_and(|o| cmp.holds(o))
        })
    }

    fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (l, _, r) in &self.comparisons {
            out.extend(free_variables(l));
            out.extend(free_variables(r));
        }
        out
    }
}

struct Prepared {
    choices: Vec<Expr>,
    exclude: Vec<Expr>,
    condition: Option<Condition>,
}

fn prepare(specs: &[VariableSpec]) -> Result<Vec<Prepared>, TemplateError> {
    let declared: BTreeSet<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    if declared.len() != specs.len() {
        return Err(TemplateError::Invalid("duplicate variable name".into()));
    }
    let mut out = Vec::new();
    for s in specs {
        let invalid = |m: &str| TemplateError::Invalid(format!("variable `{}`: {m}", s.name));
        if !is_identifier(&s.name) || s.name == "e" || s.name == "pi" {
            return Err(invalid("not a usable identifier"));
        }
        let mut choices = Vec::new();
        match &s.kind {
            VariableKind::Int { min, max } | VariableKind::Rational { min, max, .. } if min > max => {
                return Err(invalid("min exceeds max"));
            }
            VariableKind::Rational { denominator_max: 0, .. } => {
                return Err(invalid("denominator_max must be at least 1"));
            }
            VariableKind::Choice { choices: c } => {
                if c.is_empty() {
                    return Err(invalid("choices must be nonempty"));
                }
                for src in c {
                    let e = parse_infix(src).map_err(parse_err(format!("choice of `{}`", s.name)))?;
                    if !free_variables(&e).is_empty() {
                        return Err(invalid("choices must be constant expressions"));
                    }
                    choices.push(e);
                }
            }
            _ => {}
        }
        let exclude = s
            .exclude
            .iter()
            .map(|src| parse_infix(src).map_err(parse_err(format!("exclude of `{}`", s.name))))
            .collect::<Result<Vec<_>, _>>()?;
        let condition = match &s.condition {
            None => None,
            Some(src) => {
                let c = parse_condition(src).map_err(parse_err(format!("condition of `{}`", s.name)))?;
                if let Some(unknown) = c.variables().into_iter().find(|v| !declared.contains(v.as_str())) {
                    return Err(invalid(&format!("condition references undeclared `{unknown}`")));
                }
                Some(c)
            }
        };
        out.push(Prepared {
            choices,
            exclude,
            condition,
        });
    }
    Ok(out)
}

fn draw_one<R: Rng>(spec: &VariableSpec, prepared: &Prepared, rng: &mut R) -> Expr {
    match &spec.kind {
        VariableKind::Int { min, max } => Expr::from_rational(BigRational::from_integer(BigInt::from(
            rng.gen_range(*min..=*max),
        ))),
        VariableKind::Rational {
            min,
            max,
            denominator_max,
        } => {
            let q = rng.gen_range(1..=*denominator_max as i64);
            let p = rng.gen_range(min * q..=max * q);
            Expr::from_rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
        }
        VariableKind::Choice { .. } => prepared.choices[rng.gen_range(0..prepared.choices.len())].clone(),
    }
}

/// Draws a value for every variable, rejecting draws that hit an excluded
/// value or violate a condition. Deterministic in `seed`.
pub fn draw_variables(specs: &[VariableSpec], seed: u64) -> Result<BTreeMap<String, Expr>, TemplateError> {
    let prepared = prepare(specs)?;
    let mut rng = seeded(seed);
    'attempt: for _ in 0..MAX_DRAW_ATTEMPTS {
        let mut bindings = HashMap::new();
        for (spec, prep) in specs.iter().zip(&prepared) {
            let v = draw_one(spec, prep, &mut rng);
            if prep
                .exclude
                .iter()
                .any(|x| *x == v || compare(x, &v) == Some(Ordering::Equal))
            {
                continue 'attempt;
            }
            bindings.insert(spec.name.clone(), v);
        }
        if prepared
            .iter()
            .filter_map(|p| p.condition.as_ref())
            .all(|c| c.holds(&bindings))
        {
            return Ok(bindings.into_iter().collect());
        }
    }
    Err(TemplateError::ConstraintUnsatisfiable(MAX_DRAW_ATTEMPTS))
}

fn placeholders(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(i) = rest.find("${") {
        let after = &rest[i + 2..];
        match after.find('}') {
            Some(j) => {
                out.push(&after[..j]);
                rest = &after[j + 1..];
            }
            None => break,
        }
    }
    out
}

fn replace_placeholders(s: &str, f: impl Fn(&str) -> String) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(i) = rest.find("${") {
        let after = &rest[i + 2..];
        let Some(j) = after.find('}') else { break };
        out.push_str(&rest[..i]);
        out.push_str(&f(&after[..j]));
        rest = &after[j + 1..];
    }
    out.push_str(rest);
    out
}

/// Identity cleanup that keeps the author's arithmetic visible.
fn tidy(e: &Expr) -> Expr {
    let t = match e {
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(tidy(a))),
        Expr::Binary(op, l, r) => Expr::binary(*op, tidy(l), tidy(r)),
        Expr::Function(f, a) => Expr::func(*f, tidy(a)),
        Expr::Derivative(v, b) => Expr::derivative(v, tidy(b)),
        _ => return e.clone(),
    };
    match t {
        Expr::Binary(BinaryOp::Add, l, r) => match *r {
            Expr::Unary(UnaryOp::Neg, inner) => Expr::sub(*l, *inner),
            r if r.is_zero() => *l,
            r => Expr::add(*l, r),
        },
        Expr::Binary(BinaryOp::Sub, l, r) => match *r {
            Expr::Unary(UnaryOp::Neg, inner) => Expr::add(*l, *inner),
            r => Expr::sub(*l, r),
        },
        Expr::Binary(BinaryOp::Mul, l, r) if l.is_one() => *r,
        Expr::Binary(BinaryOp::Mul, l, r) if r.is_one() => *l,
        Expr::Binary(BinaryOp::Pow, l, r) if r.is_one() => *l,
        Expr::Unary(UnaryOp::Neg, a) => match *a {
            Expr::Unary(UnaryOp::Neg, inner) => *inner,
            a => Expr::neg(a),
        },
        other => other,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum MathMode {
    /// Stems and feedback: substitute and tidy, never evaluate.
    Display,
    /// Option bodies: fold to a canonical value.
    Answer,
}

fn render_math(src: &str, bindings: &HashMap<String, Expr>, mode: MathMode, context: &str) -> Result<String, TemplateError> {
    if placeholders(src).is_empty() && mode == MathMode::Display {
        return Ok(src.to_string());
    }
    let (parts, seps) = split_relations(src);
    let mut out = String::new();
    for (i, (_, piece)) in parts.iter().enumerate() {
        let latex = replace_placeholders(piece, |name| format!("\\mathit{{{name}}}"));
        let e = parse_latex(&latex).map_err(parse_err(context))?;
        let e = substitute(&e, bindings).map_err(|err| TemplateError::Invalid(format!("{context}: {err}")))?;
        let e = match mode {
            MathMode::Display => tidy(&e),
            MathMode::Answer => simplify(&e),
        };
        out.push_str(&to_latex(&e));
        if let Some(sep) = seps.get(i) {
            if *sep == "," {
                out.push_str(", ");
            } else {
                out.push(' ');
                out.push_str(sep);
                out.push(' ');
            }
        }
    }
    Ok(out)
}

fn render_text(src: &str, bindings: &HashMap<String, Expr>, context: &str) -> Result<String, TemplateError> {
    let segments = math_segments(src).map_err(|e| TemplateError::Invalid(format!("{context}: {e}")))?;
    let mut out = String::new();
    for seg in segments {
        match seg {
            Segment::Text(t) => out.push_str(&replace_placeholders(t, |name| {
                bindings.get(name).map(|v| v.to_string()).unwrap_or_default()
            })),
            Segment::Math { text, .. } => {
                out.push('$');
                out.push_str(&render_math(text, bindings, MathMode::Display, context)?);
                out.push('$');
            }
        }
    }
    Ok(out)
}

impl QuestionTemplate {
    pub fn validate(&self) -> Result<(), TemplateError> {
        prepare(&self.variables)?;
        let declared: BTreeSet<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        let n = self.option_templates.len();
        if !(super::MIN_OPTIONS..=super::MAX_OPTIONS).contains(&n) {
            return Err(TemplateError::Invalid(format!("{n} option templates; expected 2 to 8")));
        }
        if self.option_templates.iter().filter(|o| o.is_correct).count() != 1 {
            return Err(TemplateError::Invalid("exactly one option template must be correct".into()));
        }
        let texts = std::iter::once(self.stem_template.as_str()).chain(
            self.option_templates
                .iter()
                .flat_map(|o| [o.body.as_str(), o.feedback.as_str()]),
        );
        for t in texts {
            if let Some(p) = placeholders(t).into_iter().find(|p| !declared.contains(p)) {
                return Err(TemplateError::Invalid(format!("placeholder `${{{p}}}` is not a declared variable")));
            }
        }
        Ok(())
    }
}

/// Draws the template's variables with `seed` and renders a question.
///
/// Placeholders inside `$...$` and option bodies are substituted as
/// expressions; elsewhere they are replaced by the value's infix text.
/// Option bodies are simplified to canonical values.
pub fn instantiate_template(t: &QuestionTemplate, seed: u64) -> Result<Question, TemplateError> {
    t.validate()?;
    let bindings: HashMap<String, Expr> = draw_variables(&t.variables, seed)?.into_iter().collect();
    let stem = render_text(&t.stem_template, &bindings, "stem")?;
    let mut options = Vec::with_capacity(t.option_templates.len());
    let mut correct = String::new();
    for (i, ot) in t.option_templates.iter().enumerate() {
        let id = option_letter(i);
        let ctx = format!("option {id}");
        let feedback = render_text(&ot.feedback, &bindings, &ctx)?;
        let opt = if ot.text {
            let body = render_text(&ot.body, &bindings, &ctx)?;
            QuestionOption::text(&id, &body, &feedback, ot.is_correct)
        } else {
            let latex = render_math(&ot.body, &bindings, MathMode::Answer, &ctx)?;
            QuestionOption::math(&id, &latex, &feedback, ot.is_correct).map_err(parse_err(ctx))?
        };
        if ot.is_correct {
            correct = id;
        }
        options.push(opt);
    }
    let mut q = Question {
        id: String::new(),
        stem,
        options,
        correct_option_id: correct,
        topic: t.topic.clone(),
        difficulty: t.difficulty,
        distractor_strategies: t.distractor_strategies.clone(),
        provenance: Provenance::Authored,
        created_at: DateTime::UNIX_EPOCH,
    };
    q.id = q.content_id();
    Ok(q)
}
