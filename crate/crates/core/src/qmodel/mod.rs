//! Multiple-choice questions and parameterized templates.

mod template;
mod text;

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::mathexpr::{parse_latex, parse_semantic_markup, to_semantic_markup, Expr};

pub use template::{
    draw_variables, instantiate_template, OptionTemplate, QuestionTemplate, TemplateError,
    VariableKind, VariableSpec, MAX_DRAW_ATTEMPTS,
};
pub use text::{math_segments, parse_math_segment, Segment};

pub const MIN_OPTIONS: usize = 2;
pub const MAX_OPTIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Low,
    #[default]
    Medium,
    High,
}

impl Difficulty {
    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Low => "low",
            Difficulty::Medium => "medium",
            Difficulty::High => "high",
        }
    }
}

impl std::str::FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(Difficulty::Low),
            "medium" => Ok(Difficulty::Medium),
            "high" => Ok(Difficulty::High),
            other => Err(format!("unknown difficulty `{other}` (expected low, medium or high)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistractorStrategy {
    SignInversion,
    IncorrectIdentity,
    EvaluationMethodError,
    StepwiseError,
}

impl DistractorStrategy {
    pub const ALL: [DistractorStrategy; 4] = [
        DistractorStrategy::SignInversion,
        DistractorStrategy::IncorrectIdentity,
        DistractorStrategy::EvaluationMethodError,
        DistractorStrategy::StepwiseError,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DistractorStrategy::SignInversion => "sign-inversion",
            DistractorStrategy::IncorrectIdentity => "incorrect-identity",
            DistractorStrategy::EvaluationMethodError => "evaluation-method-error",
            DistractorStrategy::StepwiseError => "stepwise-error",
        }
    }

    /// Phrase used when listing strategies in a prompt.
    pub fn phrase(self) -> &'static str {
        match self {
            DistractorStrategy::SignInversion => "sign inversion",
            DistractorStrategy::IncorrectIdentity => "incorrect identity use",
            DistractorStrategy::EvaluationMethodError => "evaluation method errors",
            DistractorStrategy::StepwiseError => "stepwise errors",
        }
    }
}

impl std::str::FromStr for DistractorStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| format!("unknown distractor strategy `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Generated,
    Authored,
}

/// Parsed option body: an expression, or plain text for non-mathematical options.
#[derive(Debug, Clone, PartialEq)]
pub enum OptionBody {
    Math(Expr),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OptionBodyRepr {
    Math { markup: String },
    Text { text: String },
}

impl Serialize for OptionBody {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OptionBody::Math(e) => OptionBodyRepr::Math {
                markup: to_semantic_markup(e),
            },
            OptionBody::Text(t) => OptionBodyRepr::Text { text: t.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OptionBody {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        Ok(match OptionBodyRepr::deserialize(d)? {
            OptionBodyRepr::Math { markup } => {
                OptionBody::Math(parse_semantic_markup(&markup).map_err(D::Error::custom)?)
            }
            OptionBodyRepr::Text { text } => OptionBody::Text(text),
        })
    }
}

impl OptionBody {
    pub fn as_math(&self) -> Option<&Expr> {
        match self {
            OptionBody::Math(e) => Some(e),
            OptionBody::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionOption {
    pub id: String,
    pub body_latex: String,
    pub body_ast: OptionBody,
    pub feedback: String,
    pub is_correct: bool,
}

impl QuestionOption {
    /// A mathematical option whose tree is parsed from `latex`.
    pub fn math(id: &str, latex: &str, feedback: &str, is_correct: bool) -> Result<Self, crate::mathexpr::ParseError> {
        Ok(QuestionOption {
            id: id.to_string(),
            body_latex: latex.to_string(),
            body_ast: OptionBody::Math(parse_latex(latex)?),
            feedback: feedback.to_string(),
            is_correct,
        })
    }

    pub fn text(id: &str, text: &str, feedback: &str, is_correct: bool) -> Self {
        QuestionOption {
            id: id.to_string(),
            body_latex: text.to_string(),
            body_ast: OptionBody::Text(text.to_string()),
            feedback: feedback.to_string(),
            is_correct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub stem: String,
    pub options: Vec<QuestionOption>,
    pub correct_option_id: String,
    pub topic: String,
    pub difficulty: Difficulty,
    pub distractor_strategies: Vec<DistractorStrategy>,
    pub provenance: Provenance,
    pub created_at: DateTime<Utc>,
}

const ID_NAMESPACE: Uuid = Uuid::from_u128(0x6d63_7167_656e_4a51_8000_0000_0000_0001);

impl Question {
    /// Name-based UUID over the stem, options, key and topic.
    pub fn content_id(&self) -> String {
        let mut content = String::new();
        for part in [&self.stem, &self.correct_option_id, &self.topic] {
            content.push_str(part);
            content.push('\u{1f}');
        }
        for o in &self.options {
            for part in [&o.id, &o.body_latex, &o.feedback] {
                content.push_str(part);
                content.push('\u{1f}');
            }
            content.push(if o.is_correct { '1' } else { '0' });
            content.push('\u{1e}');
        }
        Uuid::new_v5(&ID_NAMESPACE, content.as_bytes()).to_string()
    }

    pub fn option(&self, id: &str) -> Option<&QuestionOption> {
        self.options.iter().find(|o| o.id == id)
    }

    pub fn key(&self) -> Option<&QuestionOption> {
        let mut correct = self.options.iter().filter(|o| o.is_correct);
        match (correct.next(), correct.next()) {
            (Some(k), None) if k.id == self.correct_option_id => Some(k),
            _ => None,
        }
    }

    /// Structural problems; empty when every invariant holds. Feedback
    /// presence is checked separately.
    pub fn structural_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let n = self.options.len();
        if !(MIN_OPTIONS..=MAX_OPTIONS).contains(&n) {
            issues.push(format!("question has {n} options; expected {MIN_OPTIONS} to {MAX_OPTIONS}"));
        }
        let mut seen = HashSet::new();
        for o in &self.options {
            if !is_option_id(&o.id) {
                issues.push(format!("option id `{}` is not a single letter A-Z", o.id));
            }
            if !seen.insert(o.id.as_str()) {
                issues.push(format!("duplicate option id `{}`", o.id));
            }
            if let OptionBody::Math(e) = &o.body_ast {
                match parse_latex(&o.body_latex) {
                    Ok(parsed) if parsed == *e => {}
                    Ok(_) => issues.push(format!("option {}: body_ast does not match body_latex", o.id)),
                    Err(err) => issues.push(format!("option {}: body_latex does not parse: {err}", o.id)),
                }
            }
        }
        let correct: Vec<&str> = self
            .options
            .iter()
            .filter(|o| o.is_correct)
            .map(|o| o.id.as_str())
            .collect();
        match correct.as_slice() {
            [] => issues.push("no option is marked correct".into()),
            [only] if *only != self.correct_option_id => issues.push(format!(
                "correct_option_id `{}` does not match the option marked correct (`{only}`)",
                self.correct_option_id
            )),
            [_] => {}
            many => issues.push(format!("several options marked correct: {}", many.join(", "))),
        }
        match math_segments(&self.stem) {
            Ok(segments) => {
                for seg in segments {
                    if let Segment::Math { text, offset } = seg {
                        if let Err(err) = parse_math_segment(text) {
                            issues.push(format!("stem math at byte {offset} does not parse: {err}"));
                        }
                    }
                }
            }
            Err(e) => issues.push(format!("stem: {e}")),
        }
        issues
    }

    /// Options with empty or whitespace-only feedback.
    pub fn missing_feedback(&self) -> Vec<String> {
        self.options
            .iter()
            .filter(|o| o.feedback.trim().is_empty())
            .map(|o| o.id.clone())
            .collect()
    }
}

pub fn is_option_id(id: &str) -> bool {
    id.len() == 1 && id.as_bytes()[0].is_ascii_uppercase()
}

/// Option id for the `i`-th option (`A`, `B`, ...).
pub fn option_letter(i: usize) -> String {
    ((b'A' + (i % 26) as u8) as char).to_string()
}
