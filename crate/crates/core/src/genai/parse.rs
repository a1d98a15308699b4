//! Response payload parsing into questions.

use std::collections::HashSet;

use chrono::Utc;
use serde_json::{Map, Value};

use crate::mathexpr::{parse_latex, SourceSpan};
use crate::qmodel::{
    is_option_id, math_segments, parse_math_segment, OptionBody, Provenance, Question,
    QuestionOption, Segment, MAX_OPTIONS, MIN_OPTIONS,
};

use super::prompt::PromptMetadata;
use super::{BackendError, BackendErrorKind as K};

fn err(kind: K, detail: impl Into<String>) -> BackendError {
    BackendError::new(kind, detail).not_retriable()
}

/// Parses a raw payload with default metadata.
pub fn parse_response(raw: &str) -> Result<Vec<Question>, BackendError> {
    parse_response_with(raw, &PromptMetadata::default())
}

/// Parses arbitrary bytes; invalid UTF-8 is a schema violation.
pub fn parse_response_bytes(raw: &[u8]) -> Result<Vec<Question>, BackendError> {
    match std::str::from_utf8(raw) {
        Ok(s) => parse_response(s),
        Err(e) => Err(err(K::SchemaViolation, format!("payload is not UTF-8: {e}"))),
    }
}

fn strip_fences(s: &str) -> &str {
    let t = s.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let body = rest.split_once('\n').map(|(_, b)| b).unwrap_or("");
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

/// Parses a payload, taking difficulty (and a missing topic) from the prompt.
pub fn parse_response_with(raw: &str, meta: &PromptMetadata) -> Result<Vec<Question>, BackendError> {
    let text = strip_fences(raw);
    if text.is_empty() {
        return Err(err(K::Truncated, "empty payload"));
    }
    let value: Value = serde_json::from_str(text).map_err(|e| {
        if e.is_eof() {
            err(K::Truncated, format!("payload ends early: {e}"))
        } else {
            err(K::SchemaViolation, format!("invalid JSON: {e}"))
        }
    })?;
    let Value::Object(top) = value else {
        return Err(err(K::SchemaViolation, "top level must be an object"));
    };
    let questions = match top.get("questions") {
        None => return Err(err(K::MissingField, "missing `questions`")),
        Some(Value::Array(a)) => a,
        Some(_) => return Err(err(K::SchemaViolation, "`questions` must be an array")),
    };
    if questions.is_empty() {
        return Err(err(K::SchemaViolation, "`questions` is empty"));
    }
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| parse_question(i, q, meta).map_err(|e| e.at_question(i)))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, ctx: &str) -> Result<&'a Value, BackendError> {
    obj.get(name)
        .ok_or_else(|| err(K::MissingField, format!("{ctx}: missing `{name}`")))
}

fn string<'a>(obj: &'a Map<String, Value>, name: &str, ctx: &str) -> Result<&'a str, BackendError> {
    field(obj, name, ctx)?
        .as_str()
        .ok_or_else(|| err(K::SchemaViolation, format!("{ctx}: `{name}` must be a string")))
}

struct RawOption<'a> {
    id: &'a str,
    latex: &'a str,
    feedback: &'a str,
    is_correct: bool,
}

fn parse_question(i: usize, q: &Value, meta: &PromptMetadata) -> Result<Question, BackendError> {
    let qctx = format!("question {i}");
    let Value::Object(obj) = q else {
        return Err(err(K::SchemaViolation, format!("{qctx}: must be an object")));
    };
    let stem = string(obj, "stem", &qctx)?;
    let options = match field(obj, "options", &qctx)? {
        Value::Array(a) => a,
        _ => return Err(err(K::SchemaViolation, format!("{qctx}: `options` must be an array"))),
    };
    let correct_id = string(obj, "correct_option_id", &qctx)?;
    let topic = string(obj, "topic", &qctx)?;
    if options.is_empty() {
        return Err(err(K::SchemaViolation, format!("{qctx}: `options` is empty")));
    }
    if !(MIN_OPTIONS..=MAX_OPTIONS).contains(&options.len()) {
        return Err(err(
            K::SchemaViolation,
            format!("{qctx}: {} options; expected {MIN_OPTIONS} to {MAX_OPTIONS}", options.len()),
        ));
    }

    let mut raw = Vec::with_capacity(options.len());
    let mut seen = HashSet::new();
    for (j, o) in options.iter().enumerate() {
        let Value::Object(o) = o else {
            return Err(err(K::SchemaViolation, format!("{qctx}, option {j}: must be an object")));
        };
        let label = o
            .get("id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{j}"));
        let octx = format!("{qctx}, option {label}");
        let id = string(o, "id", &octx)?;
        let latex = string(o, "latex", &octx)?;
        let feedback = string(o, "feedback", &octx).map_err(|e| e.at_option(id))?;
        let is_correct = field(o, "is_correct", &octx)?
            .as_bool()
            .ok_or_else(|| err(K::SchemaViolation, format!("{octx}: `is_correct` must be a boolean")))?;
        if !is_option_id(id) {
            return Err(err(K::SchemaViolation, format!("{octx}: id must be a single letter A-Z")));
        }
        if !seen.insert(id) {
            return Err(err(K::SchemaViolation, format!("{qctx}: duplicate option id `{id}`")));
        }
        raw.push(RawOption {
            id,
            latex,
            feedback,
            is_correct,
        });
    }

    let correct: Vec<&str> = raw.iter().filter(|o| o.is_correct).map(|o| o.id).collect();
    match correct.as_slice() {
        [] => return Err(err(K::AmbiguousCorrect, format!("{qctx}: no option is marked correct"))),
        [only] if *only != correct_id => {
            return Err(err(
                K::AmbiguousCorrect,
                format!("{qctx}: correct_option_id `{correct_id}` disagrees with option `{only}` marked correct"),
            ))
        }
        [_] => {}
        many => {
            return Err(err(
                K::AmbiguousCorrect,
                format!("{qctx}: options {} are all marked correct", many.join(", ")),
            ))
        }
    }

    let segments = math_segments(stem).map_err(|e| err(K::MathParseError, format!("{qctx}, stem: {e}")))?;
    for seg in segments {
        if let Segment::Math { text, offset } = seg {
            parse_math_segment(text).map_err(|e| {
                let span = SourceSpan::new(e.span.start + offset, e.span.end + offset);
                err(K::MathParseError, format!("{qctx}, stem: {} at {span}", e.message)).with_span(span)
            })?;
        }
    }

    let mut parsed = Vec::with_capacity(raw.len());
    for o in &raw {
        let expr = parse_latex(o.latex).map_err(|e| {
            err(K::MathParseError, format!("{qctx}, option {}: {e}", o.id))
                .at_option(o.id)
                .with_span(e.span)
        })?;
        parsed.push(QuestionOption {
            id: o.id.to_string(),
            body_latex: o.latex.to_string(),
            body_ast: OptionBody::Math(expr),
            feedback: o.feedback.to_string(),
            is_correct: o.is_correct,
        });
    }

    let mut question = Question {
        id: String::new(),
        stem: stem.to_string(),
        options: parsed,
        correct_option_id: correct_id.to_string(),
        topic: if topic.is_empty() { meta.topic.clone() } else { topic.to_string() },
        difficulty: meta.difficulty,
        distractor_strategies: Vec::new(),
        provenance: Provenance::Generated,
        created_at: Utc::now(),
    };
    question.id = question.content_id();
    Ok(question)
}
