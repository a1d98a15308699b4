//! The bounded generate, validate, adjust loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bankserve::audit::{AuditEvent, AuditKind, AuditSink, NoAudit};
use crate::genai::{
    build_prompt_for_attempt, parse_response_with, BackendError, BackendErrorKind, GenerationBackend,
    PromptMetadata, PromptSpec,
};
use crate::qmodel::Question;

use super::{
    add_regeneration_clause, adjust_prompt, validate, Disposition, LoopPolicy, ValidationReport,
    MISSING_FEEDBACK_CLAUSE, STRUCTURE_CLAUSE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedQuestion {
    pub question: Question,
    pub report: ValidationReport,
    pub attempt: u32,
    pub prompt: PromptMetadata,
}

/// A question or whole response that did not make it into the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<Question>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<BackendError>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedBatch {
    pub accepted: Vec<AcceptedQuestion>,
    pub rejected: Vec<Rejection>,
    pub attempts_used: u32,
    /// Prompt metadata of every attempt, in order.
    pub prompts: Vec<PromptMetadata>,
    /// The spec after all adjustments.
    pub final_spec: PromptSpec,
}

impl ValidatedBatch {
    pub fn shortfall(&self, requested: u32) -> u32 {
        requested.saturating_sub(self.accepted.len() as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoopError {
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("invalid loop policy: {0}")]
    InvalidPolicy(String),
    #[error("backend exhausted after {attempts} attempt(s): {last}")]
    BackendExhausted { attempts: u32, last: BackendError },
}

impl LoopError {
    pub fn code(&self) -> &'static str {
        match self {
            LoopError::InvalidSpec(_) => "InvalidSpec",
            LoopError::InvalidPolicy(_) => "InvalidPolicy",
            LoopError::BackendExhausted { .. } => "BackendExhausted",
        }
    }
}

pub fn generate_validated(
    spec: &PromptSpec,
    backend: &dyn GenerationBackend,
    policy: &LoopPolicy,
) -> Result<ValidatedBatch, LoopError> {
    generate_validated_with(spec, backend, policy, &NoAudit)
}

fn parse_failure_clause(kind: BackendErrorKind) -> &'static str {
    match kind {
        BackendErrorKind::MissingField => MISSING_FEEDBACK_CLAUSE,
        _ => STRUCTURE_CLAUSE,
    }
}

/// Runs the loop, writing one `validate` event per validated question or
/// unparseable response. Backend calls are audited by the backend wrapper.
pub fn generate_validated_with(
    spec: &PromptSpec,
    backend: &dyn GenerationBackend,
    policy: &LoopPolicy,
    audit: &dyn AuditSink,
) -> Result<ValidatedBatch, LoopError> {
    spec.validate().map_err(LoopError::InvalidSpec)?;
    policy.validate().map_err(LoopError::InvalidPolicy)?;

    let mut current = spec.clone();
    let mut accepted: Vec<AcceptedQuestion> = Vec::new();
    let mut rejected = Vec::new();
    let mut prompts = Vec::new();
    let mut attempts = 0;
    let mut transport_failures = 0;
    let mut last_transport = None;

    while (accepted.len() as u32) < spec.count && attempts < policy.max_attempts {
        attempts += 1;
        let mut request = current.clone();
        request.count = spec.count - accepted.len() as u32;
        let bundle = build_prompt_for_attempt(&request, attempts);
        prompts.push(bundle.metadata.clone());

        let raw = match backend.generate(&bundle) {
            Ok(raw) => raw,
            Err(e) => {
                tracing::warn!(attempt = attempts, code = e.kind.code(), "generation failed");
                if !e.kind.is_payload_error() {
                    transport_failures += 1;
                    last_transport = Some(e.clone());
                }
                rejected.push(Rejection {
                    attempt: attempts,
                    question: None,
                    report: None,
                    reason: format!("backend error {}", e.kind.code()),
                    error: Some(e),
                });
                continue;
            }
        };

        let questions = match parse_response_with(&raw, &bundle.metadata) {
            Ok(qs) => qs,
            Err(e) => {
                let mut ev = AuditEvent::new(AuditKind::Validate);
                ev.error_code = Some(e.kind.code().to_string());
                ev.detail = Some(e.detail.clone());
                ev.prompt = Some(bundle.metadata.clone());
                ev.backend = Some(backend.name().to_string());
                audit.record(&ev);
                add_regeneration_clause(&mut current, parse_failure_clause(e.kind));
                rejected.push(Rejection {
                    attempt: attempts,
                    question: None,
                    report: None,
                    reason: format!("unusable response: {e}"),
                    error: Some(e),
                });
                continue;
            }
        };

        for mut q in questions.into_iter().take(request.count as usize) {
            q.distractor_strategies = spec.distractor_strategies.clone();
            let report = validate(&q, policy);
            let mut ev = AuditEvent::new(AuditKind::Validate);
            ev.prompt = Some(bundle.metadata.clone());
            ev.backend = Some(backend.name().to_string());
            ev.question_id = Some(q.id.clone());
            ev.report = serde_json::to_value(&report).ok();
            audit.record(&ev);

            match &report.disposition {
                Disposition::Accept if accepted.iter().any(|a| a.question.id == q.id) => {
                    rejected.push(Rejection {
                        attempt: attempts,
                        question: Some(q),
                        report: Some(report),
                        error: None,
                        reason: "duplicate of an accepted question".into(),
                    });
                }
                Disposition::Accept => accepted.push(AcceptedQuestion {
                    question: q,
                    report,
                    attempt: attempts,
                    prompt: bundle.metadata.clone(),
                }),
                Disposition::Regenerate(clauses) => {
                    current = adjust_prompt(&current, &report);
                    let reason = format!("regenerate: {}", clauses.join("; "));
                    rejected.push(Rejection {
                        attempt: attempts,
                        question: Some(q),
                        report: Some(report),
                        error: None,
                        reason,
                    });
                }
                Disposition::HumanReview(why) => {
                    let reason = format!("human review: {why}");
                    rejected.push(Rejection {
                        attempt: attempts,
                        question: Some(q),
                        report: Some(report),
                        error: None,
                        reason,
                    });
                }
            }
        }
    }

    if accepted.is_empty() && attempts > 0 && transport_failures == attempts {
        return Err(LoopError::BackendExhausted {
            attempts,
            last: last_transport.expect("at least one transport failure"),
        });
    }
    Ok(ValidatedBatch {
        accepted,
        rejected,
        attempts_used: attempts,
        prompts,
        final_spec: current,
    })
}
