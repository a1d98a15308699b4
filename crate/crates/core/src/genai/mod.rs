//! Prompt construction, generation backends, and response parsing.

mod catalog;
mod http;
mod mock;
mod parse;
mod prompt;
mod retry;
mod schema;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mathexpr::SourceSpan;

pub use catalog::{catalog, CatalogItem};
pub use http::{HttpBackend, HttpConfig, DEFAULT_TIMEOUT_MS};
pub use mock::{FaultBehavior, MockBackend};
pub use parse::{parse_response, parse_response_bytes, parse_response_with};
pub use prompt::{
    build_prompt, build_prompt_for_attempt, difficulty_clause, PromptBundle, PromptMetadata, PromptSpec,
    FEEDBACK_CLAUSE, HIGH_DIFFICULTY_CLAUSE, LOW_DIFFICULTY_CLAUSE, MAX_COUNT, MEDIUM_DIFFICULTY_CLAUSE,
    SYSTEM_INSTRUCTIONS, UNIQUENESS_CLAUSE,
};
pub use retry::{RecordingSleeper, Retrying, RetryPolicy, Sleeper, ThreadSleeper};
pub use schema::RESPONSE_SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendErrorKind {
    SchemaViolation,
    MissingField,
    AmbiguousCorrect,
    MathParseError,
    Truncated,
    RateLimited,
    Timeout,
    ModelError,
    TransportError,
}

impl BackendErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            BackendErrorKind::SchemaViolation => "SchemaViolation",
            BackendErrorKind::MissingField => "MissingField",
            BackendErrorKind::AmbiguousCorrect => "AmbiguousCorrect",
            BackendErrorKind::MathParseError => "MathParseError",
            BackendErrorKind::Truncated => "Truncated",
            BackendErrorKind::RateLimited => "RateLimited",
            BackendErrorKind::Timeout => "Timeout",
            BackendErrorKind::ModelError => "ModelError",
            BackendErrorKind::TransportError => "TransportError",
        }
    }

    /// True for failures of the payload itself rather than of the call.
    pub fn is_payload_error(self) -> bool {
        matches!(
            self,
            BackendErrorKind::SchemaViolation
                | BackendErrorKind::MissingField
                | BackendErrorKind::AmbiguousCorrect
                | BackendErrorKind::MathParseError
                | BackendErrorKind::Truncated
        )
    }
}

impl fmt::Display for BackendErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendError {
    pub kind: BackendErrorKind,
    pub detail: String,
    pub retriable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

impl BackendError {
    /// Error with the kind's usual retry behaviour: rate limits, timeouts,
    /// transport failures and server-side model errors are retried.
    pub fn new(kind: BackendErrorKind, detail: impl Into<String>) -> Self {
        let retriable = matches!(
            kind,
            BackendErrorKind::RateLimited
                | BackendErrorKind::Timeout
                | BackendErrorKind::TransportError
                | BackendErrorKind::ModelError
        );
        BackendError {
            kind,
            detail: detail.into(),
            retriable,
            question_index: None,
            option_id: None,
            span: None,
        }
    }

    pub fn not_retriable(mut self) -> Self {
        self.retriable = false;
        self
    }

    pub fn at_question(mut self, i: usize) -> Self {
        self.question_index = Some(i);
        self
    }

    pub fn at_option(mut self, id: impl Into<String>) -> Self {
        self.option_id = Some(id.into());
        self
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }
}

impl fmt::Display for BackendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

impl std::error::Error for BackendError {}

/// A source of raw candidate payloads. Text in, text out.
pub trait GenerationBackend: Send + Sync {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError>;

    fn name(&self) -> &str;
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for Box<B> {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        (**self).generate(bundle)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for Arc<B> {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        (**self).generate(bundle)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for &B {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        (**self).generate(bundle)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}
