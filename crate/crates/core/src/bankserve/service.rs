//! Operations shared by the CLI and the HTTP API.

use std::sync::Arc;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use uuid::Uuid;

use crate::genai::{
    parse_response, BackendError, BackendErrorKind, FaultBehavior, GenerationBackend, HttpBackend, MockBackend,
    PromptSpec, Retrying, Sleeper, ThreadSleeper,
};
use crate::qmodel::{math_segments, Difficulty, Question, Segment};
use crate::validator::{adjust_prompt, generate_validated_with, LoopError, ValidatedBatch, ValidationReport};

use super::audit::{AuditEvent, AuditKind, AuditSink, NoAudit};
use super::config::{BackendKind, Config};
use super::store::{BankRecord, GenerationInfo};

const BATCH_NAMESPACE: Uuid = Uuid::from_u128(0x6d63_7167_656e_4a51_8000_0000_0000_0002);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub spec: PromptSpec,
    #[serde(default)]
    pub backend: Option<BackendKind>,
    #[serde(default)]
    pub seed: u64,
    /// Mock behaviours per call; ignored by the HTTP backend.
    #[serde(default)]
    pub fault_script: Vec<FaultBehavior>,
    #[serde(default)]
    pub max_attempts: Option<u32>,
}

impl GenerateRequest {
    pub fn new(spec: PromptSpec, seed: u64) -> Self {
        GenerateRequest {
            spec,
            backend: None,
            seed,
            fault_script: Vec::new(),
            max_attempts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub batch_id: String,
    pub batch: ValidatedBatch,
    /// Candidate records for the accepted questions.
    pub records: Vec<BankRecord>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("{0}")]
    BackendNotConfigured(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Loop(e) => e.code(),
            EngineError::BackendNotConfigured(_) => "BackendNotConfigured",
        }
    }
}

/// Configuration plus the audit sink and sleeper every backend call uses.
pub struct Engine {
    pub config: Config,
    pub audit: Arc<dyn AuditSink>,
    pub sleeper: Arc<dyn Sleeper>,
}

impl Engine {
    pub fn new(config: Config, audit: Arc<dyn AuditSink>) -> Self {
        Engine {
            config,
            audit,
            sleeper: Arc::new(ThreadSleeper),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn detached(config: Config) -> Self {
        Engine::new(config, Arc::new(NoAudit))
    }

    /// A retrying backend that writes every call to the audit sink.
    pub fn backend(
        &self,
        kind: BackendKind,
        seed: u64,
        script: &[FaultBehavior],
    ) -> Result<Retrying<Box<dyn GenerationBackend>>, EngineError> {
        let inner: Box<dyn GenerationBackend> = match kind {
            BackendKind::Mock => Box::new(MockBackend::new(seed, script.to_vec())),
            BackendKind::Http => {
                let http = self.config.http().ok_or_else(|| {
                    EngineError::BackendNotConfigured("the http backend needs GENAI_ENDPOINT or genai.endpoint".into())
                })?;
                Box::new(HttpBackend::new(http))
            }
        };
        let mut policy = self.config.genai.retry.clone();
        policy.jitter_seed ^= seed;
        Ok(Retrying::new(inner, policy)
            .with_sleeper(self.sleeper.clone())
            .with_audit(self.audit.clone()))
    }

    pub fn generate(&self, req: &GenerateRequest) -> Result<GenerationOutcome, EngineError> {
        let kind = req.backend.unwrap_or(self.config.genai.backend);
        let backend = self.backend(kind, req.seed, &req.fault_script)?;
        let mut policy = self.config.loop_policy.clone();
        if let Some(n) = req.max_attempts {
            policy.max_attempts = n;
        }
        let batch = generate_validated_with(&req.spec, &backend, &policy, self.audit.as_ref())?;
        let batch_id = batch_id(&batch, req.seed);
        let records = batch
            .accepted
            .iter()
            .map(|a| {
                let mut r = BankRecord::candidate(a.question.clone(), a.report.clone());
                r.generation = Some(GenerationInfo {
                    batch_id: batch_id.clone(),
                    backend: backend.name().to_string(),
                    seed: req.seed,
                    attempt: a.attempt,
                    spec: req.spec.clone(),
                    prompt: a.prompt.clone(),
                });
                r
            })
            .collect();
        Ok(GenerationOutcome { batch_id, batch, records })
    }

    /// Generates one replacement for a question, steering the prompt with its
    /// report and any reviewer adjustments.
    pub fn regenerate(
        &self,
        base: &GenerateRequest,
        report: Option<&ValidationReport>,
        adjust: &Adjustment,
        round: u64,
    ) -> Result<GenerationOutcome, EngineError> {
        let mut spec = match report {
            Some(r) => adjust_prompt(&base.spec, r),
            None => base.spec.clone(),
        };
        if let Some(d) = adjust.difficulty {
            spec.difficulty = d;
        }
        for c in &adjust.extra_clauses {
            spec.add_clause(c);
        }
        spec.count = 1;
        let mut req = base.clone();
        req.spec = spec;
        req.seed = base.seed.wrapping_add(round.wrapping_mul(0x9E37_79B9));
        req.fault_script = adjust.fault_script.clone();
        self.generate(&req)
    }

    pub fn record_validation(&self, q: &Question, report: &ValidationReport) {
        let mut ev = AuditEvent::new(AuditKind::Validate);
        ev.question_id = Some(q.id.clone());
        ev.report = serde_json::to_value(report).ok();
        self.audit.record(&ev);
    }

    pub fn record_decision(&self, record: &BankRecord) {
        let mut ev = AuditEvent::new(AuditKind::Decision);
        ev.question_id = Some(record.id().to_string());
        ev.prompt = record.generation.as_ref().map(|g| g.prompt.clone());
        ev.detail = Some(match &record.reviewer_note {
            Some(n) => format!("{}: {n}", record.status),
            None => record.status.to_string(),
        });
        self.audit.record(&ev);
    }
}

/// Reviewer-supplied changes for a regeneration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    #[serde(default)]
    pub difficulty: Option<Difficulty>,
    #[serde(default)]
    pub extra_clauses: Vec<String>,
    #[serde(default)]
    pub fault_script: Vec<FaultBehavior>,
}

fn batch_id(batch: &ValidatedBatch, seed: u64) -> String {
    let mut key = format!("{seed}\u{1f}{}", Utc::now().timestamp_nanos_opt().unwrap_or_default());
    for a in &batch.accepted {
        key.push('\u{1f}');
        key.push_str(&a.question.id);
    }
    Uuid::new_v5(&BATCH_NAMESPACE, key.as_bytes()).to_string()
}

/// Reads questions from JSON text: a `Question`, an array of them, a bank
/// record, or a response payload with a `questions` array. Bank files
/// (JSON lines) are read line by line.
pub fn load_questions(text: &str) -> Result<Vec<Question>, BackendError> {
    let trimmed = text.trim();
    match serde_json::from_str::<Value>(trimmed) {
        Ok(v) => questions_from_value(v),
        Err(_) if trimmed.lines().count() > 1 => {
            let mut out = Vec::new();
            for (i, line) in trimmed.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: Value = serde_json::from_str(line).map_err(|e| {
                    BackendError::new(BackendErrorKind::SchemaViolation, format!("line {}: {e}", i + 1)).not_retriable()
                })?;
                out.extend(questions_from_value(v)?);
            }
            Ok(out)
        }
        Err(_) => parse_response(trimmed),
    }
}

fn questions_from_value(v: Value) -> Result<Vec<Question>, BackendError> {
    match v {
        Value::Array(items) => {
            let mut out = Vec::new();
            for item in items {
                out.extend(questions_from_value(item)?);
            }
            Ok(out)
        }
        Value::Object(ref o) if o.contains_key("questions") => parse_response(&v.to_string()),
        Value::Object(ref o) if o.contains_key("created_at") && o.contains_key("provenance") => {
            serde_json::from_value::<Question>(v.clone()).map(|q| vec![q]).map_err(|e| {
                BackendError::new(BackendErrorKind::SchemaViolation, format!("question: {e}")).not_retriable()
            })
        }
        other => parse_response(&serde_json::json!({ "questions": [other] }).to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StemPiece {
    pub kind: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedOption {
    pub id: String,
    pub latex: String,
    pub feedback: String,
    pub is_correct: bool,
}

/// What the review UI needs to typeset a question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderView {
    pub id: String,
    /// The stem with HTML special characters escaped.
    pub stem: String,
    pub stem_segments: Vec<StemPiece>,
    pub options: Vec<RenderedOption>,
}

pub fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_view(q: &Question) -> RenderView {
    let stem_segments = match math_segments(&q.stem) {
        Ok(segs) => segs
            .into_iter()
            .map(|s| match s {
                Segment::Text(t) => StemPiece {
                    kind: "text".into(),
                    value: t.to_string(),
                },
                Segment::Math { text, .. } => StemPiece {
                    kind: "math".into(),
                    value: text.to_string(),
                },
            })
            .collect(),
        Err(_) => vec![StemPiece {
            kind: "text".into(),
            value: q.stem.clone(),
        }],
    };
    RenderView {
        id: q.id.clone(),
        stem: html_escape(&q.stem),
        stem_segments,
        options: q
            .options
            .iter()
            .map(|o| RenderedOption {
                id: o.id.clone(),
                latex: o.body_latex.clone(),
                feedback: o.feedback.clone(),
                is_correct: o.is_correct,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bankserve::audit::MemoryAudit;
    use crate::genai::RecordingSleeper;

    fn engine() -> (Engine, Arc<MemoryAudit>) {
        let audit = Arc::new(MemoryAudit::new());
        let e = Engine::new(Config::default(), audit.clone()).with_sleeper(Arc::new(RecordingSleeper::new()));
        (e, audit)
    }

    #[test]
    fn generate_and_audit_counts() {
        let (e, audit) = engine();
        let mut req = GenerateRequest::new(PromptSpec::trig_identities(3), 42);
        req.fault_script = vec![FaultBehavior::RateLimit, FaultBehavior::RateLimit, FaultBehavior::Ok];
        let out = e.generate(&req).unwrap();
        assert_eq!(out.records.len(), 3);
        let ev = audit.events();
        let calls = ev.iter().filter(|e| matches!(e.kind, AuditKind::Generate | AuditKind::BackendError)).count();
        assert_eq!(calls, 3);
        assert_eq!(ev.len(), 3 + 3);
    }

    #[test]
    fn http_without_endpoint() {
        let (e, _) = engine();
        let mut req = GenerateRequest::new(PromptSpec::trig_identities(1), 1);
        req.backend = Some(BackendKind::Http);
        assert_eq!(e.generate(&req).unwrap_err().code(), "BackendNotConfigured");
    }

    #[test]
    fn regenerate_applies_adjustments() {
        let (e, _) = engine();
        let base = GenerateRequest::new(PromptSpec::trig_identities(3), 42);
        let adj = Adjustment {
            difficulty: Some(Difficulty::High),
            extra_clauses: vec!["Use angles beyond the first quadrant".into()],
            fault_script: vec![],
        };
        let out = e.regenerate(&base, None, &adj, 1).unwrap();
        assert_eq!(out.records.len(), 1);
        let prompt = &out.records[0].generation.as_ref().unwrap().prompt;
        assert!(prompt.clauses.iter().any(|c| c == crate::genai::HIGH_DIFFICULTY_CLAUSE));
        assert_eq!(prompt.count, 1);
    }

    #[test]
    fn question_loading_shapes() {
        let (e, _) = engine();
        let out = e.generate(&GenerateRequest::new(PromptSpec::trig_identities(2), 3)).unwrap();
        let qs: Vec<Question> = out.records.iter().map(|r| r.question.clone()).collect();
        let arr = serde_json::to_string(&qs).unwrap();
        assert_eq!(load_questions(&arr).unwrap(), qs);
        let lines: String = out.records.iter().map(|r| r.to_line() + "\n").collect();
        assert_eq!(load_questions(&lines).unwrap(), qs);
        let raw = r#"{"stem":"s","options":[{"id":"A","latex":"1","feedback":"f","is_correct":true},{"id":"B","latex":"2","feedback":"f","is_correct":false}],"correct_option_id":"A","topic":"t"}"#;
        assert_eq!(load_questions(raw).unwrap().len(), 1);
        assert!(load_questions("{\"stem\": 1}").is_err());
    }

    #[test]
    fn render_escapes() {
        let (e, _) = engine();
        let out = e.generate(&GenerateRequest::new(PromptSpec::trig_identities(1), 3)).unwrap();
        let mut q = out.records[0].question.clone();
        q.stem = format!("<b>{}</b>", q.stem);
        let v = render_view(&q);
        assert!(v.stem.starts_with("&lt;b&gt;"));
        assert!(v.stem_segments.iter().any(|s| s.kind == "math"));
        assert_eq!(v.options.len(), 4);
    }
}
