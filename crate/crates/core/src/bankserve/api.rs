//! JSON HTTP API over the bank and the generation pipeline.

use std::collections::HashMap;
use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::genai::{BackendError, BackendErrorKind};
use crate::qmodel::Question;
use crate::validator::{validate, LoopError, ValidationReport};

use super::service::{load_questions, render_view, Adjustment, Engine, EngineError, GenerateRequest, GenerationOutcome};
use super::store::{Bank, BankRecord, Decision, RecordStatus, StoreError};

/// Error body: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ApiErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ApiErrorBody {
                code: code.to_string(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn status_for(kind: BackendErrorKind) -> StatusCode {
    match kind {
        BackendErrorKind::RateLimited => StatusCode::TOO_MANY_REQUESTS,
        BackendErrorKind::Timeout | BackendErrorKind::ModelError | BackendErrorKind::TransportError => {
            StatusCode::BAD_GATEWAY
        }
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<BackendError> for ApiError {
    fn from(e: BackendError) -> Self {
        ApiError::new(status_for(e.kind), e.kind.code(), e.detail.clone())
            .with_detail(serde_json::to_value(&e).unwrap_or(Value::Null))
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::Loop(LoopError::BackendExhausted { attempts, last }) => {
                ApiError::new(StatusCode::BAD_GATEWAY, "BackendExhausted", message)
                    .with_detail(json!({ "attempts": attempts, "last_error": last }))
            }
            EngineError::Loop(l) => ApiError::new(StatusCode::BAD_REQUEST, l.code(), message),
            EngineError::BackendNotConfigured(_) => ApiError::new(StatusCode::BAD_REQUEST, "BackendNotConfigured", message),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::IllegalTransition { .. } | StoreError::NotAccepted(_) => StatusCode::CONFLICT,
            StoreError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// A generation request kept so its questions can be regenerated.
#[derive(Debug, Clone)]
struct BatchContext {
    request: GenerateRequest,
    questions: HashMap<String, (Question, Option<ValidationReport>)>,
    rounds: u64,
}

pub struct AppState {
    engine: Arc<Engine>,
    bank: Mutex<Bank>,
    batches: Mutex<HashMap<String, BatchContext>>,
}

impl AppState {
    pub fn new(engine: Engine, bank: Bank) -> Arc<Self> {
        Arc::new(AppState {
            engine: Arc::new(engine),
            bank: Mutex::new(bank),
            batches: Mutex::new(HashMap::new()),
        })
    }

    /// The single writer every bank mutation goes through.
    fn bank(&self) -> MutexGuard<'_, Bank> {
        self.bank.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn batches(&self) -> MutexGuard<'_, HashMap<String, BatchContext>> {
        self.batches.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/generate", post(generate))
        .route("/api/validate", post(validate_question))
        .route("/api/regenerate", post(regenerate))
        .route("/api/bank", get(list_bank))
        .route("/api/bank/{id}/decision", post(decide))
        .route("/api/questions/{id}/render", get(render))
        .route("/ui", get(ui_index))
        .route("/ui/", get(ui_index))
        .route("/ui/{*path}", get(ui_file))
        .fallback(not_found)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

async fn require_token(State(state): State<Arc<AppState>>, headers: HeaderMap, req: Request, next: Next) -> Response {
    if let Some(token) = &state.engine.config.api_token {
        if req.method() != Method::GET {
            let expected = format!("Bearer {token}");
            let ok = headers
                .get(header::AUTHORIZATION)
                .and_then(|v| v.to_str().ok())
                .is_some_and(|v| v == expected);
            if !ok {
                return ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong bearer token")
                    .into_response();
            }
        }
    }
    next.run(req).await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let records = state.bank().len();
    Json(json!({
        "status": "ok",
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "records": records,
    }))
}

fn bad_json(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", format!("invalid request body: {e}"))
}

async fn run_blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, EngineError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn remember(state: &AppState, request: GenerateRequest, out: &GenerationOutcome) {
    let mut questions = HashMap::new();
    for a in &out.batch.accepted {
        questions.insert(a.question.id.clone(), (a.question.clone(), Some(a.report.clone())));
    }
    for r in &out.batch.rejected {
        if let Some(q) = &r.question {
            questions.insert(q.id.clone(), (q.clone(), r.report.clone()));
        }
    }
    state.batches().insert(
        out.batch_id.clone(),
        BatchContext {
            request,
            questions,
            rounds: 0,
        },
    );
}

fn persist(state: &AppState, records: &[BankRecord]) -> Result<(), ApiError> {
    let mut bank = state.bank();
    for r in records {
        bank.put(r.clone())?;
    }
    Ok(())
}

async fn generate(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> ApiResult<GenerationOutcome> {
    let req: GenerateRequest = serde_json::from_slice(&body).map_err(bad_json)?;
    req.spec
        .validate()
        .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, "InvalidSpec", m))?;
    let engine = state.engine.clone();
    let r = req.clone();
    let out = run_blocking(move || engine.generate(&r)).await?;
    persist(&state, &out.records)?;
    remember(&state, req, &out);
    Ok(Json(out))
}

async fn validate_question(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> ApiResult<ValidationReport> {
    let text = std::str::from_utf8(&body).map_err(bad_json)?;
    let mut qs = load_questions(text)?;
    if qs.len() != 1 {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "BadRequest",
            format!("expected one question, got {}", qs.len()),
        ));
    }
    let q = qs.remove(0);
    let report = validate(&q, &state.engine.config.loop_policy);
    state.engine.record_validation(&q, &report);
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
struct RegenerateBody {
    batch_id: String,
    question_id: String,
    #[serde(flatten)]
    adjust: Adjustment,
}

#[derive(Debug, Serialize)]
struct RegenerateResponse {
    batch_id: String,
    replaced: String,
    record: Option<BankRecord>,
    outcome: GenerationOutcome,
}

async fn regenerate(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> ApiResult<RegenerateResponse> {
    let body: RegenerateBody = serde_json::from_slice(&body).map_err(bad_json)?;
    let stored = state.bank().get(&body.question_id).cloned();
    if let Some(r) = &stored {
        if r.status == RecordStatus::Approved {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "IllegalTransition",
                format!("record `{}` is approved and cannot be regenerated", body.question_id),
            ));
        }
    }
    let (request, report, round) = {
        let mut batches = state.batches();
        match batches.get_mut(&body.batch_id) {
            Some(ctx) => {
                let report = match ctx.questions.get(&body.question_id) {
                    Some((_, rep)) => rep.clone(),
                    None => match &stored {
                        Some(r) => Some(r.validation_report.clone()),
                        None => return Err(not_in_batch(&body)),
                    },
                };
                ctx.rounds += 1;
                (ctx.request.clone(), report, ctx.rounds)
            }
            None => {
                let gen = stored
                    .as_ref()
                    .and_then(|r| r.generation.clone())
                    .filter(|g| g.batch_id == body.batch_id)
                    .ok_or_else(|| not_in_batch(&body))?;
                let mut req = GenerateRequest::new(gen.spec, gen.seed);
                req.backend = gen.backend.parse().ok();
                let report = stored.as_ref().map(|r| r.validation_report.clone());
                let round = state.bank().len() as u64 + 1;
                (req, report, round)
            }
        }
    };
    let engine = state.engine.clone();
    let adjust = body.adjust.clone();
    let outcome = run_blocking(move || engine.regenerate(&request, report.as_ref(), &adjust, round)).await?;
    persist(&state, &outcome.records)?;
    if let Some(ctx) = state.batches().get_mut(&body.batch_id) {
        for a in &outcome.batch.accepted {
            ctx.questions
                .insert(a.question.id.clone(), (a.question.clone(), Some(a.report.clone())));
        }
    }
    Ok(Json(RegenerateResponse {
        batch_id: body.batch_id,
        replaced: body.question_id,
        record: outcome.records.first().cloned(),
        outcome,
    }))
}

fn not_in_batch(body: &RegenerateBody) -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        "NotFound",
        format!("question `{}` is not part of batch `{}`", body.question_id, body.batch_id),
    )
}

#[derive(Debug, Deserialize)]
struct BankQuery {
    status: Option<String>,
}

async fn list_bank(State(state): State<Arc<AppState>>, Query(q): Query<BankQuery>) -> ApiResult<Vec<BankRecord>> {
    let status = match q.status.as_deref().filter(|s| !s.is_empty()) {
        Some(s) => Some(
            s.parse::<RecordStatus>()
                .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", m))?,
        ),
        None => None,
    };
    Ok(Json(state.bank().list(status).into_iter().cloned().collect()))
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    decision: Decision,
    #[serde(default)]
    note: Option<String>,
}

async fn decide(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> ApiResult<BankRecord> {
    let body: DecisionBody = serde_json::from_slice(&body).map_err(bad_json)?;
    let record = state.bank().decide(&id, body.decision, body.note)?;
    state.engine.record_decision(&record);
    Ok(Json(record))
}

async fn render(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let stored = state.bank().get(&id).map(|r| r.question.clone());
    let q = stored.or_else(|| {
        state
            .batches()
            .values()
            .find_map(|ctx| ctx.questions.get(&id).map(|(q, _)| q.clone()))
    });
    match q {
        Some(q) => Ok(Json(render_view(&q)).into_response()),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no question with id `{id}`"))),
    }
}

fn safe_join(root: &FsPath, rel: &str) -> Option<PathBuf> {
    let rel = FsPath::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("woff2") => "font/woff2",
        _ => "application/octet-stream",
    }
}

async fn serve_static(state: &AppState, rel: &str) -> Result<Response, ApiError> {
    let missing = || ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no UI file `{rel}`"));
    let root = state.engine.config.ui_dir.as_ref().ok_or_else(missing)?;
    let path = safe_join(root, rel).ok_or_else(missing)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| missing())?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

async fn ui_index(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    serve_static(&state, "index.html").await
}

async fn ui_file(State(state): State<Arc<AppState>>, Path(path): Path<String>) -> Result<Response, ApiError> {
    serve_static(&state, &path).await
}

/// Binds `0.0.0.0:port` and serves until the process is stopped.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).await
}
