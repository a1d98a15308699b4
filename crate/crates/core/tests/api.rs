use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use mcqgen::bankserve::api::{router, AppState};
use mcqgen::bankserve::audit::{AuditKind, MemoryAudit};
use mcqgen::bankserve::config::Config;
use mcqgen::bankserve::service::Engine;
use mcqgen::bankserve::store::Bank;
use mcqgen::genai::{RecordingSleeper, HIGH_DIFFICULTY_CLAUSE};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Server {
    app: Router,
    audit: Arc<MemoryAudit>,
    bank_path: std::path::PathBuf,
    _dir: tempfile::TempDir,
}

fn server(config: Config) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let bank_path = dir.path().join("bank.jsonl");
    let (bank, _) = Bank::open(&bank_path).unwrap();
    let audit = Arc::new(MemoryAudit::new());
    let engine = Engine::new(config, audit.clone()).with_sleeper(Arc::new(RecordingSleeper::new()));
    Server {
        app: router(AppState::new(engine, bank)),
        audit,
        bank_path,
        _dir: dir,
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_with(app, method, uri, body, None).await
}

async fn call_with(app: &Router, method: Method, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

fn generate_body(seed: u64, script: &[&str]) -> Value {
    json!({
        "spec": {
            "topic": "trigonometric identities",
            "count": 3,
            "function_constraints": ["sine", "cosine", "cotangent"],
            "difficulty": "medium",
            "distractor_strategies": ["sign-inversion", "incorrect-identity", "evaluation-method-error"]
        },
        "seed": seed,
        "fault_script": script,
    })
}

#[tokio::test]
async fn generate_decide_and_reload() {
    let s = server(Config::default());
    let (status, out) = call(&s.app, Method::POST, "/api/generate", Some(generate_body(42, &[]))).await;
    assert_eq!(status, StatusCode::OK, "{out}");
    let records = out["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    let id = records[0]["id"].as_str().unwrap().to_string();

    let (status, list) = call(&s.app, Method::GET, "/api/bank?status=candidate", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 3);

    let uri = format!("/api/bank/{id}/decision");
    let (status, rec) = call(&s.app, Method::POST, &uri, Some(json!({"decision": "approve", "note": "fine"}))).await;
    assert_eq!(status, StatusCode::OK, "{rec}");
    assert_eq!(rec["status"], "approved");

    let (status, err) = call(&s.app, Method::POST, &uri, Some(json!({"decision": "reject"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "IllegalTransition");

    let (bank, stats) = Bank::open(&s.bank_path).unwrap();
    assert!(stats.skipped.is_empty());
    let stored = bank.get(&id).unwrap();
    assert_eq!(stored.reviewer_note.as_deref(), Some("fine"));
    assert!(stored.validation_report.is_accepted());

    let kinds: Vec<AuditKind> = s.audit.events().iter().map(|e| e.kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == AuditKind::Generate).count(), 1);
    assert_eq!(kinds.iter().filter(|k| **k == AuditKind::Validate).count(), 3);
    assert_eq!(kinds.iter().filter(|k| **k == AuditKind::Decision).count(), 1);
}

#[tokio::test]
async fn regenerate_records_the_adjusted_prompt() {
    let s = server(Config::default());
    let (_, out) = call(&s.app, Method::POST, "/api/generate", Some(generate_body(7, &[]))).await;
    let batch = out["batch_id"].as_str().unwrap();
    let qid = out["records"][1]["id"].as_str().unwrap();
    let body = json!({"batch_id": batch, "question_id": qid, "difficulty": "high"});
    let (status, regen) = call(&s.app, Method::POST, "/api/regenerate", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{regen}");
    let clauses = regen["record"]["generation"]["prompt"]["clauses"].as_array().unwrap();
    assert!(clauses.iter().any(|c| c == HIGH_DIFFICULTY_CLAUSE));
    assert_eq!(regen["record"]["validation_report"]["uniqueness"]["status"], "unique");

    let uri = format!("/api/bank/{qid}/decision");
    call(&s.app, Method::POST, &uri, Some(json!({"decision": "approve"}))).await;
    let body = json!({"batch_id": batch, "question_id": qid});
    let (status, err) = call(&s.app, Method::POST, "/api/regenerate", Some(body)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "IllegalTransition");
}

#[tokio::test]
async fn every_error_carries_a_code() {
    let s = server(Config::default());
    let cases = [
        (Method::POST, "/api/generate", Some(generate_body(1, &["model_error"])), StatusCode::BAD_GATEWAY, "BackendExhausted"),
        (Method::POST, "/api/generate", Some(json!({"spec": {"topic": "", "count": 1, "distractor_strategies": ["sign-inversion"]}})), StatusCode::BAD_REQUEST, "InvalidSpec"),
        (Method::POST, "/api/generate", Some(json!({"nonsense": true})), StatusCode::BAD_REQUEST, "BadRequest"),
        (Method::POST, "/api/bank/nope/decision", Some(json!({"decision": "approve"})), StatusCode::NOT_FOUND, "NotFound"),
        (Method::GET, "/api/bank?status=pending", None, StatusCode::BAD_REQUEST, "BadRequest"),
        (Method::GET, "/api/questions/nope/render", None, StatusCode::NOT_FOUND, "NotFound"),
        (Method::POST, "/api/regenerate", Some(json!({"batch_id": "b", "question_id": "q"})), StatusCode::NOT_FOUND, "NotFound"),
        (Method::POST, "/api/validate", Some(json!({"questions": []})), StatusCode::BAD_REQUEST, "SchemaViolation"),
        (Method::GET, "/nowhere", None, StatusCode::NOT_FOUND, "NotFound"),
        (Method::GET, "/ui", None, StatusCode::NOT_FOUND, "NotFound"),
    ];
    for (method, uri, body, want, code) in cases {
        let (status, err) = call(&s.app, method, uri, body).await;
        assert_eq!(status, want, "{uri}: {err}");
        assert_eq!(err["code"], code, "{uri}: {err}");
        assert!(err["message"].is_string());
    }
    let (status, err) = call(&s.app, Method::POST, "/api/generate", Some(generate_body(1, &["rate_limit"]))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(err["code"], "BackendExhausted");
    assert_eq!(err["detail"]["attempts"], 3);
    assert_eq!(err["detail"]["last_error"]["kind"], "RateLimited");
}

#[tokio::test]
async fn validate_and_render() {
    let s = server(Config::default());
    let (_, out) = call(&s.app, Method::POST, "/api/generate", Some(generate_body(3, &[]))).await;
    let question = out["records"][0].clone();
    let id = question["id"].as_str().unwrap();
    let (status, report) = call(&s.app, Method::POST, "/api/validate", Some(question.clone())).await;
    assert_eq!(status, StatusCode::OK, "{report}");
    assert_eq!(report["disposition"]["action"], "accept");
    assert_eq!(report["key_check"]["passed"], true);

    let (status, view) = call(&s.app, Method::GET, &format!("/api/questions/{id}/render"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["options"].as_array().unwrap().len(), 4);
    assert!(view["stem_segments"].as_array().unwrap().iter().any(|p| p["kind"] == "math"));
}

#[tokio::test]
async fn token_guards_mutations_only() {
    let config = Config {
        api_token: Some("s3cret".into()),
        ..Config::default()
    };
    let s = server(config);
    let (status, err) = call(&s.app, Method::POST, "/api/generate", Some(generate_body(1, &[]))).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(err["code"], "Unauthorized");
    let (status, _) = call_with(&s.app, Method::POST, "/api/generate", Some(generate_body(1, &[])), Some("wrong")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, _) = call_with(&s.app, Method::POST, "/api/generate", Some(generate_body(1, &[])), Some("s3cret")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&s.app, Method::GET, "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn serves_ui_files_inside_the_root_only() {
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<h1>review</h1>").unwrap();
    std::fs::write(ui.path().join("app.js"), "console.log(1)").unwrap();
    let s = server(Config {
        ui_dir: Some(ui.path().to_path_buf()),
        ..Config::default()
    });
    let (status, body) = call(&s.app, Method::GET, "/ui", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "<h1>review</h1>");
    let (status, _) = call(&s.app, Method::GET, "/ui/app.js", None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&s.app, Method::GET, "/ui/../bank.jsonl", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
