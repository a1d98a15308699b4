//! Blocking HTTP backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::PromptBundle;
use super::{BackendError, BackendErrorKind, GenerationBackend};

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            token: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    /// Reads `GENAI_ENDPOINT`, `GENAI_TOKEN` and `GENAI_TIMEOUT_MS`.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("GENAI_ENDPOINT").ok().filter(|s| !s.is_empty())?;
        let token = std::env::var("GENAI_TOKEN").ok().filter(|s| !s.is_empty());
        let timeout_ms = std::env::var("GENAI_TIMEOUT_MS")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_TIMEOUT_MS);
        Some(HttpConfig {
            endpoint,
            token,
            timeout_ms,
        })
    }
}

/// One POST per call; retries are layered on with [`super::Retrying`].
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend { config, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }
}

fn classify(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Timeout(t) => BackendError::new(BackendErrorKind::Timeout, format!("timed out ({t})")),
        ureq::Error::StatusCode(code) => status_error(code, ""),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
            BackendError::new(BackendErrorKind::Timeout, io.to_string())
        }
        other => BackendError::new(BackendErrorKind::TransportError, other.to_string()),
    }
}

fn status_error(code: u16, body: &str) -> BackendError {
    let snippet: String = body.chars().take(200).collect();
    let detail = if snippet.is_empty() {
        format!("HTTP {code}")
    } else {
        format!("HTTP {code}: {snippet}")
    };
    match code {
        429 => BackendError::new(BackendErrorKind::RateLimited, detail),
        500..=599 => BackendError::new(BackendErrorKind::ModelError, detail),
        _ => BackendError::new(BackendErrorKind::ModelError, detail).not_retriable(),
    }
}

impl GenerationBackend for HttpBackend {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let body = bundle.wire_body().to_string();
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("content-type", "application/json");
        if let Some(token) = &self.config.token {
            req = req.header("authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send(body.as_str()).map_err(classify)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(classify)?;
        if (200..300).contains(&status) {
            Ok(text)
        } else {
            Err(status_error(status, &text))
        }
    }

    fn name(&self) -> &str {
        "http"
    }
}
