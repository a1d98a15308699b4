//! Runtime configuration: defaults, then a TOML file, then environment,
//! then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genai::{HttpConfig, RetryPolicy, DEFAULT_TIMEOUT_MS};
use crate::validator::LoopPolicy;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BANK_PATH: &str = "bank.jsonl";
pub const DEFAULT_AUDIT_PATH: &str = "audit.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            _ => Err(format!("unknown backend `{s}` (expected mock or http)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenaiSection {
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub token: Option<String>,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
}

impl Default for GenaiSection {
    fn default() -> Self {
        GenaiSection {
            backend: BackendKind::Mock,
            endpoint: None,
            token: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub bank_path: PathBuf,
    pub audit_path: PathBuf,
    pub port: u16,
    /// When set, mutating API calls need `Authorization: Bearer <token>`.
    pub api_token: Option<String>,
    /// Directory of static review UI files served under `/ui`.
    pub ui_dir: Option<PathBuf>,
    pub genai: GenaiSection,
    #[serde(rename = "loop")]
    pub loop_policy: LoopPolicy,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bank_path: DEFAULT_BANK_PATH.into(),
            audit_path: DEFAULT_AUDIT_PATH.into(),
            port: DEFAULT_PORT,
            api_token: None,
            ui_dir: None,
            genai: GenaiSection::default(),
            loop_policy: LoopPolicy::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {name}: {message}")]
    Env { name: &'static str, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Environment variables consulted, in the order they are applied.
pub const ENV_VARS: [&str; 7] = [
    "BANK_PATH",
    "AUDIT_PATH",
    "PORT",
    "API_TOKEN",
    "GENAI_ENDPOINT",
    "GENAI_TOKEN",
    "GENAI_TIMEOUT_MS",
];

impl Config {
    /// Defaults, overlaid with `file` (if any) and the process environment.
    pub fn load(file: Option<&Path>) -> Result<Config, ConfigError> {
        let text = match file {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?),
            None => None,
        };
        let path = file.map(Path::to_path_buf).unwrap_or_default();
        Config::from_sources(text.as_deref(), &path, |k| std::env::var(k).ok())
    }

    pub fn from_sources(
        file_text: Option<&str>,
        file_path: &Path,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Config, ConfigError> {
        let mut cfg = match file_text {
            Some(t) => toml::from_str::<Config>(t).map_err(|e| ConfigError::Parse {
                path: file_path.to_path_buf(),
                message: e.to_string(),
            })?,
            None => Config::default(),
        };
        let get = |k: &str| env(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get("BANK_PATH") {
            cfg.bank_path = v.into();
        }
        if let Some(v) = get("AUDIT_PATH") {
            cfg.audit_path = v.into();
        }
        if let Some(v) = get("PORT") {
            cfg.port = v.trim().parse().map_err(|_| ConfigError::Env {
                name: "PORT",
                message: format!("`{v}` is not a port number"),
            })?;
        }
        if let Some(v) = get("API_TOKEN") {
            cfg.api_token = Some(v);
        }
        if let Some(v) = get("GENAI_ENDPOINT") {
            cfg.genai.endpoint = Some(v);
        }
        if let Some(v) = get("GENAI_TOKEN") {
            cfg.genai.token = Some(v);
        }
        if let Some(v) = get("GENAI_TIMEOUT_MS") {
            cfg.genai.timeout_ms = v.trim().parse().map_err(|_| ConfigError::Env {
                name: "GENAI_TIMEOUT_MS",
                message: format!("`{v}` is not a number of milliseconds"),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.loop_policy.validate().map_err(ConfigError::Invalid)?;
        self.genai.retry.validate().map_err(ConfigError::Invalid)?;
        if self.genai.timeout_ms == 0 {
            return Err(ConfigError::Invalid("genai.timeout_ms must be positive".into()));
        }
        Ok(())
    }

    /// HTTP backend settings, if an endpoint is configured.
    pub fn http(&self) -> Option<HttpConfig> {
        Some(HttpConfig {
            endpoint: self.genai.endpoint.clone()?,
            token: self.genai.token.clone(),
            timeout_ms: self.genai.timeout_ms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let m: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| m.get(k).cloned()
    }

    #[test]
    fn precedence() {
        let file = "port = 9000\nbank_path = \"file.jsonl\"\n[genai]\ntimeout_ms = 1000\n[loop]\nmax_attempts = 5\n";
        let cfg = Config::from_sources(Some(file), Path::new("c.toml"), env(&[("PORT", "9100")])).unwrap();
        assert_eq!(cfg.port, 9100);
        assert_eq!(cfg.bank_path, PathBuf::from("file.jsonl"));
        assert_eq!(cfg.genai.timeout_ms, 1000);
        assert_eq!(cfg.loop_policy.max_attempts, 5);
        assert_eq!(cfg.loop_policy.equivalence.seed, 42);
        let cfg = Config::from_sources(None, Path::new(""), env(&[])).unwrap();
        assert_eq!(cfg, Config::default());
        assert!(cfg.http().is_none());
    }

    #[test]
    fn bad_values() {
        assert!(Config::from_sources(None, Path::new(""), env(&[("PORT", "x")])).is_err());
        assert!(Config::from_sources(Some("[loop]\nmax_attempts = 0"), Path::new("c"), env(&[])).is_err());
        assert!(Config::from_sources(Some("port = "), Path::new("c"), env(&[])).is_err());
    }
}
