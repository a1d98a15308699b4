//! Exponential backoff with full jitter around any backend.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::bankserve::audit::{AuditEvent, AuditKind, AuditSink, NoAudit};
use crate::evalcore::rng::seeded;

use super::prompt::PromptBundle;
use super::{BackendError, GenerationBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total calls per request, the first one included.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub factor: f64,
    pub max_delay_ms: u64,
    pub jitter_seed: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 500,
            factor: 2.0,
            max_delay_ms: 30_000,
            jitter_seed: 0,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if !(self.factor.is_finite() && self.factor >= 1.0) {
            return Err("factor must be a finite number >= 1".into());
        }
        Ok(())
    }

    /// Upper bound of the delay before retry `k` (1-based).
    pub fn delay_cap(&self, k: u32) -> Duration {
        let ms = self.base_delay_ms as f64 * self.factor.powi(k.saturating_sub(1) as i32);
        Duration::from_millis(ms.min(self.max_delay_ms as f64) as u64)
    }
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, d: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Records requested delays instead of sleeping.
#[derive(Debug, Default)]
pub struct RecordingSleeper {
    delays: Mutex<Vec<Duration>>,
}

impl RecordingSleeper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delays(&self) -> Vec<Duration> {
        self.delays.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl Sleeper for RecordingSleeper {
    fn sleep(&self, d: Duration) {
        self.delays.lock().unwrap_or_else(|p| p.into_inner()).push(d);
    }
}

/// Wraps a backend with retries; every inner call is written to the audit sink.
pub struct Retrying<B> {
    inner: B,
    policy: RetryPolicy,
    sleeper: Arc<dyn Sleeper>,
    audit: Arc<dyn AuditSink>,
    rng: Mutex<SplitMix64>,
    backoffs: AtomicUsize,
    calls: AtomicUsize,
}

impl<B: GenerationBackend> Retrying<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        let rng = Mutex::new(seeded(policy.jitter_seed));
        Retrying {
            inner,
            policy,
            sleeper: Arc::new(ThreadSleeper),
            audit: Arc::new(NoAudit),
            rng,
            backoffs: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_audit(mut self, audit: Arc<dyn AuditSink>) -> Self {
        self.audit = audit;
        self
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    /// Number of sleeps taken so far.
    pub fn backoffs(&self) -> usize {
        self.backoffs.load(Ordering::SeqCst)
    }

    /// Number of inner backend calls so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn jitter(&self, k: u32) -> Duration {
        let cap = self.policy.delay_cap(k).as_millis() as u64;
        let ms = self.rng.lock().unwrap_or_else(|p| p.into_inner()).gen_range(0..=cap);
        Duration::from_millis(ms)
    }
}

impl<B: GenerationBackend> GenerationBackend for Retrying<B> {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let max = self.policy.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            let start = Instant::now();
            let result = self.inner.generate(bundle);
            let latency = start.elapsed().as_millis() as u64;
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut event = match &result {
                Ok(_) => AuditEvent::new(AuditKind::Generate),
                Err(e) => AuditEvent::backend_error(e),
            };
            event.prompt = Some(bundle.metadata.clone());
            event.latency_ms = Some(latency);
            event.backend = Some(self.inner.name().to_string());
            event.call_attempt = Some(attempt);
            self.audit.record(&event);
            match result {
                Ok(text) => return Ok(text),
                Err(e) if !e.retriable || attempt >= max => {
                    tracing::warn!(code = e.kind.code(), attempt, "backend call failed: {}", e.detail);
                    return Err(e);
                }
                Err(e) => {
                    let d = self.jitter(attempt);
                    tracing::info!(code = e.kind.code(), attempt, delay_ms = d.as_millis() as u64, "retrying");
                    self.sleeper.sleep(d);
                    self.backoffs.fetch_add(1, Ordering::SeqCst);
                    attempt += 1;
                }
            }
        }
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
