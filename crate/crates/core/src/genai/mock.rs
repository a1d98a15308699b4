//! Deterministic scripted backend backed by the item catalog.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::evalcore::rng::seeded;
use crate::qmodel::option_letter;

use super::catalog::{catalog, function_from_word, CatalogItem};
use super::prompt::PromptBundle;
use super::{BackendError, BackendErrorKind, GenerationBackend};

/// What a single mock call does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultBehavior {
    Ok,
    /// Every question gets one distractor equal in value to its key.
    DuplicateKeyOption,
    MissingFeedback,
    EmptyFeedback,
    AmbiguousCorrect,
    /// A distractor is marked correct consistently in both places.
    WrongKey,
    Truncate,
    SchemaViolation,
    BadLatex,
    EmptyOptions,
    RateLimit,
    Timeout,
    ModelError,
    TransportError,
}

impl FaultBehavior {
    pub const ALL: [FaultBehavior; 14] = [
        FaultBehavior::Ok,
        FaultBehavior::DuplicateKeyOption,
        FaultBehavior::MissingFeedback,
        FaultBehavior::EmptyFeedback,
        FaultBehavior::AmbiguousCorrect,
        FaultBehavior::WrongKey,
        FaultBehavior::Truncate,
        FaultBehavior::SchemaViolation,
        FaultBehavior::BadLatex,
        FaultBehavior::EmptyOptions,
        FaultBehavior::RateLimit,
        FaultBehavior::Timeout,
        FaultBehavior::ModelError,
        FaultBehavior::TransportError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultBehavior::Ok => "ok",
            FaultBehavior::DuplicateKeyOption => "duplicate_key_option",
            FaultBehavior::MissingFeedback => "missing_feedback",
            FaultBehavior::EmptyFeedback => "empty_feedback",
            FaultBehavior::AmbiguousCorrect => "ambiguous_correct",
            FaultBehavior::WrongKey => "wrong_key",
            FaultBehavior::Truncate => "truncate",
            FaultBehavior::SchemaViolation => "schema_violation",
            FaultBehavior::BadLatex => "bad_latex",
            FaultBehavior::EmptyOptions => "empty_options",
            FaultBehavior::RateLimit => "rate_limit",
            FaultBehavior::Timeout => "timeout",
            FaultBehavior::ModelError => "model_error",
            FaultBehavior::TransportError => "transport_error",
        }
    }

    /// Parses `ok,rate_limit,model_error*3` into a script.
    pub fn parse_script(s: &str) -> Result<Vec<FaultBehavior>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, times) = match part.split_once('*') {
                Some((n, k)) => {
                    let k: usize = k
                        .trim()
                        .parse()
                        .map_err(|_| format!("bad repeat count in `{part}`"))?;
                    (n.trim(), k)
                }
                None => (part, 1),
            };
            let b: FaultBehavior = name.parse()?;
            out.extend(std::iter::repeat_n(b, times));
        }
        if out.is_empty() {
            return Err("fault script is empty".into());
        }
        Ok(out)
    }
}

impl fmt::Display for FaultBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultBehavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().replace('-', "_").to_ascii_lowercase();
        FaultBehavior::ALL
            .into_iter()
            .find(|b| b.name() == norm)
            .ok_or_else(|| {
                let names: Vec<&str> = FaultBehavior::ALL.iter().map(|b| b.name()).collect();
                format!("unknown fault behavior `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug)]
pub struct MockBackend {
    seed: u64,
    script: Vec<FaultBehavior>,
    calls: Mutex<usize>,
}

impl MockBackend {
    /// An empty script behaves as `[ok]`.
    pub fn new(seed: u64, script: Vec<FaultBehavior>) -> Self {
        let script = if script.is_empty() { vec![FaultBehavior::Ok] } else { script };
        MockBackend {
            seed,
            script,
            calls: Mutex::new(0),
        }
    }

    pub fn ok(seed: u64) -> Self {
        MockBackend::new(seed, vec![FaultBehavior::Ok])
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn script(&self) -> &[FaultBehavior] {
        &self.script
    }

    fn next_call(&self) -> usize {
        let mut c = self.calls.lock().unwrap_or_else(|p| p.into_inner());
        let k = *c;
        *c += 1;
        k
    }

    /// The payload call `k` would produce under `behavior`, without touching the counter.
    pub fn render(&self, bundle: &PromptBundle, k: usize, behavior: FaultBehavior) -> Result<String, BackendError> {
        let err = |kind, detail: &str| Err(BackendError::new(kind, format!("mock call {k}: {detail}")));
        match behavior {
            FaultBehavior::RateLimit => return err(BackendErrorKind::RateLimited, "rate limit exceeded"),
            FaultBehavior::Timeout => return err(BackendErrorKind::Timeout, "request timed out"),
            FaultBehavior::ModelError => return err(BackendErrorKind::ModelError, "model inference failed"),
            FaultBehavior::TransportError => return err(BackendErrorKind::TransportError, "connection reset"),
            _ => {}
        }
        let mut rng = seeded(self.seed ^ (k as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let items = pick_items(bundle, &mut rng);
        let mut questions: Vec<Value> = items
            .iter()
            .map(|it| {
                let dup = behavior == FaultBehavior::DuplicateKeyOption;
                question_json(it, &bundle.metadata.topic, dup, &mut rng)
            })
            .collect();
        let q0 = &mut questions[0];
        match behavior {
            FaultBehavior::MissingFeedback => {
                let j = distractor_index(q0, &mut rng);
                q0["options"][j].as_object_mut().map(|o| o.remove("feedback"));
            }
            FaultBehavior::EmptyFeedback => {
                let j = distractor_index(q0, &mut rng);
                q0["options"][j]["feedback"] = json!("");
            }
            FaultBehavior::AmbiguousCorrect => {
                let j = distractor_index(q0, &mut rng);
                q0["options"][j]["is_correct"] = json!(true);
            }
            FaultBehavior::WrongKey => {
                let j = distractor_index(q0, &mut rng);
                let key = key_index(q0);
                q0["options"][key]["is_correct"] = json!(false);
                q0["options"][j]["is_correct"] = json!(true);
                q0["correct_option_id"] = q0["options"][j]["id"].clone();
            }
            FaultBehavior::SchemaViolation => {
                q0["options"] = json!("A, B, C, D");
            }
            FaultBehavior::BadLatex => {
                let j = distractor_index(q0, &mut rng);
                q0["options"][j]["latex"] = json!(r"\frac{\sqrt{2}{2}");
            }
            FaultBehavior::EmptyOptions => {
                q0["options"] = json!([]);
            }
            _ => {}
        }
        let text = serde_json::to_string_pretty(&json!({ "questions": questions }))
            .expect("payload serializes");
        if behavior == FaultBehavior::Truncate {
            let mut cut = text.len() / 2;
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            return Ok(text[..cut].to_string());
        }
        Ok(text)
    }
}

fn pick_items(bundle: &PromptBundle, rng: &mut impl Rng) -> Vec<&'static CatalogItem> {
    let count = bundle.metadata.count.clamp(1, super::MAX_COUNT) as usize;
    let funcs: Vec<_> = bundle
        .metadata
        .functions
        .iter()
        .filter_map(|w| function_from_word(w))
        .filter(|f| catalog().iter().any(|it| it.func == *f))
        .collect();
    let mut pools: Vec<Vec<&'static CatalogItem>> = if funcs.is_empty() {
        vec![catalog().iter().collect()]
    } else {
        funcs
            .iter()
            .map(|f| catalog().iter().filter(|it| it.func == *f).collect())
            .collect()
    };
    for p in &mut pools {
        p.shuffle(rng);
    }
    let n = pools.len();
    let mut used = vec![0usize; n];
    (0..count)
        .map(|i| {
            let p = i % n;
            let item = pools[p][used[p] % pools[p].len()];
            used[p] += 1;
            item
        })
        .collect()
}

fn question_json(item: &CatalogItem, topic: &str, duplicate_key: bool, rng: &mut impl Rng) -> Value {
    let mut opts: Vec<(String, String, bool)> = vec![(item.key.to_string(), item.key_feedback(), true)];
    let dup_slot = if duplicate_key { Some(rng.gen_range(0..item.distractors.len())) } else { None };
    for (j, (latex, strategy)) in item.distractors.iter().enumerate() {
        if dup_slot == Some(j) {
            opts.push((
                item.key_equivalent.to_string(),
                "Incorrect. This expression has a different form from the expected answer.".to_string(),
                false,
            ));
        } else {
            opts.push((latex.to_string(), item.distractor_feedback(*strategy), false));
        }
    }
    opts.shuffle(rng);
    let mut correct = String::new();
    let options: Vec<Value> = opts
        .into_iter()
        .enumerate()
        .map(|(i, (latex, feedback, is_correct))| {
            let id = option_letter(i);
            if is_correct {
                correct = id.clone();
            }
            json!({ "id": id, "latex": latex, "feedback": feedback, "is_correct": is_correct })
        })
        .collect();
    json!({
        "stem": item.stem(),
        "options": options,
        "correct_option_id": correct,
        "topic": if topic.is_empty() { "trigonometric identities" } else { topic },
    })
}

fn key_index(q: &Value) -> usize {
    q["options"]
        .as_array()
        .and_then(|a| a.iter().position(|o| o["is_correct"] == json!(true)))
        .unwrap_or(0)
}

fn distractor_index(q: &Value, rng: &mut impl Rng) -> usize {
    let n = q["options"].as_array().map_or(1, Vec::len);
    let key = key_index(q);
    let j = rng.gen_range(0..n - 1);
    if j >= key {
        j + 1
    } else {
        j
    }
}

impl GenerationBackend for MockBackend {
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let k = self.next_call();
        let behavior = self.script[k.min(self.script.len() - 1)];
        tracing::debug!(call = k, %behavior, "mock generate");
        self.render(bundle, k, behavior)
    }

    fn name(&self) -> &str {
        "mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genai::{build_prompt, parse_response, PromptSpec};

    fn bundle() -> PromptBundle {
        build_prompt(&PromptSpec::trig_identities(3))
    }

    #[test]
    fn ok_payload_round_robins_functions() {
        let m = MockBackend::ok(7);
        let qs = parse_response(&m.generate(&bundle()).unwrap()).unwrap();
        assert_eq!(qs.len(), 3);
        assert!(qs[0].stem.contains(r"\sin"));
        assert!(qs[1].stem.contains(r"\cos"));
        assert!(qs[2].stem.contains(r"\cot"));
        for q in &qs {
            assert_eq!(q.options.len(), 4);
            assert!(q.structural_issues().is_empty());
        }
    }

    #[test]
    fn deterministic() {
        let a = MockBackend::new(3, vec![FaultBehavior::Ok, FaultBehavior::DuplicateKeyOption]);
        let b = MockBackend::new(3, vec![FaultBehavior::Ok, FaultBehavior::DuplicateKeyOption]);
        for _ in 0..3 {
            assert_eq!(a.generate(&bundle()), b.generate(&bundle()));
        }
        assert_eq!(a.calls(), 3);
    }

    #[test]
    fn script_order_and_repeat() {
        let m = MockBackend::new(1, vec![FaultBehavior::RateLimit, FaultBehavior::Ok]);
        assert_eq!(m.generate(&bundle()).unwrap_err().kind, BackendErrorKind::RateLimited);
        assert!(m.generate(&bundle()).is_ok());
        assert!(m.generate(&bundle()).is_ok());
    }

    #[test]
    fn fault_kinds() {
        let cases = [
            (FaultBehavior::MissingFeedback, BackendErrorKind::MissingField),
            (FaultBehavior::AmbiguousCorrect, BackendErrorKind::AmbiguousCorrect),
            (FaultBehavior::Truncate, BackendErrorKind::Truncated),
            (FaultBehavior::SchemaViolation, BackendErrorKind::SchemaViolation),
            (FaultBehavior::BadLatex, BackendErrorKind::MathParseError),
            (FaultBehavior::EmptyOptions, BackendErrorKind::SchemaViolation),
        ];
        for (b, kind) in cases {
            let raw = MockBackend::new(5, vec![b]).generate(&bundle()).unwrap();
            assert_eq!(parse_response(&raw).unwrap_err().kind, kind, "{b}");
        }
        let raw = MockBackend::new(5, vec![FaultBehavior::EmptyFeedback]).generate(&bundle()).unwrap();
        assert_eq!(parse_response(&raw).unwrap()[0].missing_feedback().len(), 1);
    }

    #[test]
    fn script_parsing() {
        let s = FaultBehavior::parse_script("duplicate-key-option, model_error*2,ok").unwrap();
        assert_eq!(
            s,
            vec![
                FaultBehavior::DuplicateKeyOption,
                FaultBehavior::ModelError,
                FaultBehavior::ModelError,
                FaultBehavior::Ok
            ]
        );
        assert!(FaultBehavior::parse_script("explode").is_err());
        assert!(FaultBehavior::parse_script("").is_err());
    }
}
