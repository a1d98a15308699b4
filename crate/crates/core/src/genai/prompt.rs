//! Prompt construction.

use serde::{Deserialize, Serialize};

use crate::qmodel::{Difficulty, DistractorStrategy};

use super::schema::RESPONSE_SCHEMA;

pub const MAX_COUNT: u32 = 10;

pub const LOW_DIFFICULTY_CLAUSE: &str =
    "Ensure distractors are easily dismissed by students familiar with the concept.";
pub const MEDIUM_DIFFICULTY_CLAUSE: &str =
    "Ensure distractors are plausible to students who have only partly mastered the concept.";
pub const HIGH_DIFFICULTY_CLAUSE: &str = "Ensure distractors reflect common stepwise errors such that they appear plausible without thorough computation.";
pub const UNIQUENESS_CLAUSE: &str = "Ensure only one answer evaluates to the correct result; all other responses should reflect common incorrect reasoning paths without coinciding with the correct value.";
pub const FEEDBACK_CLAUSE: &str = "Provide detailed feedback for each option that explains why the answer is right or wrong, including the correct method for solving each problem.";

pub const SYSTEM_INSTRUCTIONS: &str = "You write multiple choice assessment items for STEM courses. \
Respond with a single JSON object that conforms to the response schema and nothing else. \
Write every option body in the `latex` field as LaTeX math without surrounding dollar signs. \
Inside stems, wrap mathematics in $...$. \
Give every option a nonempty `feedback` explanation. \
Mark exactly one option with `is_correct: true` and set `correct_option_id` to its id. \
Use option ids A, B, C, ... in order.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub topic: String,
    pub count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_constraints: Option<Vec<String>>,
    #[serde(default)]
    pub difficulty: Difficulty,
    pub distractor_strategies: Vec<DistractorStrategy>,
    #[serde(default = "default_true")]
    pub uniqueness_clause: bool,
    #[serde(default)]
    pub extra_clauses: Vec<String>,
}

fn default_true() -> bool {
    true
}

impl PromptSpec {
    /// The trig-identities request used throughout the examples.
    pub fn trig_identities(count: u32) -> Self {
        PromptSpec {
            topic: "trigonometric identities".into(),
            count,
            function_constraints: Some(vec!["sine".into(), "cosine".into(), "cotangent".into()]),
            difficulty: Difficulty::Medium,
            distractor_strategies: vec![
                DistractorStrategy::SignInversion,
                DistractorStrategy::IncorrectIdentity,
                DistractorStrategy::EvaluationMethodError,
            ],
            uniqueness_clause: true,
            extra_clauses: vec![],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.topic.trim().is_empty() {
            return Err("topic must not be empty".into());
        }
        if !(1..=MAX_COUNT).contains(&self.count) {
            return Err(format!("count must be between 1 and {MAX_COUNT}"));
        }
        if self.distractor_strategies.is_empty() {
            return Err("at least one distractor strategy is required".into());
        }
        if let Some(fs) = &self.function_constraints {
            if let Some(bad) = fs.iter().find(|f| f.trim().is_empty()) {
                return Err(format!("invalid function constraint `{bad}`"));
            }
        }
        Ok(())
    }

    /// Appends a clause unless an identical one is already present.
    pub fn add_clause(&mut self, clause: &str) -> bool {
        if self.extra_clauses.iter().any(|c| c == clause) {
            return false;
        }
        self.extra_clauses.push(clause.to_string());
        true
    }
}

/// What the audit log records about the prompt behind a backend call.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PromptMetadata {
    pub topic: String,
    pub count: u32,
    pub difficulty: Difficulty,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<String>,
    pub clauses: Vec<String>,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_instructions: String,
    pub user_prompt: String,
    pub response_schema: String,
    pub metadata: PromptMetadata,
}

impl PromptBundle {
    /// Body sent to an HTTP backend.
    pub fn wire_body(&self) -> serde_json::Value {
        serde_json::json!({
            "system_instructions": self.system_instructions,
            "prompt": self.user_prompt,
            "response_schema": self.response_schema,
        })
    }
}

const COUNT_WORDS: [&str; 10] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];
const ORDINALS: [&str; 10] = [
    "", "", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.trim().chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn function_clause(functions: &[String]) -> String {
    let names: Vec<String> = functions.iter().map(|f| capitalize(f)).collect();
    if let [only] = names.as_slice() {
        return format!(
            "Each question should ask for the exact value of a trigonometric function using {only}."
        );
    }
    let parts: Vec<String> = names
        .iter()
        .enumerate()
        .map(|(i, n)| match i {
            0 => format!("one using {n}"),
            1 => format!("another with {n}"),
            _ => format!("a {} using {n}", ORDINALS.get(i).copied().unwrap_or("further")),
        })
        .collect();
    format!(
        "Each question should ask for the exact value of a trigonometric function: {}.",
        join_list(&parts)
    )
}

pub fn difficulty_clause(d: Difficulty) -> &'static str {
    match d {
        Difficulty::Low => LOW_DIFFICULTY_CLAUSE,
        Difficulty::Medium => MEDIUM_DIFFICULTY_CLAUSE,
        Difficulty::High => HIGH_DIFFICULTY_CLAUSE,
    }
}

fn sentence(s: &str) -> String {
    let s = s.trim();
    if s.ends_with(['.', '!', '?']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

/// Assembles the user prompt: request, function constraints, distractor
/// strategies, feedback, difficulty, uniqueness, then any extra clauses.
pub fn build_prompt(spec: &PromptSpec) -> PromptBundle {
    build_prompt_for_attempt(spec, 1)
}

pub fn build_prompt_for_attempt(spec: &PromptSpec, attempt: u32) -> PromptBundle {
    let count = spec.count.clamp(1, MAX_COUNT) as usize;
    let noun = if count == 1 { "question" } else { "questions" };
    let mut clauses = vec![format!(
        "Generate {} multiple choice {noun} on {}.",
        COUNT_WORDS[count - 1],
        spec.topic.trim()
    )];
    let functions = spec.function_constraints.clone().unwrap_or_default();
    if !functions.is_empty() {
        clauses.push(function_clause(&functions));
    }
    let strategies: Vec<String> = spec
        .distractor_strategies
        .iter()
        .map(|s| s.phrase().to_string())
        .collect();
    clauses.push(format!(
        "Distractors should be constructed based on common student errors such as {}.",
        join_list(&strategies)
    ));
    clauses.push(FEEDBACK_CLAUSE.to_string());
    clauses.push(difficulty_clause(spec.difficulty).to_string());
    if spec.uniqueness_clause {
        clauses.push(UNIQUENESS_CLAUSE.to_string());
    }
    let extra: Vec<String> = spec.extra_clauses.iter().map(|c| sentence(c)).collect();
    let mut user_prompt = clauses.join(" ");
    for c in &extra {
        user_prompt.push('\n');
        user_prompt.push_str(c);
    }
    clauses.extend(extra);
    PromptBundle {
        system_instructions: SYSTEM_INSTRUCTIONS.to_string(),
        user_prompt,
        response_schema: RESPONSE_SCHEMA.to_string(),
        metadata: PromptMetadata {
            topic: spec.topic.clone(),
            count: spec.count,
            difficulty: spec.difficulty,
            functions,
            clauses,
            attempt,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_prompt_content() {
        let b = build_prompt(&PromptSpec::trig_identities(3));
        let expected = "Generate three multiple choice questions on trigonometric identities. \
Each question should ask for the exact value of a trigonometric function: one using Sine, another with Cosine, and a third using Cotangent. \
Distractors should be constructed based on common student errors such as sign inversion, incorrect identity use, and evaluation method errors. \
Provide detailed feedback for each option that explains why the answer is right or wrong, including the correct method for solving each problem.";
        assert!(b.user_prompt.starts_with(expected), "{}", b.user_prompt);
        assert!(b.user_prompt.contains(UNIQUENESS_CLAUSE));
        assert_eq!(b.metadata.attempt, 1);
    }

    #[test]
    fn difficulty_mapping() {
        let mut spec = PromptSpec::trig_identities(3);
        spec.difficulty = Difficulty::Low;
        let b = build_prompt(&spec);
        assert!(b.user_prompt.contains(LOW_DIFFICULTY_CLAUSE));
        assert!(!b.user_prompt.contains(HIGH_DIFFICULTY_CLAUSE));
        spec.difficulty = Difficulty::High;
        let b = build_prompt(&spec);
        assert!(b.user_prompt.contains(HIGH_DIFFICULTY_CLAUSE));
        assert!(!b.user_prompt.contains(LOW_DIFFICULTY_CLAUSE));
    }

    #[test]
    fn extra_clause_last() {
        let mut spec = PromptSpec::trig_identities(3);
        spec.extra_clauses.push("Avoid the value 1/2 among options".into());
        let b = build_prompt(&spec);
        assert!(b.user_prompt.ends_with("Avoid the value 1/2 among options."));
        assert_eq!(b.metadata.clauses.last().unwrap(), "Avoid the value 1/2 among options.");
        spec.uniqueness_clause = false;
        assert!(!build_prompt(&spec).user_prompt.contains(UNIQUENESS_CLAUSE));
    }

    #[test]
    fn validation_and_clauses() {
        let mut spec = PromptSpec::trig_identities(0);
        assert!(spec.validate().is_err());
        spec.count = 11;
        assert!(spec.validate().is_err());
        spec.count = 1;
        spec.distractor_strategies.clear();
        assert!(spec.validate().is_err());
        let mut spec = PromptSpec::trig_identities(1);
        assert!(spec.add_clause("x"));
        assert!(!spec.add_clause("x"));
        assert!(build_prompt(&spec).user_prompt.starts_with("Generate one multiple choice question on"));
    }
}
