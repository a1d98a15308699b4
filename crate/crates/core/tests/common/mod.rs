//! Generators and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use mcqgen::genai::{catalog, CatalogItem};
use mcqgen::mathexpr::{BinaryOp, Constant, Expr, Func, UnaryOp};
use mcqgen::qmodel::{option_letter, Difficulty, Provenance, Question, QuestionOption};
use rand::seq::SliceRandom;
use rand::Rng;

pub const VARS: [&str; 3] = ["x", "y", "t"];
pub const OPS: [BinaryOp; 5] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow];

fn number<R: Rng>(rng: &mut R) -> Expr {
    match rng.gen_range(0..3) {
        0 => Expr::int(rng.gen_range(0..=12)),
        1 => Expr::rational(rng.gen_range(1..=19), 4),
        _ => Expr::rational(rng.gen_range(1..=99), 10),
    }
}

fn leaf<R: Rng>(rng: &mut R) -> Expr {
    match rng.gen_range(0..4) {
        0 | 1 => number(rng),
        2 => Expr::Constant(if rng.gen_bool(0.5) { Constant::Pi } else { Constant::Euler }),
        _ => Expr::var(VARS.choose(rng).unwrap()),
    }
}

/// Any tree of depth at most `depth`, drawing from every node kind.
pub fn random_expr<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_ratio(1, 5) {
        return leaf(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 => Expr::Unary(UnaryOp::Neg, Box::new(random_expr(rng, d))),
        1..=5 => Expr::binary(*OPS.choose(rng).unwrap(), random_expr(rng, d), random_expr(rng, d)),
        6..=8 => Expr::func(*Func::ALL.choose(rng).unwrap(), random_expr(rng, d)),
        _ => Expr::derivative(VARS.choose(rng).unwrap(), random_expr(rng, d)),
    }
}

/// Smooth-ish functions of `x` for derivative checks.
pub fn random_function<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_ratio(1, 4) {
        return if rng.gen_bool(0.6) { Expr::var("x") } else { number(rng) };
    }
    let d = depth - 1;
    let sub = |rng: &mut R| random_function(rng, d);
    match rng.gen_range(0..12) {
        0 => Expr::neg(sub(rng)),
        1 => Expr::add(sub(rng), sub(rng)),
        2 => Expr::sub(sub(rng), sub(rng)),
        3 | 4 => Expr::mul(sub(rng), sub(rng)),
        5 => Expr::div(sub(rng), sub(rng)),
        6 => Expr::pow(sub(rng), Expr::int(rng.gen_range(2..=4))),
        7 => Expr::pow(sub(rng), sub(rng)),
        _ => {
            let f = *[Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt, Func::Atan, Func::Sec, Func::Asin]
                .choose(rng)
                .unwrap();
            Expr::func(f, sub(rng))
        }
    }
}

pub fn env(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// A four-option question built straight from a catalog item, options
/// shuffled. With `inject`, one distractor is replaced by another spelling
/// of the key.
pub fn catalog_question<R: Rng>(item: &CatalogItem, rng: &mut R, inject: bool) -> (Question, Option<String>) {
    let mut bodies: Vec<(String, String, bool)> = vec![(item.key.into(), item.key_feedback(), true)];
    for (latex, strategy) in item.distractors {
        bodies.push((latex.into(), item.distractor_feedback(strategy), false));
    }
    if inject {
        let slot = rng.gen_range(1..bodies.len());
        bodies[slot].0 = item.key_equivalent.into();
    }
    let mut order: Vec<usize> = (0..bodies.len()).collect();
    order.shuffle(rng);
    let mut options = Vec::new();
    let mut correct = String::new();
    let mut duplicate = None;
    for (i, &j) in order.iter().enumerate() {
        let (latex, feedback, ok) = &bodies[j];
        let id = option_letter(i);
        if *ok {
            correct = id.clone();
        } else if inject && latex == item.key_equivalent {
            duplicate = Some(id.clone());
        }
        options.push(QuestionOption::math(&id, latex, feedback, *ok).expect("catalog latex parses"));
    }
    let mut q = Question {
        id: String::new(),
        stem: item.stem(),
        options,
        correct_option_id: correct,
        topic: "trigonometric identities".into(),
        difficulty: Difficulty::Medium,
        distractor_strategies: item.distractors.iter().map(|d| d.1).collect(),
        provenance: Provenance::Authored,
        created_at: chrono::DateTime::UNIX_EPOCH,
    };
    q.id = q.content_id();
    (q, duplicate)
}

pub fn catalog_items() -> &'static [CatalogItem] {
    catalog()
}

/// A response payload the parser accepts, one question per catalog item.
pub fn valid_payload(items: &[CatalogItem]) -> serde_json::Value {
    let qs: Vec<_> = items
        .iter()
        .map(|it| {
            let mut options = vec![serde_json::json!({
                "id": "A", "latex": it.key, "feedback": it.key_feedback(), "is_correct": true
            })];
            for (i, (latex, s)) in it.distractors.iter().enumerate() {
                options.push(serde_json::json!({
                    "id": option_letter(i + 1), "latex": latex,
                    "feedback": it.distractor_feedback(*s), "is_correct": false
                }));
            }
            serde_json::json!({
                "stem": it.stem(),
                "options": options,
                "correct_option_id": "A",
                "topic": "trigonometric identities",
            })
        })
        .collect();
    serde_json::json!({ "questions": qs })
}
