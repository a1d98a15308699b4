//! Acceptance checks. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any fails.

mod common;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mcqgen::bankserve::audit::{AuditKind, MemoryAudit};
use mcqgen::bankserve::store::{Bank, RecordStatus};
use mcqgen::evalcore::{differentiate, equivalent, eval_exact, eval_numeric, EquivalencePolicy, Verdict};
use mcqgen::genai::{
    parse_response, BackendErrorKind, FaultBehavior, MockBackend, PromptSpec, RecordingSleeper, RetryPolicy,
    Retrying, UNIQUENESS_CLAUSE,
};
use mcqgen::mathexpr::{parse_latex, to_latex, Expr, Func};
use mcqgen::qmodel::{
    draw_variables, instantiate_template, OptionTemplate, QuestionTemplate, VariableKind, VariableSpec,
};
use mcqgen::validator::{check_uniqueness, generate_validated, LoopError, LoopPolicy, Uniqueness};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde_json::Value;

const ROUND_TRIP_EXPRS: usize = 200;
const ROUND_TRIP_DEPTH: usize = 5;
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(5);
const TRIG_TOL: f64 = 1e-12;
const MIN_CATALOG_PAIRS: usize = 20;
const DERIV_EXPRS: usize = 200;
const DERIV_POINTS: usize = 10;
const DERIV_REL_TOL: f64 = 1e-4;
const DERIV_PASS_RATE: f64 = 0.99;
const UNIQUENESS_QUESTIONS: usize = 50;
const FUZZ_CASES: usize = 10_000;
const LOOP_SEEDS: u64 = 100;
const TEMPLATE_RUNS: usize = 10;
const TEMPLATE_SEEDS: u64 = 1000;
const CLI_LIMIT: Duration = Duration::from_secs(10);

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn parser_round_trip() -> Outcome {
    let mut rng = SplitMix64::seed_from_u64(7);
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut kinds = [false; 7];
    for _ in 0..ROUND_TRIP_EXPRS {
        let e = common::random_expr(&mut rng, ROUND_TRIP_DEPTH);
        mark_kinds(&e, &mut kinds);
        let latex = to_latex(&e);
        match parse_latex(&latex) {
            Ok(back) if back == e => {}
            Ok(_) => failures.push(format!("changed: {latex}")),
            Err(err) => failures.push(format!("{latex}: {err}")),
        }
    }
    let elapsed = start.elapsed();
    let all_kinds = kinds.iter().all(|k| *k);
    outcome(
        failures.is_empty() && all_kinds && elapsed < ROUND_TRIP_LIMIT,
        format!(
            "{}/{ROUND_TRIP_EXPRS} structurally equal, all node kinds: {all_kinds}, {:.2?} (limit {:?}){}",
            ROUND_TRIP_EXPRS - failures.len(),
            elapsed,
            ROUND_TRIP_LIMIT,
            first(&failures)
        ),
    )
}

fn mark_kinds(e: &Expr, seen: &mut [bool; 7]) {
    match e {
        Expr::Number(_) => seen[0] = true,
        Expr::Constant(_) => seen[1] = true,
        Expr::Variable(_) => seen[2] = true,
        Expr::Unary(_, a) => {
            seen[3] = true;
            mark_kinds(a, seen);
        }
        Expr::Binary(_, a, b) => {
            seen[4] = true;
            mark_kinds(a, seen);
            mark_kinds(b, seen);
        }
        Expr::Function(_, a) => {
            seen[5] = true;
            mark_kinds(a, seen);
        }
        Expr::Derivative(_, a) => {
            seen[6] = true;
            mark_kinds(a, seen);
        }
    }
}

fn first(failures: &[String]) -> String {
    failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
}

fn libm(f: Func, x: f64) -> f64 {
    match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Cot => 1.0 / x.tan(),
        Func::Sec => 1.0 / x.cos(),
        Func::Csc => 1.0 / x.sin(),
        _ => unreachable!(),
    }
}

fn exact_trig_table() -> Outcome {
    let funcs = [Func::Sin, Func::Cos, Func::Tan, Func::Cot, Func::Sec, Func::Csc];
    let mut checked = 0;
    let mut undefined = 0;
    let mut failures = Vec::new();
    let no_vars = HashMap::new();
    for den in [6i64, 4] {
        for k in 0..2 * den {
            let angle = Expr::div(Expr::mul(Expr::int(k), Expr::pi()), Expr::int(den));
            let x = k as f64 * PI / den as f64;
            for f in funcs {
                let e = Expr::func(f, angle.clone());
                let reference = libm(f, x);
                let defined = reference.abs() < 1e8;
                match (eval_exact(&e), eval_numeric(&e, &no_vars)) {
                    (Ok(exact), Ok(num)) if defined => {
                        checked += 1;
                        let v = exact.to_f64();
                        if (v - num).abs() > TRIG_TOL || (v - reference).abs() > TRIG_TOL {
                            failures.push(format!("{}({k}π/{den}): exact {v}, numeric {num}", f.name()));
                        }
                    }
                    (Err(_), _) if !defined => undefined += 1,
                    (a, b) => failures.push(format!(
                        "{}({k}π/{den}): exact {:?}, numeric {:?}, defined {defined}",
                        f.name(),
                        a.map(|v| v.to_f64()),
                        b
                    )),
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} defined points agree within {TRIG_TOL:e}, {undefined} poles rejected, {} failures{}",
            failures.len(),
            first(&failures)
        ),
    )
}

const IDENTITIES: [(&str, &str); 24] = [
    (r"\sin(2x)", r"2\sin(x)\cos(x)"),
    (r"\cos(2x)", r"\cos^2(x)-\sin^2(x)"),
    (r"\cos(2x)", r"1-2\sin^2(x)"),
    (r"\cos(2x)", r"2\cos^2(x)-1"),
    (r"\tan(2x)", r"\frac{2\tan(x)}{1-\tan^2(x)}"),
    (r"\sin^2(x)+\cos^2(x)", "1"),
    (r"1+\tan^2(x)", r"\sec^2(x)"),
    (r"1+\cot^2(x)", r"\csc^2(x)"),
    (r"\tan(x)", r"\frac{\sin(x)}{\cos(x)}"),
    (r"\cot(x)", r"\frac{\cos(x)}{\sin(x)}"),
    (r"\sin\left(\frac{\pi}{2}-x\right)", r"\cos(x)"),
    (r"\sin(x+y)", r"\sin(x)\cos(y)+\cos(x)\sin(y)"),
    (r"\frac{\sqrt{2}}{2}", r"\frac{1}{\sqrt{2}}"),
    (r"\frac{\sqrt{3}}{3}", r"\frac{1}{\sqrt{3}}"),
    (r"\sqrt{12}", r"2\sqrt{3}"),
    (r"\frac{3}{\sqrt{3}}", r"\sqrt{3}"),
    (r"\frac{1}{\sqrt{3}+1}", r"\frac{\sqrt{3}-1}{2}"),
    (r"\sin\left(\frac{\pi}{6}\right)", r"\frac{1}{2}"),
    (r"\cos\left(\frac{\pi}{4}\right)", r"\frac{\sqrt{2}}{2}"),
    (r"\cot\left(\frac{\pi}{3}\right)", r"\frac{\sqrt{3}}{3}"),
    (r"(x+1)^2", r"x^2+2x+1"),
    (r"(x-y)(x+y)", r"x^2-y^2"),
    (r"\exp(x+y)", r"\exp(x)\exp(y)"),
    (r"\frac{d}{dx}\left(x^3\right)", r"3x^2"),
];

const DISTINCT: [(&str, &str); 22] = [
    (r"\sin(2x)", r"2\sin(x)"),
    (r"\cos(2x)", r"2\cos(x)"),
    (r"\sin^2(x)+\cos^2(x)", "2"),
    (r"\tan(x)", r"\cot(x)"),
    (r"\sin(x)", r"-\sin(x)"),
    (r"\sec(x)", r"\frac{1}{\sin(x)}"),
    (r"\sin(x+y)", r"\sin(x)+\sin(y)"),
    (r"\frac{\sqrt{2}}{2}", r"\frac{\sqrt{3}}{2}"),
    (r"\frac{1}{\sqrt{2}}", r"\sqrt{2}"),
    (r"\frac{1}{3}", "0.333"),
    (r"\sin\left(\frac{\pi}{6}\right)", r"\frac{\sqrt{3}}{2}"),
    (r"\cos\left(\frac{\pi}{3}\right)", r"\sin\left(\frac{\pi}{3}\right)"),
    (r"\tan\left(\frac{\pi}{4}\right)", "0"),
    (r"\cot\left(\frac{\pi}{6}\right)", r"-\sqrt{3}"),
    (r"(x+1)^2", r"x^2+1"),
    (r"x-y", r"y-x"),
    (r"x^2", r"2x"),
    (r"\sqrt{x^2}", "x"),
    (r"x^3", r"x^3+0.001"),
    (r"\exp(x)", r"e x"),
    (r"\frac{d}{dx}\left(\sin(x)\right)", r"\sin(x)"),
    (r"\ln\left(\exp(x)\right)", r"x+1"),
];

fn equivalence_catalog() -> Outcome {
    let policy = EquivalencePolicy::default();
    let mut wrong = Vec::new();
    for (pairs, want) in [(&IDENTITIES[..], Verdict::Equivalent), (&DISTINCT[..], Verdict::Distinct)] {
        for (a, b) in pairs {
            let v = equivalent(&parse_latex(a).unwrap(), &parse_latex(b).unwrap(), &policy);
            if v != want {
                wrong.push(format!("{a} vs {b}: {v:?}"));
            }
        }
    }
    outcome(
        IDENTITIES.len() >= MIN_CATALOG_PAIRS && DISTINCT.len() >= MIN_CATALOG_PAIRS && wrong.is_empty(),
        format!(
            "{} identities, {} distinct pairs, seed {}, {} misclassified{}",
            IDENTITIES.len(),
            DISTINCT.len(),
            policy.seed,
            wrong.len(),
            first(&wrong)
        ),
    )
}

fn f_at(e: &Expr, x: f64) -> Option<f64> {
    eval_numeric(e, &common::env(&[("x", x)])).ok().filter(|v| v.is_finite())
}

/// Central difference, or `None` near a singularity.
fn central_difference(e: &Expr, x: f64) -> Option<f64> {
    let h = 1e-5 * x.abs().max(1.0);
    let samples: Option<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|k| f_at(e, x + k * h)).collect();
    let s = samples?;
    if s.iter().any(|v| v.abs() > 1e6) {
        return None;
    }
    let d1 = (s[3] - s[1]) / (2.0 * h);
    let d2 = (s[4] - s[0]) / (4.0 * h);
    // Richardson: disagreement between step sizes flags a nearby kink or pole.
    if (d1 - d2).abs() > 1e-3 * d1.abs().max(1.0) {
        return None;
    }
    Some((4.0 * d1 - d2) / 3.0)
}

fn derivative_check() -> Outcome {
    let mut rng = SplitMix64::seed_from_u64(11);
    let (mut points, mut passed, mut worst_expr_failures) = (0usize, 0usize, 0usize);
    let mut failures = Vec::new();
    let mut exprs = 0;
    let mut unsupported = Vec::new();
    while exprs < DERIV_EXPRS {
        let e = common::random_function(&mut rng, 4);
        let d = match differentiate(&e, "x") {
            Ok(d) => d,
            Err(err) => {
                unsupported.push(format!("{}: {err}", to_latex(&e)));
                continue;
            }
        };
        let mut checks = Vec::new();
        for _ in 0..500 {
            if checks.len() == DERIV_POINTS {
                break;
            }
            let x: f64 = rng.gen_range(-3.0..3.0);
            let (Some(fd), Some(sym)) = (central_difference(&e, x), f_at(&d, x)) else {
                continue;
            };
            checks.push((x, sym, fd));
        }
        if checks.len() < DERIV_POINTS {
            continue;
        }
        exprs += 1;
        let mut bad = 0;
        for (x, sym, fd) in checks {
            points += 1;
            let rel = (sym - fd).abs() / sym.abs().max(1.0);
            if rel <= DERIV_REL_TOL {
                passed += 1;
            } else {
                bad += 1;
                failures.push(format!("{} at x={x:.4}: {sym} vs {fd}", to_latex(&e)));
            }
        }
        worst_expr_failures = worst_expr_failures.max(bad);
    }
    let rate = passed as f64 / points as f64;
    outcome(
        rate >= DERIV_PASS_RATE && worst_expr_failures <= 1 && unsupported.is_empty(),
        format!(
            "{passed}/{points} point checks within {DERIV_REL_TOL:e} ({:.2}%), worst expression fails {worst_expr_failures} point(s), {} unsupported{}",
            rate * 100.0,
            unsupported.len(),
            first(&failures)
        ),
    )
}

fn uniqueness_detection() -> Outcome {
    let policy = EquivalencePolicy::default();
    let items = common::catalog_items();
    let mut rng = SplitMix64::seed_from_u64(3);
    let (mut caught, mut false_dupes, mut inconclusive) = (0, 0, 0);
    let mut misses = Vec::new();
    for i in 0..UNIQUENESS_QUESTIONS {
        let item = &items[i % items.len()];
        let (q, dup) = common::catalog_question(item, &mut rng, true);
        match check_uniqueness(&q, &policy).uniqueness {
            Uniqueness::DuplicateKey(ids) if ids == vec![dup.clone().unwrap()] => caught += 1,
            Uniqueness::Inconclusive(_) => {
                inconclusive += 1;
                misses.push(format!("{}: inconclusive", q.stem));
            }
            other => misses.push(format!("{}: {other:?}", q.stem)),
        }
        let (clean, _) = common::catalog_question(item, &mut rng, false);
        match check_uniqueness(&clean, &policy).uniqueness {
            Uniqueness::Unique => {}
            Uniqueness::DuplicateKey(_) => false_dupes += 1,
            Uniqueness::Inconclusive(_) => inconclusive += 1,
            Uniqueness::NoCorrect => misses.push(format!("{}: no correct", clean.stem)),
        }
    }
    outcome(
        caught == UNIQUENESS_QUESTIONS && false_dupes == 0 && inconclusive == 0 && misses.is_empty(),
        format!(
            "{caught}/{UNIQUENESS_QUESTIONS} injected flagged DuplicateKey, {false_dupes} false DuplicateKey in {UNIQUENESS_QUESTIONS} clean, {inconclusive} inconclusive on closed forms{}",
            first(&misses)
        ),
    )
}

fn malformed(class: &str) -> String {
    let items = common::catalog_items();
    let mut v = common::valid_payload(&items[..2]);
    let q = &mut v["questions"][1];
    match class {
        "missing feedback" => {
            q["options"][2].as_object_mut().unwrap().remove("feedback");
        }
        "ambiguous correct" => q["options"][3]["is_correct"] = Value::Bool(true),
        "truncated" => {
            let s = serde_json::to_string_pretty(&v).unwrap();
            return s[..s.len() / 2].to_string();
        }
        "schema violation" => q["options"] = Value::String("A, B, C, D".into()),
        "bad latex" => q["options"][1]["latex"] = Value::String(r"\frac{1}{".into()),
        "empty options" => q["options"] = Value::Array(vec![]),
        _ => unreachable!(),
    }
    v.to_string()
}

fn mutate<R: Rng>(rng: &mut R, base: &[u8]) -> Vec<u8> {
    let mut s = base.to_vec();
    const FRAGMENTS: [&[u8]; 10] = [
        b"{", b"}", b"[", b"]", b"\"", b"\\", b"null", br#"\frac{"#, b"\xff\xfe", b",\"is_correct\":true",
    ];
    for _ in 0..rng.gen_range(1..=8) {
        if s.is_empty() {
            s.push(b'{');
        }
        let i = rng.gen_range(0..s.len());
        match rng.gen_range(0..5) {
            0 => s[i] = rng.gen(),
            1 => {
                s.remove(i);
            }
            2 => s.truncate(i),
            3 => {
                let frag = FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())];
                s.splice(i..i, frag.iter().copied());
            }
            _ => {
                let j = rng.gen_range(i..s.len());
                let chunk = s[i..j].to_vec();
                s.splice(j..j, chunk);
            }
        }
    }
    s
}

fn malformation_suite() -> Outcome {
    let classes = [
        ("missing feedback", BackendErrorKind::MissingField),
        ("ambiguous correct", BackendErrorKind::AmbiguousCorrect),
        ("truncated", BackendErrorKind::Truncated),
        ("schema violation", BackendErrorKind::SchemaViolation),
        ("bad latex", BackendErrorKind::MathParseError),
        ("empty options", BackendErrorKind::SchemaViolation),
    ];
    let mut wrong = Vec::new();
    for (class, kind) in classes {
        match parse_response(&malformed(class)) {
            Err(e) if e.kind == kind => {}
            other => wrong.push(format!("{class}: {:?}", other.map(|q| q.len()).map_err(|e| e.kind))),
        }
    }
    let base = common::valid_payload(&common::catalog_items()[..3]).to_string();
    let mut rng = SplitMix64::seed_from_u64(99);
    let (mut crashes, mut rejected) = (0, 0);
    for _ in 0..FUZZ_CASES {
        let input = mutate(&mut rng, base.as_bytes());
        let text = String::from_utf8_lossy(&input).into_owned();
        match catch_unwind(AssertUnwindSafe(|| parse_response(&text))) {
            Ok(Err(_)) => rejected += 1,
            Ok(Ok(_)) => {}
            Err(_) => crashes += 1,
        }
    }
    outcome(
        wrong.is_empty() && crashes == 0,
        format!(
            "{}/6 classes matched, {FUZZ_CASES} fuzz cases: {crashes} crashes, {rejected} rejected{}",
            6 - wrong.len(),
            first(&wrong)
        ),
    )
}

fn regeneration_loop() -> Outcome {
    let policy = LoopPolicy::default();
    let mut notes = Vec::new();

    let spec = PromptSpec::trig_identities(3);
    let mock = MockBackend::new(42, vec![FaultBehavior::DuplicateKeyOption, FaultBehavior::Ok]);
    let converged = match generate_validated(&spec, &mock, &policy) {
        Ok(b) => {
            let ok = b.accepted.len() == 3
                && b.attempts_used == 2
                && b.accepted.iter().all(|a| a.attempt == 2)
                && b.prompts.get(1).is_some_and(|p| p.clauses.iter().any(|c| c == UNIQUENESS_CLAUSE));
            notes.push(format!("dup→ok: {} accepted on attempt {}", b.accepted.len(), b.attempts_used));
            ok
        }
        Err(e) => {
            notes.push(format!("dup→ok: {e}"));
            false
        }
    };

    let mock = MockBackend::new(42, vec![FaultBehavior::RateLimit, FaultBehavior::RateLimit, FaultBehavior::Ok]);
    let sleeper = Arc::new(RecordingSleeper::new());
    let audit = Arc::new(MemoryAudit::new());
    let retrying = Retrying::new(mock, RetryPolicy::default())
        .with_sleeper(sleeper.clone())
        .with_audit(audit.clone());
    let rate_limited = match generate_validated(&spec, &retrying, &policy) {
        Ok(b) => {
            let events = audit.events();
            let backend_events = events
                .iter()
                .filter(|e| matches!(e.kind, AuditKind::Generate | AuditKind::BackendError))
                .count();
            notes.push(format!(
                "rate_limit×2→ok: {} accepted, {} backoffs, {} audit events",
                b.accepted.len(),
                retrying.backoffs(),
                events.len()
            ));
            b.accepted.len() == 3
                && retrying.backoffs() == 2
                && sleeper.delays().len() == 2
                && events.len() == 3
                && backend_events == 3
        }
        Err(e) => {
            notes.push(format!("rate_limit×2→ok: {e}"));
            false
        }
    };

    let mut worst = 0;
    let mut over = 0;
    for seed in 0..LOOP_SEEDS {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let script: Vec<FaultBehavior> = (0..rng.gen_range(1..6))
            .map(|_| FaultBehavior::ALL[rng.gen_range(0..FaultBehavior::ALL.len())])
            .collect();
        let mock = MockBackend::new(seed, script);
        let attempts = match generate_validated(&PromptSpec::trig_identities(rng.gen_range(1..=5)), &mock, &policy) {
            Ok(b) => b.attempts_used,
            Err(LoopError::BackendExhausted { attempts, .. }) => attempts,
            Err(_) => u32::MAX,
        };
        let used = attempts.max(mock.calls() as u32);
        worst = worst.max(used);
        if used > policy.max_attempts {
            over += 1;
        }
    }
    notes.push(format!("{LOOP_SEEDS} random scripts: at most {worst} attempts (max {})", policy.max_attempts));
    outcome(converged && rate_limited && over == 0, notes.join("; "))
}

fn int_var(name: &str, min: i64, max: i64, condition: Option<&str>) -> VariableSpec {
    VariableSpec {
        name: name.into(),
        kind: VariableKind::Int { min, max },
        exclude: vec![],
        condition: condition.map(Into::into),
    }
}

fn constrained_template() -> QuestionTemplate {
    let opt = |body: &str, ok: bool| OptionTemplate {
        body: body.into(),
        feedback: "Divide both sides by ${a} after moving ${b}.".into(),
        is_correct: ok,
        text: false,
    };
    let mut r = VariableSpec {
        name: "r".into(),
        kind: VariableKind::Rational {
            min: -2,
            max: 2,
            denominator_max: 6,
        },
        exclude: vec!["0".into()],
        condition: Some("r != 1/2".into()),
    };
    r.exclude.push("1".into());
    QuestionTemplate {
        id: "scaled-linear".into(),
        stem_template: "Solve ${a}x + ${b} = ${c} for $x$, then scale by $${r}$.".into(),
        option_templates: vec![
            opt(r"\frac{${c}-${b}}{${a}}\cdot ${r}", true),
            opt(r"\frac{${c}+${b}}{${a}}\cdot ${r}", false),
            opt(r"\frac{${a}}{${c}-${b}}\cdot ${r}", false),
            opt(r"\left(${c}-${b}\right)\cdot ${a}\cdot ${r}", false),
        ],
        variables: vec![
            int_var("a", -9, 9, Some("a != 0 and a != 1 and a != -1")),
            int_var("b", -9, 9, Some("b != a and b != 0")),
            int_var("c", -20, 20, Some("c > b and c - b != a")),
            r,
        ],
        topic: "linear equations".into(),
        difficulty: Default::default(),
        distractor_strategies: vec![],
    }
}

fn template_determinism() -> Outcome {
    let t = constrained_template();
    let reference = serde_json::to_string(&instantiate_template(&t, 2024).unwrap()).unwrap();
    let identical = (0..TEMPLATE_RUNS)
        .filter(|_| serde_json::to_string(&instantiate_template(&t, 2024).unwrap()).unwrap() == reference)
        .count();
    let mut violations = Vec::new();
    for seed in 0..TEMPLATE_SEEDS {
        let vars = match draw_variables(&t.variables, seed) {
            Ok(v) => v,
            Err(e) => {
                violations.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let val = |n: &str| eval_numeric(&vars[n], &HashMap::new()).unwrap();
        let (a, b, c, r) = (val("a"), val("b"), val("c"), val("r"));
        let holds = a != 0.0
            && a.abs() != 1.0
            && b != a
            && b != 0.0
            && c > b
            && c - b != a
            && r != 0.0
            && r != 1.0
            && r != 0.5
            && (-2.0..=2.0).contains(&r)
            && (-9.0..=9.0).contains(&a)
            && (-20.0..=20.0).contains(&c)
            && a.fract() == 0.0;
        if !holds {
            violations.push(format!("seed {seed}: a={a} b={b} c={c} r={r}"));
        }
        match instantiate_template(&t, seed) {
            Ok(q) if q.stem.starts_with(&format!("Solve {a}x + {b} = {c} for")) => {}
            Ok(q) => violations.push(format!("seed {seed}: stem `{}` does not show the draw", q.stem)),
            Err(e) => violations.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(
        identical == TEMPLATE_RUNS && violations.is_empty(),
        format!(
            "{identical}/{TEMPLATE_RUNS} byte-identical runs, {} condition violations over {TEMPLATE_SEEDS} seeds{}",
            violations.len(),
            first(&violations)
        ),
    )
}

fn asked_value(stem: &str) -> Option<Expr> {
    let start = stem.find('$')? + 1;
    let end = start + stem[start..].find('$')?;
    parse_latex(&stem[start..end]).ok()
}

fn end_to_end_cli() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bank_path = dir.path().join("bank.jsonl");
    let audit_path = dir.path().join("audit.jsonl");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_mcqgen"))
        .arg("--audit")
        .arg(&audit_path)
        .args(["generate", "--backend", "mock", "--seed", "42", "--count", "3", "--out"])
        .arg(&bank_path)
        .current_dir(dir.path())
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    if !out.status.success() {
        return outcome(
            false,
            format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
        );
    }
    let (bank, _) = Bank::open(&bank_path).expect("bank loads");
    let mut good = 0;
    let mut notes = Vec::new();
    for rec in bank.records() {
        let q = &rec.question;
        let key_ok = match (asked_value(&q.stem), q.key().and_then(|k| k.body_ast.as_math())) {
            (Some(asked), Some(key)) => matches!((eval_exact(&asked), eval_exact(key)), (Ok(x), Ok(y)) if x == y),
            _ => false,
        };
        let accepted = rec.validation_report.is_accepted()
            && rec.status == RecordStatus::Candidate;
        if key_ok && accepted {
            good += 1;
        } else {
            notes.push(format!("{}: key ok {key_ok}, accepted {accepted}", q.stem));
        }
    }
    outcome(
        bank.len() == 3 && good == 3 && elapsed < CLI_LIMIT,
        format!(
            "{good}/3 accepted records with exact key match, {} in bank, {:.2?} (limit {:?}){}",
            bank.len(),
            elapsed,
            CLI_LIMIT,
            first(&notes)
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("parser round-trip", parser_round_trip),
        ("exact trig table", exact_trig_table),
        ("equivalence catalog", equivalence_catalog),
        ("derivative check", derivative_check),
        ("uniqueness detection", uniqueness_detection),
        ("malformation suite", malformation_suite),
        ("regeneration loop", regeneration_loop),
        ("template determinism", template_determinism),
        ("end-to-end cli", end_to_end_cli),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
