//! Hand-authored exact-value items served by the mock backend.

use crate::mathexpr::Func;
use crate::qmodel::DistractorStrategy;

#[derive(Debug, Clone, Copy)]
pub struct CatalogItem {
    pub func: Func,
    /// LaTeX for the angle, e.g. `\frac{2\pi}{3}`.
    pub angle: &'static str,
    pub key: &'static str,
    /// Distractors paired with the error each one models.
    pub distractors: [(&'static str, DistractorStrategy); 3],
    /// A different spelling of the key's value.
    pub key_equivalent: &'static str,
}

use DistractorStrategy::{EvaluationMethodError as Eval, IncorrectIdentity as Ident, SignInversion as Sign};

const fn item(
    func: Func,
    angle: &'static str,
    key: &'static str,
    d: [&'static str; 3],
    key_equivalent: &'static str,
) -> CatalogItem {
    CatalogItem {
        func,
        angle,
        key,
        distractors: [(d[0], Sign), (d[1], Ident), (d[2], Eval)],
        key_equivalent,
    }
}

const ITEMS: [CatalogItem; 21] = [
    item(Func::Sin, r"\frac{\pi}{6}", r"\frac{1}{2}", [r"-\frac{1}{2}", r"\frac{\sqrt{3}}{2}", r"\frac{\sqrt{2}}{2}"], r"\frac{2}{4}"),
    item(Func::Sin, r"\frac{\pi}{4}", r"\frac{\sqrt{2}}{2}", [r"-\frac{\sqrt{2}}{2}", "1", r"\frac{1}{2}"], r"\frac{1}{\sqrt{2}}"),
    item(Func::Sin, r"\frac{\pi}{3}", r"\frac{\sqrt{3}}{2}", [r"-\frac{\sqrt{3}}{2}", r"\frac{1}{2}", r"\sqrt{3}"], r"\frac{3}{2\sqrt{3}}"),
    item(Func::Sin, r"\frac{2\pi}{3}", r"\frac{\sqrt{3}}{2}", [r"-\frac{\sqrt{3}}{2}", r"-\frac{1}{2}", r"\frac{1}{2}"], r"\frac{\sqrt{12}}{4}"),
    item(Func::Sin, r"\frac{5\pi}{6}", r"\frac{1}{2}", [r"-\frac{1}{2}", r"-\frac{\sqrt{3}}{2}", r"\frac{\sqrt{3}}{2}"], r"\frac{\sqrt{2}}{2\sqrt{2}}"),
    item(Func::Sin, r"\frac{7\pi}{6}", r"-\frac{1}{2}", [r"\frac{1}{2}", r"-\frac{\sqrt{3}}{2}", r"\frac{\sqrt{3}}{2}"], r"-\frac{3}{6}"),
    item(Func::Sin, r"\frac{5\pi}{4}", r"-\frac{\sqrt{2}}{2}", [r"\frac{\sqrt{2}}{2}", "1", r"-\frac{1}{2}"], r"-\frac{1}{\sqrt{2}}"),
    item(Func::Cos, r"\frac{\pi}{6}", r"\frac{\sqrt{3}}{2}", [r"-\frac{\sqrt{3}}{2}", r"\frac{1}{2}", r"\frac{\sqrt{3}}{3}"], r"\frac{3}{\sqrt{12}}"),
    item(Func::Cos, r"\frac{\pi}{4}", r"\frac{\sqrt{2}}{2}", [r"-\frac{\sqrt{2}}{2}", r"\frac{1}{2}", r"\frac{\sqrt{3}}{2}"], r"\frac{1}{\sqrt{2}}"),
    item(Func::Cos, r"\frac{\pi}{3}", r"\frac{1}{2}", [r"-\frac{1}{2}", r"\frac{\sqrt{3}}{2}", r"\frac{\sqrt{2}}{2}"], r"\frac{\sqrt{3}}{2\sqrt{3}}"),
    item(Func::Cos, r"\frac{2\pi}{3}", r"-\frac{1}{2}", [r"\frac{1}{2}", r"\frac{\sqrt{3}}{2}", r"-\frac{\sqrt{3}}{2}"], r"-\frac{2}{4}"),
    item(Func::Cos, r"\frac{3\pi}{4}", r"-\frac{\sqrt{2}}{2}", [r"\frac{\sqrt{2}}{2}", "-1", r"-\frac{1}{2}"], r"-\frac{1}{\sqrt{2}}"),
    item(Func::Cos, r"\frac{5\pi}{6}", r"-\frac{\sqrt{3}}{2}", [r"\frac{\sqrt{3}}{2}", r"\frac{1}{2}", r"-\frac{1}{2}"], r"-\frac{3}{2\sqrt{3}}"),
    item(Func::Cos, r"\frac{4\pi}{3}", r"-\frac{1}{2}", [r"\frac{1}{2}", r"-\frac{\sqrt{3}}{2}", r"\frac{\sqrt{3}}{2}"], r"-\frac{\sqrt{3}}{2\sqrt{3}}"),
    item(Func::Cot, r"\frac{\pi}{6}", r"\sqrt{3}", [r"-\sqrt{3}", r"\frac{\sqrt{3}}{3}", r"\frac{1}{2}"], r"\frac{3}{\sqrt{3}}"),
    item(Func::Cot, r"\frac{\pi}{4}", "1", ["-1", "0", r"\frac{\sqrt{2}}{2}"], r"\frac{\sqrt{2}}{\sqrt{2}}"),
    item(Func::Cot, r"\frac{\pi}{3}", r"\frac{\sqrt{3}}{3}", [r"-\frac{\sqrt{3}}{3}", r"\sqrt{3}", r"\frac{1}{2}"], r"\frac{1}{\sqrt{3}}"),
    item(Func::Cot, r"\frac{2\pi}{3}", r"-\frac{\sqrt{3}}{3}", [r"\frac{\sqrt{3}}{3}", r"-\sqrt{3}", r"-\frac{1}{2}"], r"-\frac{1}{\sqrt{3}}"),
    item(Func::Cot, r"\frac{3\pi}{4}", "-1", ["1", r"-\frac{\sqrt{2}}{2}", "0"], r"-\frac{\sqrt{2}}{\sqrt{2}}"),
    item(Func::Cot, r"\frac{5\pi}{6}", r"-\sqrt{3}", [r"\sqrt{3}", r"-\frac{\sqrt{3}}{3}", r"-\frac{\sqrt{3}}{2}"], r"-\frac{3}{\sqrt{3}}"),
    item(Func::Cot, r"\frac{7\pi}{6}", r"\sqrt{3}", [r"-\sqrt{3}", r"\frac{\sqrt{3}}{3}", r"-\frac{\sqrt{3}}{2}"], r"\frac{6}{2\sqrt{3}}"),
];

pub fn catalog() -> &'static [CatalogItem] {
    &ITEMS
}

impl CatalogItem {
    /// LaTeX of the evaluated expression, e.g. `\sin\left(\frac{\pi}{6}\right)`.
    pub fn expression(&self) -> String {
        format!("\\{}\\left({}\\right)", self.func.name(), self.angle)
    }

    pub fn stem(&self) -> String {
        format!("What is the exact value of ${}$?", self.expression())
    }

    pub fn function_word(&self) -> &'static str {
        match self.func {
            Func::Sin => "sine",
            Func::Cos => "cosine",
            Func::Tan => "tangent",
            Func::Cot => "cotangent",
            Func::Sec => "secant",
            Func::Csc => "cosecant",
            _ => "function",
        }
    }

    pub fn key_feedback(&self) -> String {
        format!(
            "Correct. Find the reference angle of ${}$, read the {} value from the unit circle, and apply the sign of the quadrant.",
            self.angle,
            self.function_word()
        )
    }

    pub fn distractor_feedback(&self, strategy: DistractorStrategy) -> String {
        match strategy {
            DistractorStrategy::SignInversion => format!(
                "Incorrect. The magnitude is right but the sign is not: check which quadrant ${}$ lies in.",
                self.angle
            ),
            DistractorStrategy::IncorrectIdentity => format!(
                "Incorrect. This is the value of a different trigonometric function at ${}$. Recall the definition of {}.",
                self.angle,
                self.function_word()
            ),
            DistractorStrategy::EvaluationMethodError | DistractorStrategy::StepwiseError => format!(
                "Incorrect. This value belongs to a different special angle. Recompute the reference angle of ${}$ before reading the unit circle.",
                self.angle
            ),
        }
    }
}

/// Maps a prompt's function word (sine, cos, Cotangent, ...) to a function.
pub(crate) fn function_from_word(word: &str) -> Option<Func> {
    match word.trim().to_ascii_lowercase().as_str() {
        "sine" | "sin" => Some(Func::Sin),
        "cosine" | "cos" => Some(Func::Cos),
        "cotangent" | "cot" => Some(Func::Cot),
        "tangent" | "tan" => Some(Func::Tan),
        "secant" | "sec" => Some(Func::Sec),
        "cosecant" | "csc" => Some(Func::Csc),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalcore::{equivalent, eval_exact, EquivalencePolicy, Verdict};
    use crate::mathexpr::parse_latex;

    #[test]
    fn catalog_is_consistent() {
        let policy = EquivalencePolicy::default();
        for it in catalog() {
            let value = eval_exact(&parse_latex(&it.expression()).unwrap()).unwrap();
            let key = eval_exact(&parse_latex(it.key).unwrap()).unwrap();
            assert_eq!(value, key, "{}", it.expression());
            let eq = eval_exact(&parse_latex(it.key_equivalent).unwrap()).unwrap();
            assert_eq!(eq, key, "{}", it.key_equivalent);
            let mut all = vec![parse_latex(it.key).unwrap()];
            all.extend(it.distractors.iter().map(|(d, _)| parse_latex(d).unwrap()));
            for i in 0..all.len() {
                for j in i + 1..all.len() {
                    assert_eq!(equivalent(&all[i], &all[j], &policy), Verdict::Distinct, "{}", it.expression());
                }
            }
        }
    }
}
