use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Largest tree depth a parser will produce.
pub const MAX_DEPTH: usize = 64;
/// Largest node count a parser will produce.
pub const MAX_NODES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Pi,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Elementary functions of one argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Sec,
    Csc,
    Asin,
    Acos,
    Atan,
    Ln,
    Log10,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 14] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Cot,
        Func::Sec,
        Func::Csc,
        Func::Asin,
        Func::Acos,
        Func::Atan,
        Func::Ln,
        Func::Log10,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
    ];

    /// Name used by the plain infix syntax.
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Sec => "sec",
            Func::Csc => "csc",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
            Func::Ln => "ln",
            Func::Log10 => "log10",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "cot" => Func::Cot,
            "sec" => Func::Sec,
            "csc" => Func::Csc,
            "asin" | "arcsin" => Func::Asin,
            "acos" | "arccos" => Func::Acos,
            "atan" | "arctan" => Func::Atan,
            "ln" => Func::Ln,
            "log" | "log10" => Func::Log10,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn is_trig(self) -> bool {
        matches!(
            self,
            Func::Sin | Func::Cos | Func::Tan | Func::Cot | Func::Sec | Func::Csc
        )
    }
}

/// Semantic expression tree.
///
/// Numbers are exact rationals. The parsers only ever produce non-negative
/// numbers; negation is always an explicit [`UnaryOp::Neg`] node, and
/// [`Expr::from_rational`] keeps that shape for computed constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Number(BigRational),
    Constant(Constant),
    Variable(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Function(Func, Box<Expr>),
    /// d/d`var` of the body.
    Derivative(String, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Number(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(p: i64, q: i64) -> Expr {
        Expr::Number(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// Number node for a computed constant; negatives become `Neg(Number)`.
    pub fn from_rational(r: BigRational) -> Expr {
        if r.is_negative() {
            Expr::neg(Expr::Number(-r))
        } else {
            Expr::Number(r)
        }
    }

    pub fn var(name: &str) -> Expr {
        Expr::Variable(name.to_string())
    }

    pub fn pi() -> Expr {
        Expr::Constant(Constant::Pi)
    }

    pub fn euler() -> Expr {
        Expr::Constant(Constant::Euler)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, l, r)
    }

    pub fn sub(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, l, r)
    }

    pub fn mul(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, l, r)
    }

    pub fn div(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, l, r)
    }

    pub fn pow(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Pow, l, r)
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Function(f, Box::new(arg))
    }

    pub fn derivative(var: &str, body: Expr) -> Expr {
        Expr::Derivative(var.to_string(), Box::new(body))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Expr::Number(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Number(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Number(r) if r.is_one())
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Constant(_) | Expr::Variable(_) => 1,
            Expr::Unary(_, a) | Expr::Function(_, a) | Expr::Derivative(_, a) => {
                1 + a.node_count()
            }
            Expr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// Depth of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Constant(_) | Expr::Variable(_) => 1,
            Expr::Unary(_, a) | Expr::Function(_, a) | Expr::Derivative(_, a) => 1 + a.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn contains_derivative(&self) -> bool {
        match self {
            Expr::Derivative(..) => true,
            Expr::Number(_) | Expr::Constant(_) | Expr::Variable(_) => false,
            Expr::Unary(_, a) | Expr::Function(_, a) => a.contains_derivative(),
            Expr::Binary(_, l, r) => l.contains_derivative() || r.contains_derivative(),
        }
    }
}

/// Checks `[a-zA-Z][a-zA-Z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Byte range into a parser input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }

    pub fn at(pos: usize) -> Self {
        SourceSpan { start: pos, end: pos }
    }

    pub fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Formats a rational as a terminating decimal when it has one.
pub(crate) fn decimal_string(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return Some(r.numer().to_string());
    }
    let scaled = r * BigRational::from_integer(BigInt::from(10).pow(digits));
    debug_assert!(scaled.is_integer());
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let s = n.abs().to_string();
    let digits = digits as usize;
    let padded = if s.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
    } else {
        s
    };
    let (int_part, frac_part) = padded.split_at(padded.len() - digits);
    Some(format!("{sign}{int_part}.{frac_part}"))
}

/// Parses `123` or `1.25` into an exact rational.
pub(crate) fn parse_decimal(text: &str) -> Option<BigRational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = BigInt::from(10).pow(frac_part.len() as u32);
    Some(BigRational::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_formatting() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        assert_eq!(decimal_string(&r(1, 2)).as_deref(), Some("0.5"));
        assert_eq!(decimal_string(&r(5, 1)).as_deref(), Some("5"));
        assert_eq!(decimal_string(&r(1, 40)).as_deref(), Some("0.025"));
        assert_eq!(decimal_string(&r(-3, 4)).as_deref(), Some("-0.75"));
        assert_eq!(decimal_string(&r(1, 3)), None);
        assert_eq!(parse_decimal("0.025"), Some(r(1, 40)));
        assert_eq!(parse_decimal("12"), Some(r(12, 1)));
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("x"));
        assert!(is_identifier("x_1"));
        assert!(is_identifier("Rate2"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier("_x"));
        assert!(!is_identifier(""));
    }

    #[test]
    fn from_rational_keeps_numbers_nonnegative() {
        let e = Expr::from_rational(BigRational::new((-3).into(), 2.into()));
        assert_eq!(e, Expr::neg(Expr::rational(3, 2)));
    }
}
