//! Exact values of the form `a + b·√n` with rational `a`, `b`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::mathexpr::{Expr, Func};

use super::ExactError;

/// Radicands above this are not factored; values needing them are
/// reported as not representable.
const MAX_RADICAND: u64 = 1_000_000_000_000;
/// Largest integer exponent folded exactly.
pub(crate) const MAX_EXACT_EXPONENT: u64 = 4096;

/// `a + b·√n` where `n` is square-free and at least 2, or `b = 0` and `n = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactValue {
    a: BigRational,
    b: BigRational,
    n: u64,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Splits `m` into `(k, s)` with `m = k²·s` and `s` square-free.
fn square_free_split(m: u64) -> Option<(u64, u64)> {
    if m > MAX_RADICAND {
        return None;
    }
    let mut k = 1u64;
    let mut s = 1u64;
    let mut rest = m;
    let mut p = 2u64;
    while p * p <= rest {
        let mut count = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            count += 1;
        }
        k *= p.pow(count / 2);
        if count % 2 == 1 {
            s *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    s *= rest;
    Some((k, s))
}

impl ExactValue {
    pub fn rational(a: BigRational) -> Self {
        ExactValue {
            a,
            b: BigRational::zero(),
            n: 0,
        }
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(rat(n))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    /// `a + b·√m`, normalising `m` to its square-free part.
    pub fn new(a: BigRational, b: BigRational, m: u64) -> Result<Self, ExactError> {
        if b.is_zero() || m == 0 {
            return Ok(Self::rational(a));
        }
        let (k, s) = square_free_split(m).ok_or(ExactError::NotRepresentable)?;
        let b = b * BigRational::from_integer(BigInt::from(k));
        if s == 1 {
            return Ok(Self::rational(a + b));
        }
        Ok(ExactValue { a, b, n: s })
    }

    /// `b·√m`.
    pub fn surd(b: BigRational, m: u64) -> Result<Self, ExactError> {
        Self::new(BigRational::zero(), b, m)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn surd_coefficient(&self) -> &BigRational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.n
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.b.is_zero().then_some(&self.a)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn neg(&self) -> Self {
        ExactValue {
            a: -self.a.clone(),
            b: -self.b.clone(),
            n: self.n,
        }
    }

    fn same_field(&self, other: &Self) -> Option<u64> {
        match (self.n, other.n) {
            (0, m) | (m, 0) => Some(m),
            (m, k) if m == k => Some(m),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExactError> {
        let n = self.same_field(other).ok_or(ExactError::NotRepresentable)?;
        Self::new(&self.a + &other.a, &self.b + &other.b, n)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ExactError> {
        if let Some(n) = self.same_field(other) {
            // (a + b√n)(c + d√n) = (ac + bd·n) + (ad + bc)√n
            let nr = BigRational::from_integer(BigInt::from(n));
            let a = &self.a * &other.a + &self.b * &other.b * nr;
            let b = &self.a * &other.b + &self.b * &other.a;
            return Self::new(a, b, n);
        }
        // Distinct radicals only combine when both values are pure surds.
        if self.a.is_zero() && other.a.is_zero() {
            let m = self.n.checked_mul(other.n).ok_or(ExactError::NotRepresentable)?;
            return Self::surd(&self.b * &other.b, m);
        }
        Err(ExactError::NotRepresentable)
    }

    pub fn recip(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::Domain("division by zero".into()));
        }
        // 1/(a + b√n) = (a - b√n)/(a² - b²n)
        let nr = BigRational::from_integer(BigInt::from(self.n));
        let den = &self.a * &self.a - &self.b * &self.b * nr;
        if den.is_zero() {
            // Only possible when n is a perfect square, which normalisation excludes.
            return Err(ExactError::NotRepresentable);
        }
        Self::new(&self.a / &den, -&self.b / &den, self.n)
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExactError> {
        self.mul(&other.recip()?)
    }

    /// Sign of the value, decided exactly.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        // Opposite signs: compare a² with b²·n.
        let nr = BigRational::from_integer(BigInt::from(self.n));
        let a2 = &self.a * &self.a;
        let b2n = &self.b * &self.b * nr;
        match a2.cmp(&b2n) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Square root, available for non-negative rationals only.
    pub fn sqrt(&self) -> Result<Self, ExactError> {
        if self.signum() == Ordering::Less {
            return Err(ExactError::Domain("square root of a negative number".into()));
        }
        let Some(r) = self.as_rational() else {
            return Err(ExactError::NotRepresentable);
        };
        // √(p/q) = √(p·q)/q
        let m = (r.numer() * r.denom()).to_u64().ok_or(ExactError::NotRepresentable)?;
        Self::surd(BigRational::new(BigInt::one(), r.denom().clone()), m)
    }

    pub fn powi(&self, k: i64) -> Result<Self, ExactError> {
        if k.unsigned_abs() > MAX_EXACT_EXPONENT {
            return Err(ExactError::NotRepresentable);
        }
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut result = ExactValue::one();
        let mut base = self.clone();
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Real power with a rational exponent.
    pub fn pow(&self, exponent: &ExactValue) -> Result<Self, ExactError> {
        let Some(e) = exponent.as_rational() else {
            return Err(ExactError::NotRepresentable);
        };
        if e.is_integer() {
            let k = e.to_integer().to_i64().ok_or(ExactError::NotRepresentable)?;
            if self.is_zero() && k < 0 {
                return Err(ExactError::Domain("zero raised to a negative power".into()));
            }
            return self.powi(k);
        }
        if self.signum() == Ordering::Less {
            return Err(ExactError::Domain(
                "non-integer power of a negative number".into(),
            ));
        }
        if self.is_zero() {
            return if e.is_positive() {
                Ok(ExactValue::zero())
            } else {
                Err(ExactError::Domain("zero raised to a negative power".into()))
            };
        }
        let Some(base) = self.as_rational() else {
            return Err(ExactError::NotRepresentable);
        };
        let q = e.denom().to_u32().ok_or(ExactError::NotRepresentable)?;
        let p = e.numer().to_i64().ok_or(ExactError::NotRepresentable)?;
        // Exact q-th root of the rational base, if there is one.
        let root_of = |n: &BigInt| -> Option<BigInt> {
            let r = n.nth_root(q);
            (r.pow(q) == *n).then_some(r)
        };
        if let (Some(rn), Some(rd)) = (root_of(base.numer()), root_of(base.denom())) {
            return ExactValue::rational(BigRational::new(rn, rd)).powi(p);
        }
        if q == 2 {
            return self.sqrt()?.powi(p);
        }
        if q % 2 == 0 {
            // (x^(1/2))^(1/(q/2)) may still resolve, e.g. 4^(1/4) = √2.
            let half = ExactValue::rational(BigRational::new(BigInt::from(p), BigInt::from(q / 2)));
            if let Ok(v) = self.sqrt().and_then(|s| s.pow(&half)) {
                return Ok(v);
            }
        }
        Err(ExactError::NotRepresentable)
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        if self.b.is_zero() {
            return a;
        }
        a + self.b.to_f64().unwrap_or(f64::NAN) * (self.n as f64).sqrt()
    }

    /// Canonical expression: `a`, `b·√n`, or `a ± |b|·√n`.
    pub fn to_expr(&self) -> Expr {
        if self.b.is_zero() {
            return Expr::from_rational(self.a.clone());
        }
        let root = Expr::func(Func::Sqrt, Expr::Number(BigRational::from_integer(BigInt::from(self.n))));
        let mag = self.b.abs();
        let surd = if mag.is_one() {
            root
        } else {
            Expr::mul(Expr::Number(mag), root)
        };
        if self.a.is_zero() {
            return if self.b.is_negative() { Expr::neg(surd) } else { surd };
        }
        let a = Expr::from_rational(self.a.clone());
        if self.b.is_negative() {
            Expr::sub(a, surd)
        } else {
            Expr::add(a, surd)
        }
    }

    /// Total digits in the rational parts; used to avoid folding huge constants.
    pub(crate) fn size_digits(&self) -> usize {
        [self.a.numer(), self.a.denom(), self.b.numer(), self.b.denom()]
            .iter()
            .map(|n| n.bits() as usize)
            .sum::<usize>()
            / 3
    }
}

impl PartialOrd for ExactValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sub(other) {
            Ok(d) => Some(d.signum()),
            Err(_) => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        write!(f, "{} + ({})·√{}", self.a, self.b, self.n)
    }
}

/// Wire form used in validation reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactValueRepr {
    pub a: String,
    pub b: String,
    pub n: u64,
}

impl From<&ExactValue> for ExactValueRepr {
    fn from(v: &ExactValue) -> Self {
        ExactValueRepr {
            a: v.a.to_string(),
            b: v.b.to_string(),
            n: v.n,
        }
    }
}

impl Serialize for ExactValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ExactValueRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = ExactValueRepr::deserialize(d)?;
        let a: BigRational = r.a.parse().map_err(D::Error::custom)?;
        let b: BigRational = r.b.parse().map_err(D::Error::custom)?;
        ExactValue::new(a, b, r.n).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn normalisation() {
        let v = ExactValue::surd(q(1, 1), 8).unwrap();
        assert_eq!(v, ExactValue::surd(q(2, 1), 2).unwrap());
        let v = ExactValue::surd(q(3, 1), 9).unwrap();
        assert_eq!(v, ExactValue::integer(9));
        assert_eq!(square_free_split(72), Some((6, 2)));
        assert_eq!(square_free_split(1), Some((1, 1)));
    }

    #[test]
    fn rationalisation() {
        // 1/√2 = √2/2
        let r2 = ExactValue::surd(q(1, 1), 2).unwrap();
        assert_eq!(r2.recip().unwrap(), ExactValue::surd(q(1, 2), 2).unwrap());
        // (1 + √3)(1 - √3) = -2
        let a = ExactValue::new(q(1, 1), q(1, 1), 3).unwrap();
        let b = ExactValue::new(q(1, 1), q(-1, 1), 3).unwrap();
        assert_eq!(a.mul(&b).unwrap(), ExactValue::integer(-2));
        // √2·√3 = √6 and √2 + √3 leaves the field.
        let r3 = ExactValue::surd(q(1, 1), 3).unwrap();
        assert_eq!(r2.mul(&r3).unwrap(), ExactValue::surd(q(1, 1), 6).unwrap());
        assert_eq!(r2.add(&r3), Err(ExactError::NotRepresentable));
    }

    #[test]
    fn signs() {
        // 1 - √2 < 0, 2 - √3 > 0
        assert_eq!(ExactValue::new(q(1, 1), q(-1, 1), 2).unwrap().signum(), Ordering::Less);
        assert_eq!(ExactValue::new(q(2, 1), q(-1, 1), 3).unwrap().signum(), Ordering::Greater);
        assert_eq!(ExactValue::zero().signum(), Ordering::Equal);
    }

    #[test]
    fn powers() {
        let half = ExactValue::rational(q(1, 2));
        assert_eq!(ExactValue::integer(8).pow(&ExactValue::rational(q(1, 3))).unwrap(), ExactValue::integer(2));
        assert_eq!(ExactValue::integer(2).pow(&half).unwrap(), ExactValue::surd(q(1, 1), 2).unwrap());
        assert_eq!(
            ExactValue::integer(4).pow(&ExactValue::rational(q(1, 4))).unwrap(),
            ExactValue::surd(q(1, 1), 2).unwrap()
        );
        assert!(matches!(ExactValue::integer(-8).pow(&ExactValue::rational(q(1, 3))), Err(ExactError::Domain(_))));
        assert!(matches!(ExactValue::zero().pow(&ExactValue::integer(-1)), Err(ExactError::Domain(_))));
        assert_eq!(ExactValue::integer(2).pow(&ExactValue::rational(q(1, 3))), Err(ExactError::NotRepresentable));
        assert_eq!(ExactValue::integer(0).powi(0).unwrap(), ExactValue::one());
    }

    #[test]
    fn canonical_expression() {
        let v = ExactValue::surd(q(1, 2), 2).unwrap();
        assert_eq!(
            v.to_expr(),
            Expr::mul(Expr::rational(1, 2), Expr::func(Func::Sqrt, Expr::int(2)))
        );
        let v = ExactValue::new(q(-1, 1), q(-1, 1), 3).unwrap();
        assert_eq!(
            v.to_expr(),
            Expr::sub(Expr::neg(Expr::int(1)), Expr::func(Func::Sqrt, Expr::int(3)))
        );
    }
}
