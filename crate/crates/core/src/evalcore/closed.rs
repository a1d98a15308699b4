//! Exact evaluation of closed expressions, including the special-angle table.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::mathexpr::{BinaryOp, Constant, Expr, Func, UnaryOp};

use super::exact::ExactValue;
use super::{differentiate, ExactError};

/// Evaluates a closed expression exactly in the field `ℚ(√n)`.
///
/// Fails with [`ExactError::NotRepresentable`] when the value leaves the
/// field (for example `π` alone, `sin(1)`, or `√2 + √3`).
pub fn eval_exact(e: &Expr) -> Result<ExactValue, ExactError> {
    match e {
        Expr::Number(r) => Ok(ExactValue::rational(r.clone())),
        Expr::Constant(_) => Err(ExactError::NotRepresentable),
        Expr::Variable(v) => Err(ExactError::Unbound(v.clone())),
        Expr::Unary(UnaryOp::Neg, a) => Ok(eval_exact(a)?.neg()),
        Expr::Binary(op, l, r) => {
            let (l, r) = (eval_exact(l)?, eval_exact(r)?);
            match op {
                BinaryOp::Add => l.add(&r),
                BinaryOp::Sub => l.sub(&r),
                BinaryOp::Mul => l.mul(&r),
                BinaryOp::Div => l.div(&r),
                BinaryOp::Pow => l.pow(&r),
            }
        }
        Expr::Function(f, a) => eval_function(*f, a),
        Expr::Derivative(var, body) => {
            let d = differentiate(body, var).map_err(|_| ExactError::NotRepresentable)?;
            eval_exact(&d)
        }
    }
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn eval_function(f: Func, arg: &Expr) -> Result<ExactValue, ExactError> {
    if f.is_trig() {
        let m = pi_multiple(arg)?.ok_or(ExactError::NotRepresentable)?;
        return trig_at(f, &m);
    }
    match f {
        Func::Ln if matches!(arg, Expr::Constant(Constant::Euler)) => Ok(ExactValue::one()),
        Func::Exp => {
            let v = eval_exact(arg)?;
            if v.is_zero() {
                Ok(ExactValue::one())
            } else {
                Err(ExactError::NotRepresentable)
            }
        }
        Func::Ln | Func::Log10 => {
            let v = eval_exact(arg)?;
            if v.signum() != Ordering::Greater {
                return Err(ExactError::Domain("logarithm of a non-positive number".into()));
            }
            let r = v.as_rational().ok_or(ExactError::NotRepresentable)?;
            if r.is_one() {
                return Ok(ExactValue::zero());
            }
            if f == Func::Log10 {
                if let Some(k) = power_of_ten(r) {
                    return Ok(ExactValue::integer(k));
                }
            }
            Err(ExactError::NotRepresentable)
        }
        Func::Sqrt => eval_exact(arg)?.sqrt(),
        Func::Abs => Ok(eval_exact(arg)?.abs()),
        Func::Asin | Func::Acos | Func::Atan => {
            let v = eval_exact(arg)?;
            let one = ExactValue::one();
            if f != Func::Atan && (v > one || v < one.neg()) {
                return Err(ExactError::Domain(format!("{} argument outside [-1, 1]", f.name())));
            }
            match f {
                Func::Asin | Func::Atan if v.is_zero() => Ok(ExactValue::zero()),
                Func::Acos if v == one => Ok(ExactValue::zero()),
                _ => Err(ExactError::NotRepresentable),
            }
        }
        _ => unreachable!("trig handled above"),
    }
}

fn power_of_ten(r: &BigRational) -> Option<i64> {
    let ten = BigInt::from(10);
    let (mut n, negative) = if r.denom().is_one() {
        (r.numer().clone(), false)
    } else if r.numer().is_one() {
        (r.denom().clone(), true)
    } else {
        return None;
    };
    let mut k = 0i64;
    while n > BigInt::one() {
        let (q, rem) = n.div_rem(&ten);
        if !rem.is_zero() {
            return None;
        }
        n = q;
        k += 1;
    }
    Some(if negative { -k } else { k })
}

/// The rational `m` with `arg = m·π`, when the argument has that shape.
pub(crate) fn pi_multiple(arg: &Expr) -> Result<Option<BigRational>, ExactError> {
    let rational = |e: &Expr| -> Option<BigRational> {
        eval_exact(e).ok().and_then(|v| v.as_rational().cloned())
    };
    Ok(match arg {
        Expr::Constant(Constant::Pi) => Some(BigRational::one()),
        Expr::Unary(UnaryOp::Neg, a) => pi_multiple(a)?.map(|m| -m),
        Expr::Binary(op @ (BinaryOp::Add | BinaryOp::Sub), l, r) => {
            match (pi_multiple(l)?, pi_multiple(r)?) {
                (Some(a), Some(b)) if *op == BinaryOp::Add => Some(a + b),
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            }
        }
        Expr::Binary(BinaryOp::Mul, l, r) => match (pi_multiple(l)?, pi_multiple(r)?) {
            (Some(m), _) if !m.is_zero() => rational(r).map(|k| m * k),
            (_, Some(m)) if !m.is_zero() => rational(l).map(|k| k * m),
            (Some(_), _) | (_, Some(_)) => Some(BigRational::zero()),
            _ => None,
        },
        Expr::Binary(BinaryOp::Div, l, r) => match pi_multiple(l)? {
            Some(m) => match rational(r) {
                Some(k) if k.is_zero() => return Err(ExactError::Domain("division by zero".into())),
                Some(k) => Some(m / k),
                None => None,
            },
            None => None,
        },
        other => match eval_exact(other) {
            Ok(v) if v.is_zero() => Some(BigRational::zero()),
            Err(e @ ExactError::Domain(_)) => return Err(e),
            _ => None,
        },
    })
}

/// `sin(uπ/12)` for `u ∈ {0, 2, 3, 4, 6}`.
fn first_quadrant_sine(u: i64) -> ExactValue {
    let half = BigRational::new(1.into(), 2.into());
    match u {
        0 => ExactValue::zero(),
        2 => ExactValue::rational(half),
        3 => ExactValue::surd(half, 2).expect("small radicand"),
        4 => ExactValue::surd(half, 3).expect("small radicand"),
        6 => ExactValue::one(),
        _ => unreachable!("not a tabulated angle"),
    }
}

/// Sine of `tπ/12` with `t` reduced to `0..24`.
fn table_sine(t: i64) -> ExactValue {
    match t {
        0..=6 => first_quadrant_sine(t),
        7..=12 => first_quadrant_sine(12 - t),
        13..=18 => first_quadrant_sine(t - 12).neg(),
        _ => first_quadrant_sine(24 - t).neg(),
    }
}

/// Exact trig value at `m·π`, defined for multiples of `π/6` and `π/4`.
pub(crate) fn trig_at(f: Func, m: &BigRational) -> Result<ExactValue, ExactError> {
    let twelfths = m * int(12);
    if !twelfths.is_integer() {
        return Err(ExactError::NotRepresentable);
    }
    let t = twelfths
        .to_integer()
        .mod_floor(&BigInt::from(24))
        .to_i64()
        .expect("reduced mod 24");
    if t % 2 != 0 && t % 3 != 0 {
        return Err(ExactError::NotRepresentable);
    }
    let sin = table_sine(t);
    let cos = table_sine((t + 6) % 24);
    let pole = |what: &str| ExactError::Domain(format!("{what} is undefined at this angle"));
    match f {
        Func::Sin => Ok(sin),
        Func::Cos => Ok(cos),
        Func::Tan if cos.is_zero() => Err(pole("tan")),
        Func::Tan => sin.div(&cos),
        Func::Cot if sin.is_zero() => Err(pole("cot")),
        Func::Cot => cos.div(&sin),
        Func::Sec if cos.is_zero() => Err(pole("sec")),
        Func::Sec => cos.recip(),
        Func::Csc if sin.is_zero() => Err(pole("csc")),
        Func::Csc => sin.recip(),
        _ => Err(ExactError::NotRepresentable),
    }
}

pub(crate) fn exceeds_fold_size(v: &ExactValue) -> bool {
    v.size_digits() > 64 || v.rational_part().numer().abs().bits() > 200
}
