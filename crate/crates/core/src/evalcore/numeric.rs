//! Floating-point evaluation with explicit domain checks.

use std::collections::HashMap;

use num_traits::ToPrimitive;

use crate::mathexpr::{BinaryOp, Constant, Expr, Func, UnaryOp};

use super::{differentiate, EvalError};

/// Magnitude below which a denominator counts as zero.
pub const SINGULARITY_EPS: f64 = 1e-12;

/// Evaluates `e` with the given variable values.
///
/// Division by a near-zero value, poles of the reciprocal trig functions,
/// logarithms of non-positive values, even roots of negatives and
/// non-finite results all fail with [`EvalError::Domain`].
pub fn eval_numeric(e: &Expr, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
    let v = eval(e, env)?;
    finite(v)
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain("result is not finite".into()))
    }
}

fn domain(msg: &str) -> EvalError {
    EvalError::Domain(msg.to_string())
}

fn denominator(d: f64) -> Result<f64, EvalError> {
    if d.abs() < SINGULARITY_EPS {
        Err(domain("division by zero"))
    } else {
        Ok(d)
    }
}

fn eval(e: &Expr, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Number(r) => r.to_f64().unwrap_or(f64::NAN),
        Expr::Constant(Constant::Pi) => std::f64::consts::PI,
        Expr::Constant(Constant::Euler) => std::f64::consts::E,
        Expr::Variable(name) => *env
            .get(name)
            .ok_or_else(|| EvalError::Unbound(name.clone()))?,
        Expr::Unary(UnaryOp::Neg, a) => -eval(a, env)?,
        Expr::Binary(op, l, r) => {
            let (a, b) = (eval(l, env)?, eval(r, env)?);
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => a / denominator(b)?,
                BinaryOp::Pow => power(a, b)?,
            }
        }
        Expr::Function(f, a) => function(*f, eval(a, env)?)?,
        Expr::Derivative(var, body) => {
            let d = differentiate(body, var).map_err(|err| domain(&err.to_string()))?;
            eval(&d, env)?
        }
    };
    finite(v)
}

fn power(base: f64, exp: f64) -> Result<f64, EvalError> {
    let integral = exp.fract() == 0.0;
    if base < 0.0 && !integral {
        return Err(domain("non-integer power of a negative number"));
    }
    if exp < 0.0 {
        denominator(base)?;
    }
    if integral && exp.abs() <= i32::MAX as f64 {
        return Ok(base.powi(exp as i32));
    }
    Ok(base.powf(exp))
}

fn function(f: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.sin() / denominator(x.cos()).map_err(|_| domain("tan is undefined here"))?,
        Func::Cot => x.cos() / denominator(x.sin()).map_err(|_| domain("cot is undefined here"))?,
        Func::Sec => 1.0 / denominator(x.cos()).map_err(|_| domain("sec is undefined here"))?,
        Func::Csc => 1.0 / denominator(x.sin()).map_err(|_| domain("csc is undefined here"))?,
        Func::Asin | Func::Acos if !(-1.0..=1.0).contains(&x) => {
            return Err(domain("inverse trig argument outside [-1, 1]"))
        }
        Func::Asin => x.asin(),
        Func::Acos => x.acos(),
        Func::Atan => x.atan(),
        Func::Ln | Func::Log10 if x <= 0.0 => return Err(domain("logarithm of a non-positive number")),
        Func::Ln => x.ln(),
        Func::Log10 => x.log10(),
        Func::Exp => x.exp(),
        Func::Sqrt if x < 0.0 => return Err(domain("square root of a negative number")),
        Func::Sqrt => x.sqrt(),
        Func::Abs => x.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathexpr::parse_infix;

    fn ev(s: &str, x: f64) -> Result<f64, EvalError> {
        eval_numeric(&parse_infix(s).unwrap(), &HashMap::from([("x".to_string(), x)]))
    }

    #[test]
    fn examples() {
        assert!((ev("2*sin(x)*cos(x)", 0.3).unwrap() - (0.6f64).sin()).abs() < 1e-15);
        assert!(matches!(ev("1/x", 0.0), Err(EvalError::Domain(_))));
        assert!(matches!(ev("1/x", 1e-13), Err(EvalError::Domain(_))));
        assert!(ev("1/x", 1e-11).is_ok());
        assert!(matches!(ev("tan(pi/2)", 0.0), Err(EvalError::Domain(_))));
        assert!(matches!(ev("csc(pi)", 0.0), Err(EvalError::Domain(_))));
        assert!(matches!(ev("ln(x)", -1.0), Err(EvalError::Domain(_))));
        assert!(matches!(ev("x^0.5", -1.0), Err(EvalError::Domain(_))));
        assert_eq!(ev("x^3", -2.0).unwrap(), -8.0);
        assert!(matches!(ev("exp(x)", 1000.0), Err(EvalError::Domain(_))));
        assert_eq!(ev("y", 0.0), Err(EvalError::Unbound("y".into())));
        assert!((ev("diff(x^3, x)", 2.0).unwrap() - 12.0).abs() < 1e-12);
    }
}
