//! Symbolic differentiation.

use num_traits::One;

use crate::mathexpr::{free_variables, BinaryOp, Expr, Func, UnaryOp, MAX_NODES};

use super::{simplify, DiffError};

/// Derivative of `e` with respect to `var`, simplified.
pub fn differentiate(e: &Expr, var: &str) -> Result<Expr, DiffError> {
    let d = Differ { var }.d(e)?;
    let d = simplify(&d);
    if d.node_count() > MAX_NODES {
        return Err(DiffError::UnsupportedDerivative(format!(
            "derivative exceeds {MAX_NODES} nodes"
        )));
    }
    Ok(d)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.is_zero(), b.is_zero()) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::add(a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.is_zero(), b.is_zero()) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => Expr::sub(a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        Expr::int(0)
    } else if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        Expr::mul(a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        Expr::int(0)
    } else if b.is_one() {
        a
    } else {
        Expr::div(a, b)
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        z if z.is_zero() => z,
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::neg(other),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if b.is_one() {
        a
    } else if b.is_zero() {
        Expr::int(1)
    } else {
        Expr::pow(a, b)
    }
}

fn f(func: Func, a: Expr) -> Expr {
    Expr::func(func, a)
}

struct Differ<'a> {
    var: &'a str,
}

impl Differ<'_> {
    fn depends(&self, e: &Expr) -> bool {
        free_variables(e).contains(self.var)
    }

    fn d(&self, e: &Expr) -> Result<Expr, DiffError> {
        if !e.contains_derivative() && !self.depends(e) {
            return Ok(Expr::int(0));
        }
        Ok(match e {
            Expr::Number(_) | Expr::Constant(_) => Expr::int(0),
            Expr::Variable(v) => Expr::int(if v == self.var { 1 } else { 0 }),
            Expr::Unary(UnaryOp::Neg, a) => neg(self.d(a)?),
            Expr::Derivative(w, body) => {
                let inner = Differ { var: w }.d(body)?;
                self.d(&simplify(&inner))?
            }
            Expr::Binary(op, l, r) => {
                let (u, v) = (l.as_ref().clone(), r.as_ref().clone());
                match op {
                    BinaryOp::Add => add(self.d(&u)?, self.d(&v)?),
                    BinaryOp::Sub => sub(self.d(&u)?, self.d(&v)?),
                    BinaryOp::Mul => add(mul(self.d(&u)?, v.clone()), mul(u.clone(), self.d(&v)?)),
                    BinaryOp::Div => div(
                        sub(mul(self.d(&u)?, v.clone()), mul(u.clone(), self.d(&v)?)),
                        pow(v.clone(), Expr::int(2)),
                    ),
                    BinaryOp::Pow => self.d_pow(u, v)?,
                }
            }
            Expr::Function(func, a) => {
                let u = a.as_ref().clone();
                let du = self.d(&u)?;
                mul(self.outer(*func, u), du)
            }
        })
    }

    fn d_pow(&self, u: Expr, v: Expr) -> Result<Expr, DiffError> {
        let du = self.d(&u)?;
        let dv = self.d(&v)?;
        if dv.is_zero() {
            // v·u^(v-1)·u'
            let lowered = match &v {
                Expr::Number(n) => Expr::from_rational(n - num_rational::BigRational::one()),
                _ => sub(v.clone(), Expr::int(1)),
            };
            return Ok(mul(mul(v, pow(u, lowered)), du));
        }
        let whole = Expr::pow(u.clone(), v.clone());
        if du.is_zero() {
            // u^v·ln(u)·v'
            return Ok(mul(mul(whole, f(Func::Ln, u)), dv));
        }
        // u^v·(v'·ln(u) + v·u'/u)
        Ok(mul(
            whole,
            add(mul(dv, f(Func::Ln, u.clone())), div(mul(v, du), u)),
        ))
    }

    /// Derivative of the outer function evaluated at `u`.
    fn outer(&self, func: Func, u: Expr) -> Expr {
        let two = || Expr::int(2);
        let one_minus_sq = || sub(Expr::int(1), pow(u.clone(), two()));
        match func {
            Func::Sin => f(Func::Cos, u),
            Func::Cos => neg(f(Func::Sin, u)),
            Func::Tan => pow(f(Func::Sec, u), two()),
            Func::Cot => neg(pow(f(Func::Csc, u), two())),
            Func::Sec => mul(f(Func::Sec, u.clone()), f(Func::Tan, u)),
            Func::Csc => neg(mul(f(Func::Csc, u.clone()), f(Func::Cot, u))),
            Func::Asin => div(Expr::int(1), f(Func::Sqrt, one_minus_sq())),
            Func::Acos => neg(div(Expr::int(1), f(Func::Sqrt, one_minus_sq()))),
            Func::Atan => div(Expr::int(1), add(Expr::int(1), pow(u, two()))),
            Func::Ln => div(Expr::int(1), u),
            Func::Log10 => div(Expr::int(1), mul(u, f(Func::Ln, Expr::int(10)))),
            Func::Exp => f(Func::Exp, u),
            Func::Sqrt => div(Expr::int(1), mul(two(), f(Func::Sqrt, u))),
            Func::Abs => div(u.clone(), f(Func::Abs, u)),
        }
    }
}

/// Replaces every derivative node by its symbolic result.
pub(crate) fn expand_derivatives(e: &Expr) -> Result<Expr, DiffError> {
    if !e.contains_derivative() {
        return Ok(e.clone());
    }
    Ok(match e {
        Expr::Derivative(var, body) => differentiate(&expand_derivatives(body)?, var)?,
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(expand_derivatives(a)?)),
        Expr::Function(func, a) => Expr::func(*func, expand_derivatives(a)?),
        Expr::Binary(op, l, r) => Expr::binary(*op, expand_derivatives(l)?, expand_derivatives(r)?),
        Expr::Number(_) | Expr::Constant(_) | Expr::Variable(_) => e.clone(),
    })
}
