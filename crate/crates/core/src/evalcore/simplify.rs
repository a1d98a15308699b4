//! Constant folding and identity rewriting.

use crate::mathexpr::{free_variables, BinaryOp, Expr, UnaryOp};

use super::closed::{eval_exact, exceeds_fold_size};

const MAX_PASSES: usize = 32;

/// Folds closed subtrees to canonical `a + b·√n` form and applies the
/// identities `x+0`, `x·1`, `x·0`, `x/1`, `x^1`, `x^0` and `--x`.
/// Subtrees that cannot be folded are kept as they are.
pub fn simplify(e: &Expr) -> Expr {
    run(e, Fold::All)
}

/// Like [`simplify`], but folds only closed subtrees built from numbers and
/// the arithmetic operators, so `\sin(\pi/4)` stays as written.
pub fn simplify_arithmetic(e: &Expr) -> Expr {
    run(e, Fold::Arithmetic)
}

#[derive(Clone, Copy, PartialEq)]
enum Fold {
    All,
    Arithmetic,
}

fn run(e: &Expr, mode: Fold) -> Expr {
    let mut current = e.clone();
    for _ in 0..MAX_PASSES {
        let next = pass(&current, mode);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn arithmetic_only(e: &Expr) -> bool {
    match e {
        Expr::Number(_) => true,
        Expr::Unary(_, a) => arithmetic_only(a),
        Expr::Binary(_, l, r) => arithmetic_only(l) && arithmetic_only(r),
        _ => false,
    }
}

fn pass(e: &Expr, mode: Fold) -> Expr {
    let rebuilt = match e {
        Expr::Number(_) | Expr::Constant(_) | Expr::Variable(_) => return e.clone(),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(pass(a, mode))),
        Expr::Binary(op, l, r) => Expr::binary(*op, pass(l, mode), pass(r, mode)),
        Expr::Function(f, a) => Expr::func(*f, pass(a, mode)),
        Expr::Derivative(v, body) => Expr::derivative(v, pass(body, mode)),
    };
    let foldable = match mode {
        Fold::All => free_variables(&rebuilt).is_empty(),
        Fold::Arithmetic => arithmetic_only(&rebuilt),
    };
    if foldable {
        if let Ok(v) = eval_exact(&rebuilt) {
            if !exceeds_fold_size(&v) {
                return v.to_expr();
            }
        }
    }
    rewrite(rebuilt)
}

fn rewrite(e: Expr) -> Expr {
    match e {
        Expr::Unary(UnaryOp::Neg, a) => match *a {
            Expr::Unary(UnaryOp::Neg, inner) => *inner,
            ref z if z.is_zero() => Expr::int(0),
            other => Expr::neg(other),
        },
        Expr::Binary(op, l, r) => {
            let (l, r) = (*l, *r);
            match op {
                BinaryOp::Add if l.is_zero() => r,
                BinaryOp::Add | BinaryOp::Sub if r.is_zero() => l,
                BinaryOp::Sub if l.is_zero() => Expr::neg(r),
                BinaryOp::Mul if l.is_zero() || r.is_zero() => Expr::int(0),
                BinaryOp::Mul if l.is_one() => r,
                BinaryOp::Mul | BinaryOp::Div if r.is_one() => l,
                BinaryOp::Pow if r.is_one() => l,
                BinaryOp::Pow if r.is_zero() => Expr::int(1),
                _ => Expr::binary(op, l, r),
            }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathexpr::{parse_infix, Func};

    fn s(src: &str) -> Expr {
        simplify(&parse_infix(src).unwrap())
    }

    #[test]
    fn folding() {
        assert_eq!(s("2 + 3*4"), Expr::int(14));
        assert_eq!(s("sin(pi/6)"), Expr::rational(1, 2));
        assert_eq!(
            s("sin(pi/4)"),
            Expr::mul(Expr::rational(1, 2), Expr::func(Func::Sqrt, Expr::int(2)))
        );
        assert_eq!(s("-(3)"), Expr::neg(Expr::int(3)));
        // Not representable: left alone.
        assert_eq!(s("pi/4"), parse_infix("pi/4").unwrap());
        assert_eq!(s("sin(1)"), parse_infix("sin(1)").unwrap());
    }

    #[test]
    fn identities() {
        assert_eq!(s("x + 0"), Expr::var("x"));
        assert_eq!(s("0 - x"), Expr::neg(Expr::var("x")));
        assert_eq!(s("1 * x * 1"), Expr::var("x"));
        assert_eq!(s("x * 0"), Expr::int(0));
        assert_eq!(s("x / 1"), Expr::var("x"));
        assert_eq!(s("x ^ 1"), Expr::var("x"));
        assert_eq!(s("x ^ (1 - 1)"), Expr::int(1));
        assert_eq!(s("--x"), Expr::var("x"));
        assert_eq!(s("x + y"), parse_infix("x + y").unwrap());
    }

    #[test]
    fn arithmetic_mode() {
        let e = parse_infix("sin(2*pi/4) + (3 - 1)*x").unwrap();
        assert_eq!(simplify_arithmetic(&e), parse_infix("sin(2*pi/4) + 2*x").unwrap());
    }

    #[test]
    fn idempotent_on_examples() {
        for src in ["sin(pi/4) + x", "1 - sqrt(3)", "x^(2 - 1) * cos(x) + 0", "-(-(2*x))", "tan(pi/2)"] {
            let once = s(src);
            assert_eq!(simplify(&once), once, "{src}");
        }
    }
}
