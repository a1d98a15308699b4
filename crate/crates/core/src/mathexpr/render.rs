//! LaTeX and plain-infix printers with minimal parenthesization.

use std::fmt::{self, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::ast::{decimal_string, BinaryOp, Constant, Expr, Func, UnaryOp};

// Binding strength used to decide where parentheses go.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn latex_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_ADD,
        Expr::Binary(BinaryOp::Mul, ..) => PREC_MUL,
        // \frac is a self-delimiting atom.
        Expr::Binary(BinaryOp::Div, ..) => PREC_ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Expr::Binary(BinaryOp::Pow, _, exp) if root_index(exp).is_some() => PREC_ATOM,
        Expr::Binary(BinaryOp::Pow, ..) => PREC_POW,
        Expr::Number(r) if r.is_negative() => PREC_NEG,
        _ => PREC_ATOM,
    }
}

/// Index `n` when an exponent prints as `\sqrt[n]{..}`.
fn root_index(exp: &Expr) -> Option<String> {
    match exp {
        Expr::Number(r) if r.numer().is_one() && *r.denom() >= BigInt::from(2) => {
            Some(r.denom().to_string())
        }
        Expr::Binary(BinaryOp::Div, one, idx) if one.is_one() && !matches!(**idx, Expr::Number(_)) => {
            Some(to_latex(idx))
        }
        _ => None,
    }
}

fn latex_macro(f: Func) -> &'static str {
    match f {
        Func::Sin => "\\sin",
        Func::Cos => "\\cos",
        Func::Tan => "\\tan",
        Func::Cot => "\\cot",
        Func::Sec => "\\sec",
        Func::Csc => "\\csc",
        Func::Asin => "\\arcsin",
        Func::Acos => "\\arccos",
        Func::Atan => "\\arctan",
        Func::Ln => "\\ln",
        Func::Log10 => "\\log",
        Func::Exp => "\\exp",
        Func::Sqrt => "\\sqrt",
        Func::Abs => "",
    }
}

fn latex_number(r: &BigRational) -> String {
    if let Some(d) = decimal_string(r) {
        if r.is_negative() {
            return format!("\\left({d}\\right)");
        }
        return d;
    }
    let body = format!("\\frac{{{}}}{{{}}}", r.numer().abs(), r.denom());
    if r.is_negative() {
        format!("-{body}")
    } else {
        body
    }
}

/// Spelling of a variable name in LaTeX.
pub(crate) fn latex_variable(name: &str) -> String {
    let mut chars = name.chars();
    let first = chars.next().unwrap_or('x');
    let rest = chars.as_str();
    if rest.is_empty() && first != 'e' {
        return name.to_string();
    }
    if let Some(sub) = rest.strip_prefix('_') {
        if !sub.is_empty() && sub.chars().all(|c| c.is_ascii_alphanumeric()) {
            return format!("{first}_{{{sub}}}");
        }
    }
    format!("\\mathit{{{name}}}")
}

/// Renders an expression as LaTeX that [`super::parse_latex`] reads back to
/// the same tree.
pub fn to_latex(e: &Expr) -> String {
    let mut out = String::new();
    write_latex(e, &mut out);
    out
}

fn wrap_latex(e: &Expr, needs: bool, out: &mut String) {
    if needs {
        out.push_str("\\left(");
        write_latex(e, out);
        out.push_str("\\right)");
    } else {
        write_latex(e, out);
    }
}

fn is_neg(e: &Expr) -> bool {
    latex_prec(e) == PREC_NEG
}

fn write_latex(e: &Expr, out: &mut String) {
    match e {
        Expr::Number(r) => out.push_str(&latex_number(r)),
        Expr::Constant(Constant::Pi) => out.push_str("\\pi"),
        Expr::Constant(Constant::Euler) => out.push('e'),
        Expr::Variable(name) => out.push_str(&latex_variable(name)),
        Expr::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            wrap_latex(a, latex_prec(a) <= PREC_NEG, out);
        }
        Expr::Binary(op @ (BinaryOp::Add | BinaryOp::Sub), l, r) => {
            wrap_latex(l, latex_prec(l) < PREC_ADD, out);
            out.push(if *op == BinaryOp::Add { '+' } else { '-' });
            wrap_latex(r, latex_prec(r) <= PREC_ADD || is_neg(r), out);
        }
        Expr::Binary(BinaryOp::Mul, l, r) => {
            wrap_latex(l, latex_prec(l) < PREC_MUL, out);
            out.push_str("\\cdot ");
            wrap_latex(r, latex_prec(r) <= PREC_NEG, out);
        }
        Expr::Binary(BinaryOp::Div, l, r) => {
            out.push_str("\\frac{");
            write_latex(l, out);
            out.push_str("}{");
            write_latex(r, out);
            out.push('}');
        }
        Expr::Binary(BinaryOp::Pow, base, exp) => {
            if let Some(index) = root_index(exp) {
                let _ = write!(out, "\\sqrt[{index}]{{");
                write_latex(base, out);
                out.push('}');
                return;
            }
            wrap_latex(base, latex_prec(base) <= PREC_POW, out);
            out.push_str("^{");
            write_latex(exp, out);
            out.push('}');
        }
        Expr::Function(Func::Sqrt, a) => {
            out.push_str("\\sqrt{");
            write_latex(a, out);
            out.push('}');
        }
        Expr::Function(Func::Abs, a) => {
            out.push_str("\\left|");
            write_latex(a, out);
            out.push_str("\\right|");
        }
        Expr::Function(f, a) => {
            out.push_str(latex_macro(*f));
            out.push_str("\\left(");
            write_latex(a, out);
            out.push_str("\\right)");
        }
        Expr::Derivative(var, body) => {
            let _ = write!(out, "\\frac{{d}}{{d{}}}\\left(", latex_variable(var));
            write_latex(body, out);
            out.push_str("\\right)");
        }
    }
}

fn infix_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PREC_MUL,
        Expr::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Expr::Binary(BinaryOp::Pow, ..) => PREC_POW,
        Expr::Number(r) if r.is_negative() => PREC_NEG,
        Expr::Number(r) if decimal_string(r).is_none() => PREC_MUL,
        _ => PREC_ATOM,
    }
}

fn write_infix(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = |e: &Expr, needs: bool, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if needs {
            f.write_char('(')?;
            write_infix(e, f)?;
            f.write_char(')')
        } else {
            write_infix(e, f)
        }
    };
    match e {
        Expr::Number(r) => match decimal_string(r) {
            Some(d) => f.write_str(&d),
            None => write!(f, "{}/{}", r.numer(), r.denom()),
        },
        Expr::Constant(Constant::Pi) => f.write_str("pi"),
        Expr::Constant(Constant::Euler) => f.write_str("e"),
        Expr::Variable(name) => f.write_str(name),
        Expr::Unary(UnaryOp::Neg, a) => {
            f.write_char('-')?;
            wrap(a, infix_prec(a) <= PREC_NEG, f)
        }
        Expr::Binary(op, l, r) => {
            let p = infix_prec(e);
            if *op == BinaryOp::Pow {
                wrap(l, infix_prec(l) <= PREC_POW, f)?;
                f.write_char('^')?;
                // Right-associative: a^b^c needs no parentheses on the right.
                return wrap(r, infix_prec(r) < PREC_POW, f);
            }
            wrap(l, infix_prec(l) < p, f)?;
            write!(f, " {} ", op.symbol())?;
            wrap(r, infix_prec(r) <= p, f)
        }
        Expr::Function(func, a) => {
            write!(f, "{}(", func.name())?;
            write_infix(a, f)?;
            f.write_char(')')
        }
        Expr::Derivative(var, body) => {
            f.write_str("diff(")?;
            write_infix(body, f)?;
            write!(f, ", {var})")
        }
    }
}

/// Plain infix form, readable by [`super::parse_infix`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_infix(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latex_examples() {
        let e = Expr::func(Func::Sin, Expr::div(Expr::pi(), Expr::int(4)));
        assert_eq!(to_latex(&e), r"\sin\left(\frac{\pi}{4}\right)");
        assert_eq!(to_latex(&Expr::var("x")), "x");
        let e = Expr::pow(Expr::add(Expr::var("x"), Expr::int(1)), Expr::int(2));
        assert_eq!(to_latex(&e), r"\left(x+1\right)^{2}");
        assert_eq!(to_latex(&Expr::rational(3, 2)), "1.5");
        assert_eq!(to_latex(&Expr::rational(1, 3)), r"\frac{1}{3}");
        assert_eq!(to_latex(&Expr::var("rate")), r"\mathit{rate}");
        assert_eq!(to_latex(&Expr::var("x_12")), "x_{12}");
        assert_eq!(
            to_latex(&Expr::pow(Expr::var("x"), Expr::rational(1, 3))),
            r"\sqrt[3]{x}"
        );
    }

    #[test]
    fn infix_display() {
        let x = || Expr::var("x");
        let e = Expr::mul(
            Expr::mul(Expr::int(2), Expr::func(Func::Sin, x())),
            Expr::func(Func::Cos, x()),
        );
        assert_eq!(e.to_string(), "2 * sin(x) * cos(x)");
        let e = Expr::sub(x(), Expr::sub(x(), Expr::int(1)));
        assert_eq!(e.to_string(), "x - (x - 1)");
        let e = Expr::pow(x(), Expr::pow(x(), Expr::int(2)));
        assert_eq!(e.to_string(), "x^x^2");
        assert_eq!(Expr::neg(Expr::pow(x(), Expr::int(2))).to_string(), "-x^2");
    }
}
