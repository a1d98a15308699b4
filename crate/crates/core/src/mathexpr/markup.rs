//! Content-oriented XML markup: one element per tree node.
//!
//! The dialect is documented in `docs/markup.md`; output carries no
//! whitespace and no XML declaration, so `write → read → write` is a fixpoint.

use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::{is_identifier, BinaryOp, Constant, Expr, Func, SourceSpan, UnaryOp};
use super::latex::check_limits;
use super::ParseError;

const MAX_RECURSION: usize = 256;

fn func_element(f: Func) -> &'static str {
    match f {
        Func::Sin => "sin",
        Func::Cos => "cos",
        Func::Tan => "tan",
        Func::Cot => "cot",
        Func::Sec => "sec",
        Func::Csc => "csc",
        Func::Asin => "arcsin",
        Func::Acos => "arccos",
        Func::Atan => "arctan",
        Func::Ln => "ln",
        Func::Log10 => "log",
        Func::Exp => "exp",
        Func::Sqrt => "root",
        Func::Abs => "abs",
    }
}

fn binary_element(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Add => "plus",
        BinaryOp::Sub => "minus",
        BinaryOp::Mul => "times",
        BinaryOp::Div => "divide",
        BinaryOp::Pow => "power",
    }
}

pub fn to_semantic_markup(e: &Expr) -> String {
    let mut out = String::new();
    write_node(e, &mut out);
    out
}

fn write_node(e: &Expr, out: &mut String) {
    match e {
        Expr::Number(r) => {
            if r.is_integer() {
                let _ = write!(out, "<cn type=\"integer\">{}</cn>", r.numer());
            } else {
                let _ = write!(out, "<cn type=\"rational\">{}/{}</cn>", r.numer(), r.denom());
            }
        }
        Expr::Constant(Constant::Pi) => out.push_str("<pi/>"),
        Expr::Constant(Constant::Euler) => out.push_str("<exponentiale/>"),
        Expr::Variable(name) => {
            let _ = write!(out, "<ci>{name}</ci>");
        }
        Expr::Unary(UnaryOp::Neg, a) => {
            out.push_str("<apply><minus/>");
            write_node(a, out);
            out.push_str("</apply>");
        }
        Expr::Binary(op, l, r) => {
            let _ = write!(out, "<apply><{}/>", binary_element(*op));
            write_node(l, out);
            write_node(r, out);
            out.push_str("</apply>");
        }
        Expr::Function(f, a) => {
            let _ = write!(out, "<apply><{}/>", func_element(*f));
            write_node(a, out);
            out.push_str("</apply>");
        }
        Expr::Derivative(var, body) => {
            let _ = write!(out, "<apply><diff/><bvar><ci>{var}</ci></bvar>");
            write_node(body, out);
            out.push_str("</apply>");
        }
    }
}

/// Reads markup produced by [`to_semantic_markup`].
pub fn parse_semantic_markup(input: &str) -> Result<Expr, ParseError> {
    let mut r = Reader {
        src: input,
        pos: 0,
        depth: 0,
    };
    let e = r.node()?;
    r.skip_ws();
    if r.pos != input.len() {
        return Err(r.error("trailing content after expression"));
    }
    check_limits(&e, input.len())?;
    Ok(e)
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
    depth: usize,
}

impl Reader<'_> {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(SourceSpan::at(self.pos), msg)
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected {s}")))
        }
    }

    fn text_until(&mut self, close: &str) -> Result<&str, ParseError> {
        let rest = &self.src[self.pos..];
        let Some(end) = rest.find(close) else {
            return Err(self.error(format!("missing {close}")));
        };
        let text = &rest[..end];
        self.pos += end + close.len();
        Ok(text)
    }

    /// Reads `<name/>` and returns `name`.
    fn empty_element(&mut self) -> Result<String, ParseError> {
        self.expect("<")?;
        let rest = &self.src[self.pos..];
        let Some(end) = rest.find("/>") else {
            return Err(self.error("expected operator element"));
        };
        let name = &rest[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(self.error("invalid operator element"));
        }
        self.pos += end + 2;
        Ok(name.to_string())
    }

    fn node(&mut self) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_RECURSION {
            return Err(self.error("markup nested too deeply"));
        }
        let r = self.node_inner();
        self.depth -= 1;
        r
    }

    fn ci(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        let name = self.text_until("</ci>")?.to_string();
        if !is_identifier(&name) {
            return Err(ParseError::new(SourceSpan::new(start, self.pos), "invalid identifier"));
        }
        Ok(name)
    }

    fn node_inner(&mut self) -> Result<Expr, ParseError> {
        if self.eat("<cn type=\"integer\">") {
            let start = self.pos;
            let text = self.text_until("</cn>")?;
            let n: BigInt = text
                .parse()
                .map_err(|_| ParseError::new(SourceSpan::new(start, self.pos), "invalid integer"))?;
            return Ok(Expr::Number(BigRational::from_integer(n)));
        }
        if self.eat("<cn type=\"rational\">") {
            let start = self.pos;
            let text = self.text_until("</cn>")?;
            let bad = || ParseError::new(SourceSpan::new(start, start + text.len()), "invalid rational");
            let (p, q) = text.split_once('/').ok_or_else(bad)?;
            let p: BigInt = p.parse().map_err(|_| bad())?;
            let q: BigInt = q.parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Expr::Number(BigRational::new(p, q)));
        }
        if self.eat("<ci>") {
            return Ok(Expr::Variable(self.ci()?));
        }
        if self.eat("<pi/>") {
            return Ok(Expr::Constant(Constant::Pi));
        }
        if self.eat("<exponentiale/>") {
            return Ok(Expr::Constant(Constant::Euler));
        }
        if !self.eat("<apply>") {
            return Err(self.error("expected <cn>, <ci>, constant, or <apply>"));
        }
        let op_pos = self.pos;
        let op = self.empty_element()?;
        let e = match op.as_str() {
            "diff" => {
                self.expect("<bvar>")?;
                self.expect("<ci>")?;
                let var = self.ci()?;
                self.expect("</bvar>")?;
                let body = self.node()?;
                Expr::Derivative(var, Box::new(body))
            }
            "minus" => {
                let first = self.node()?;
                self.skip_ws();
                if self.src[self.pos..].starts_with("</apply>") {
                    Expr::neg(first)
                } else {
                    Expr::sub(first, self.node()?)
                }
            }
            "plus" | "times" | "divide" | "power" => {
                let op = match op.as_str() {
                    "plus" => BinaryOp::Add,
                    "times" => BinaryOp::Mul,
                    "divide" => BinaryOp::Div,
                    _ => BinaryOp::Pow,
                };
                let l = self.node()?;
                let r = self.node()?;
                Expr::binary(op, l, r)
            }
            other => {
                let Some(f) = Func::ALL.into_iter().find(|f| func_element(*f) == other) else {
                    return Err(ParseError::new(
                        SourceSpan::new(op_pos, self.pos),
                        format!("unknown operator <{other}/>"),
                    ));
                };
                Expr::func(f, self.node()?)
            }
        };
        self.expect("</apply>")?;
        Ok(e)
    }
}
