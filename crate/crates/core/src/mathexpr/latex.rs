//! Parser for the LaTeX math subset.
//!
//! Accepted constructs: `\frac{..}{..}` (also `\dfrac`, `\tfrac`), `\sqrt{..}`,
//! `\sqrt[n]{..}` (read as `pow(arg, 1/n)`), `^`, `_` subscripts on
//! variables, `\pi`, `e`, `\sin` .. `\csc`, `\arcsin`, `\arccos`, `\arctan`,
//! `\ln`, `\log` (base 10), `\exp`, `\left| .. \right|`, `\left( .. \right)`,
//! `\cdot`, `\times`, juxtaposition, and the `\frac{d}{dx}` derivative prefix.
//! `\mathit{name}` spells a multi-letter variable. Anything else is an error.

use super::ast::{
    is_identifier, parse_decimal, Constant, Expr, Func, SourceSpan, MAX_DEPTH, MAX_NODES,
};
use super::ParseError;

/// Inputs longer than this are rejected outright.
pub const MAX_INPUT_BYTES: usize = 64 * 1024;
const MAX_RECURSION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Letter(char),
    Macro(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'\\' {
            i += 1;
            let name_start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                i += 1;
            }
            if i == name_start {
                // Control symbol: only spacing commands are accepted.
                match bytes.get(i) {
                    Some(b',' | b';' | b'!' | b':' | b' ') => {
                        i += 1;
                        continue;
                    }
                    Some(_) => {
                        let end = next_char_boundary(src, i);
                        return Err(ParseError::new(
                            SourceSpan::new(start, end),
                            format!("unknown macro \\{}", &src[i..end]),
                        ));
                    }
                    None => {
                        return Err(ParseError::new(
                            SourceSpan::new(start, i),
                            "dangling backslash",
                        ))
                    }
                }
            }
            out.push(Token {
                tok: Tok::Macro(src[name_start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Token {
                tok: Tok::Num(src[start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
        } else if c.is_ascii_alphabetic() {
            i += 1;
            out.push(Token {
                tok: Tok::Letter(c as char),
                span: SourceSpan::new(start, i),
            });
        } else if b"+-*/^_(){}[]|".contains(&c) {
            i += 1;
            out.push(Token {
                tok: Tok::Sym(c as char),
                span: SourceSpan::new(start, i),
            });
        } else {
            let end = next_char_boundary(src, i);
            return Err(ParseError::new(
                SourceSpan::new(start, end),
                format!("unexpected character {:?}", &src[start..end]),
            ));
        }
    }
    Ok(out)
}

fn next_char_boundary(s: &str, i: usize) -> usize {
    let mut j = i + 1;
    while j < s.len() && !s.is_char_boundary(j) {
        j += 1;
    }
    j.min(s.len())
}

fn function_macro(name: &str) -> Option<Func> {
    Some(match name {
        "sin" => Func::Sin,
        "cos" => Func::Cos,
        "tan" => Func::Tan,
        "cot" => Func::Cot,
        "sec" => Func::Sec,
        "csc" => Func::Csc,
        "arcsin" => Func::Asin,
        "arccos" => Func::Acos,
        "arctan" => Func::Atan,
        "ln" => Func::Ln,
        "log" => Func::Log10,
        "exp" => Func::Exp,
        _ => return None,
    })
}

pub(crate) fn check_limits(e: &Expr, input_len: usize) -> Result<(), ParseError> {
    let span = SourceSpan::new(0, input_len);
    if e.depth() > MAX_DEPTH {
        return Err(ParseError::new(
            span,
            format!("expression depth exceeds limit of {MAX_DEPTH}"),
        ));
    }
    if e.node_count() > MAX_NODES {
        return Err(ParseError::new(
            span,
            format!("expression size exceeds limit of {MAX_NODES} nodes"),
        ));
    }
    Ok(())
}

/// Parses a LaTeX math string into an [`Expr`].
pub fn parse_latex(input: &str) -> Result<Expr, ParseError> {
    if input.len() > MAX_INPUT_BYTES {
        return Err(ParseError::new(
            SourceSpan::new(0, input.len()),
            format!("input exceeds {MAX_INPUT_BYTES} bytes"),
        ));
    }
    let tokens = lex(input)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        len: input.len(),
        depth: 0,
    };
    if p.tokens.is_empty() {
        return Err(ParseError::new(SourceSpan::new(0, input.len()), "empty expression"));
    }
    let e = p.expr()?;
    if let Some(t) = p.peek_token() {
        return Err(ParseError::new(t.span, "unexpected token"));
    }
    check_limits(&e, input.len())?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
    depth: usize,
}

impl Parser {
    fn peek_token(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> SourceSpan {
        match self.peek_token() {
            Some(t) => t.span,
            None => SourceSpan::at(self.len),
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_macro(&mut self, name: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Macro(m)) if m == name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else if self.peek().is_none() {
            Err(ParseError::new(self.here(), format!("unbalanced input: expected '{c}'")))
        } else {
            Err(ParseError::new(self.here(), format!("expected '{c}'")))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_RECURSION {
            return Err(ParseError::new(self.here(), "expression nested too deeply"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = self.expr_inner();
        self.leave();
        r
    }

    fn expr_inner(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                let rhs = self.term()?;
                lhs = Expr::add(lhs, rhs);
            } else if self.eat_sym('-') {
                let rhs = self.term()?;
                lhs = Expr::sub(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_macro("cdot") || self.eat_macro("times") || self.eat_sym('*') {
                let rhs = self.unary()?;
                lhs = Expr::mul(lhs, rhs);
            } else if self.eat_sym('/') {
                let rhs = self.unary()?;
                lhs = Expr::div(lhs, rhs);
            } else if self.starts_factor() {
                let rhs = self.power()?;
                lhs = Expr::mul(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    /// True when the next token can begin a juxtaposed factor.
    fn starts_factor(&self) -> bool {
        match self.peek() {
            Some(Tok::Num(_)) | Some(Tok::Letter(_)) => true,
            Some(Tok::Sym('(')) | Some(Tok::Sym('{')) => true,
            Some(Tok::Macro(m)) => {
                matches!(
                    m.as_str(),
                    "frac" | "dfrac" | "tfrac" | "sqrt" | "pi" | "mathit" | "left"
                ) || function_macro(m).is_some()
            }
            _ => false,
        }
    }

    fn starts_function(&self) -> bool {
        matches!(self.peek(), Some(Tok::Macro(m)) if function_macro(m).is_some() || m == "sqrt")
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = if self.eat_sym('-') {
            self.unary().map(Expr::neg)
        } else if self.eat_sym('+') {
            self.unary()
        } else {
            self.power()
        };
        self.leave();
        r
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_sym('^') {
            let exp = self.superscript()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    /// Superscript argument: a braced group or a single token. A following
    /// `^` nests to the right.
    fn superscript(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = self.superscript_inner();
        self.leave();
        r
    }

    fn superscript_inner(&mut self) -> Result<Expr, ParseError> {
        let first = match self.peek() {
            Some(Tok::Sym('{')) => self.group()?,
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                return self.superscript().map(Expr::neg);
            }
            Some(Tok::Num(_)) => self.single_digit()?,
            Some(Tok::Letter(_)) => self.letter_atom()?,
            Some(Tok::Macro(m)) if m == "pi" || m == "mathit" => self.atom()?,
            Some(_) => return Err(ParseError::new(self.here(), "invalid superscript")),
            None => return Err(ParseError::new(self.here(), "empty argument: missing superscript")),
        };
        if self.eat_sym('^') {
            let rest = self.superscript()?;
            return Ok(Expr::pow(first, rest));
        }
        Ok(first)
    }

    /// Consumes one digit of a number token, TeX style (`x^23` is `x^2 3`).
    fn single_digit(&mut self) -> Result<Expr, ParseError> {
        let idx = self.pos;
        let (text, span) = match &self.tokens[idx].tok {
            Tok::Num(t) => (t.clone(), self.tokens[idx].span),
            _ => unreachable!(),
        };
        let first = &text[..1];
        if first == "." {
            return Err(ParseError::new(span, "invalid superscript"));
        }
        if text.len() == 1 {
            self.pos += 1;
        } else {
            self.tokens[idx] = Token {
                tok: Tok::Num(text[1..].to_string()),
                span: SourceSpan::new(span.start + 1, span.end),
            };
        }
        Ok(Expr::Number(parse_decimal(first).expect("digit")))
    }

    fn group(&mut self) -> Result<Expr, ParseError> {
        let open = self.here();
        self.expect_sym('{')?;
        if self.peek() == Some(&Tok::Sym('}')) {
            return Err(ParseError::new(
                open.join(self.here()),
                "empty argument",
            ));
        }
        let e = self.expr()?;
        self.expect_sym('}')?;
        Ok(e)
    }

    fn subscript_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Num(_)) => {
                let d = self.single_digit()?;
                Ok(d.as_rational().map(|r| r.to_string()).unwrap_or_default())
            }
            Some(Tok::Letter(c)) => {
                let c = *c;
                self.pos += 1;
                Ok(c.to_string())
            }
            Some(Tok::Sym('{')) => {
                let open = self.bump().span;
                let mut name = String::new();
                loop {
                    match self.peek() {
                        Some(Tok::Letter(c)) => {
                            name.push(*c);
                            self.pos += 1;
                        }
                        Some(Tok::Num(t)) if t.chars().all(|c| c.is_ascii_digit()) => {
                            name.push_str(t);
                            self.pos += 1;
                        }
                        Some(Tok::Sym('}')) => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => {
                            return Err(ParseError::new(self.here(), "invalid subscript"))
                        }
                        None => {
                            return Err(ParseError::new(
                                open,
                                "unbalanced braces in subscript",
                            ))
                        }
                    }
                }
                if name.is_empty() {
                    return Err(ParseError::new(open, "empty argument: subscript"));
                }
                Ok(name)
            }
            _ => Err(ParseError::new(self.here(), "invalid subscript")),
        }
    }

    fn letter_atom(&mut self) -> Result<Expr, ParseError> {
        let c = match self.bump().tok {
            Tok::Letter(c) => c,
            _ => unreachable!(),
        };
        if self.eat_sym('_') {
            let sub = self.subscript_name()?;
            return Ok(Expr::Variable(format!("{c}_{sub}")));
        }
        if c == 'e' {
            return Ok(Expr::Constant(Constant::Euler));
        }
        Ok(Expr::Variable(c.to_string()))
    }

    fn mathit(&mut self, span: SourceSpan) -> Result<String, ParseError> {
        self.expect_sym('{')?;
        let mut name = String::new();
        loop {
            match self.peek() {
                Some(Tok::Letter(c)) => name.push(*c),
                Some(Tok::Num(t)) => name.push_str(t),
                Some(Tok::Sym('_')) => name.push('_'),
                Some(Tok::Sym('}')) => break,
                Some(_) => return Err(ParseError::new(self.here(), "invalid name in \\mathit")),
                None => return Err(ParseError::new(span, "unbalanced braces in \\mathit")),
            }
            self.pos += 1;
        }
        let close = self.bump().span;
        if !is_identifier(&name) {
            return Err(ParseError::new(span.join(close), "invalid variable name"));
        }
        Ok(name)
    }

    /// Variable after the `d` of a derivative denominator.
    fn derivative_variable(&mut self) -> Option<String> {
        match self.peek()? {
            Tok::Letter(_) => {
                let c = match self.bump().tok {
                    Tok::Letter(c) => c,
                    _ => unreachable!(),
                };
                if self.eat_sym('_') {
                    let sub = self.subscript_name().ok()?;
                    Some(format!("{c}_{sub}"))
                } else {
                    Some(c.to_string())
                }
            }
            Tok::Macro(m) if m == "mathit" => {
                let span = self.bump().span;
                self.mathit(span).ok()
            }
            _ => None,
        }
    }

    /// Recognises `{d}{d<var>}` after `\frac`; restores position on mismatch.
    fn try_derivative_head(&mut self) -> Option<String> {
        let saved = self.pos;
        // Only a bare-digit subscript mutates tokens, and it sits within the
        // first few tokens of the head.
        let end = (saved + 10).min(self.tokens.len());
        let snapshot = self.tokens[saved..end].to_vec();
        let ok = (|| {
            if !(self.eat_sym('{') && self.peek() == Some(&Tok::Letter('d'))) {
                return None;
            }
            self.pos += 1;
            if !(self.eat_sym('}') && self.eat_sym('{') && self.peek() == Some(&Tok::Letter('d'))) {
                return None;
            }
            self.pos += 1;
            let var = self.derivative_variable()?;
            if !self.eat_sym('}') {
                return None;
            }
            Some(var)
        })();
        if ok.is_none() {
            self.pos = saved;
            self.tokens[saved..end].clone_from_slice(&snapshot);
        }
        ok
    }

    /// Argument of a function or derivative: a delimited group, or else a
    /// juxtaposed product of powers that stops before the next function.
    fn function_arg(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Sym('(')) | Some(Tok::Sym('{')) => return self.atom(),
            Some(Tok::Macro(m)) if m == "left" => return self.atom(),
            None => return Err(ParseError::new(self.here(), "empty argument")),
            _ => {}
        }
        self.enter()?;
        let r = self.bare_arg();
        self.leave();
        r
    }

    fn bare_arg(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym('-') {
            return self.bare_arg().map(Expr::neg);
        }
        if !self.starts_factor() {
            return Err(ParseError::new(self.here(), "empty argument"));
        }
        let mut product = self.power()?;
        while self.starts_factor() && !self.starts_function() {
            let rhs = self.power()?;
            product = Expr::mul(product, rhs);
        }
        Ok(product)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = self.atom_inner();
        self.leave();
        r
    }

    fn atom_inner(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::new(self.here(), "unexpected end of input"));
        };
        let span = self.here();
        match tok {
            Tok::Num(text) => {
                self.pos += 1;
                parse_decimal(&text)
                    .map(Expr::Number)
                    .ok_or_else(|| ParseError::new(span, "invalid number"))
            }
            Tok::Letter(_) => self.letter_atom(),
            Tok::Sym('(') => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Sym(')')) {
                    return Err(ParseError::new(span.join(self.here()), "empty parentheses"));
                }
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Sym('{') => self.group(),
            Tok::Sym('|') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym('|')?;
                Ok(Expr::func(Func::Abs, e))
            }
            Tok::Sym(c) => Err(ParseError::new(span, format!("unexpected '{c}'"))),
            Tok::Macro(name) => {
                self.pos += 1;
                self.macro_atom(&name, span)
            }
        }
    }

    fn macro_atom(&mut self, name: &str, span: SourceSpan) -> Result<Expr, ParseError> {
        match name {
            "pi" => Ok(Expr::Constant(Constant::Pi)),
            "mathit" => Ok(Expr::Variable(self.mathit(span)?)),
            "frac" | "dfrac" | "tfrac" => {
                if let Some(var) = self.try_derivative_head() {
                    let body = self.function_arg()?;
                    return Ok(Expr::Derivative(var, Box::new(body)));
                }
                let num = self.group()?;
                let den = self.group()?;
                Ok(Expr::div(num, den))
            }
            "sqrt" => {
                if self.eat_sym('[') {
                    if self.peek() == Some(&Tok::Sym(']')) {
                        return Err(ParseError::new(span.join(self.here()), "empty argument: root index"));
                    }
                    let index = self.expr()?;
                    self.expect_sym(']')?;
                    let radicand = self.group()?;
                    let exponent = match index {
                        Expr::Number(n) => {
                            if num_traits::Zero::is_zero(&n) {
                                return Err(ParseError::new(span, "root index must be nonzero"));
                            }
                            Expr::Number(num_traits::Inv::inv(n))
                        }
                        other => Expr::div(Expr::int(1), other),
                    };
                    return Ok(Expr::pow(radicand, exponent));
                }
                let radicand = self.group()?;
                Ok(Expr::func(Func::Sqrt, radicand))
            }
            "left" => {
                let open = self.here();
                if self.eat_sym('(') {
                    let e = self.expr()?;
                    if !(self.eat_macro("right") && self.eat_sym(')')) {
                        return Err(ParseError::new(open.join(self.here()), "unbalanced \\left( .. \\right)"));
                    }
                    Ok(e)
                } else if self.eat_sym('|') {
                    let e = self.expr()?;
                    if !(self.eat_macro("right") && self.eat_sym('|')) {
                        return Err(ParseError::new(open.join(self.here()), "unbalanced \\left| .. \\right|"));
                    }
                    Ok(Expr::func(Func::Abs, e))
                } else {
                    Err(ParseError::new(open, "unsupported \\left delimiter"))
                }
            }
            other => {
                let Some(f) = function_macro(other) else {
                    return Err(ParseError::new(span, format!("unknown macro \\{other}")));
                };
                if f == Func::Log10 && self.eat_sym('_') {
                    let base_span = self.here();
                    let base = self.subscript_name()?;
                    if base != "10" {
                        return Err(ParseError::new(base_span, "only base-10 \\log is supported"));
                    }
                }
                let power = if self.eat_sym('^') {
                    Some(self.superscript()?)
                } else {
                    None
                };
                let arg = self.function_arg()?;
                let app = Expr::func(f, arg);
                Ok(match power {
                    Some(p) => Expr::pow(app, p),
                    None => app,
                })
            }
        }
    }
}
