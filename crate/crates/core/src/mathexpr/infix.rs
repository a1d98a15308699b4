//! Plain ASCII infix syntax used for template authoring.
//!
//! Operators `+ - * / ^`, parentheses, the function names of [`Func`],
//! `pi`, `e`, and `diff(body, var)`. Function calls always need parentheses
//! and multiplication is never implicit.

use super::ast::{is_identifier, parse_decimal, Constant, Expr, Func, SourceSpan};
use super::latex::{check_limits, MAX_INPUT_BYTES};
use super::ParseError;

const MAX_RECURSION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum InfixTok {
    Num(String),
    Ident(String),
    Sym(char),
    /// Comparison operator, only meaningful to condition parsing.
    Cmp(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: InfixTok,
    pub span: SourceSpan,
}

pub(crate) fn lex_infix(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Spanned {
                tok: InfixTok::Num(src[start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned {
                tok: InfixTok::Ident(src[start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
        } else if b"+-*/^(),".contains(&c) {
            i += 1;
            out.push(Spanned {
                tok: InfixTok::Sym(c as char),
                span: SourceSpan::new(start, i),
            });
        } else if b"<>=!".contains(&c) {
            i += 1;
            if bytes.get(i) == Some(&b'=') {
                i += 1;
            }
            let op = &src[start..i];
            if op == "!" {
                return Err(ParseError::new(SourceSpan::new(start, i), "unexpected '!'"));
            }
            out.push(Spanned {
                tok: InfixTok::Cmp(op.to_string()),
                span: SourceSpan::new(start, i),
            });
        } else if src[i..].starts_with('≠') || src[i..].starts_with('≤') || src[i..].starts_with('≥')
        {
            let ch = src[i..].chars().next().unwrap();
            i += ch.len_utf8();
            let op = match ch {
                '≠' => "!=",
                '≤' => "<=",
                _ => ">=",
            };
            out.push(Spanned {
                tok: InfixTok::Cmp(op.to_string()),
                span: SourceSpan::new(start, i),
            });
        } else if c == b'&' && bytes.get(i + 1) == Some(&b'&') {
            i += 2;
            out.push(Spanned {
                tok: InfixTok::Ident("and".into()),
                span: SourceSpan::new(start, i),
            });
        } else {
            let mut end = i + 1;
            while end < src.len() && !src.is_char_boundary(end) {
                end += 1;
            }
            return Err(ParseError::new(
                SourceSpan::new(start, end),
                format!("unexpected character {:?}", &src[start..end]),
            ));
        }
    }
    Ok(out)
}

/// Parses plain infix text such as `2*sin(x)*cos(x)`.
pub fn parse_infix(input: &str) -> Result<Expr, ParseError> {
    if input.len() > MAX_INPUT_BYTES {
        return Err(ParseError::new(
            SourceSpan::new(0, input.len()),
            format!("input exceeds {MAX_INPUT_BYTES} bytes"),
        ));
    }
    let tokens = lex_infix(input)?;
    let mut p = InfixParser::new(&tokens, input.len());
    let e = p.parse_complete()?;
    check_limits(&e, input.len())?;
    Ok(e)
}

pub(crate) struct InfixParser<'a> {
    tokens: &'a [Spanned],
    pub pos: usize,
    len: usize,
    depth: usize,
}

impl<'a> InfixParser<'a> {
    pub fn new(tokens: &'a [Spanned], len: usize) -> Self {
        InfixParser {
            tokens,
            pos: 0,
            len,
            depth: 0,
        }
    }

    pub fn parse_complete(&mut self) -> Result<Expr, ParseError> {
        if self.tokens.is_empty() {
            return Err(ParseError::new(SourceSpan::new(0, self.len), "empty expression"));
        }
        let e = self.expr()?;
        if self.pos < self.tokens.len() {
            return Err(self.unexpected());
        }
        Ok(e)
    }

    pub fn peek(&self) -> Option<&InfixTok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    pub fn here(&self) -> SourceSpan {
        self.tokens
            .get(self.pos)
            .map(|t| t.span)
            .unwrap_or(SourceSpan::at(self.len))
    }

    fn unexpected(&self) -> ParseError {
        match self.tokens.get(self.pos) {
            None => ParseError::new(self.here(), "unexpected end of input"),
            Some(t) => match &t.tok {
                InfixTok::Num(_) | InfixTok::Ident(_) | InfixTok::Sym('(') => {
                    ParseError::new(t.span, "missing operator (use '*' for multiplication)")
                }
                _ => ParseError::new(t.span, "unexpected token"),
            },
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&InfixTok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else if self.peek().is_none() {
            Err(ParseError::new(self.here(), format!("unbalanced input: expected '{c}'")))
        } else {
            Err(ParseError::new(self.here(), format!("expected '{c}'")))
        }
    }

    fn guard<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        self.depth += 1;
        if self.depth > MAX_RECURSION {
            self.depth -= 1;
            return Err(ParseError::new(self.here(), "expression nested too deeply"));
        }
        let r = f(self);
        self.depth -= 1;
        r
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        self.guard(|p| {
            let mut lhs = p.term()?;
            loop {
                if p.eat('+') {
                    lhs = Expr::add(lhs, p.term()?);
                } else if p.eat('-') {
                    lhs = Expr::sub(lhs, p.term()?);
                } else {
                    return Ok(lhs);
                }
            }
        })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.guard(|p| {
            if p.eat('-') {
                p.unary().map(Expr::neg)
            } else if p.eat('+') {
                p.unary()
            } else {
                p.power()
            }
        })
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            // Right-associative, and the exponent may carry its own sign.
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(t) = self.tokens.get(self.pos).cloned() else {
            return Err(ParseError::new(self.here(), "unexpected end of input"));
        };
        match t.tok {
            InfixTok::Num(text) => {
                self.pos += 1;
                parse_decimal(&text)
                    .map(Expr::Number)
                    .ok_or_else(|| ParseError::new(t.span, "invalid number"))
            }
            InfixTok::Sym('(') => {
                self.pos += 1;
                if self.peek() == Some(&InfixTok::Sym(')')) {
                    return Err(ParseError::new(t.span.join(self.here()), "empty parentheses"));
                }
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            InfixTok::Ident(name) => {
                self.pos += 1;
                self.identifier(&name, t.span)
            }
            _ => Err(ParseError::new(t.span, "unexpected token")),
        }
    }

    fn identifier(&mut self, name: &str, span: SourceSpan) -> Result<Expr, ParseError> {
        if name == "diff" {
            if !self.eat('(') {
                return Err(ParseError::new(span, "diff requires parentheses: diff(body, var)"));
            }
            let body = self.expr()?;
            self.expect(',')?;
            let var_span = self.here();
            let var = match self.peek() {
                Some(InfixTok::Ident(v)) if is_identifier(v) => v.clone(),
                _ => return Err(ParseError::new(var_span, "expected differentiation variable")),
            };
            self.pos += 1;
            self.expect(')')?;
            return Ok(Expr::Derivative(var, Box::new(body)));
        }
        if let Some(f) = Func::from_name(name) {
            if !self.eat('(') {
                return Err(ParseError::new(
                    span,
                    format!("function {name} requires parentheses"),
                ));
            }
            if self.peek() == Some(&InfixTok::Sym(')')) {
                return Err(ParseError::new(span.join(self.here()), "empty argument"));
            }
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Expr::func(f, arg));
        }
        Ok(match name {
            "pi" => Expr::Constant(Constant::Pi),
            "e" => Expr::Constant(Constant::Euler),
            _ => Expr::Variable(name.to_string()),
        })
    }
}
