//! Stems and feedback: plain text with inline `$...$` math and `${name}` placeholders.

use crate::mathexpr::{parse_latex, Expr, ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum Segment<'a> {
    Text(&'a str),
    Math { text: &'a str, offset: usize },
}

/// Splits text into plain and `$...$` math segments. `\$` is a literal
/// dollar and `${` starts a placeholder, not math.
pub fn math_segments(s: &str) -> Result<Vec<Segment<'_>>, String> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_math = false;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'$' if bytes.get(i + 1) == Some(&b'{') => {
                match s[i..].find('}') {
                    Some(end) => i += end + 1,
                    None => return Err(format!("unterminated placeholder at byte {i}")),
                }
            }
            b'$' => {
                if in_math {
                    out.push(Segment::Math {
                        text: &s[start..i],
                        offset: start,
                    });
                } else if i > start {
                    out.push(Segment::Text(&s[start..i]));
                }
                in_math = !in_math;
                i += 1;
                start = i;
            }
            _ => i += 1,
        }
    }
    if in_math {
        return Err(format!("unclosed math segment starting at byte {}", start - 1));
    }
    if start < s.len() {
        out.push(Segment::Text(&s[start..]));
    }
    Ok(out)
}

/// Relation symbols that may separate expressions inside a math segment.
const RELATIONS: [&str; 10] = [
    "\\leq", "\\geq", "\\neq", "\\le", "\\ge", "\\ne", "=", "<", ">", ",",
];

/// Splits a math segment at top-level relation symbols, returning the
/// pieces and the separators between them.
pub(crate) fn split_relations(text: &str) -> (Vec<(usize, &str)>, Vec<&'static str>) {
    let bytes = text.as_bytes();
    let mut parts = Vec::new();
    let mut seps = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut i = 0;
    'scan: while i < bytes.len() {
        match bytes[i] {
            b'{' | b'(' | b'[' => depth += 1,
            b'}' | b')' | b']' => depth -= 1,
            _ => {}
        }
        if depth == 0 {
            for rel in RELATIONS {
                if bytes[i..].starts_with(rel.as_bytes()) {
                    let after = i + rel.len();
                    // `\le` must not match the start of `\left`.
                    if rel.starts_with('\\') && bytes.get(after).is_some_and(u8::is_ascii_alphabetic) {
                        continue;
                    }
                    parts.push((start, &text[start..i]));
                    seps.push(rel);
                    i = after;
                    start = i;
                    continue 'scan;
                }
            }
        }
        i += 1;
    }
    parts.push((start, &text[start..]));
    (parts, seps)
}

/// Parses each relation-separated piece of a math segment.
pub fn parse_math_segment(text: &str) -> Result<Vec<Expr>, ParseError> {
    let (parts, _) = split_relations(text);
    parts
        .into_iter()
        .map(|(offset, piece)| {
            parse_latex(piece).map_err(|e| {
                ParseError::new(
                    SourceSpan::new(e.span.start + offset, e.span.end + offset),
                    e.message,
                )
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments() {
        let s = r"Find $\sin x$ when \$5 and ${a} apples";
        let segs = math_segments(s).unwrap();
        assert_eq!(
            segs,
            vec![
                Segment::Text("Find "),
                Segment::Math { text: r"\sin x", offset: 6 },
                Segment::Text(r" when \$5 and ${a} apples"),
            ]
        );
        assert!(math_segments("open $x").is_err());
        assert!(math_segments("${a").is_err());
        let segs = math_segments("$${a}x + ${b} = 0$").unwrap();
        assert_eq!(segs, vec![Segment::Math { text: "${a}x + ${b} = 0", offset: 1 }]);
    }

    #[test]
    fn relations() {
        let (parts, seps) = split_relations(r"2x+4 = 0");
        assert_eq!(parts, vec![(0, "2x+4 "), (6, " 0")]);
        assert_eq!(seps, vec!["="]);
        let (parts, _) = split_relations(r"\left(x\right) \le 3");
        assert_eq!(parts.len(), 2);
        let (parts, _) = split_relations(r"f(a, b)");
        assert_eq!(parts.len(), 1);
        assert_eq!(parse_math_segment("x = 2").unwrap().len(), 2);
        let err = parse_math_segment("x = 2 +").unwrap_err();
        assert!(err.span.start >= 4);
    }
}
