//! Recursive-descent parser with the usual precedence:
//! `^` binds tighter than unary minus, then `*` `/`, then `+` `-`;
//! `^` is right-associative and everything else associates left.

use std::fmt;
use std::sync::Arc;

use super::{add, call, div, mul, neg, num, pow, sub, Expr, Expression, Func};

/// Structured parse failure with a byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset of the offending token inside the source.
    pub position: usize,
    pub message: String,
    /// What the parser was looking for, when that is well-defined.
    pub expected: Option<String>,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
            expected: None,
        }
    }

    fn expecting(position: usize, message: impl Into<String>, expected: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
            expected: Some(expected.into()),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.position, self.message)?;
        if let Some(exp) = &self.expected {
            write!(f, " (expected {exp})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn clamp(&self, pos: usize) -> usize {
        if self.src.is_empty() {
            0
        } else {
            pos.min(self.src.len() - 1)
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        while self.pos < bytes.len() {
            let c = bytes[self.pos] as char;
            let start = self.pos;
            match c {
                ' ' | '\t' | '\n' | '\r' => {
                    self.pos += 1;
                }
                '+' => {
                    out.push((start, Tok::Plus));
                    self.pos += 1;
                }
                '-' => {
                    out.push((start, Tok::Minus));
                    self.pos += 1;
                }
                '*' => {
                    out.push((start, Tok::Star));
                    self.pos += 1;
                }
                '/' => {
                    out.push((start, Tok::Slash));
                    self.pos += 1;
                }
                '^' => {
                    out.push((start, Tok::Caret));
                    self.pos += 1;
                }
                '(' => {
                    out.push((start, Tok::LParen));
                    self.pos += 1;
                }
                ')' => {
                    out.push((start, Tok::RParen));
                    self.pos += 1;
                }
                '0'..='9' | '.' => {
                    out.push((start, self.lex_number()?));
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    while self.pos < bytes.len()
                        && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    out.push((start, Tok::Ident(self.src[start..self.pos].to_string())));
                }
                _ => {
                    return Err(ParseError::new(
                        self.clamp(start),
                        format!("unexpected character '{c}'"),
                    ));
                }
            }
        }
        Ok(out)
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all ("2e" followed by an identifier);
                // leave the 'e' for the identifier lexer.
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ParseError::new(self.clamp(start), format!("invalid number '{text}'")))
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    src_len: usize,
    dim: usize,
    /// When set, the identifier `t` names the single coordinate `x0` and
    /// ordinary coordinates are rejected (curve-parametrization mode).
    curve_parameter: bool,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn eof_pos(&self) -> usize {
        if self.src.is_empty() {
            0
        } else {
            self.src_len - 1
        }
    }

    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.idx)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((_, t)) if t == tok => Ok(()),
            Some((pos, t)) => Err(ParseError::expecting(
                pos,
                format!("unexpected token {t:?}"),
                what,
            )),
            None => Err(ParseError::expecting(
                self.eof_pos(),
                "unexpected end of input",
                what,
            )),
        }
    }

    fn parse_expr(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.parse_term()?;
        while let Some((_, tok)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.idx += 1;
                    let rhs = self.parse_term()?;
                    lhs = add(lhs, rhs);
                }
                Tok::Minus => {
                    self.idx += 1;
                    let rhs = self.parse_term()?;
                    lhs = sub(lhs, rhs);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.parse_unary()?;
        while let Some((_, tok)) = self.peek() {
            match tok {
                Tok::Star => {
                    self.idx += 1;
                    let rhs = self.parse_unary()?;
                    lhs = mul(lhs, rhs);
                }
                Tok::Slash => {
                    self.idx += 1;
                    let rhs = self.parse_unary()?;
                    lhs = div(lhs, rhs);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Arc<Expr>, ParseError> {
        if let Some((_, Tok::Minus)) = self.peek() {
            self.idx += 1;
            let inner = self.parse_unary()?;
            return Ok(neg(inner));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Arc<Expr>, ParseError> {
        let base = self.parse_atom()?;
        if let Some((_, Tok::Caret)) = self.peek() {
            self.idx += 1;
            let exponent = self.parse_unary()?;
            return Ok(pow(base, exponent));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Arc<Expr>, ParseError> {
        match self.next() {
            Some((_, Tok::Num(v))) => Ok(num(v)),
            Some((_, Tok::LParen)) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some((pos, Tok::Ident(name))) => self.resolve_ident(pos, &name),
            Some((pos, t)) => Err(ParseError::expecting(
                pos,
                format!("unexpected token {t:?}"),
                "a number, variable, function call or '('",
            )),
            None => Err(ParseError::expecting(
                self.eof_pos(),
                "unexpected end of input",
                "a number, variable, function call or '('",
            )),
        }
    }

    fn resolve_ident(&mut self, pos: usize, name: &str) -> Result<Arc<Expr>, ParseError> {
        if let Some(func) = Func::from_name(name) {
            match self.peek() {
                Some((_, Tok::LParen)) => {
                    self.idx += 1;
                    let arg = self.parse_expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(call(func, arg));
                }
                _ => {
                    return Err(ParseError::expecting(
                        pos,
                        format!("'{name}' is a function name"),
                        "'(' after function name",
                    ));
                }
            }
        }
        if self.curve_parameter {
            if name == "t" {
                return Ok(Arc::new(Expr::X(0)));
            }
            if coordinate_of(name).is_some() {
                return Err(ParseError::new(
                    pos,
                    format!("coordinate '{name}' is not allowed in a curve expression; use 't'"),
                ));
            }
        } else if let Some((is_x, index)) = coordinate_of(name) {
            if index >= self.dim {
                return Err(ParseError::new(
                    pos,
                    format!(
                        "variable index out of range: '{name}' in dimension {}",
                        self.dim
                    ),
                ));
            }
            return Ok(Arc::new(if is_x {
                Expr::X(index)
            } else {
                Expr::Y(index)
            }));
        }
        match name {
            "pi" => Ok(num(std::f64::consts::PI)),
            "e" => Ok(num(std::f64::consts::E)),
            _ => Ok(Arc::new(Expr::Param(Arc::from(name)))),
        }
    }
}

/// `x<digits>` / `y<digits>` classify as coordinates; anything else is a
/// parameter name.
fn coordinate_of(name: &str) -> Option<(bool, usize)> {
    let mut chars = name.chars();
    let head = chars.next()?;
    let rest = chars.as_str();
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let index: usize = rest.parse().ok()?;
    match head {
        'x' => Some((true, index)),
        'y' => Some((false, index)),
        _ => None,
    }
}

fn parse_with(source: &str, dim: usize, curve_parameter: bool) -> Result<Expression, ParseError> {
    let toks = Lexer::new(source).tokens()?;
    if toks.is_empty() {
        return Err(ParseError::new(0, "empty expression"));
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        src_len: source.len(),
        dim,
        curve_parameter,
        src: source,
    };
    let root = parser.parse_expr()?;
    if let Some((pos, t)) = parser.peek() {
        return Err(ParseError::new(*pos, format!("trailing input {t:?}")));
    }
    Ok(Expression::from_root(root, dim))
}

/// Parse an expression over coordinates `x0..x{dim-1}`, `y0..y{dim-1}`.
pub fn parse(source: &str, dim: usize) -> Result<Expression, ParseError> {
    parse_with(source, dim, false)
}

/// Parse one coordinate of a curve parametrization: an expression in the
/// single parameter `t` (internally coordinate `x0` of a 1-dimensional
/// expression).
pub fn parse_curve_component(source: &str) -> Result<Expression, ParseError> {
    parse_with(source, 1, true)
}
