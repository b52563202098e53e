//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr     := term (('+'|'-') term)* ;
//! term     := factor (('*'|'/') factor)* ;
//! factor   := '-' factor | atom ('^' number)? ;
//! atom     := number | 't' | '(' expr ')' | func '(' expr ')' | pw | param ;
//! func     := 'sin' | 'cos' | 'exp' | 'abs' ;
//! pw       := 'pw' '(' number ';' interval ':' expr (';' interval ':' expr)* ')' ;
//! interval := '[' number ',' number ')' ;
//! number   := ['-'] decimal | 'pi' | 'e' ;
//! ```
//!
//! The first number of `pw` is the period, `0` meaning non-periodic.
//! `param` is any other identifier bound through [`parse_with`].

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{Expr, Piecewise, PiecewiseError, Segment};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdent { pos: usize, name: String },
    #[error("invalid piecewise at position {pos}: {source}")]
    Piecewise {
        pos: usize,
        #[source]
        source: PiecewiseError,
    },
}

/// Parses `src` with no named parameters.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with(src, &BTreeMap::new())
}

/// Parses `src`, substituting the given named constants.
pub fn parse_with(src: &str, params: &BTreeMap<String, f64>) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, params, end: src.len() };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(tok) => Err(p.error_at(tok.pos, format!("unexpected `{}`", tok.kind))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "{v}"),
            Kind::Ident(s) => write!(f, "{s}"),
            Kind::Sym(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only if followed by digits, so `2e` stays a syntax error rather than eating `e`
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push(Token { kind: Kind::Num(v), pos: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: Kind::Ident(src[start..i].to_string()), pos: start });
        } else if "+-*/^()[],;:".contains(c) {
            out.push(Token { kind: Kind::Sym(c), pos: i });
            i += 1;
        } else {
            return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn error_at(&self, pos: usize, msg: String) -> ParseError {
        ParseError::Syntax { pos, msg }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Sym(s), .. }) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |t| format!("`{}`", t.kind));
            Err(self.error_at(self.here(), format!("expected `{c}`, found {found}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                lhs = lhs + self.term()?;
            } else if self.eat_sym('-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_sym('*') {
                lhs = lhs * self.factor()?;
            } else if self.eat_sym('/') {
                lhs = lhs / self.factor()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym('-') {
            return Ok(-self.factor()?);
        }
        let base = self.atom()?;
        if self.eat_sym('^') {
            let n = self.number()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    /// A literal, named constant or parameter, with optional leading minus.
    fn number(&mut self) -> Result<f64, ParseError> {
        let neg = self.eat_sym('-');
        let pos = self.here();
        let v = match self.peek().cloned() {
            Some(Token { kind: Kind::Num(v), .. }) => v,
            Some(Token { kind: Kind::Ident(name), .. }) => match self.constant(&name) {
                Some(v) => v,
                None => return Err(ParseError::UnknownIdent { pos, name }),
            },
            _ => return Err(self.error_at(pos, "expected a number".into())),
        };
        self.pos += 1;
        Ok(if neg { -v } else { v })
    }

    fn constant(&self, name: &str) -> Option<f64> {
        match name {
            "pi" => Some(std::f64::consts::PI),
            "e" => Some(std::f64::consts::E),
            _ => self.params.get(name).copied(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_at(pos, "unexpected end of input".into()));
        };
        match tok.kind {
            Kind::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Kind::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Kind::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "t" => Ok(Expr::Time),
                    "sin" | "cos" | "exp" | "abs" => {
                        self.expect_sym('(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect_sym(')')?;
                        Ok(match name.as_str() {
                            "sin" => Expr::Sin(arg),
                            "cos" => Expr::Cos(arg),
                            "exp" => Expr::Exp(arg),
                            _ => Expr::Abs(arg),
                        })
                    }
                    "pw" | "piecewise" => self.piecewise(pos),
                    other => match self.constant(other) {
                        Some(v) => Ok(Expr::Num(v)),
                        None => Err(ParseError::UnknownIdent { pos, name }),
                    },
                }
            }
            Kind::Sym(c) => Err(self.error_at(pos, format!("unexpected `{c}`"))),
        }
    }

    fn piecewise(&mut self, pos: usize) -> Result<Expr, ParseError> {
        self.expect_sym('(')?;
        let period = self.number()?;
        let mut segments = Vec::new();
        while self.eat_sym(';') {
            self.expect_sym('[')?;
            let lo = self.number()?;
            self.expect_sym(',')?;
            let hi = self.number()?;
            self.expect_sym(')')?;
            self.expect_sym(':')?;
            let body = self.expr()?;
            segments.push(Segment { lo, hi, body });
        }
        self.expect_sym(')')?;
        Piecewise::new(period, segments)
            .map(Expr::Piecewise)
            .map_err(|source| ParseError::Piecewise { pos, source })
    }
}
