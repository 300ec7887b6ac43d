//! Concrete syntax for formulas.
//!
//! ```text
//! formula := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '!' unary | 'X' unary | 'F' interval? unary | 'G' interval? unary
//!          | 'TRUE' | ident | '(' formula ('U' interval formula)? ')'
//! interval:= '[' int ',' int ']'
//! ```
//!
//! `F`, `G` and `X` act as operators only when followed by an interval or by
//! something that can start a formula, so regions may also be named `F` or `G`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{Formula, Interval, Proposition};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition `{name}` at {pos}")]
    UnknownProposition { pos: usize, name: String },
    #[error("malformed interval [{lo},{hi}] at {pos}")]
    BadInterval { pos: usize, lo: usize, hi: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(usize),
    Bang,
    Amp,
    Bar,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            c if c.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i]
                    .parse()
                    .map_err(|_| ParseError::Syntax { pos: start, msg: "integer out of range".into() })?;
                out.push((start, Tok::Int(n)));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            other => return Err(ParseError::Syntax { pos: start, msg: format!("unexpected character `{other}`") }),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    pi: Option<&'a BTreeSet<Proposition>>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.offset(), msg: msg.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.conj()?;
        let mut parts = vec![first];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let first = self.unary()?;
        let mut parts = vec![first];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn starts_formula(tok: Option<&Tok>) -> bool {
        matches!(tok, Some(Tok::Bang | Tok::LParen | Tok::Ident(_)))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let lhs = self.formula()?;
                let out = if matches!(self.peek(), Some(Tok::Ident(s)) if s == "U") {
                    self.pos += 1;
                    if self.peek() != Some(&Tok::LBracket) {
                        return Err(self.err("until requires an interval"));
                    }
                    let i = self.interval()?;
                    let rhs = self.formula()?;
                    Formula::Until(i, Box::new(lhs), Box::new(rhs))
                } else {
                    lhs
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(out)
            }
            Some(Tok::Ident(name)) => {
                let next = self.peek_at(1);
                let is_op = matches!(name.as_str(), "F" | "G" | "X")
                    && (next == Some(&Tok::LBracket) || Self::starts_formula(next));
                if is_op {
                    self.pos += 1;
                    let interval = if name != "X" && self.peek() == Some(&Tok::LBracket) {
                        self.interval()?
                    } else {
                        Interval::unbounded()
                    };
                    let body = Box::new(self.unary()?);
                    return Ok(match name.as_str() {
                        "X" => Formula::Next(body),
                        "F" => Formula::Eventually(interval, body),
                        _ => Formula::Always(interval, body),
                    });
                }
                let at = self.offset();
                self.pos += 1;
                if name == "TRUE" {
                    return Ok(Formula::True);
                }
                let prop = Proposition::from_label(&name);
                if let Some(pi) = self.pi {
                    if !pi.contains(&prop) {
                        return Err(ParseError::UnknownProposition { pos: at, name });
                    }
                }
                Ok(Formula::Atom(prop))
            }
            Some(_) => Err(self.err("expected a formula")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn int(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(&Tok::Int(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err("expected an integer")),
        }
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let at = self.offset();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.int()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.int()?;
        self.expect(Tok::RBracket, "`]`")?;
        Interval::new(lo, hi).map_err(|_| ParseError::BadInterval { pos: at, lo, hi })
    }
}

fn run(text: &str, pi: Option<&BTreeSet<Proposition>>) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, end: text.len(), pi };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

/// Parses `text`, requiring every proposition to be a member of `pi`.
pub fn parse_mtl(text: &str, pi: &BTreeSet<Proposition>) -> Result<Formula, ParseError> {
    run(text, Some(pi))
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    /// Parses without checking propositions against a workspace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        run(s, None)
    }
}

fn fmt_interval(i: &Interval, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match i.hi {
        Some(hi) => write!(f, "[{},{}]", i.lo, hi),
        None => Ok(()),
    }
}

fn fmt_operand(g: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match g {
        Formula::And(_) | Formula::Or(_) => write!(f, "({g})"),
        _ => write!(f, "{g}"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(g) => {
                f.write_str("!")?;
                fmt_operand(g, f)
            }
            Formula::And(cs) | Formula::Or(cs) => {
                let sep = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                for (k, c) in cs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(sep)?;
                    }
                    fmt_operand(c, f)?;
                }
                Ok(())
            }
            Formula::Next(g) => {
                f.write_str("X ")?;
                fmt_operand(g, f)
            }
            Formula::Eventually(i, g) | Formula::Always(i, g) => {
                f.write_str(if matches!(self, Formula::Eventually(..)) { "F" } else { "G" })?;
                fmt_interval(i, f)?;
                f.write_str(" ")?;
                fmt_operand(g, f)
            }
            Formula::Until(i, p, q) => {
                f.write_str("(")?;
                fmt_operand(p, f)?;
                f.write_str(" U")?;
                fmt_interval(i, f)?;
                f.write_str(" ")?;
                fmt_operand(q, f)?;
                f.write_str(")")
            }
        }
    }
}
