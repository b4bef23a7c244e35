//! Plain-text grammar for expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?
//! exponent := INT | '(' '-'? INT ('/' INT)? ')'
//! atom   := NUMBER ['i'] | 'x' | 't' | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! ```
//!
//! The printer emits exactly this grammar, and `parse(&e.to_string()) == e`
//! holds structurally for every tree built through the smart constructors.

use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

use super::{Expr, Node, C64};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
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
                let v: f64 = text.parse().map_err(|_| ParseError {
                    pos: start,
                    msg: format!("bad number `{text}`"),
                })?;
                let imag = i < bytes.len()
                    && bytes[i] == b'i'
                    && !(i + 1 < bytes.len()
                        && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_'));
                if imag {
                    i += 1;
                }
                out.push((start, Tok::Num(v, imag)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            other => {
                return Err(ParseError {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {want:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = acc.div(&self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        match self.bump() {
            Some(Tok::Num(v, false)) => Ok(base.powi(self.integer(v)?)),
            Some(Tok::LParen) => {
                let negative = if self.peek() == Some(&Tok::Minus) {
                    self.pos += 1;
                    true
                } else {
                    false
                };
                let num = match self.bump() {
                    Some(Tok::Num(v, false)) => self.integer(v)?,
                    _ => return self.err("expected integer exponent"),
                };
                let num = if negative { -num } else { num };
                let den = if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    match self.bump() {
                        Some(Tok::Num(v, false)) => self.integer(v)?,
                        _ => return self.err("expected integer denominator"),
                    }
                } else {
                    1
                };
                if den == 0 {
                    return self.err("zero denominator in exponent");
                }
                self.expect(Tok::RParen)?;
                Ok(base.pow_ratio(Rational64::new(num, den)))
            }
            _ => self.err("expected exponent"),
        }
    }

    fn integer(&self, v: f64) -> Result<i64, ParseError> {
        if v.fract() == 0.0 && v.abs() < 1e15 {
            Ok(v as i64)
        } else {
            self.err("exponent must be an integer or a ratio of integers")
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Some(Tok::Num(v, imag)) => Ok(if imag {
                Expr::constant(C64::new(0.0, v))
            } else {
                Expr::real(v)
            }),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::x()),
                "t" => Ok(Expr::t()),
                "exp" | "log" | "sqrt" => {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(match name.as_str() {
                        "exp" => arg.exp(),
                        "log" => arg.ln(),
                        _ => arg.sqrt(),
                    })
                }
                _ => Ok(Expr::param(&name)),
            },
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected operand")
            }
        }
    }
}

pub(super) fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

// Binding strength used by the printer: higher binds tighter.
const ADD: u8 = 1;
const MUL: u8 = 2;
const UNARY: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn fmt_real(v: f64) -> String {
    format!("{v}")
}

fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) => {
            if c.re != 0.0 && c.im != 0.0 {
                ATOM
            } else if c.re < 0.0 || c.im < 0.0 || (c.re == 0.0 && c.re.is_sign_negative() && c.im == 0.0) {
                UNARY
            } else {
                ATOM
            }
        }
        Node::Var(_) | Node::Param(_) | Node::Exp(_) | Node::Log(_) | Node::Sqrt(_) => ATOM,
        Node::Neg(_) => UNARY,
        Node::Add(..) => ADD,
        Node::Mul(..) | Node::Div(..) => MUL,
        Node::Pow(..) | Node::RatPow(..) => POW,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if level(e) < min {
        write!(f, "(")?;
        write_node(f, e)?;
        write!(f, ")")
    } else {
        write_node(f, e)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            if c.im == 0.0 {
                write!(f, "{}", fmt_real(c.re))
            } else if c.re == 0.0 {
                write!(f, "{}i", fmt_real(c.im))
            } else if c.im < 0.0 {
                write!(f, "({} - {}i)", fmt_real(c.re), fmt_real(-c.im))
            } else {
                write!(f, "({} + {}i)", fmt_real(c.re), fmt_real(c.im))
            }
        }
        Node::Var(v) => write!(f, "{}", v.name()),
        Node::Param(p) => write!(f, "{p}"),
        Node::Neg(inner) => {
            write!(f, "-")?;
            write_at(f, inner, POW)
        }
        Node::Add(l, r) => {
            write_at(f, l, ADD)?;
            match r.node() {
                Node::Neg(inner) => {
                    write!(f, " - ")?;
                    write_at(f, inner, MUL)
                }
                _ => {
                    write!(f, " + ")?;
                    write_at(f, r, MUL)
                }
            }
        }
        Node::Mul(l, r) => {
            write_at(f, l, MUL)?;
            write!(f, "*")?;
            write_at(f, r, UNARY)
        }
        Node::Div(l, r) => {
            write_at(f, l, MUL)?;
            write!(f, "/")?;
            write_at(f, r, UNARY)
        }
        Node::Pow(b, n) => {
            write_at(f, b, ATOM)?;
            if *n < 0 {
                write!(f, "^({n})")
            } else {
                write!(f, "^{n}")
            }
        }
        Node::RatPow(b, r) => {
            write_at(f, b, ATOM)?;
            write!(f, "^({}/{})", r.numer(), r.denom())
        }
        Node::Exp(a) => {
            write!(f, "exp(")?;
            write_node(f, a)?;
            write!(f, ")")
        }
        Node::Log(a) => {
            write!(f, "log(")?;
            write_node(f, a)?;
            write!(f, ")")
        }
        Node::Sqrt(a) => {
            write!(f, "sqrt(")?;
            write_node(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self)
    }
}
