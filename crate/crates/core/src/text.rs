//! Polynomial expression parser.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' nat)*
//! atom   := literal | var | 't' | '(' expr ')' | 'O' '(' 'deg' nat ')'
//! ```
//!
//! `literal` is a natural number, optionally followed by `/nat`. Over
//! GF(2^k) the identifier `t` denotes the field generator. A trailing
//! `O(deg k)` term lowers the precision to `k - 1`.

use std::fmt;

use thiserror::Error;

use crate::field::{Field, Scalar};
use crate::jet::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("literal `{text}` at position {pos} is not in {field}")]
    Literal { pos: usize, text: String, field: Field },
    #[error("invalid variable list: {0}")]
    Variables(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Literal(Scalar),
    Var(usize),
    Sum(Vec<(bool, Expr)>),
    Product(Vec<Expr>),
    Power(Box<Expr>, u32),
    Neg(Box<Expr>),
    BigO(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) | Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((pos, t));
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            out.push((pos, Tok::Num(chars[start..i].iter().map(|x| x.1).collect())));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((pos, Tok::Ident(chars[start..i].iter().map(|x| x.1).collect())));
        } else {
            return Err(ParseError::Syntax { pos, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    vars: &'a [String],
    field: Field,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(x) if *x == t => {
                self.at += 1;
                Ok(())
            }
            Some(x) => {
                let msg = format!("expected {t}, found {x}");
                self.syntax(msg)
            }
            None => self.syntax(format!("expected {t}, found end of input")),
        }
    }

    fn nat(&mut self) -> Result<u32, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                let v = s.parse::<u32>().or_else(|_| self.syntax("exponent too large"))?;
                self.at += 1;
                Ok(v)
            }
            _ => self.syntax("expected a natural number"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut items = Vec::new();
        let lead_neg = if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            true
        } else {
            false
        };
        items.push((lead_neg, self.term()?));
        loop {
            let neg = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Minus) => true,
                _ => break,
            };
            self.at += 1;
            items.push((neg, self.term()?));
        }
        if items.len() == 1 {
            let (neg, e) = items.pop().unwrap();
            return Ok(if neg { Expr::Neg(Box::new(e)) } else { e });
        }
        Ok(Expr::Sum(items))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::Star) {
            self.at += 1;
            factors.push(self.factor()?);
        }
        if factors.len() == 1 {
            return Ok(factors.pop().unwrap());
        }
        Ok(Expr::Product(factors))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.peek() == Some(&Tok::Caret) {
            self.at += 1;
            let e = self.nat()?;
            base = Expr::Power(Box::new(base), e);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                let mut text = n;
                if self.peek() == Some(&Tok::Slash) {
                    self.at += 1;
                    match self.peek().cloned() {
                        Some(Tok::Num(d)) => {
                            self.at += 1;
                            text = format!("{text}/{d}");
                        }
                        _ => return self.syntax("expected a denominator"),
                    }
                }
                let value = self
                    .field
                    .parse_literal(&text)
                    .map_err(|_| ParseError::Literal { pos, text: text.clone(), field: self.field })?;
                Ok(Expr::Literal(value))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if name == "O" && self.peek() == Some(&Tok::LParen) && !self.vars.iter().any(|v| v == "O") {
                    self.at += 1;
                    match self.peek().cloned() {
                        Some(Tok::Ident(d)) if d == "deg" => self.at += 1,
                        _ => return self.syntax("expected `deg`"),
                    }
                    let k = self.nat()?;
                    self.expect(Tok::RParen)?;
                    if k == 0 {
                        return Err(ParseError::Syntax { pos, msg: "O(deg 0) is not a valid bound".into() });
                    }
                    return Ok(Expr::BigO(k));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if name == "t" {
                    if let Some(g) = self.field.generator() {
                        return Ok(Expr::Literal(g));
                    }
                }
                Err(ParseError::UnknownVariable { pos, name })
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(t) => self.syntax(format!("unexpected {t}")),
            None => self.syntax("unexpected end of input"),
        }
    }
}

/// Parses `text` into an expression tree over the given variables.
pub fn parse_expr(text: &str, vars: &[String], field: Field) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.len(), vars, field };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        let t = p.toks[p.at].1.clone();
        return p.syntax(format!("unexpected {t}"));
    }
    Ok(e)
}

fn max_bigo(e: &Expr) -> Option<u32> {
    match e {
        Expr::BigO(k) => Some(*k),
        Expr::Sum(items) => items.iter().filter_map(|(_, x)| max_bigo(x)).min(),
        Expr::Product(xs) => xs.iter().filter_map(max_bigo).min(),
        Expr::Power(b, _) | Expr::Neg(b) => max_bigo(b),
        _ => None,
    }
}

fn eval(e: &Expr, field: Field, n: usize, prec: u32) -> Result<Jet, ParseError> {
    Ok(match e {
        Expr::Literal(c) => Jet::constant(c.clone(), n, prec),
        Expr::Var(i) => Jet::variable(field, n, *i, prec),
        Expr::BigO(_) => Jet::zero(field, n, prec),
        Expr::Neg(x) => eval(x, field, n, prec)?.neg(),
        Expr::Sum(items) => {
            let mut acc = Jet::zero(field, n, prec);
            for (neg, x) in items {
                let v = eval(x, field, n, prec)?;
                acc = if *neg { acc.try_sub(&v)? } else { acc.try_add(&v)? };
            }
            acc
        }
        Expr::Product(xs) => {
            let mut acc = Jet::one(field, n, prec);
            for x in xs {
                acc = acc.try_mul(&eval(x, field, n, prec)?)?;
            }
            acc
        }
        Expr::Power(b, k) => {
            let base = eval(b, field, n, prec)?;
            if base.max_degree().unwrap_or(0) == 0 {
                Jet::constant(base.constant_term().pow(*k as u64), n, prec)
            } else if base.constant_term().is_zero() && *k > prec {
                Jet::zero(field, n, prec)
            } else {
                let mut r = Jet::one(field, n, prec);
                let mut sq = base;
                let mut k = *k;
                while k > 0 {
                    if k & 1 == 1 {
                        r = r.try_mul(&sq)?;
                    }
                    k >>= 1;
                    if k > 0 {
                        sq = sq.try_mul(&sq)?;
                    }
                }
                r
            }
        }
    })
}

/// Parses a polynomial into a jet at `precision`, or below it if the text
/// carries an `O(deg k)` term with `k <= precision`.
pub fn parse_poly(text: &str, vars: &[String], field: Field, precision: u32) -> Result<Jet, ParseError> {
    let e = parse_expr(text, vars, field)?;
    let prec = match max_bigo(&e) {
        Some(k) => precision.min(k - 1),
        None => precision,
    };
    eval(&e, field, vars.len(), prec)
}

/// Splits a comma-separated variable list, rejecting duplicates, invalid
/// identifiers and names reserved by the field.
pub fn parse_vars(list: &str, field: Field) -> Result<Vec<String>, ParseError> {
    let vars: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if vars.is_empty() {
        return Err(ParseError::Variables("no variables given".into()));
    }
    for (i, v) in vars.iter().enumerate() {
        let mut cs = v.chars();
        let ok = cs.next().is_some_and(|c| c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_');
        if !ok {
            return Err(ParseError::Variables(format!("`{v}` is not an identifier")));
        }
        if vars[..i].contains(v) {
            return Err(ParseError::Variables(format!("`{v}` listed twice")));
        }
        if v == "t" && matches!(field, Field::Binary(_)) {
            return Err(ParseError::Variables("`t` names the generator of a binary field".into()));
        }
        if v == "O" {
            return Err(ParseError::Variables("`O` is reserved for precision bounds".into()));
        }
    }
    Ok(vars)
}
