//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := rational | atom ('^' integer)?
//! atom   := 'norm' '(' poly ')' ('^{' integer '/' posint '}')?
//!         | 'val' '(' poly ')' | '(' expr ')'
//! poly   := pterm (('+' | '-') pterm)*
//! pterm  := pfactor (('*' | '/') pfactor)*
//! pfactor:= '-' pfactor | patom ('^' integer)?
//! patom  := integer | 'x' posint | '(' poly ')'
//! ```
//!
//! Division inside a polynomial is only allowed by nonzero constants, which
//! is how rational coefficients such as `3/2*x1` are written.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::expr::QExpExpr;
use super::poly::PolyExpr;
use crate::{Error, Rational, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = text[start..i].parse().expect("digits");
            out.push(Token { tok: Tok::Int(n), offset: start });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(text[start..i].to_string()), offset: start });
        } else if b"+-*/^(){}".contains(&c) {
            out.push(Token { tok: Tok::Sym(c as char), offset: i });
            i += 1;
        } else {
            let ch = text[i..].chars().next().expect("in bounds");
            return Err(Error::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
        }
    }
    out.push(Token { tok: Tok::End, offset: text.len() });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        let negative = if self.is_sym('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if negative { -n } else { n })
            }
            _ => self.syntax("expected an integer"),
        }
    }

    fn small_u32(&mut self) -> Result<u32> {
        let at = self.offset();
        let n = self.integer()?;
        n.to_u32().ok_or(Error::Syntax { offset: at, message: "expected a nonnegative integer".into() })
    }

    /// `a` or `a/b`, optionally signed.
    fn rational(&mut self) -> Result<Rational> {
        let num = self.integer()?;
        if self.is_sym('/') {
            self.bump();
            let at = self.offset();
            let den = self.integer()?;
            if den.is_zero() {
                return Err(Error::ZeroDenominatorLiteral { offset: at });
            }
            return Ok(Rational::new(num, den));
        }
        Ok(Rational::from_integer(num))
    }

    fn starts_rational(&self) -> bool {
        match self.peek() {
            Tok::Int(_) => true,
            Tok::Sym('-') => matches!(self.tokens.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Int(_))),
            _ => false,
        }
    }

    fn expr(&mut self) -> Result<QExpExpr> {
        let mut items = vec_of(self.term()?);
        loop {
            if self.is_sym('+') {
                self.bump();
                items.push(self.term()?);
            } else if self.is_sym('-') {
                self.bump();
                let t = self.term()?;
                items.push(QExpExpr::ScalarMultiple(Rational::from_integer((-1).into()), Box::new(t)));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { QExpExpr::Sum(items) })
    }

    fn term(&mut self) -> Result<QExpExpr> {
        let mut items = vec_of(self.factor()?);
        while self.is_sym('*') {
            self.bump();
            items.push(self.factor()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { QExpExpr::Product(items) })
    }

    fn factor(&mut self) -> Result<QExpExpr> {
        if self.starts_rational() {
            return Ok(QExpExpr::RationalConst(self.rational()?));
        }
        let atom = self.atom()?;
        if self.is_sym('^') {
            self.bump();
            let k = self.small_u32()?;
            return Ok(QExpExpr::IntegerPower(Box::new(atom), k));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<QExpExpr> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "norm" || name == "val" => {
                self.bump();
                self.expect_sym('(')?;
                let p = self.poly()?;
                self.expect_sym(')')?;
                if name == "val" {
                    return Ok(QExpExpr::Val(p));
                }
                if self.is_sym('^') && self.tokens.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Sym('{')) {
                    self.bump();
                    self.bump();
                    let at_num = self.offset();
                    let numer = self
                        .integer()?
                        .to_i64()
                        .ok_or(Error::Syntax { offset: at_num, message: "exponent out of range".into() })?;
                    self.expect_sym('/')?;
                    let at_den = self.offset();
                    let denom = self.small_u32()?;
                    if denom == 0 {
                        return Err(Error::ZeroDenominatorLiteral { offset: at_den });
                    }
                    self.expect_sym('}')?;
                    return Ok(QExpExpr::FracNormPower { base: p, numer, denom });
                }
                Ok(QExpExpr::Norm(p))
            }
            Tok::Ident(name) if parse_var(&name).is_some() => {
                Err(Error::Syntax { offset: at, message: "polynomials must appear inside norm() or val()".into() })
            }
            Tok::Ident(name) => Err(Error::Syntax { offset: at, message: format!("unknown function `{name}`") }),
            Tok::End => self.syntax("unexpected end of input"),
            _ => self.syntax("expected norm(...), val(...), a rational or `(`"),
        }
    }

    fn poly(&mut self) -> Result<PolyExpr> {
        let mut acc = self.pterm()?;
        loop {
            if self.is_sym('+') {
                self.bump();
                acc = &acc + &self.pterm()?;
            } else if self.is_sym('-') {
                self.bump();
                acc = &acc - &self.pterm()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn pterm(&mut self) -> Result<PolyExpr> {
        let mut acc = self.pfactor()?;
        loop {
            if self.is_sym('*') {
                self.bump();
                acc = &acc * &self.pfactor()?;
            } else if self.is_sym('/') {
                self.bump();
                let at = self.offset();
                let d = self.pfactor()?;
                match d.constant_value() {
                    Some(c) if c.is_zero() => return Err(Error::ZeroDenominatorLiteral { offset: at }),
                    Some(c) => acc = acc.scale(&c.recip()),
                    None => {
                        return Err(Error::Syntax {
                            offset: at,
                            message: "division by a non-constant polynomial".into(),
                        })
                    }
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn pfactor(&mut self) -> Result<PolyExpr> {
        if self.is_sym('-') {
            self.bump();
            return Ok(-&self.pfactor()?);
        }
        let base = self.patom()?;
        if self.is_sym('^') {
            self.bump();
            let k = self.small_u32()?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn patom(&mut self) -> Result<PolyExpr> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(PolyExpr::constant(Rational::from_integer(n)))
            }
            Tok::Ident(name) => {
                self.bump();
                match parse_var(&name) {
                    Some(i) => Ok(PolyExpr::var(i)),
                    None => Err(Error::UnknownVariable { name, offset: at }),
                }
            }
            Tok::Sym('(') => {
                self.bump();
                let p = self.poly()?;
                self.expect_sym(')')?;
                Ok(p)
            }
            Tok::End => self.syntax("unexpected end of input"),
            _ => self.syntax("expected a polynomial"),
        }
    }
}

fn vec_of(e: QExpExpr) -> Vec<QExpExpr> {
    let mut v = Vec::with_capacity(4);
    v.push(e);
    v
}

/// `x<k>` with `k >= 1` and no leading zeros.
fn parse_var(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses an expression and returns its canonical tree.
pub fn parse_expr(text: &str) -> Result<QExpExpr> {
    let mut p = Parser { tokens: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e.canonical())
}

/// Parses a polynomial in `x1, x2, ...` with rational coefficients.
pub fn parse_poly(text: &str) -> Result<PolyExpr> {
    let mut p = Parser { tokens: lex(text)?, pos: 0 };
    let poly = p.poly()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(poly)
}

/// Canonical text of an expression.
pub fn format_expr(e: &QExpExpr) -> String {
    e.to_string()
}
