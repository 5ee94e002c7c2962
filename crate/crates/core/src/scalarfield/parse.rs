//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' exponent)?
//! atom    := number | ident | '(' expr ')'
//! number  := digits ('.' digits)? | digits '/' digits   (read exactly)
//! ```
//!
//! Division is accepted only by nonzero numeric constants, and exponents must
//! be non-negative integers, so every accepted text denotes a polynomial.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{Poly, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { offset: usize, name: String },
    #[error("non-negative integer exponent required at byte {offset}")]
    BadExponent { offset: usize },
    #[error("division by a non-constant or zero expression at byte {offset}")]
    BadDivision { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownVariable { offset, .. }
            | ParseError::BadExponent { offset }
            | ParseError::BadDivision { offset } => *offset,
        }
    }
}

/// Parse `text` as a polynomial in the named variables.
pub fn parse_poly<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Poly, ParseError> {
    let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars: &names,
    };
    p.skip_ws();
    let out = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn nvars(&self) -> usize {
        self.vars.len()
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    acc = acc.mul(&self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let at = self.pos;
                    let d = self.unary()?;
                    if !d.is_constant() || d.is_zero() {
                        return Err(ParseError::BadDivision { offset: at });
                    }
                    acc = acc.scale(&d.constant_term().recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let at = self.pos;
        let e = self.exponent(at)?;
        Ok(base.pow(e))
    }

    fn exponent(&mut self, at: usize) -> Result<u32, ParseError> {
        let value = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                if !inner.is_constant() {
                    return Err(ParseError::BadExponent { offset: at });
                }
                inner.constant_term()
            }
            Some(c) if c.is_ascii_digit() => self.number()?,
            Some(b'-') => return Err(ParseError::BadExponent { offset: at }),
            _ => return Err(self.syntax("expected exponent")),
        };
        if !value.is_integer() || value.is_negative() {
            return Err(ParseError::BadExponent { offset: at });
        }
        value
            .to_integer()
            .to_u32()
            .ok_or(ParseError::BadExponent { offset: at })
    }

    fn atom(&mut self) -> Result<Poly, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let q = self.number()?;
                Ok(Poly::constant(self.nvars(), q))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Poly::var(self.nvars(), i)),
                    None => Err(ParseError::UnknownVariable {
                        offset: start,
                        name: name.to_string(),
                    }),
                }
            }
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    /// Unsigned integer or decimal literal, read exactly.
    fn number(&mut self) -> Result<Rational, ParseError> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_len = 0u32;
        let mut seen_dot = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_dot {
                    frac_len += 1;
                }
                self.pos += 1;
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        let n: BigInt = digits.parse().expect("digits");
        let d = num_traits::pow(BigInt::from(10), frac_len as usize);
        if d.is_zero() {
            return Err(self.syntax("malformed number"));
        }
        let q = Rational::new(n, d);
        debug_assert!(q.denom() >= &BigInt::one());
        Ok(q)
    }
}
