//! Infix parser for polynomial expressions such as `z^4 - x^3 - w*x*z^2`.
//!
//! Grammar: sums and differences of products; `^` takes a non-negative
//! integer exponent; `/` is allowed only by a nonzero constant.

use num_traits::Zero;

use super::rational::{self, Rational};
use super::{PolyError, Polynomial};

pub fn parse_polynomial<S: AsRef<str>>(input: &str, names: &[S]) -> Result<Polynomial, PolyError> {
    let names: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
    let mut p = Parser {
        src: input,
        bytes: input.as_bytes(),
        pos: 0,
        names: &names,
    };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> PolyError {
        PolyError::Parse {
            input: self.src.to_string(),
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc * self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    if !d.is_constant() || d.constant_term().is_zero() {
                        self.pos = at;
                        return Err(self.error("division only by a nonzero constant"));
                    }
                    acc = acc.scale(&d.constant_term().recip());
                }
                Some(b'(') => acc = acc * self.unary()?,
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => acc = acc * self.unary()?,
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = self.src[start..self.pos]
                .parse()
                .map_err(|_| self.error("expected a non-negative integer exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let q: Rational =
                    rational::parse(&self.src[start..self.pos]).map_err(|_| self.error("malformed number"))?;
                Ok(Polynomial::constant(self.nvars(), q))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                match self.names.iter().position(|n| *n == ident) {
                    Some(i) => Ok(Polynomial::var(self.nvars(), i)),
                    None => {
                        self.pos = start;
                        Err(self.error(&format!("unknown variable `{ident}`")))
                    }
                }
            }
            _ => Err(self.error("expected a number, variable or `(`")),
        }
    }
}
