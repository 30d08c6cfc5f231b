//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr     := ['-'] term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := base ('^' exponent)?
//! base     := number | ident | '(' expr ')' | ('exp'|'log') '(' expr ')'
//! exponent := ['-'] (number | ident | '(' expr ')')
//! number   := integer | integer '/' integer | decimal
//! ```
//!
//! Whitespace is insignificant. Decimals parse to exact rationals.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Context, Expr};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared identifier `{name}` at position {pos}")]
    Undeclared { pos: usize, name: String },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: Arc<Context>,
}

/// Parse `text` over the declared variable and parameter names.
pub fn parse(text: &str, vars: &[&str], params: &[&str]) -> Result<Expr, ParseError> {
    let ctx = Context::new(vars.to_vec(), params.to_vec());
    parse_in(text, &ctx)
}

/// Parse against an existing context.
pub fn parse_in(text: &str, ctx: &Arc<Context>) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, ctx: ctx.clone() };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let negate = self.eat(b'-');
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = acc.mul(&f);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = acc.div(&f);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.exponent()?;
            if let Some(c) = exponent.as_const() {
                if c.is_integer() {
                    if let Some(k) = c.numer().to_i64() {
                        return Ok(base.int_pow(k));
                    }
                }
            }
            return Ok(base.real_pow(&exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        let negate = self.eat(b'-');
        let e = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                e
            }
            Some(c) if c.is_ascii_digit() => self.number()?,
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident_expr()?,
            _ => return Err(self.err("expected exponent")),
        };
        Ok(if negate { e.neg() } else { e })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident_expr(),
            Some(b'-') => {
                // unary minus inside a factor, e.g. `a*-b` is rejected but
                // `(-b)` has been handled by expr(); keep the message clear
                Err(self.err("unexpected `-` (use parentheses)"))
            }
            _ => Err(self.err("expected number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part: BigInt = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("invalid integer"))?;
        // decimal
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == fs {
                return Err(self.err("expected digits after decimal point"));
            }
            let frac: BigInt = std::str::from_utf8(&self.src[fs..self.pos]).unwrap().parse().unwrap();
            let scale = BigInt::from(10u32).pow((self.pos - fs) as u32);
            let value = BigRational::new(int_part * &scale + frac, scale);
            return Ok(Expr::constant(&self.ctx, value));
        }
        Ok(Expr::constant(&self.ctx, BigRational::from_integer(int_part)))
    }

    fn ident_expr(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "exp" | "log" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(if name == "exp" { arg.exp() } else { arg.log() })
            }
            _ => {
                if let Some(i) = self.ctx.var_index(&name) {
                    Ok(Expr::var(&self.ctx, i))
                } else if let Some(i) = self.ctx.param_index(&name) {
                    Ok(Expr::param(&self.ctx, i))
                } else {
                    Err(ParseError::Undeclared { pos: start, name })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Verdict;

    #[test]
    fn lv_first_component() {
        let e = parse("x1*(l1 + c*x2 + x3)", &["x1", "x2", "x3"], &["l1", "c"]).unwrap();
        let v = e.eval(&[2.0, 3.0, 4.0], &[1.0, -1.0]).unwrap();
        assert_eq!(v, 2.0 * (1.0 - 3.0 + 4.0));
    }

    #[test]
    fn zero_literal() {
        let e = parse("0", &["x1"], &[]).unwrap();
        assert!(e.is_zero_const());
    }

    #[test]
    fn exp_node() {
        let e = parse("exp(-d*x1)", &["x1"], &["d"]).unwrap();
        assert!(matches!(e.node(), super::super::Node::Exp(_)));
    }

    #[test]
    fn rational_and_decimal_numbers() {
        let a = parse("3/4", &[], &[]).unwrap();
        let b = parse("0.75", &[], &[]).unwrap();
        assert_eq!(a.sub(&b).is_zero().unwrap(), Verdict::True);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("x1 + ", &["x1"], &[]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 5, .. }));
    }

    #[test]
    fn undeclared_identifier() {
        let err = parse("x1 + q", &["x1"], &[]).unwrap_err();
        assert_eq!(err, ParseError::Undeclared { pos: 5, name: "q".into() });
    }

    #[test]
    fn print_reparse_roundtrip() {
        let ctx_vars = ["x1", "x2", "x3"];
        let ctx_params = ["a", "b"];
        for src in [
            "x1*(a + b*x2 + x3)",
            "1/2*x1^2 + exp(-a*x1)*x3",
            "log(x2)/x1 - 3*x2^(-2)",
            "x1^(1/2) + b",
        ] {
            let e = parse(src, &ctx_vars, &ctx_params).unwrap();
            let printed = format!("{e}");
            let e2 = parse(&printed, &ctx_vars, &ctx_params).unwrap();
            assert_eq!(e.sub(&e2).is_zero().unwrap(), Verdict::True, "roundtrip failed for {src} -> {printed}");
        }
    }
}
