//! Text grammar shared by scalars, functions and the command line.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?
//! exponent := ['-'] int | '(' ['-'] int ['/' int] ')'
//! atom   := int | 'q' | coordinate | '(' expr ')'
//! ```
//!
//! Fractional exponents are allowed only on `q` and must be multiples of 1/4.
//! Division is only by scalars.

use crate::error::{QError, Result};
use crate::polyfun::{CoordSys, PolyFun};
use crate::qscalar::QScalar;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    coords: CoordSys,
    allow_coords: bool,
}

enum Exponent {
    Int(i32),
    Frac(i32, i32),
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(QError::Syntax { offset: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        self.src[start..self.pos]
            .parse::<i64>()
            .map_err(|_| QError::Syntax { offset: start, msg: "integer out of range".into() })
    }

    fn small_int(&mut self) -> Result<i32> {
        let at = self.pos;
        let v = self.integer()?;
        i32::try_from(v).map_err(|_| QError::Syntax { offset: at, msg: "exponent out of range".into() })
    }

    fn expr(&mut self) -> Result<PolyFun> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let t = self.term()?;
                acc = &acc + &t;
            } else if self.eat('-') {
                let t = self.term()?;
                acc = &acc - &t;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PolyFun> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                let t = self.unary()?;
                acc = acc.mul(&t);
            } else if self.peek() == Some('/') {
                let at = self.pos;
                self.pos += 1;
                let t = self.unary()?;
                let c = as_constant(&t)
                    .ok_or(QError::Syntax { offset: at, msg: "division by a non-scalar".into() })?;
                if c.is_zero() {
                    return Err(QError::DivisionByZero);
                }
                acc = acc.scale(&c.inv()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<PolyFun> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn exponent(&mut self) -> Result<Exponent> {
        if self.eat('(') {
            let neg = self.eat('-');
            let n = self.small_int()?;
            let n = if neg { -n } else { n };
            let e = if self.eat('/') { Exponent::Frac(n, self.small_int()?) } else { Exponent::Int(n) };
            self.expect(')')?;
            Ok(e)
        } else {
            let neg = self.eat('-');
            let n = self.small_int()?;
            Ok(Exponent::Int(if neg { -n } else { n }))
        }
    }

    fn power(&mut self) -> Result<PolyFun> {
        let start = self.pos;
        let (base, is_q) = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.pos;
        let e = self.exponent()?;
        match e {
            Exponent::Frac(n, d) => {
                if !is_q {
                    return Err(QError::Syntax { offset: at, msg: "fractional power of a non-q base".into() });
                }
                if d == 0 || 4 % d.abs() != 0 {
                    return Err(QError::Syntax { offset: at, msg: "q-power must be a multiple of 1/4".into() });
                }
                let quarters = n * (4 / d);
                Ok(PolyFun::constant(self.coords, QScalar::t_pow(quarters)))
            }
            Exponent::Int(n) if n >= 0 => Ok(base.pow(n as u32)),
            Exponent::Int(n) => invert_monomial(&base)
                .map(|b| b.pow((-n) as u32))
                .ok_or(QError::Syntax { offset: start, msg: "negative power of a sum".into() }),
        }
    }

    fn atom(&mut self) -> Result<(PolyFun, bool)> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(')')?;
                Ok((v, false))
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.integer()?;
                Ok((PolyFun::constant(self.coords, QScalar::int(v)), false))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if name == "q" {
                    return Ok((PolyFun::constant(self.coords, QScalar::q()), true));
                }
                if !self.allow_coords {
                    return Err(QError::Syntax { offset: start, msg: format!("unexpected identifier `{name}`") });
                }
                let i = self.coords.index_of(name)?;
                Ok((PolyFun::var(self.coords, i), false))
            }
            Some(_) => self.err("unexpected character"),
            None => self.err("unexpected end of input"),
        }
    }
}

fn as_constant(f: &PolyFun) -> Option<QScalar> {
    if f.is_zero() {
        return Some(QScalar::zero());
    }
    if f.len() == 1 {
        let (e, c) = f.terms().next()?;
        if e.iter().all(|&k| k == 0) {
            return Some(c.clone());
        }
    }
    None
}

fn invert_monomial(f: &PolyFun) -> Option<PolyFun> {
    if f.len() != 1 {
        return None;
    }
    let (e, c) = f.terms().next()?;
    let inv = c.inv().ok()?;
    Some(PolyFun::monomial(f.coords(), e.iter().map(|k| -k).collect(), inv))
}

fn run(text: &str, coords: CoordSys, allow_coords: bool) -> Result<PolyFun> {
    let mut p = Parser { src: text, pos: 0, coords, allow_coords };
    let v = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(v)
}

/// Parse a scalar such as `1 + q^2`, `q^(-1/2)` or `(1)/(1 + q^2)`.
pub fn parse_scalar(text: &str) -> Result<QScalar> {
    let v = run(text, CoordSys::PLANE, false)?;
    Ok(as_constant(&v).expect("scalar grammar yields constants"))
}

/// Parse a function over the coordinates of `coords`, e.g. `x1^2*x2 - q*x1`.
pub fn parse_polyfun(text: &str, coords: CoordSys) -> Result<PolyFun> {
    run(text, coords, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_monomials_and_scalars() {
        let f = parse_polyfun("x1^2*x2", CoordSys::PLANE).unwrap();
        assert_eq!(f, PolyFun::monomial(CoordSys::PLANE, vec![2, 1], QScalar::one()));
        let g = parse_polyfun("(q^2 - 1)*x1", CoordSys::PLANE).unwrap();
        assert_eq!(g, PolyFun::monomial(CoordSys::PLANE, vec![1, 0], QScalar::q_pow(2) - QScalar::one()));
        assert_eq!(parse_scalar("q^(-1/2)").unwrap(), QScalar::t_pow(-2));
        assert_eq!(parse_scalar("q^-1").unwrap(), QScalar::q_pow(-1));
        assert_eq!(parse_scalar("(1)/(1 + q^2)").unwrap(), (QScalar::one() + QScalar::q_pow(2)).inv().unwrap());
    }

    #[test]
    fn laurent_monomials() {
        let f = parse_polyfun("x1^-1", CoordSys::PLANE).unwrap();
        assert!(!f.is_polynomial());
        let g = parse_polyfun("x30^(-1)*r2", CoordSys::MINKOWSKI).unwrap();
        assert_eq!(g, PolyFun::monomial(CoordSys::MINKOWSKI, vec![1, 0, -1, 0], QScalar::one()));
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_polyfun("x1 + * x2", CoordSys::PLANE) {
            Err(QError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_polyfun("x9", CoordSys::PLANE), Err(QError::UnknownCoordinate { .. })));
        assert!(matches!(parse_polyfun("x1/x2", CoordSys::PLANE), Err(QError::Syntax { .. })));
        assert!(matches!(parse_polyfun("x1^(1/2)", CoordSys::PLANE), Err(QError::Syntax { .. })));
    }

    #[test]
    fn render_round_trip() {
        let texts = ["x1^2*x2 - q*x1", "(1 + q^2)*x1*x2^3 + q^(-1/2)", "-x2 + (1)/(1 + q^2)*x1^2", "0"];
        for t in texts {
            let f = parse_polyfun(t, CoordSys::PLANE).unwrap();
            let back = parse_polyfun(&f.to_string(), CoordSys::PLANE).unwrap();
            assert_eq!(f, back, "{t} -> {f}");
        }
    }
}
