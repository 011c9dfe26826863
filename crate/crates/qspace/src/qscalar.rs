//! Exact coefficients: the rational function field in `t`, where `t^4 = q`.
//!
//! Every value is kept in a canonical reduced form, so structural equality
//! is value equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::QError;

/// Laurent polynomial in `t` with integer coefficients, stored densely
/// from the lowest exponent `lo`. The zero polynomial has no coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LPoly {
    lo: i32,
    c: Vec<BigInt>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly { lo: 0, c: Vec::new() }
    }

    pub fn one() -> Self {
        Self::monomial(BigInt::one(), 0)
    }

    pub fn monomial(coef: BigInt, exp: i32) -> Self {
        if coef.is_zero() {
            return Self::zero();
        }
        LPoly { lo: exp, c: vec![coef] }
    }

    fn from_parts(lo: i32, mut c: Vec<BigInt>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        let lead_zeros = c.iter().take_while(|x| x.is_zero()).count();
        if lead_zeros == c.len() {
            return Self::zero();
        }
        c.drain(..lead_zeros);
        LPoly { lo: lo + lead_zeros as i32, c }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.lo == 0 && self.c.len() == 1 && self.c[0].is_one()
    }

    /// Lowest exponent present (0 for the zero polynomial).
    pub fn low(&self) -> i32 {
        self.lo
    }

    /// Highest exponent present.
    pub fn high(&self) -> i32 {
        self.lo + self.c.len() as i32 - 1
    }

    pub fn coeff(&self, e: i32) -> BigInt {
        let k = e - self.lo;
        if k < 0 || k as usize >= self.c.len() {
            BigInt::zero()
        } else {
            self.c[k as usize].clone()
        }
    }

    /// Iterates over `(exponent, coefficient)` pairs with nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigInt)> {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(move |(k, x)| (self.lo + k as i32, x))
    }

    pub fn shift(&self, k: i32) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LPoly { lo: self.lo + k, c: self.c.clone() }
    }

    pub fn leading(&self) -> &BigInt {
        self.c.last().expect("leading coefficient of zero polynomial")
    }

    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for x in &self.c {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
        g
    }

    fn div_int(&self, d: &BigInt) -> Self {
        LPoly { lo: self.lo, c: self.c.iter().map(|x| x / d).collect() }
    }

    fn scale_int(&self, d: &BigInt) -> Self {
        Self::from_parts(self.lo, self.c.iter().map(|x| x * d).collect())
    }

    /// `p(1/t)`.
    pub fn invert_var(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.c.clone();
        c.reverse();
        LPoly { lo: -self.high(), c }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for x in self.c.iter().rev() {
            acc = acc * t + x.to_f64().unwrap_or(f64::NAN);
        }
        acc * t.powi(self.lo)
    }

    /// Value at `t = q0^{1/4}`, with each power taken directly from `q0`.
    pub fn eval_q(&self, q0: f64) -> f64 {
        self.terms()
            .map(|(e, c)| c.to_f64().unwrap_or(f64::NAN) * q0.powf(e as f64 / 4.0))
            .sum()
    }

    /// Primitive part with positive leading coefficient.
    fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut g = self.content();
        if self.leading().is_negative() {
            g = -g;
        }
        self.div_int(&g)
    }

    /// Pseudo-remainder of polynomials (both with `lo == 0`).
    fn prem(a: &LPoly, b: &LPoly) -> LPoly {
        let db = b.c.len() - 1;
        let lb = b.leading().clone();
        let mut r = a.c.clone();
        while r.len() > db && !r.is_empty() {
            let lr = r.last().unwrap().clone();
            let shift = r.len() - 1 - db;
            for x in r.iter_mut() {
                *x *= &lb;
            }
            for (k, bk) in b.c.iter().enumerate() {
                r[shift + k] -= &lr * bk;
            }
            r.pop();
            while r.last().is_some_and(|x| x.is_zero()) {
                r.pop();
            }
        }
        LPoly::from_parts(0, r)
    }

    /// Primitive gcd of two true polynomials (`lo == 0`).
    fn poly_gcd(a: &LPoly, b: &LPoly) -> LPoly {
        let (mut a, mut b) = (a.primitive(), b.primitive());
        if a.c.len() < b.c.len() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = Self::prem(&a, &b);
            a = b;
            b = r.primitive();
        }
        a.primitive()
    }

    /// Exact division of true polynomials; `b` must divide `a` over the integers.
    fn poly_div_exact(a: &LPoly, b: &LPoly) -> LPoly {
        if b.is_one() {
            return a.clone();
        }
        let db = b.c.len() - 1;
        let mut r = a.c.clone();
        if r.len() <= db {
            return LPoly::zero();
        }
        let mut qv = vec![BigInt::zero(); r.len() - db];
        for i in (0..qv.len()).rev() {
            let top = r[i + db].clone();
            if top.is_zero() {
                continue;
            }
            let qc = &top / b.leading();
            for (k, bk) in b.c.iter().enumerate() {
                r[i + k] -= &qc * bk;
            }
            qv[i] = qc;
        }
        LPoly::from_parts(0, qv)
    }
}

impl Add for &LPoly {
    type Output = LPoly;
    fn add(self, o: &LPoly) -> LPoly {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(o.lo);
        let hi = self.high().max(o.high());
        let mut c = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for (k, x) in self.c.iter().enumerate() {
            c[(self.lo - lo) as usize + k] += x;
        }
        for (k, x) in o.c.iter().enumerate() {
            c[(o.lo - lo) as usize + k] += x;
        }
        LPoly::from_parts(lo, c)
    }
}

impl Neg for &LPoly {
    type Output = LPoly;
    fn neg(self) -> LPoly {
        LPoly { lo: self.lo, c: self.c.iter().map(|x| -x).collect() }
    }
}

impl Sub for &LPoly {
    type Output = LPoly;
    fn sub(self, o: &LPoly) -> LPoly {
        self + &(-o)
    }
}

impl Mul for &LPoly {
    type Output = LPoly;
    fn mul(self, o: &LPoly) -> LPoly {
        if self.is_zero() || o.is_zero() {
            return LPoly::zero();
        }
        let mut c = vec![BigInt::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        LPoly::from_parts(self.lo + o.lo, c)
    }
}

/// An exact element of the field of rational functions in `t = q^{1/4}`.
///
/// The denominator is a genuine polynomial with nonzero constant term and
/// positive leading coefficient; powers of `t` live in the numerator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QScalar {
    num: LPoly,
    den: LPoly,
}

impl QScalar {
    pub fn zero() -> Self {
        QScalar { num: LPoly::zero(), den: LPoly::one() }
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn int(n: i64) -> Self {
        QScalar { num: LPoly::monomial(BigInt::from(n), 0), den: LPoly::one() }
    }

    /// `c * t^k`, i.e. `c * q^{k/4}`.
    pub fn t_pow_coef(c: i64, k: i32) -> Self {
        QScalar { num: LPoly::monomial(BigInt::from(c), k), den: LPoly::one() }
    }

    /// `t^k = q^{k/4}`.
    pub fn t_pow(k: i32) -> Self {
        Self::t_pow_coef(1, k)
    }

    /// `q^n`.
    pub fn q_pow(n: i32) -> Self {
        Self::t_pow(4 * n)
    }

    pub fn q() -> Self {
        Self::q_pow(1)
    }

    /// `q^{1/2}`.
    pub fn sqrt_q() -> Self {
        Self::t_pow(2)
    }

    /// `λ = q − q⁻¹`.
    pub fn lambda() -> Self {
        &Self::q_pow(1) - &Self::q_pow(-1)
    }

    /// `λ₊ = q + q⁻¹`.
    pub fn lambda_plus() -> Self {
        &Self::q_pow(1) + &Self::q_pow(-1)
    }

    pub fn from_laurent(num: LPoly) -> Self {
        QScalar { num, den: LPoly::one() }
    }

    /// Builds `num / den` and reduces it to canonical form.
    pub fn from_parts(num: LPoly, den: LPoly) -> Result<Self, QError> {
        if den.is_zero() {
            return Err(QError::DivisionByZero);
        }
        Ok(Self::normalize(num, den))
    }

    fn normalize(num: LPoly, den: LPoly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let s = den.lo;
        let den = den.shift(-s);
        let num = num.shift(-s);
        if den.c.len() == 1 {
            let d = den.c[0].clone();
            let g = num.content().gcd(&d);
            let g = if d.is_negative() { -g } else { g };
            return QScalar { num: num.div_int(&g), den: LPoly::monomial(&d / &g, 0) };
        }
        let nlo = num.lo;
        let np = num.shift(-nlo);
        let g = LPoly::poly_gcd(&np, &den);
        let (np, dp) = if g.c.len() > 1 {
            (LPoly::poly_div_exact(&np, &g), LPoly::poly_div_exact(&den, &g))
        } else {
            (np, den)
        };
        let mut cg = np.content().gcd(&dp.content());
        if dp.leading().is_negative() {
            cg = -cg;
        }
        QScalar { num: np.div_int(&cg).shift(nlo), den: dp.div_int(&cg) }
    }

    pub fn numerator(&self) -> &LPoly {
        &self.num
    }

    pub fn denominator(&self) -> &LPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// True when the value is a Laurent polynomial in `t`.
    pub fn is_laurent(&self) -> bool {
        self.den.is_one()
    }

    /// If the value is `c * t^k` with integer `c`, returns `(c, k)`.
    pub fn as_monomial(&self) -> Option<(BigInt, i32)> {
        if self.den.is_one() && self.num.c.len() == 1 {
            Some((self.num.c[0].clone(), self.num.lo))
        } else {
            None
        }
    }

    pub fn inv(&self) -> Result<Self, QError> {
        if self.is_zero() {
            return Err(QError::DivisionByZero);
        }
        Ok(Self::normalize(self.den.clone(), self.num.clone()))
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, n: i32) -> Result<Self, QError> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            e >>= 1;
            if e > 0 {
                b = &b * &b;
            }
        }
        Ok(acc)
    }

    /// Multiplies by `t^k` without a gcd pass.
    pub fn mul_t_pow(&self, k: i32) -> Self {
        QScalar { num: self.num.shift(k), den: self.den.clone() }
    }

    pub fn scale_int(&self, c: i64) -> Self {
        if c == 0 {
            return Self::zero();
        }
        Self::normalize(self.num.scale_int(&BigInt::from(c)), self.den.clone())
    }

    /// The substitution `q → 1/q` (equivalently `t → 1/t`).
    pub fn invert_q(&self) -> Self {
        Self::normalize(self.num.invert_var(), self.den.invert_var())
    }

    /// Evaluates at `q = q0`, i.e. `t = q0^{1/4}`.
    pub fn eval(&self, q0: f64) -> Result<f64, QError> {
        if !(q0 > 0.0) {
            return Err(QError::Domain(format!("q must be positive, got {q0}")));
        }
        let d = self.den.eval_q(q0);
        if d == 0.0 {
            return Err(QError::PoleAtPoint(q0));
        }
        Ok(self.num.eval_q(q0) / d)
    }

    /// Parses the scalar grammar, e.g. `1 + q^2`, `q^(-1/2)`, `(1)/(1 + q^2)`.
    pub fn parse(s: &str) -> Result<Self, QError> {
        crate::expr::parse_scalar(s)
    }
}

/// Expanded q-number `[[n]]_{q^a} = (1 − q^{an})/(1 − q^a)` for any integer `n`.
///
/// For `n ≥ 0` this is `Σ_{k<n} q^{ak}`; for negative `n` it is
/// `−Σ_{k=1}^{−n} q^{−ak}`.
pub fn qnum_signed(n: i32, a: i32) -> QScalar {
    let mut acc = LPoly::zero();
    if n >= 0 {
        for k in 0..n {
            acc = &acc + &LPoly::monomial(BigInt::one(), 4 * a * k);
        }
    } else {
        for k in 1..=-n {
            acc = &acc - &LPoly::monomial(BigInt::one(), -4 * a * k);
        }
    }
    QScalar::from_laurent(acc)
}

/// `[[n]]_{q^a}` for `n ≥ 0`.
pub fn qnum(n: u32, a: i32) -> QScalar {
    qnum_signed(n as i32, a)
}

/// `[[n]]_{q^a}! = [[1]]·[[2]]·…·[[n]]`.
pub fn qfact(n: u32, a: i32) -> QScalar {
    let mut acc = QScalar::one();
    for k in 1..=n {
        acc = &acc * &qnum(k, a);
    }
    acc
}

/// Evaluates a scalar at a real `q0 > 0`.
pub fn eval_scalar(s: &QScalar, q0: f64) -> Result<f64, QError> {
    s.eval(q0)
}

impl Default for QScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for &QScalar {
    type Output = QScalar;
    fn add(self, o: &QScalar) -> QScalar {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && o.den.is_one() {
            return QScalar { num: &self.num + &o.num, den: LPoly::one() };
        }
        if self.den == o.den {
            return QScalar::normalize(&self.num + &o.num, self.den.clone());
        }
        QScalar::normalize(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den)
    }
}

impl Sub for &QScalar {
    type Output = QScalar;
    fn sub(self, o: &QScalar) -> QScalar {
        self + &(-o)
    }
}

impl Neg for &QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        QScalar { num: -&self.num, den: self.den.clone() }
    }
}

impl Mul for &QScalar {
    type Output = QScalar;
    fn mul(self, o: &QScalar) -> QScalar {
        if self.is_zero() || o.is_zero() {
            return QScalar::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return QScalar { num: &self.num * &o.num, den: LPoly::one() };
        }
        QScalar::normalize(&self.num * &o.num, &self.den * &o.den)
    }
}

impl Div for &QScalar {
    type Output = QScalar;
    /// Panics on division by zero; use [`QScalar::inv`] for a checked form.
    fn div(self, o: &QScalar) -> QScalar {
        self * &o.inv().expect("division by zero scalar")
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for QScalar {
            type Output = QScalar;
            fn $m(self, o: QScalar) -> QScalar {
                (&self).$m(&o)
            }
        }
        impl $tr<&QScalar> for QScalar {
            type Output = QScalar;
            fn $m(self, o: &QScalar) -> QScalar {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        -&self
    }
}

fn render_q_power(k: i32) -> String {
    // k is an exponent of t = q^{1/4}
    if k == 0 {
        return String::new();
    }
    let g = k.abs().gcd(&4);
    let (n, d) = (k / g, 4 / g);
    match (n, d) {
        (1, 1) => "q".to_string(),
        (n, 1) => format!("q^{n}"),
        (n, d) => format!("q^({n}/{d})"),
    }
}

fn render_laurent(p: &LPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (e, c)) in p.terms().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let qp = render_q_power(e);
        match (mag.is_one(), qp.is_empty()) {
            (true, true) => out.push('1'),
            (true, false) => out.push_str(&qp),
            (false, true) => out.push_str(&mag.to_string()),
            (false, false) => {
                out.push_str(&mag.to_string());
                out.push('*');
                out.push_str(&qp);
            }
        }
    }
    out
}

impl fmt::Display for QScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", render_laurent(&self.num))
        } else {
            write!(f, "({})/({})", render_laurent(&self.num), render_laurent(&self.den))
        }
    }
}

impl fmt::Debug for QScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QScalar({self})")
    }
}

impl PartialOrd for QScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An arbitrary but fixed total order, so scalars can key ordered maps.
impl Ord for QScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |p: &LPoly| (p.lo, p.c.clone());
        key(&self.num).cmp(&key(&other.num)).then_with(|| key(&self.den).cmp(&key(&other.den)))
    }
}

impl Serialize for QScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        QScalar::parse(&s).map_err(serde::de::Error::custom)
    }
}
