//! Commutative images of quantum-space elements.
//!
//! A [`PolyFun`] is a finitely supported map from integer exponent vectors to
//! [`QScalar`] coefficients over a fixed [`CoordSys`]. Tensor products of such
//! functions are [`TensorPolyFun`] values with one exponent block per slot.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::qscalar::{qnum_signed, QScalar};

/// The four quantum spaces handled by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Plane,
    Euclid3,
    Euclid4,
    Minkowski,
}

impl Space {
    pub fn tag(self) -> &'static str {
        match self {
            Space::Plane => "plane",
            Space::Euclid3 => "euclid3",
            Space::Euclid4 => "euclid4",
            Space::Minkowski => "minkowski",
        }
    }

    pub fn from_tag(s: &str) -> Result<Space> {
        match s {
            "plane" => Ok(Space::Plane),
            "euclid3" => Ok(Space::Euclid3),
            "euclid4" => Ok(Space::Euclid4),
            "minkowski" => Ok(Space::Minkowski),
            other => Err(QError::UnknownSpace(other.to_string())),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Whether a coordinate system labels positions or lowered partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Coord,
    Partial,
}

/// Named coordinates of a quantum space together with their conjugation data.
///
/// Minkowski functions use the coordinates `(r2, xp, x30, xm)`; the metric is
/// only known on the light-cone pair and conjugation is not provided there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoordSys {
    pub space: Space,
    pub role: Role,
}

impl CoordSys {
    pub const PLANE: CoordSys = CoordSys { space: Space::Plane, role: Role::Coord };
    pub const PLANE_PARTIAL: CoordSys = CoordSys { space: Space::Plane, role: Role::Partial };
    pub const EUCLID3: CoordSys = CoordSys { space: Space::Euclid3, role: Role::Coord };
    pub const EUCLID4: CoordSys = CoordSys { space: Space::Euclid4, role: Role::Coord };
    pub const MINKOWSKI: CoordSys = CoordSys { space: Space::Minkowski, role: Role::Coord };

    pub fn coords(space: Space) -> CoordSys {
        CoordSys { space, role: Role::Coord }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match (self.space, self.role) {
            (Space::Plane, Role::Coord) => &["x1", "x2"],
            (Space::Plane, Role::Partial) => &["d1", "d2"],
            (Space::Euclid3, _) => &["xp", "x3", "xm"],
            (Space::Euclid4, _) => &["x1", "x2", "x3", "x4"],
            (Space::Minkowski, _) => &["r2", "xp", "x30", "xm"],
        }
    }

    pub fn dim(&self) -> usize {
        self.names().len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names().iter().position(|n| *n == name).ok_or_else(|| QError::UnknownCoordinate {
            name: name.to_string(),
            space: self.space.tag().to_string(),
        })
    }

    /// Conjugate index `ī`.
    pub fn conj_index(&self, i: usize) -> usize {
        match self.space {
            Space::Plane => 1 - i,
            Space::Euclid3 => 2 - i,
            Space::Euclid4 => 3 - i,
            Space::Minkowski => [0, 3, 2, 1][i],
        }
    }

    /// Upper metric entry `g^{ij}` (the spinor metric `ε^{ij}` on the plane).
    pub fn metric(&self, i: usize, j: usize) -> Option<QScalar> {
        if j != self.conj_index(i) {
            return None;
        }
        match self.space {
            Space::Plane => Some(if i == 0 {
                QScalar::t_pow(-2)
            } else {
                -QScalar::t_pow(2)
            }),
            Space::Euclid3 => Some(match i {
                0 => -QScalar::q(),
                1 => QScalar::one(),
                _ => -QScalar::q_pow(-1),
            }),
            Space::Euclid4 => Some(match i {
                0 => QScalar::q_pow(-1),
                1 | 2 => QScalar::one(),
                _ => QScalar::q(),
            }),
            Space::Minkowski => match i {
                1 => Some(-QScalar::q()),
                3 => Some(-QScalar::q_pow(-1)),
                _ => None,
            },
        }
    }

    /// Lower metric entry `g_{ij}`; on the plane `ε_{ij} = -ε^{ij}`.
    pub fn lower_metric(&self, i: usize, j: usize) -> Option<QScalar> {
        let up = self.metric(i, j)?;
        Some(match self.space {
            Space::Plane => -up,
            _ => up,
        })
    }
}

impl fmt::Display for CoordSys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.role {
            Role::Coord => write!(f, "{}", self.space),
            Role::Partial => write!(f, "{}-partial", self.space),
        }
    }
}

/// A power of `q` measured in quarters, so `QExp(2)` is `q^(1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct QExp(pub i32);

impl QExp {
    pub fn int(n: i32) -> Self {
        QExp(4 * n)
    }

    /// `num/den` with `den` dividing 4.
    pub fn frac(num: i32, den: i32) -> Result<Self> {
        if den == 0 || 4 % den.abs() != 0 {
            return Err(QError::Domain(format!("q-power {num}/{den} is not a multiple of 1/4")));
        }
        Ok(QExp(num * (4 / den)))
    }

    pub fn scalar(self) -> QScalar {
        QScalar::t_pow(self.0)
    }
}

pub type Exps = Vec<i32>;

fn add_into(map: &mut BTreeMap<Exps, QScalar>, e: Exps, c: QScalar) {
    if c.is_zero() {
        return;
    }
    match map.entry(e) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

/// Where the lower limit of a formal definite integral sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerLimit {
    /// Lower limit at the origin.
    Zero,
    /// Lower limit is the coordinate of a second, independent point.
    Symbol,
    /// Lower limit coincides with the upper one.
    SameAsUpper,
}

/// Commutative function over one coordinate system.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyFun {
    coords: CoordSys,
    terms: BTreeMap<Exps, QScalar>,
}

impl PolyFun {
    pub fn zero(coords: CoordSys) -> Self {
        PolyFun { coords, terms: BTreeMap::new() }
    }

    pub fn constant(coords: CoordSys, c: QScalar) -> Self {
        let mut f = Self::zero(coords);
        f.add_term(vec![0; coords.dim()], c);
        f
    }

    pub fn one(coords: CoordSys) -> Self {
        Self::constant(coords, QScalar::one())
    }

    pub fn monomial(coords: CoordSys, exps: Exps, c: QScalar) -> Self {
        assert_eq!(exps.len(), coords.dim(), "exponent vector length");
        let mut f = Self::zero(coords);
        f.add_term(exps, c);
        f
    }

    /// The coordinate function `x^i`.
    pub fn var(coords: CoordSys, i: usize) -> Self {
        let mut e = vec![0; coords.dim()];
        e[i] = 1;
        Self::monomial(coords, e, QScalar::one())
    }

    pub fn from_terms(coords: CoordSys, terms: impl IntoIterator<Item = (Exps, QScalar)>) -> Self {
        let mut f = Self::zero(coords);
        for (e, c) in terms {
            f.add_term(e, c);
        }
        f
    }

    pub fn coords(&self) -> CoordSys {
        self.coords
    }

    pub fn with_coords(mut self, coords: CoordSys) -> Self {
        assert_eq!(coords.dim(), self.coords.dim());
        self.coords = coords;
        self
    }

    pub fn add_term(&mut self, e: Exps, c: QScalar) {
        debug_assert_eq!(e.len(), self.coords.dim());
        add_into(&mut self.terms, e, c);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &QScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &[i32]) -> QScalar {
        self.terms.get(e).cloned().unwrap_or_else(QScalar::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no exponent is negative.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k >= 0))
    }

    pub fn require_polynomial(&self, context: &str) -> Result<()> {
        if self.is_polynomial() {
            Ok(())
        } else {
            Err(QError::Laurent(context.to_string()))
        }
    }

    pub fn total_degree(&self) -> Option<i32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn degree_in(&self, i: usize) -> Option<i32> {
        self.terms.keys().map(|e| e[i]).max()
    }

    /// `f(0)`, the counit of the represented element.
    pub fn counit(&self) -> Result<QScalar> {
        self.require_polynomial("counit of a Laurent monomial")?;
        Ok(self.coeff(&vec![0; self.coords.dim()]))
    }

    pub fn map_terms(&self, mut g: impl FnMut(&Exps, &QScalar) -> Option<(Exps, QScalar)>) -> Self {
        let mut out = Self::zero(self.coords);
        for (e, c) in &self.terms {
            if let Some((e2, c2)) = g(e, c) {
                out.add_term(e2, c2);
            }
        }
        out
    }

    pub fn try_map_terms(
        &self,
        mut g: impl FnMut(&Exps, &QScalar) -> Result<Option<(Exps, QScalar)>>,
    ) -> Result<Self> {
        let mut out = Self::zero(self.coords);
        for (e, c) in &self.terms {
            if let Some((e2, c2)) = g(e, c)? {
                out.add_term(e2, c2);
            }
        }
        Ok(out)
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(self.coords, other.coords, "coordinate systems differ");
    }

    pub fn scale(&self, c: &QScalar) -> Self {
        if c.is_zero() {
            return Self::zero(self.coords);
        }
        self.map_terms(|e, k| Some((e.clone(), k * c)))
    }

    /// Pointwise (commutative) product.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_same(other);
        let mut out = Self::zero(self.coords);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exps = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.coords);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by the monomial with exponent vector `e`.
    pub fn shift(&self, e: &[i32]) -> Self {
        self.map_terms(|x, c| Some((x.iter().zip(e).map(|(a, b)| a + b).collect(), c.clone())))
    }

    /// `f(…, q^a x^i, …)`.
    pub fn scale_coord(&self, i: usize, a: QExp) -> Self {
        self.map_terms(|e, c| Some((e.clone(), c.mul_t_pow(a.0 * e[i]))))
    }

    /// Multiply each monomial `x^n` by `q^{Q(n) + L(n)}`.
    ///
    /// `quad` lists entries `(i, j, c)` contributing `c·n_i·n_j` (integer powers
    /// of `q`), `lin` lists `(i, a)` contributing `a·n_i`.
    pub fn weight_monomials(&self, quad: &[(usize, usize, i32)], lin: &[(usize, QExp)]) -> Self {
        self.map_terms(|e, c| Some((e.clone(), c.mul_t_pow(weight_exponent(e, quad, lin)))))
    }

    /// Jackson derivative `D^i_{q^a}`.
    pub fn jackson_d(&self, i: usize, a: i32) -> Self {
        self.map_terms(|e, c| {
            if e[i] == 0 {
                return None;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            Some((e2, c * &qnum_signed(e[i], a)))
        })
    }

    /// Formal Jackson antiderivative `(D^i_{q^a})^{-1}`, inverse of [`Self::jackson_d`]
    /// on functions without an `(x^i)^{-1}` term.
    pub fn jackson_antideriv(&self, i: usize, a: i32) -> Result<Self> {
        let name = self.coords.names()[i];
        self.try_map_terms(|e, c| {
            if e[i] == -1 {
                return Err(QError::ExponentMinusOne(name.to_string()));
            }
            let mut e2 = e.clone();
            e2[i] += 1;
            let d = qnum_signed(e2[i], a);
            Ok(Some((e2, (c / &d))))
        })
    }

    /// The slice of terms with exponent zero in coordinate `i`.
    pub fn restrict_zero(&self, i: usize) -> Result<Self> {
        if self.terms.keys().any(|e| e[i] < 0) {
            return Err(QError::Laurent(format!(
                "value at {} = 0 of a Laurent function",
                self.coords.names()[i]
            )));
        }
        Ok(self.map_terms(|e, c| (e[i] == 0).then(|| (e.clone(), c.clone()))))
    }

    /// `F(y) ⊗ 1 - 1 ⊗ F(z)` for the antiderivative `F = (D^i_{q^a})^{-1} f`.
    pub fn definite_integral_formal(&self, i: usize, a: i32, lower: LowerLimit) -> Result<TensorPolyFun> {
        let big_f = self.jackson_antideriv(i, a)?;
        limits_difference(&big_f, i, lower)
    }

    /// Conjugate function, reversing monomials and applying the lower metric.
    ///
    /// `(x^1)^{k_1}…(x^n)^{k_n}` maps to `(g_{nn̄} x^{n̄})^{k_n}…(g_{11̄} x^{1̄})^{k_1}`,
    /// read back in the original normal order.
    pub fn conjugate_fun(&self) -> Result<Self> {
        self.require_polynomial("conjugation of a Laurent monomial")?;
        if self.coords.space == Space::Minkowski || self.coords.role == Role::Partial {
            return Err(QError::Domain(format!("conjugation is not provided on {}", self.coords)));
        }
        let n = self.coords.dim();
        let factors: Vec<QScalar> = (0..n)
            .map(|i| {
                let ib = self.coords.conj_index(i);
                self.coords.lower_metric(i, ib).expect("metric on conjugate pair")
            })
            .collect();
        self.try_map_terms(|e, c| {
            let mut e2 = vec![0; n];
            let mut coef = c.clone();
            for i in 0..n {
                let ib = self.coords.conj_index(i);
                e2[ib] += e[i];
                coef = coef * factors[i].pow(e[i])?;
            }
            Ok(Some((e2, coef)))
        })
    }

    /// Replace every coefficient by its image under `q → 1/q`.
    pub fn invert_q(&self) -> Self {
        self.map_terms(|e, c| Some((e.clone(), c.invert_q())))
    }

    /// Permute coordinates: exponent of `x^i` moves to position `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        self.map_terms(|e, c| {
            let mut e2 = vec![0; e.len()];
            for (i, &k) in e.iter().enumerate() {
                e2[perm[i]] = k;
            }
            Some((e2, c.clone()))
        })
    }

    /// Swap each coordinate with its conjugate partner.
    pub fn swap_conjugate(&self) -> Self {
        let perm: Vec<usize> = (0..self.coords.dim()).map(|i| self.coords.conj_index(i)).collect();
        self.permute(&perm)
    }

    /// Numeric value at `point` with `q = q0`.
    pub fn eval(&self, point: &[f64], q0: f64) -> Result<f64> {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut v = c.eval(q0)?;
            for (x, k) in point.iter().zip(e) {
                v *= x.powi(*k);
            }
            s += v;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "coords": self.coords.names(),
            "space": self.coords.space.tag(),
            "terms": self.terms.iter().map(|(e, c)| serde_json::json!({
                "exps": e,
                "coeff": c.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub(crate) fn weight_exponent(e: &[i32], quad: &[(usize, usize, i32)], lin: &[(usize, QExp)]) -> i32 {
    let mut w = 0;
    for &(i, j, c) in quad {
        w += 4 * c * e[i] * e[j];
    }
    for &(i, a) in lin {
        w += a.0 * e[i];
    }
    w
}

fn limits_difference(big_f: &PolyFun, i: usize, lower: LowerLimit) -> Result<TensorPolyFun> {
    let cs = big_f.coords();
    let one = PolyFun::one(cs);
    let upper = TensorPolyFun::product(big_f, &one);
    match lower {
        LowerLimit::SameAsUpper => Ok(TensorPolyFun::zero(vec![cs, cs])),
        LowerLimit::Zero => {
            let at_zero = big_f.restrict_zero(i)?;
            Ok(upper.sub(&TensorPolyFun::product(&at_zero, &one)))
        }
        LowerLimit::Symbol => Ok(upper.sub(&TensorPolyFun::product(&one, big_f))),
    }
}

/// `F(y) ⊗ 1 - 1 ⊗ F(z)` for an already computed antiderivative `F` in coordinate `i`.
pub fn antiderivative_limits(big_f: &PolyFun, i: usize, lower: LowerLimit) -> Result<TensorPolyFun> {
    limits_difference(big_f, i, lower)
}

impl std::ops::Add for &PolyFun {
    type Output = PolyFun;
    fn add(self, rhs: &PolyFun) -> PolyFun {
        self.check_same(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &PolyFun {
    type Output = PolyFun;
    fn sub(self, rhs: &PolyFun) -> PolyFun {
        self.check_same(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl std::ops::Neg for &PolyFun {
    type Output = PolyFun;
    fn neg(self) -> PolyFun {
        self.map_terms(|e, c| Some((e.clone(), -c.clone())))
    }
}

impl std::ops::Add for PolyFun {
    type Output = PolyFun;
    fn add(self, rhs: PolyFun) -> PolyFun {
        &self + &rhs
    }
}

impl std::ops::Sub for PolyFun {
    type Output = PolyFun;
    fn sub(self, rhs: PolyFun) -> PolyFun {
        &self - &rhs
    }
}

impl std::ops::Neg for PolyFun {
    type Output = PolyFun;
    fn neg(self) -> PolyFun {
        -&self
    }
}

fn coefficient_text(c: &QScalar) -> (bool, String) {
    let s = c.to_string();
    let simple = c.is_laurent() && c.numerator().terms().count() == 1;
    if simple {
        if let Some(rest) = s.strip_prefix('-') {
            return (true, rest.to_string());
        }
        (false, s)
    } else {
        (false, format!("({s})"))
    }
}

fn monomial_text(names: &[&str], e: &[i32]) -> String {
    let mut parts = Vec::new();
    for (n, &k) in names.iter().zip(e) {
        match k {
            0 => {}
            1 => parts.push(n.to_string()),
            k if k < 0 => parts.push(format!("{n}^({k})")),
            k => parts.push(format!("{n}^{k}")),
        }
    }
    parts.join("*")
}

fn render_terms<'a>(items: impl Iterator<Item = (String, &'a QScalar)>) -> String {
    let mut out = String::new();
    for (mono, c) in items {
        let (neg, ctext) = coefficient_text(c);
        let body = if mono.is_empty() {
            ctext
        } else if ctext == "1" {
            mono
        } else {
            format!("{ctext}*{mono}")
        };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for PolyFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.coords.names();
        let s = render_terms(self.terms.iter().map(|(e, c)| (monomial_text(names, e), c)));
        f.write_str(&s)
    }
}

impl fmt::Debug for PolyFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyFun[{}]({})", self.coords, self)
    }
}

/// Element of a tensor product of commutative function algebras.
///
/// Exponent vectors are the concatenation of one block per slot.
#[derive(Clone, PartialEq, Eq)]
pub struct TensorPolyFun {
    slots: Vec<CoordSys>,
    terms: BTreeMap<Exps, QScalar>,
}

/// Labels used when rendering tensor slots.
pub const SLOT_PREFIXES: [&str; 4] = ["x", "y", "z", "w"];

impl TensorPolyFun {
    pub fn zero(slots: Vec<CoordSys>) -> Self {
        TensorPolyFun { slots, terms: BTreeMap::new() }
    }

    pub fn slots(&self) -> &[CoordSys] {
        &self.slots
    }

    pub fn width(&self) -> usize {
        self.slots.iter().map(|s| s.dim()).sum()
    }

    fn offset(&self, k: usize) -> usize {
        self.slots[..k].iter().map(|s| s.dim()).sum()
    }

    /// `f ⊗ g`.
    pub fn product(f: &PolyFun, g: &PolyFun) -> Self {
        Self::product_many(&[f, g])
    }

    pub fn product_many(fs: &[&PolyFun]) -> Self {
        let slots: Vec<CoordSys> = fs.iter().map(|f| f.coords()).collect();
        let mut acc: BTreeMap<Exps, QScalar> = BTreeMap::new();
        acc.insert(Vec::new(), QScalar::one());
        for f in fs {
            let mut next = BTreeMap::new();
            for (e0, c0) in &acc {
                for (e1, c1) in f.terms() {
                    let mut e = e0.clone();
                    e.extend_from_slice(e1);
                    add_into(&mut next, e, c0 * c1);
                }
            }
            acc = next;
        }
        TensorPolyFun { slots, terms: acc }
    }

    pub fn add_term(&mut self, e: Exps, c: QScalar) {
        debug_assert_eq!(e.len(), self.width());
        add_into(&mut self.terms, e, c);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &QScalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[i32]) -> QScalar {
        self.terms.get(e).cloned().unwrap_or_else(QScalar::zero)
    }

    pub fn scale(&self, c: &QScalar) -> Self {
        let mut out = Self::zero(self.slots.clone());
        for (e, k) in &self.terms {
            out.add_term(e.clone(), k * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.slots, other.slots, "tensor slots differ");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-QScalar::one()))
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k >= 0))
    }

    /// Split a concatenated exponent vector into per-slot blocks.
    pub fn split_exps<'a>(&self, e: &'a [i32]) -> Vec<&'a [i32]> {
        let mut out = Vec::with_capacity(self.slots.len());
        let mut at = 0;
        for s in &self.slots {
            out.push(&e[at..at + s.dim()]);
            at += s.dim();
        }
        out
    }

    /// Per-term decomposition into `(coefficient, [slot monomials])`.
    pub fn decompose(&self) -> Vec<(QScalar, Vec<Exps>)> {
        self.terms
            .iter()
            .map(|(e, c)| (c.clone(), self.split_exps(e).into_iter().map(|b| b.to_vec()).collect()))
            .collect()
    }

    pub fn weight_monomials(&self, quad: &[(usize, usize, i32)], lin: &[(usize, QExp)]) -> Self {
        let mut out = Self::zero(self.slots.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.mul_t_pow(weight_exponent(e, quad, lin)));
        }
        out
    }

    /// Apply a linear map to slot `k`, leaving the other slots untouched.
    pub fn map_slot(&self, k: usize, new_cs: CoordSys, g: impl Fn(&PolyFun) -> Result<PolyFun>) -> Result<Self> {
        let off = self.offset(k);
        let dk = self.slots[k].dim();
        let mut slots = self.slots.clone();
        slots[k] = new_cs;
        let mut out = Self::zero(slots);
        let mut cache: BTreeMap<Exps, PolyFun> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mono = e[off..off + dk].to_vec();
            if !cache.contains_key(&mono) {
                let img = g(&PolyFun::monomial(self.slots[k], mono.clone(), QScalar::one()))?;
                cache.insert(mono.clone(), img);
            }
            for (e2, c2) in cache[&mono].terms() {
                let mut ne = e[..off].to_vec();
                ne.extend_from_slice(e2);
                ne.extend_from_slice(&e[off + dk..]);
                out.add_term(ne, c * c2);
            }
        }
        Ok(out)
    }

    /// Apply a map from one slot to a two-slot tensor, splicing the result in place.
    pub fn expand_slot(&self, k: usize, g: impl Fn(&PolyFun) -> Result<TensorPolyFun>) -> Result<Self> {
        let off = self.offset(k);
        let dk = self.slots[k].dim();
        let mut cache: BTreeMap<Exps, TensorPolyFun> = BTreeMap::new();
        let mut out: Option<TensorPolyFun> = None;
        for (e, c) in &self.terms {
            let mono = e[off..off + dk].to_vec();
            if !cache.contains_key(&mono) {
                cache.insert(mono.clone(), g(&PolyFun::monomial(self.slots[k], mono.clone(), QScalar::one()))?);
            }
            let img = &cache[&mono];
            let acc = out.get_or_insert_with(|| {
                let mut slots = self.slots[..k].to_vec();
                slots.extend_from_slice(img.slots());
                slots.extend_from_slice(&self.slots[k + 1..]);
                TensorPolyFun::zero(slots)
            });
            for (e2, c2) in img.terms() {
                let mut ne = e[..off].to_vec();
                ne.extend_from_slice(e2);
                ne.extend_from_slice(&e[off + dk..]);
                acc.add_term(ne, c * c2);
            }
        }
        Ok(out.unwrap_or_else(|| {
            let mut slots = self.slots[..k].to_vec();
            slots.push(self.slots[k]);
            slots.push(self.slots[k]);
            slots.extend_from_slice(&self.slots[k + 1..]);
            TensorPolyFun::zero(slots)
        }))
    }

    /// Reorder slots: slot `i` of the result is slot `order[i]` of `self`.
    pub fn permute_slots(&self, order: &[usize]) -> Self {
        let slots: Vec<CoordSys> = order.iter().map(|&i| self.slots[i]).collect();
        let mut out = Self::zero(slots);
        for (e, c) in &self.terms {
            let blocks = self.split_exps(e);
            let mut ne = Vec::with_capacity(e.len());
            for &i in order {
                ne.extend_from_slice(blocks[i]);
            }
            out.add_term(ne, c.clone());
        }
        out
    }

    /// Exchange the two slots of a two-slot tensor.
    pub fn swap(&self) -> Self {
        self.permute_slots(&[1, 0])
    }

    /// View a one-slot tensor as a function.
    pub fn into_single(self) -> PolyFun {
        assert_eq!(self.slots.len(), 1);
        PolyFun::from_terms(self.slots[0], self.terms)
    }

    pub fn from_single(f: &PolyFun) -> Self {
        let mut out = Self::zero(vec![f.coords()]);
        for (e, c) in f.terms() {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Apply a map to the coefficients.
    pub fn map_coeffs(&self, g: impl Fn(&QScalar) -> QScalar) -> Self {
        let mut out = Self::zero(self.slots.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), g(c));
        }
        out
    }

    /// Keep only terms whose slot-`k` total degree is at most `n`.
    pub fn truncate_slot(&self, k: usize, n: i32) -> Self {
        let off = self.offset(k);
        let dk = self.slots[k].dim();
        let mut out = Self::zero(self.slots.clone());
        for (e, c) in &self.terms {
            if e[off..off + dk].iter().sum::<i32>() <= n {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slots": self.slots.iter().map(|s| s.names()).collect::<Vec<_>>(),
            "terms": self.terms.iter().map(|(e, c)| serde_json::json!({
                "exps": self.split_exps(e),
                "coeff": c.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for TensorPolyFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items = self.terms.iter().map(|(e, c)| {
            let blocks = self.split_exps(e);
            let parts: Vec<String> = blocks
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let names: Vec<String> = self.slots[k]
                        .names()
                        .iter()
                        .map(|n| prefixed(n, SLOT_PREFIXES[k.min(3)]))
                        .collect();
                    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                    let m = monomial_text(&refs, b);
                    if m.is_empty() {
                        "1".to_string()
                    } else {
                        m
                    }
                })
                .collect();
            (parts.join(" ⊗ "), c)
        });
        f.write_str(&render_terms(items))
    }
}

impl fmt::Debug for TensorPolyFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorPolyFun({self})")
    }
}

fn prefixed(name: &str, prefix: &str) -> String {
    match name.strip_prefix('x') {
        Some(rest) => format!("{prefix}{rest}"),
        None => format!("{prefix}_{name}"),
    }
}
