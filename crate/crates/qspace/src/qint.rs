//! Jackson integrals on q-lattices and whole-space integrals.
//!
//! Numeric functions come in two shapes. [`LatticeFun`] wraps an arbitrary
//! closure and composes operators lazily. [`SepFun`] is a sum of products of
//! one-variable factors, which keeps three- and four-dimensional integrals
//! cheap and lets boundary identities be applied structurally.
//!
//! Every lattice sum is cut off at `k ∈ [−K, K]`. The result is an
//! [`Estimate`] whose `tail_bound` adds a geometric estimate of the discarded
//! tail to the bounds propagated from inner integrals.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::error::{QError, Result};
use crate::manin::{self, Ordering, Variant};
use crate::ncalg::{self, RewriteSystem};
use crate::polyfun::{CoordSys, PolyFun, Space};

/// Largest number of coordinates handled by the numeric layer.
pub const MAX_DIM: usize = 4;

/// Lattice parameters shared by all numeric integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralParams {
    pub q: f64,
    #[serde(rename = "K")]
    pub k: u32,
    pub tol: f64,
    /// Reference point of half-line and whole-line lattices.
    pub x0: f64,
}

impl Default for IntegralParams {
    fn default() -> Self {
        IntegralParams { q: 1.1, k: 500, tol: 1e-10, x0: 1.0 }
    }
}

impl IntegralParams {
    pub fn new(q: f64, k: u32, tol: f64) -> Result<Self> {
        IntegralParams { q, k, tol, x0: 1.0 }.validated()
    }

    pub fn with_x0(self, x0: f64) -> Result<Self> {
        IntegralParams { x0, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(QError::Domain(format!("q must be a finite real above 1, got {}", self.q)));
        }
        if self.k == 0 {
            return Err(QError::Domain("K must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(QError::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(QError::Domain(format!("x0 must be positive, got {}", self.x0)));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "q": self.q, "K": self.k, "tol": self.tol, "x0": self.x0 })
    }
}

/// A value with a certified absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub tail_bound: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, tail_bound: 0.0 }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn scale(self, c: f64) -> Self {
        Estimate { value: c * self.value, tail_bound: c.abs() * self.tail_bound }
    }

    pub fn plus(self, o: Estimate) -> Self {
        Estimate { value: self.value + o.value, tail_bound: self.tail_bound + o.tail_bound }
    }

    pub fn minus(self, o: Estimate) -> Self {
        self.plus(o.scale(-1.0))
    }

    pub fn times(self, o: Estimate) -> Self {
        Estimate {
            value: self.value * o.value,
            tail_bound: self.value.abs() * o.tail_bound
                + o.value.abs() * self.tail_bound
                + self.tail_bound * o.tail_bound,
        }
    }

    pub fn to_json(&self, params: &IntegralParams) -> serde_json::Value {
        json!({ "value": self.value, "tail_bound": self.tail_bound, "params": params.to_json() })
    }
}

/// Integration limits. Variable limits read the upper or lower end from the
/// integrated coordinate itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Limits {
    ZeroTo,
    ToInfinity,
    FromNegInfinity,
    ToZero,
    NegInfinityToZero,
    ZeroToInfinity,
    WholeLine,
}

impl Limits {
    pub const ALL: [Limits; 7] = [
        Limits::ZeroTo,
        Limits::ToInfinity,
        Limits::FromNegInfinity,
        Limits::ToZero,
        Limits::NegInfinityToZero,
        Limits::ZeroToInfinity,
        Limits::WholeLine,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Limits::ZeroTo => "0..x",
            Limits::ToInfinity => "x..inf",
            Limits::FromNegInfinity => "-inf..x",
            Limits::ToZero => "x..0",
            Limits::NegInfinityToZero => "-inf..0",
            Limits::ZeroToInfinity => "0..inf",
            Limits::WholeLine => "-inf..inf",
        }
    }

    pub fn parse(s: &str) -> Result<Limits> {
        Limits::ALL
            .into_iter()
            .find(|l| l.tag() == s)
            .ok_or_else(|| QError::Domain(format!("unknown limits `{s}`")))
    }

    /// Whether an end of the interval lies at infinity.
    pub fn is_infinite(self) -> bool {
        !matches!(self, Limits::ZeroTo | Limits::ToZero)
    }

    /// Whether the result still depends on the integrated coordinate.
    pub fn is_variable(self) -> bool {
        matches!(self, Limits::ZeroTo | Limits::ToInfinity | Limits::FromNegInfinity | Limits::ToZero)
    }
}

impl fmt::Display for Limits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Geometric estimate of the tail beyond `edge`. Terms at rounding level
/// relative to the largest term `scale` count as their own bound.
fn geometric_tail(edge: f64, inner: f64, scale: f64) -> f64 {
    let floor = 1e-14 * scale;
    if edge.abs() <= floor {
        return edge.abs();
    }
    if inner == 0.0 {
        return f64::INFINITY;
    }
    let r = (edge / inner).abs();
    if r >= 1.0 {
        f64::INFINITY
    } else {
        edge.abs() * r / (1.0 - r)
    }
}

struct LatticeSum {
    sum: f64,
    propagated: f64,
    tail: f64,
}

/// `Σ_{k=lo}^{hi} x_k g(x_k)` with `x_k = base·step^k`, plus tail estimates at
/// the ends flagged open.
fn lattice_sum(
    g: &dyn Fn(f64) -> Result<Estimate>,
    base: f64,
    step: f64,
    lo: i64,
    hi: i64,
    open_lo: bool,
    open_hi: bool,
) -> Result<LatticeSum> {
    let mut sum = 0.0;
    let mut propagated = 0.0;
    let mut largest: f64 = 0.0;
    let (mut first, mut second, mut last, mut before_last) = (0.0, 0.0, 0.0, 0.0);
    for k in lo..=hi {
        let x = base * step.powi(k as i32);
        let e = g(x)?;
        let t = x * e.value;
        if !t.is_finite() {
            return Err(QError::Numeric(format!("integrand is not finite at {x}")));
        }
        sum += t;
        largest = largest.max(t.abs());
        propagated += x.abs() * e.tail_bound;
        if k == lo {
            first = t;
        }
        if k == lo + 1 {
            second = t;
        }
        if k == hi - 1 {
            before_last = t;
        }
        if k == hi {
            last = t;
        }
    }
    let mut tail = 0.0;
    if open_lo {
        tail += geometric_tail(first, second, largest);
    }
    if open_hi {
        tail += geometric_tail(last, before_last, largest);
    }
    Ok(LatticeSum { sum, propagated, tail })
}

/// One-dimensional Jackson integral of `g` for the lattice `D_{q^a}`.
///
/// `x` is the variable end for `0..x`, `x..∞`, `−∞..x` and `x..0`. Half-lines
/// and the whole line use the reference point `params.x0`.
pub fn jackson_int_1d(
    g: &dyn Fn(f64) -> Result<Estimate>,
    a: i32,
    limits: Limits,
    x: f64,
    decays: bool,
    params: &IntegralParams,
) -> Result<Estimate> {
    if a == 0 {
        return Err(QError::Domain("Jackson lattice needs a ≠ 0".into()));
    }
    if limits.is_infinite() && !decays {
        return Err(QError::Domain(format!(
            "limits {limits} need an integrand that vanishes faster than any power"
        )));
    }
    let step = params.q.powi(a.abs());
    let c = if a > 0 { step - 1.0 } else { 1.0 - 1.0 / step };
    let kk = params.k as i64;
    let finish = |s: LatticeSum, sign: f64| -> Result<Estimate> {
        let tail = c.abs() * s.tail;
        if !(tail <= params.tol) {
            return Err(QError::Numeric(format!(
                "tail bound {tail:.3e} exceeds tol {:.1e} (q = {}, K = {})",
                params.tol, params.q, params.k
            )));
        }
        Ok(Estimate { value: sign * c * s.sum, tail_bound: c.abs() * (s.propagated + s.tail) })
    };
    let pos_half = || finish(lattice_sum(g, params.x0, step, -kk, kk, true, true)?, 1.0);
    let neg_half = || finish(lattice_sum(g, -params.x0, step, -kk, kk, true, true)?, -1.0);
    let zero_to = |x: f64| -> Result<Estimate> {
        if x == 0.0 {
            return Ok(Estimate::zero());
        }
        let hi = if a > 0 { -1 } else { 0 };
        finish(lattice_sum(g, x, step, -kk, hi, true, false)?, 1.0)
    };
    let lo_out = if a > 0 { 0 } else { 1 };
    match limits {
        Limits::ZeroTo => zero_to(x),
        Limits::ToZero => Ok(zero_to(x)?.scale(-1.0)),
        Limits::ZeroToInfinity => pos_half(),
        Limits::NegInfinityToZero => neg_half(),
        Limits::WholeLine => Ok(pos_half()?.plus(neg_half()?)),
        Limits::ToInfinity => {
            if x > 0.0 {
                finish(lattice_sum(g, x, step, lo_out, kk, false, true)?, 1.0)
            } else {
                Ok(pos_half()?.minus(zero_to(x)?))
            }
        }
        Limits::FromNegInfinity => {
            if x < 0.0 {
                finish(lattice_sum(g, x, step, lo_out, kk, false, true)?, -1.0)
            } else {
                Ok(neg_half()?.plus(zero_to(x)?))
            }
        }
    }
}

/// Jackson integral of a one-variable function given by a plain closure.
pub fn jackson_int_num(
    f: impl Fn(f64) -> f64,
    a: i32,
    limits: Limits,
    x: f64,
    decays: bool,
    params: &IntegralParams,
) -> Result<Estimate> {
    jackson_int_1d(&|t| Ok(Estimate::exact(f(t))), a, limits, x, decays, params)
}

fn substituted(point: &[f64], i: usize, x: f64) -> [f64; MAX_DIM] {
    let mut buf = [0.0; MAX_DIM];
    buf[..point.len()].copy_from_slice(point);
    buf[i] = x;
    buf
}

fn check_dim(dim: usize) {
    assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} outside 1..={MAX_DIM}");
}

/// Difference quotient `(h(x) − h(s·x))/((1 − s)x)`.
fn difference_quotient(hx: Estimate, hsx: Estimate, s: f64, x: f64) -> Result<Estimate> {
    if x == 0.0 {
        return Err(QError::Domain("Jackson difference quotient at x = 0".into()));
    }
    Ok(hx.minus(hsx).scale(1.0 / ((1.0 - s) * x)))
}

/// Operators available on numeric functions.
pub trait LatticeOps: Clone + Sized {
    fn dim(&self) -> usize;
    /// `f(…, c·x^i, …)`.
    fn scaled(&self, i: usize, factor: f64) -> Self;
    /// Jackson derivative with ratio `step = q^a`.
    fn jackson_d(&self, i: usize, step: f64) -> Self;
    /// `coef · x^exps · f`; negative exponents allowed.
    fn mul_monomial(&self, exps: &[i32], coef: f64) -> Self;
    fn times(&self, c: f64) -> Self;
    fn plus(&self, other: &Self) -> Result<Self>;
    fn integrate(&self, i: usize, a: i32, limits: Limits, params: &IntegralParams) -> Result<Self>;
    fn value_at(&self, point: &[f64]) -> Result<Estimate>;
}

type EvalN = Arc<dyn Fn(&[f64]) -> Result<Estimate> + Send + Sync>;

/// A real function on lattice points, composed lazily.
#[derive(Clone)]
pub struct LatticeFun {
    dim: usize,
    decays: bool,
    eval: EvalN,
}

impl fmt::Debug for LatticeFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeFun(dim = {}, decays = {})", self.dim, self.decays)
    }
}

impl LatticeFun {
    /// `decays` asserts that `f` vanishes faster than any power as any
    /// coordinate tends to `±∞`.
    pub fn new(dim: usize, decays: bool, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        check_dim(dim);
        LatticeFun { dim, decays, eval: Arc::new(move |p| Ok(Estimate::exact(f(p)))) }
    }

    pub fn from_estimates(
        dim: usize,
        decays: bool,
        f: impl Fn(&[f64]) -> Result<Estimate> + Send + Sync + 'static,
    ) -> Self {
        check_dim(dim);
        LatticeFun { dim, decays, eval: Arc::new(f) }
    }

    /// `e^{−Σ (x^i)²}`.
    pub fn gaussian(dim: usize) -> Self {
        Self::new(dim, true, |p| (-p.iter().map(|x| x * x).sum::<f64>()).exp())
    }

    /// `p(x)·e^{−Σ (x^i)²}` with the coefficients of `p` evaluated at `q`.
    pub fn poly_gaussian(p: &PolyFun, q: f64) -> Result<Self> {
        let terms = numeric_terms(p, q)?;
        Ok(Self::new(p.coords().dim(), true, move |x| {
            eval_terms(&terms, x) * (-x.iter().map(|t| t * t).sum::<f64>()).exp()
        }))
    }

    /// A polynomial as a (non-decaying) lattice function.
    pub fn from_polyfun(p: &PolyFun, q: f64) -> Result<Self> {
        let terms = numeric_terms(p, q)?;
        Ok(Self::new(p.coords().dim(), false, move |x| eval_terms(&terms, x)))
    }

    pub fn decays(&self) -> bool {
        self.decays
    }

    pub fn with_decay(mut self, decays: bool) -> Self {
        self.decays = decays;
        self
    }

    pub fn eval(&self, point: &[f64]) -> Result<Estimate> {
        if point.len() != self.dim {
            return Err(QError::Domain(format!("expected {} coordinates, got {}", self.dim, point.len())));
        }
        (self.eval)(point)
    }

    pub fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.eval(point)?.value)
    }

    fn wrap(&self, decays: bool, f: impl Fn(&EvalN, &[f64]) -> Result<Estimate> + Send + Sync + 'static) -> Self {
        let inner = self.eval.clone();
        LatticeFun { dim: self.dim, decays, eval: Arc::new(move |p| f(&inner, p)) }
    }
}

/// Polynomial terms with numeric coefficients.
pub(crate) fn numeric_terms(p: &PolyFun, q: f64) -> Result<Vec<(Vec<i32>, f64)>> {
    p.terms().map(|(e, c)| Ok((e.clone(), c.eval(q)?))).collect()
}

pub(crate) fn eval_terms(terms: &[(Vec<i32>, f64)], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (k, xi)| acc * xi.powi(*k)))
        .sum()
}

impl LatticeOps for LatticeFun {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scaled(&self, i: usize, factor: f64) -> Self {
        self.wrap(self.decays, move |f, p| f(&substituted(p, i, factor * p[i])[..p.len()]))
    }

    fn jackson_d(&self, i: usize, step: f64) -> Self {
        self.wrap(self.decays, move |f, p| {
            let x = p[i];
            let hx = f(p)?;
            let hsx = f(&substituted(p, i, step * x)[..p.len()])?;
            difference_quotient(hx, hsx, step, x)
        })
    }

    fn mul_monomial(&self, exps: &[i32], coef: f64) -> Self {
        let exps = exps.to_vec();
        self.wrap(self.decays, move |f, p| {
            let m = exps.iter().zip(p).fold(coef, |acc, (k, x)| acc * x.powi(*k));
            Ok(f(p)?.scale(m))
        })
    }

    fn times(&self, c: f64) -> Self {
        self.wrap(self.decays, move |f, p| Ok(f(p)?.scale(c)))
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(QError::Domain("adding lattice functions of different dimension".into()));
        }
        let g = other.eval.clone();
        Ok(self.wrap(self.decays && other.decays, move |f, p| Ok(f(p)?.plus(g(p)?))))
    }

    fn integrate(&self, i: usize, a: i32, limits: Limits, params: &IntegralParams) -> Result<Self> {
        let params = params.validated()?;
        if limits.is_infinite() && !self.decays {
            return Err(QError::Domain(format!(
                "limits {limits} need an integrand that vanishes faster than any power"
            )));
        }
        let decays = self.decays && !limits.is_variable();
        let inner_decays = self.decays;
        Ok(self.wrap(decays, move |f, p| {
            let n = p.len();
            let g = |x: f64| f(&substituted(p, i, x)[..n]);
            jackson_int_1d(&g, a, limits, p[i], inner_decays, &params)
        }))
    }

    fn value_at(&self, point: &[f64]) -> Result<Estimate> {
        self.eval(point)
    }
}

// Separable functions

type Eval1 = Arc<dyn Fn(f64) -> Result<Estimate> + Send + Sync>;

/// `h` and the ratio `step` of a factor equal to `D_{step} h`.
#[derive(Clone)]
pub struct Primitive {
    pub step: f64,
    of: Eval1,
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D_{}", self.step)
    }
}

impl Primitive {
    /// Telescoped whole-line sum of `D_{step} h` on the lattice `±x0·Q^k`,
    /// `|k| ≤ K`. Only values of `h` at the lattice ends enter, so repeated
    /// differences do not lose precision near the origin.
    fn whole_line_residual(&self, a: i32, params: &IntegralParams) -> Result<f64> {
        let big_q = params.q.powi(a.abs());
        let c = if a > 0 { big_q - 1.0 } else { 1.0 - 1.0 / big_q };
        let k = params.k as i32;
        let h = |x: f64| -> Result<f64> { Ok((self.of)(x)?.value) };
        let half = |b: f64| -> Result<f64> {
            if self.step > 1.0 {
                Ok(h(b * big_q.powi(-k))? - h(b * big_q.powi(k + 1))?)
            } else {
                Ok(h(b * big_q.powi(k))? - h(b * big_q.powi(-k - 1))?)
            }
        };
        Ok((c / (1.0 - self.step) * (half(params.x0)? - half(-params.x0)?)).abs())
    }
}

/// One-variable factor of a separable term.
#[derive(Clone)]
pub enum Factor {
    Fun {
        eval: Eval1,
        decays: bool,
        /// Set when the factor is a Jackson derivative of a decaying function.
        derivative_of: Option<Primitive>,
    },
    Const(Estimate),
    /// Whole-line integral of a nonzero constant.
    Divergent,
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Fun { decays, derivative_of, .. } => {
                write!(f, "Fun(decays = {decays}, derivative_of = {derivative_of:?})")
            }
            Factor::Const(e) => write!(f, "Const({})", e.value),
            Factor::Divergent => f.write_str("Divergent"),
        }
    }
}

impl Factor {
    pub fn fun(decays: bool, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Factor::Fun { eval: Arc::new(move |x| Ok(Estimate::exact(g(x)))), decays, derivative_of: None }
    }

    fn value(&self, x: f64) -> Result<Estimate> {
        match self {
            Factor::Fun { eval, .. } => eval(x),
            Factor::Const(c) => Ok(*c),
            Factor::Divergent => Err(QError::Numeric("infinite integral of a non-decaying factor".into())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SepTerm {
    pub coef: f64,
    pub factors: Vec<Factor>,
}

/// Bookkeeping of terms removed by exact rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SepStats {
    /// Jackson derivatives of constants and of whole-line integrals.
    pub killed_by_derivative: usize,
    /// Whole-line integrals of Jackson derivatives.
    pub boundary_zeros: usize,
    /// Largest numeric value seen for such a boundary integral.
    pub max_boundary_residual: f64,
}

impl SepStats {
    fn merge(&self, o: &SepStats) -> SepStats {
        SepStats {
            killed_by_derivative: self.killed_by_derivative + o.killed_by_derivative,
            boundary_zeros: self.boundary_zeros + o.boundary_zeros,
            max_boundary_residual: self.max_boundary_residual.max(o.max_boundary_residual),
        }
    }
}

/// Sum of products of one-variable factors.
#[derive(Debug, Clone)]
pub struct SepFun {
    dim: usize,
    terms: Vec<SepTerm>,
    stats: SepStats,
}

fn same_lattice(step: f64, lattice: f64) -> bool {
    (step.ln().abs() - lattice.ln().abs()).abs() <= 1e-12 * lattice.ln().abs()
}

impl SepFun {
    pub fn zero(dim: usize) -> Self {
        check_dim(dim);
        SepFun { dim, terms: Vec::new(), stats: SepStats::default() }
    }

    pub fn product(factors: Vec<Factor>) -> Self {
        check_dim(factors.len());
        SepFun { dim: factors.len(), terms: vec![SepTerm { coef: 1.0, factors }], stats: SepStats::default() }
    }

    /// Product of decaying one-variable closures.
    pub fn from_fns(fns: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>) -> Self {
        Self::product(fns.into_iter().map(|g| Factor::fun(true, move |x| g(x))).collect())
    }

    /// `e^{−Σ (x^i)²}`.
    pub fn gaussian(dim: usize) -> Self {
        Self::product((0..dim).map(|_| Factor::fun(true, |x| (-x * x).exp())).collect())
    }

    /// `p(x)·e^{−Σ (x^i)²}` as a sum of products, one per monomial of `p`.
    pub fn poly_gaussian(p: &PolyFun, q: f64) -> Result<Self> {
        p.require_polynomial("Gaussian integrand")?;
        let mut out = SepFun::zero(p.coords().dim());
        for (e, coef) in numeric_terms(p, q)? {
            let factors = e.iter().map(|&k| Factor::fun(true, move |x| x.powi(k) * (-x * x).exp())).collect();
            out.terms.push(SepTerm { coef, factors });
        }
        Ok(out)
    }

    pub fn terms(&self) -> &[SepTerm] {
        &self.terms
    }

    pub fn stats(&self) -> SepStats {
        self.stats
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// View as a general lattice function.
    pub fn to_lattice_fun(&self) -> LatticeFun {
        let s = self.clone();
        let decays = self
            .terms
            .iter()
            .all(|t| t.factors.iter().all(|f| matches!(f, Factor::Fun { decays: true, .. })));
        LatticeFun::from_estimates(self.dim, decays, move |p| s.value_at(p))
    }

    fn map_terms(&self, mut g: impl FnMut(&SepTerm, &mut SepStats) -> Result<Option<SepTerm>>) -> Result<Self> {
        let mut stats = self.stats;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if let Some(t2) = g(t, &mut stats)? {
                terms.push(t2);
            }
        }
        Ok(SepFun { dim: self.dim, terms, stats })
    }

    fn map_factor(&self, i: usize, g: impl Fn(&Factor) -> Option<Factor>, stats_on_drop: bool) -> Self {
        self.map_terms(|t, st| {
            Ok(match g(&t.factors[i]) {
                Some(f) => {
                    let mut t2 = t.clone();
                    t2.factors[i] = f;
                    Some(t2)
                }
                None => {
                    if stats_on_drop {
                        st.killed_by_derivative += 1;
                    }
                    None
                }
            })
        })
        .expect("infallible factor map")
    }
}

impl LatticeOps for SepFun {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scaled(&self, i: usize, factor: f64) -> Self {
        self.map_factor(
            i,
            |f| {
                Some(match f {
                    Factor::Fun { eval, decays, derivative_of } => {
                        let e = eval.clone();
                        // (D h)(c x) = D[h(c ·)](x) / c
                        let derivative_of = derivative_of.as_ref().map(|p| {
                            let h = p.of.clone();
                            Primitive { step: p.step, of: Arc::new(move |x| Ok(h(factor * x)?.scale(1.0 / factor))) }
                        });
                        Factor::Fun { eval: Arc::new(move |x| e(factor * x)), decays: *decays, derivative_of }
                    }
                    other => other.clone(),
                })
            },
            false,
        )
    }

    fn jackson_d(&self, i: usize, step: f64) -> Self {
        self.map_factor(
            i,
            |f| match f {
                Factor::Fun { eval, decays, .. } => {
                    let e = eval.clone();
                    Some(Factor::Fun {
                        eval: Arc::new(move |x| difference_quotient(e(x)?, e(step * x)?, step, x)),
                        decays: *decays,
                        derivative_of: decays.then(|| Primitive { step, of: eval.clone() }),
                    })
                }
                Factor::Const(_) | Factor::Divergent => None,
            },
            true,
        )
    }

    fn mul_monomial(&self, exps: &[i32], coef: f64) -> Self {
        let exps = exps.to_vec();
        self.map_terms(|t, _| {
            let mut t2 = t.clone();
            t2.coef *= coef;
            for (i, &k) in exps.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                t2.factors[i] = match &t.factors[i] {
                    Factor::Fun { eval, decays, .. } => {
                        let e = eval.clone();
                        Factor::Fun {
                            eval: Arc::new(move |x| Ok(e(x)?.scale(x.powi(k)))),
                            decays: *decays,
                            derivative_of: None,
                        }
                    }
                    Factor::Const(c) => {
                        let c = *c;
                        Factor::Fun { eval: Arc::new(move |x| Ok(c.scale(x.powi(k)))), decays: false, derivative_of: None }
                    }
                    Factor::Divergent => Factor::Divergent,
                };
            }
            Ok(Some(t2))
        })
        .expect("infallible monomial map")
    }

    fn times(&self, c: f64) -> Self {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.coef *= c;
        }
        s
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(QError::Domain("adding separable functions of different dimension".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(SepFun { dim: self.dim, terms, stats: self.stats.merge(&other.stats) })
    }

    fn integrate(&self, i: usize, a: i32, limits: Limits, params: &IntegralParams) -> Result<Self> {
        let params = params.validated()?;
        let lattice = params.q.powi(a.abs());
        self.map_terms(|t, st| {
            let new = match &t.factors[i] {
                Factor::Divergent => Factor::Divergent,
                Factor::Const(c) => {
                    if limits.is_infinite() {
                        if c.value == 0.0 && c.tail_bound == 0.0 {
                            return Ok(None);
                        }
                        Factor::Divergent
                    } else {
                        let c = *c;
                        Factor::Fun {
                            eval: Arc::new(move |x| {
                                jackson_int_1d(&|_| Ok(c), a, limits, x, false, &params)
                            }),
                            decays: false,
                            derivative_of: None,
                        }
                    }
                }
                Factor::Fun { eval, decays, derivative_of } => {
                    if limits.is_infinite() && !decays {
                        // Reported if the term survives to evaluation.
                        Factor::Divergent
                    } else if limits.is_variable() {
                        let (e, d) = (eval.clone(), *decays);
                        Factor::Fun {
                            eval: Arc::new(move |x| jackson_int_1d(&|y| e(y), a, limits, x, d, &params)),
                            decays: false,
                            derivative_of: None,
                        }
                    } else {
                        let primitive = derivative_of.as_ref().filter(|p| same_lattice(p.step, lattice));
                        match primitive {
                            Some(p) if limits == Limits::WholeLine => {
                                let residual = p.whole_line_residual(a, &params)?;
                                if residual > params.tol {
                                    return Err(QError::Numeric(format!(
                                        "whole-line integral of a Jackson derivative is {residual:.3e}, not zero"
                                    )));
                                }
                                st.boundary_zeros += 1;
                                st.max_boundary_residual = st.max_boundary_residual.max(residual);
                                return Ok(None);
                            }
                            _ => {
                                let e = eval.clone();
                                Factor::Const(jackson_int_1d(&|y| e(y), a, limits, params.x0, *decays, &params)?)
                            }
                        }
                    }
                }
            };
            let mut t2 = t.clone();
            t2.factors[i] = new;
            Ok(Some(t2))
        })
    }

    fn value_at(&self, point: &[f64]) -> Result<Estimate> {
        if point.len() != self.dim {
            return Err(QError::Domain(format!("expected {} coordinates, got {}", self.dim, point.len())));
        }
        let mut acc = Estimate::zero();
        for t in &self.terms {
            let mut prod = Estimate::exact(t.coef);
            for (f, &x) in t.factors.iter().zip(point) {
                prod = prod.times(f.value(x)?);
            }
            acc = acc.plus(prod);
        }
        Ok(acc)
    }
}

// Operator pipelines

/// One step of a numeric operator pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// `f(…, q^{q_power} x^i, …)`.
    Scale { coord: usize, q_power: i32 },
    /// `D^i_{q^a}`.
    D { coord: usize, a: i32 },
    Monomial { exps: Vec<i32>, coef: f64 },
    Times(f64),
    Integral { coord: usize, a: i32, limits: Limits },
}

/// Apply `ops` in list order; the first entry acts first.
pub fn numeric_operator_apply<T: LatticeOps>(f: &T, ops: &[Op], params: &IntegralParams) -> Result<T> {
    let params = params.validated()?;
    let mut g = f.clone();
    for op in ops {
        let coord = match op {
            Op::Scale { coord, .. } | Op::D { coord, .. } | Op::Integral { coord, .. } => Some(*coord),
            _ => None,
        };
        if let Some(c) = coord {
            if c >= g.dim() {
                return Err(QError::Domain(format!("coordinate index {c} out of range")));
            }
        }
        g = match op {
            Op::Scale { coord, q_power } => g.scaled(*coord, params.q.powi(*q_power)),
            Op::D { coord, a } => g.jackson_d(*coord, params.q.powi(*a)),
            Op::Monomial { exps, coef } => g.mul_monomial(exps, *coef),
            Op::Times(c) => g.times(*c),
            Op::Integral { coord, a, limits } => g.integrate(*coord, *a, *limits, &params)?,
        };
    }
    Ok(g)
}

fn whole(coord: usize, a: i32) -> Op {
    Op::Integral { coord, a, limits: Limits::WholeLine }
}

fn scale(coord: usize, q_power: i32) -> Op {
    Op::Scale { coord, q_power }
}

/// Whole-space integral pipeline of the left calculus, in application order.
pub fn volume_pipeline(space: Space) -> Result<Vec<Op>> {
    Ok(match space {
        // −(D¹_{q²})⁻¹ q^{−2n̂₂} (D²_{q²})⁻¹ q^{−n̂₁} f
        Space::Plane => vec![scale(0, -1), whole(1, 2), scale(1, -2), whole(0, 2), Op::Times(-1.0)],
        // (D⁺_{q⁴})⁻¹ (D³_{q²})⁻¹ q^{2n̂₊} (D⁻_{q⁴})⁻¹ q^{2n̂₃} f
        Space::Euclid3 => vec![scale(1, 2), whole(2, 4), scale(0, 2), whole(1, 2), whole(0, 4)],
        // (D¹)⁻¹ q^{n̂₂+n̂₃} (D²)⁻¹ q^{n̂₄} (D³)⁻¹ q^{n̂₄} (D⁴)⁻¹ f, all with q²
        Space::Euclid4 => vec![
            whole(3, 2),
            scale(3, 1),
            whole(2, 2),
            scale(3, 1),
            whole(1, 2),
            scale(1, 1),
            scale(2, 1),
            whole(0, 2),
        ],
        Space::Minkowski => {
            return Err(QError::Domain("use the minkowski module for Minkowski integrals".into()))
        }
    })
}

/// `(∂¹)⁻¹` then `(∂²)⁻¹` swapped: `−(D²)⁻¹ q^{−n̂₁} (D¹)⁻¹ q^{−2n̂₂} f`.
pub fn plane_volume_swapped() -> Vec<Op> {
    vec![scale(1, -2), whole(0, 2), scale(0, -1), whole(1, 2), Op::Times(-1.0)]
}

/// Whole-plane integral of the right conjugate calculus, the index-exchanged
/// image of the left one: `−(D²)⁻¹ q^{−2n̂₁} (D¹)⁻¹ q^{−n̂₂} f`.
pub fn plane_volume_rbar() -> Vec<Op> {
    vec![scale(1, -1), whole(0, 2), scale(0, -2), whole(1, 2), Op::Times(-1.0)]
}

/// `(∂^i)⁻¹` on the plane with the given limits:
/// `(∂¹)⁻¹ = −q^{1/2}(D²_{q²})⁻¹ f(q⁻¹x¹)`, `(∂²)⁻¹ = q^{−1/2}(D¹_{q²})⁻¹ f(q⁻²x²)`.
pub fn plane_inverse_ops(i: usize, limits: Limits, q: f64) -> Vec<Op> {
    if i == 0 {
        vec![scale(0, -1), Op::Integral { coord: 1, a: 2, limits }, Op::Times(-q.sqrt())]
    } else {
        vec![scale(1, -2), Op::Integral { coord: 0, a: 2, limits }, Op::Times(1.0 / q.sqrt())]
    }
}

/// `∂^i▷` on the plane: `∂¹▷f = −q^{−1/2} D²_{q²} f(qx¹)`, `∂²▷f = q^{1/2} D¹_{q²} f(q²x²)`.
pub fn plane_partial_ops(i: usize, q: f64) -> Vec<Op> {
    if i == 0 {
        vec![scale(0, 1), Op::D { coord: 1, a: 2 }, Op::Times(-1.0 / q.sqrt())]
    } else {
        vec![scale(1, 2), Op::D { coord: 0, a: 2 }, Op::Times(q.sqrt())]
    }
}

/// Apply a pipeline that integrates out every coordinate and read off its value.
pub fn integrate_out<T: LatticeOps>(f: &T, ops: &[Op], params: &IntegralParams) -> Result<Estimate> {
    let g = numeric_operator_apply(f, ops, params)?;
    g.value_at(&vec![1.0; g.dim()])
}

/// Whole-space integral over the plane or a Euclidean space.
pub fn whole_space_integral<T: LatticeOps>(space: Space, f: &T, params: &IntegralParams) -> Result<Estimate> {
    let dim = CoordSys::coords(space).dim();
    if f.dim() != dim {
        return Err(QError::Domain(format!("{space} needs a function of {dim} coordinates")));
    }
    integrate_out(f, &volume_pipeline(space)?, params)
}

/// The plane integral built literally as `(∂²)⁻¹|^∞_{−∞} (∂¹)⁻¹|^∞_{−∞} f`.
pub fn plane_nested_volume<T: LatticeOps>(f: &T, params: &IntegralParams) -> Result<Estimate> {
    let mut ops = plane_inverse_ops(0, Limits::WholeLine, params.q);
    ops.extend(plane_inverse_ops(1, Limits::WholeLine, params.q));
    integrate_out(f, &ops, params)
}

// Star products with a polynomial factor

/// `p ⊛ h` on the plane in standard ordering: `Σ c_n x^n h(q^{−n₂}x¹, x²)`.
pub fn star_poly_left(p: &PolyFun, h: &LatticeFun, q: f64) -> Result<LatticeFun> {
    star_poly(p, h, q, true)
}

/// `h ⊛ p` on the plane in standard ordering: `Σ c_n h(x¹, q^{−n₁}x²) x^n`.
pub fn star_poly_right(h: &LatticeFun, p: &PolyFun, q: f64) -> Result<LatticeFun> {
    star_poly(p, h, q, false)
}

fn star_poly(p: &PolyFun, h: &LatticeFun, q: f64, poly_first: bool) -> Result<LatticeFun> {
    if p.coords() != CoordSys::PLANE || h.dim != 2 {
        return Err(QError::Domain("numeric star product is provided on the plane".into()));
    }
    let terms = numeric_terms(p, q)?;
    let hv = h.eval.clone();
    Ok(LatticeFun::from_estimates(2, h.decays, move |x| {
        let mut acc = Estimate::zero();
        for (e, c) in &terms {
            let m = c * x[0].powi(e[0]) * x[1].powi(e[1]);
            let y = if poly_first { [q.powi(-e[1]) * x[0], x[1]] } else { [x[0], q.powi(-e[0]) * x[1]] };
            acc = acc.plus(hv(&y)?.scale(m));
        }
        Ok(acc)
    }))
}

/// `f̄` for a real function on the plane: `f̄(y) = f(−q^{−1/2}y², q^{1/2}y¹)`.
pub fn conjugate_lattice(f: &LatticeFun, q: f64) -> Result<LatticeFun> {
    if f.dim != 2 {
        return Err(QError::Domain("conjugation is provided on the plane".into()));
    }
    let s = q.sqrt();
    Ok(f.wrap(f.decays, move |g, y| g(&[-y[1] / s, s * y[0]])))
}

// Checks used by tests and the verification suites

/// `(max |D D⁻¹f − f|, max |D⁻¹D f − f|)` over `points` for a one-variable
/// decaying `f`, with `D⁻¹` integrating from `−∞`.
pub fn fundamental_theorem_residuals(
    f: &LatticeFun,
    a: i32,
    points: &[f64],
    params: &IntegralParams,
) -> Result<(f64, f64)> {
    if f.dim != 1 {
        return Err(QError::Domain("fundamental theorem check is one-dimensional".into()));
    }
    let step = params.q.powi(a);
    let dd_inv = f.integrate(0, a, Limits::FromNegInfinity, params)?.jackson_d(0, step);
    let d_inv_d = f.jackson_d(0, step).integrate(0, a, Limits::FromNegInfinity, params)?;
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for &x in points {
        let fx = f.value(&[x])?;
        r1 = r1.max((dd_inv.value(&[x])? - fx).abs());
        r2 = r2.max((d_inv_d.value(&[x])? - fx).abs());
    }
    Ok((r1, r2))
}

/// `(∫ f(q^c x), q^{−c} ∫ f)` over the whole line with lattice `D_{q^a}`.
pub fn periodicity_sides(f: &LatticeFun, a: i32, c: i32, params: &IntegralParams) -> Result<(f64, f64)> {
    let lhs = f.scaled(0, params.q.powi(c)).integrate(0, a, Limits::WholeLine, params)?.value(&[1.0])?;
    let rhs = params.q.powi(-c) * f.integrate(0, a, Limits::WholeLine, params)?.value(&[1.0])?;
    Ok((lhs, rhs))
}

/// Whole-line values for reference points spread evenly over `[1, q^a)`.
pub fn x0_spread(f: &LatticeFun, a: i32, samples: usize, params: &IntegralParams) -> Result<Vec<(f64, f64)>> {
    let top = params.q.powi(a.abs());
    (0..samples)
        .map(|s| {
            let x0 = top.powf(s as f64 / samples as f64);
            let p = params.with_x0(x0)?;
            Ok((x0, f.integrate(0, a, Limits::WholeLine, &p)?.value(&[1.0])?))
        })
        .collect()
}

/// `∫ ∂^i▷f` over the plane.
pub fn stokes_integral<T: LatticeOps>(f: &T, i: usize, params: &IntegralParams) -> Result<Estimate> {
    let d = numeric_operator_apply(f, &plane_partial_ops(i, params.q), params)?;
    whole_space_integral(Space::Plane, &d, params)
}

/// `(∫_L f, ∫_R̄ f̄)` for a real decaying function on the plane.
pub fn conj_integral_sides(f: &LatticeFun, params: &IntegralParams) -> Result<(Estimate, Estimate)> {
    let lhs = whole_space_integral(Space::Plane, f, params)?;
    let rhs = integrate_out(&conjugate_lattice(f, params.q)?, &plane_volume_rbar(), params)?;
    Ok((lhs, rhs))
}

/// `(∫ f ⊛ (∂^i▷g), ∫ (f◁∂^i) ⊛ g)` for polynomial `f` and `g = g_poly·e^{−|x|²}`,
/// with the right action taken from `right`.
pub fn simplified_parts_sides(
    f: &PolyFun,
    g_poly: &PolyFun,
    i: usize,
    right: Variant,
    params: &IntegralParams,
) -> Result<(Estimate, Estimate)> {
    let g = LatticeFun::poly_gaussian(g_poly, params.q)?;
    let dg = numeric_operator_apply(&g, &plane_partial_ops(i, params.q), params)?;
    let lhs = whole_space_integral(Space::Plane, &star_poly_left(f, &dg, params.q)?, params)?;
    let fd = manin::qderiv(f, i, right)?;
    let rhs = whole_space_integral(Space::Plane, &star_poly_left(&fd, &g, params.q)?, params)?;
    Ok((lhs, rhs))
}

/// Both sides of integration by parts over `[0, x^ī]` with the left calculus:
/// `∫ (∂^i▷f)⊛g` and `f⊛g|₀ − Σ_j ∫ (L^i_j▷f)⊛(∂^j▷g)`.
///
/// The L-actions come from the rewriting oracle `rs` (the left plane calculus).
pub fn parts_sides(f: &PolyFun, g: &PolyFun, i: usize, rs: &RewriteSystem) -> Result<(PolyFun, PolyFun)> {
    let ib = CoordSys::PLANE.conj_index(i);
    let star = |u: &PolyFun, v: &PolyFun| manin::star(u, v, Ordering::Standard);
    let from_zero = |h: &PolyFun| -> Result<PolyFun> { Ok(h - &h.restrict_zero(ib)?) };
    let integral = |h: &PolyFun| -> Result<PolyFun> { from_zero(&manin::qderiv_inverse(h, i)?) };
    let lhs = integral(&star(&manin::qderiv(f, i, Variant::L)?, g)?)?;
    let mut inner = PolyFun::zero(CoordSys::PLANE);
    for j in 0..2 {
        let lf = ncalg::extract_l_action(i, j, f, rs)?;
        inner = &inner + &star(&lf, &manin::qderiv(g, j, Variant::L)?)?;
    }
    let rhs = &(from_zero(&star(f, g)?)?) - &(integral(&inner)?);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qscalar::QScalar;

    fn p(q: f64, k: u32) -> IntegralParams {
        IntegralParams::new(q, k, 1e-10).unwrap()
    }

    #[test]
    fn constant_on_zero_to_x() {
        for a in [1, 2, -2] {
            for x in [0.7, -1.3, 2.5] {
                let v = jackson_int_num(|_| 1.0, a, Limits::ZeroTo, x, false, &p(1.1, 500)).unwrap();
                assert!((v.value - x).abs() < 1e-12, "a={a} x={x} {v:?}");
                let w = jackson_int_num(|_| 1.0, a, Limits::ToZero, x, false, &p(1.1, 500)).unwrap();
                assert!((w.value + x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_tends_to_sqrt_pi() {
        let g = |x: f64| (-x * x).exp();
        let v = jackson_int_num(g, 2, Limits::WholeLine, 0.0, true, &p(1.01, 2000)).unwrap();
        assert!((v.value / std::f64::consts::PI.sqrt() - 1.0).abs() < 0.011, "{v:?}");
        // the q^{-a} lattice carries the extra factor q^{-a}
        let w = jackson_int_num(g, -2, Limits::WholeLine, 0.0, true, &p(1.01, 2000)).unwrap();
        assert!((w.value - v.value * 1.01f64.powi(-2)).abs() < 1e-12);
    }

    #[test]
    fn nondecaying_and_nonconvergent_inputs_fail() {
        let r = jackson_int_num(|_| 1.0, 2, Limits::WholeLine, 0.0, false, &p(1.1, 500));
        assert!(matches!(r, Err(QError::Domain(_))));
        // decay claimed but absent: the tail estimate catches it
        let r = jackson_int_num(|x| 1.0 / (1.0 + x.abs()), 2, Limits::WholeLine, 0.0, true, &p(1.1, 50));
        assert!(matches!(r, Err(QError::Numeric(_))), "{r:?}");
        // a cutoff too small for the lattice
        let r = jackson_int_num(|x| (-x * x).exp(), 1, Limits::WholeLine, 0.0, true, &p(1.01, 200));
        assert!(matches!(r, Err(QError::Numeric(_))));
    }

    #[test]
    fn limits_are_additive() {
        let params = p(1.1, 500);
        let g = |x: f64| (-(x - 0.3) * (x - 0.3)).exp();
        for a in [2, -2, 1] {
            let whole = jackson_int_num(g, a, Limits::WholeLine, 0.0, true, &params).unwrap().value;
            let lo = jackson_int_num(g, a, Limits::NegInfinityToZero, 0.0, true, &params).unwrap().value;
            let hi = jackson_int_num(g, a, Limits::ZeroToInfinity, 0.0, true, &params).unwrap().value;
            assert!((whole - lo - hi).abs() < 1e-13);
            // variable ends placed on the reference lattice
            let step = 1.1f64.powi(a.abs());
            for x in [step.powi(3), -step.powi(2)] {
                let zx = jackson_int_num(g, a, Limits::ZeroTo, x, true, &params).unwrap().value;
                let left = jackson_int_num(g, a, Limits::FromNegInfinity, x, true, &params).unwrap().value;
                let right = jackson_int_num(g, a, Limits::ToInfinity, x, true, &params).unwrap().value;
                if x > 0.0 {
                    assert!((right + zx - hi).abs() < 1e-12, "a={a} x={x}");
                    assert!((left - lo - zx).abs() < 1e-12, "a={a} x={x}");
                } else {
                    assert!((left - zx - lo).abs() < 1e-12, "a={a} x={x}");
                    assert!((right + zx - hi).abs() < 1e-12, "a={a} x={x}");
                }
            }
            // x..x as (0..x) + (x..0)
            let up = jackson_int_num(g, a, Limits::ZeroTo, 0.9, true, &params).unwrap().value;
            let down = jackson_int_num(g, a, Limits::ToZero, 0.9, true, &params).unwrap().value;
            assert_eq!(up + down, 0.0);
        }
    }

    #[test]
    fn fundamental_theorem() {
        let params = p(1.1, 500);
        let fs = [
            LatticeFun::new(1, true, |x| (-x[0] * x[0]).exp()),
            LatticeFun::new(1, true, |x| x[0] * (-x[0] * x[0]).exp()),
            LatticeFun::new(1, true, |x| (-(x[0] - 0.5).powi(2) * 2.0).exp()),
        ];
        for f in &fs {
            for a in [2, -2] {
                let (r1, r2) = fundamental_theorem_residuals(f, a, &[-1.7, -0.4, 0.3, 1.2, 2.2], &params).unwrap();
                assert!(r1 < 1e-10 && r2 < 1e-10, "a={a} {r1} {r2}");
            }
        }
    }

    #[test]
    fn periodicity_is_exact_up_to_q_power() {
        let params = p(1.1, 500);
        let f = LatticeFun::new(1, true, |x| (1.0 + x[0]) * (-x[0] * x[0]).exp());
        for (a, c) in [(2, 2), (2, -4), (1, 3)] {
            let (l, r) = periodicity_sides(&f, a, c, &params).unwrap();
            assert!((l - r).abs() < 1e-12, "{l} {r}");
        }
    }

    #[test]
    fn difference_quotient_basics() {
        let params = p(1.1, 500);
        let id = LatticeFun::new(1, false, |x| x[0]);
        let d = numeric_operator_apply(&id, &[Op::D { coord: 0, a: 2 }], &params).unwrap();
        assert!((d.value(&[0.37]).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(d.eval(&[0.0]), Err(QError::Domain(_))));
        let g = LatticeFun::gaussian(1);
        let s = numeric_operator_apply(&g, &[scale(0, 2)], &params).unwrap();
        assert!((s.value(&[1.0]).unwrap() - (-1.21f64.powi(2)).exp()).abs() < 1e-15);
    }

    #[test]
    fn partial_pipeline_matches_hand_substitution() {
        let q = 1.1;
        let params = p(q, 500);
        let f = LatticeFun::new(2, true, |x| x[0] * (-x[1] * x[1]).exp());
        let d2 = numeric_operator_apply(&f, &plane_partial_ops(1, q), &params).unwrap();
        for pt in [[0.3, 0.7], [-1.2, 0.4], [2.0, -1.1]] {
            let expect = q.sqrt() * (-q.powi(4) * pt[1] * pt[1]).exp();
            assert!((d2.value(&pt).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_pipeline_matches_symbolic_action() {
        let q = 1.1;
        let params = p(q, 500);
        let f = crate::expr::parse_polyfun("x1^2*x2 - q*x2^3 + x1", CoordSys::PLANE).unwrap();
        let lf = LatticeFun::from_polyfun(&f, q).unwrap();
        for i in 0..2 {
            let num = numeric_operator_apply(&lf, &plane_partial_ops(i, q), &params).unwrap();
            let sym = manin::qderiv(&f, i, Variant::L).unwrap();
            for pt in [[0.3, 0.7], [-1.2, 0.4]] {
                assert!((num.value(&pt).unwrap() - sym.eval(&pt, q).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn numeric_star_matches_symbolic_star() {
        let q = 1.1;
        let f = crate::expr::parse_polyfun("x1*x2^2 + q*x2", CoordSys::PLANE).unwrap();
        let g = crate::expr::parse_polyfun("x1^2 - x1*x2", CoordSys::PLANE).unwrap();
        let sym = manin::star(&f, &g, Ordering::Standard).unwrap();
        let gl = LatticeFun::from_polyfun(&g, q).unwrap();
        let fl = LatticeFun::from_polyfun(&f, q).unwrap();
        let left = star_poly_left(&f, &gl, q).unwrap();
        let right = star_poly_right(&fl, &g, q).unwrap();
        for pt in [[0.3, 0.7], [-1.2, 0.4]] {
            let s = sym.eval(&pt, q).unwrap();
            assert!((left.value(&pt).unwrap() - s).abs() < 1e-12);
            assert!((right.value(&pt).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_gaussian_and_zero() {
        let params = p(1.05, 1000);
        let v = whole_space_integral(Space::Plane, &LatticeFun::gaussian(2), &params).unwrap();
        assert!(v.value < 0.0);
        // geometric Riemann sums of e^{-x²} are exact up to (Q−1)/ln Q per axis
        let q = 1.05f64;
        let r = (q * q - 1.0) / (q * q).ln();
        let expect = -q * std::f64::consts::PI * r * r;
        assert!((v.value / expect - 1.0).abs() < 1e-9, "{v:?} vs {expect}");
        let z = whole_space_integral(Space::Plane, &LatticeFun::new(2, true, |_| 0.0), &params).unwrap();
        assert_eq!(z.value, 0.0);
        let n = plane_nested_volume(&LatticeFun::gaussian(2), &params).unwrap();
        assert!((n.value - v.value).abs() < 1e-12);
    }

    #[test]
    fn separable_matches_general_and_product() {
        let params = p(1.1, 400);
        let g = |x: f64| (1.0 + 0.5 * x) * (-x * x).exp();
        let h = |x: f64| (-(x + 0.2).powi(2) * 1.5).exp();
        let general = LatticeFun::new(2, true, move |x| g(x[0]) * h(x[1]));
        let sep = SepFun::from_fns(vec![Arc::new(g), Arc::new(h)]);
        let a = whole_space_integral(Space::Plane, &general, &params).unwrap().value;
        let b = whole_space_integral(Space::Plane, &sep, &params).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a.abs());
        // the plane pipeline factorizes into two scaled one-dimensional sums
        let gx = jackson_int_num(|x| g(x / 1.1), 2, Limits::WholeLine, 0.0, true, &params).unwrap().value;
        let hx = jackson_int_num(h, 2, Limits::WholeLine, 0.0, true, &params).unwrap().value;
        assert!((a + gx * hx).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn separable_poly_gaussian_matches_general() {
        let params = p(1.1, 400);
        let f = crate::expr::parse_polyfun("1 - q*x1^2*x2 + 3*x2^2", CoordSys::PLANE).unwrap();
        let a = whole_space_integral(Space::Plane, &LatticeFun::poly_gaussian(&f, 1.1).unwrap(), &params).unwrap().value;
        let b = whole_space_integral(Space::Plane, &SepFun::poly_gaussian(&f, 1.1).unwrap(), &params).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a.abs());
        let l = crate::expr::parse_polyfun("x1^-1", CoordSys::PLANE).unwrap();
        assert!(SepFun::poly_gaussian(&l, 1.1).is_err());
    }

    #[test]
    fn stokes_on_the_plane() {
        let params = p(1.1, 500);
        let f = LatticeFun::new(2, true, |x| (1.0 + x[0] * x[1]) * (-x[0] * x[0] - 2.0 * x[1] * x[1]).exp());
        for i in 0..2 {
            let v = stokes_integral(&f, i, &params).unwrap();
            assert!(v.value.abs() < 1e-12, "i={i} {v:?}");
        }
    }

    #[test]
    fn euclidean_spaces_factorize() {
        let params = p(1.1, 300);
        let g = SepFun::gaussian(3);
        let v = whole_space_integral(Space::Euclid3, &g, &params).unwrap().value;
        let q = 1.1f64;
        let one = |a: i32, c: f64| {
            jackson_int_num(move |x| (-(c * x) * (c * x)).exp(), a, Limits::WholeLine, 0.0, true, &params).unwrap().value
        };
        let expect = one(4, 1.0) * one(2, q * q) * one(4, q * q);
        assert!((v - expect).abs() < 1e-12 * expect);
        let w = whole_space_integral(Space::Euclid4, &SepFun::gaussian(4), &params).unwrap().value;
        assert!((w - one(2, 1.0).powi(4)).abs() < 1e-12 * w);
    }

    #[test]
    fn separable_boundary_rules() {
        let params = p(1.1, 500);
        let g = SepFun::gaussian(2);
        // ∫ D h over the whole line vanishes structurally
        let d = g.jackson_d(0, 1.21).integrate(0, 2, Limits::WholeLine, &params).unwrap();
        assert!(d.is_zero());
        assert_eq!(d.stats().boundary_zeros, 1);
        assert!(d.stats().max_boundary_residual < 1e-15);
        // D of a whole-line integral vanishes
        let i = g.integrate(0, 2, Limits::WholeLine, &params).unwrap().jackson_d(0, 1.21);
        assert!(i.is_zero());
        // integrating a constant over the whole line is flagged
        let c = g.integrate(0, 2, Limits::WholeLine, &params).unwrap().integrate(0, 2, Limits::WholeLine, &params).unwrap();
        assert!(c.value_at(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn telescoped_boundary_matches_direct_sum() {
        let h = |x: f64| if x > 0.0 { (-x * x).exp() } else { 0.5 * (-x * x).exp() };
        for (a, step) in [(2, 1.21), (2, 1.0 / 1.21), (-2, 1.21)] {
            let params = p(1.1, 500);
            let direct = jackson_int_num(|x| (h(x) - h(step * x)) / ((1.0 - step) * x), a, Limits::WholeLine, 0.0, true, &params)
                .unwrap()
                .value;
            let prim = Primitive { step, of: Arc::new(move |x| Ok(Estimate::exact(h(x)))) };
            let tele = prim.whole_line_residual(a, &params).unwrap();
            assert!((direct.abs() - tele).abs() < 1e-12, "a={a} step={step}: {direct} vs {tele}");
            assert!(tele > 0.1);
        }
    }

    #[test]
    fn conjugation_substitution_matches_symbolic() {
        let q = 1.1;
        let f = crate::expr::parse_polyfun("x1^2*x2 + 3*x2 - x1", CoordSys::PLANE).unwrap();
        let c = f.conjugate_fun().unwrap();
        let lf = LatticeFun::from_polyfun(&f, q).unwrap();
        let lc = conjugate_lattice(&lf, q).unwrap();
        for pt in [[0.3, 0.7], [-1.2, 0.4]] {
            assert!((lc.value(&pt).unwrap() - c.eval(&pt, q).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn parts_identity_small_cases() {
        let rs = ncalg::plane_left();
        let mons: Vec<PolyFun> = (0..=2)
            .flat_map(|a| (0..=2 - a).map(move |b| PolyFun::monomial(CoordSys::PLANE, vec![a, b], QScalar::one())))
            .collect();
        for f in &mons {
            for g in &mons {
                for i in 0..2 {
                    let (l, r) = parts_sides(f, g, i, &rs).unwrap();
                    assert_eq!(l, r, "i={i} f={f} g={g}");
                }
            }
        }
    }

    #[test]
    fn simplified_parts_holds_up_to_degree_scaling() {
        let params = p(1.1, 300);
        let cases = [("x1", "1 + x1*x2 + x2^2", 1, 1), ("x1*x2", "x1", 0, 2), ("x1^2*x2", "x1*x2", 1, 3)];
        for (fs, gs, i, deg) in cases {
            let f = crate::expr::parse_polyfun(fs, CoordSys::PLANE).unwrap();
            let g = crate::expr::parse_polyfun(gs, CoordSys::PLANE).unwrap();
            let (l, r) = simplified_parts_sides(&f, &g, i, Variant::RBar, &params).unwrap();
            let expected = 1.1f64.powi(-(2 * deg + 1));
            assert!((l.value / r.value - expected).abs() < 1e-8, "f={fs} g={gs} {l:?} {r:?}");
        }
    }

    #[test]
    fn conjugate_integral_matches() {
        let params = p(1.1, 300);
        let f = crate::expr::parse_polyfun("1 + x1 + 2*x1*x2^2", CoordSys::PLANE).unwrap();
        let lf = LatticeFun::poly_gaussian(&f, params.q).unwrap();
        let (l, r) = conj_integral_sides(&lf, &params).unwrap();
        assert!((l.value - r.value).abs() <= 1e-8 * l.value.abs(), "{l:?} {r:?}");
    }

    #[test]
    fn swapped_order_is_a_fixed_multiple() {
        let params = p(1.1, 300);
        for fs in ["1", "x1^2 + x2", "x1*x2^2 - 3"] {
            let f = LatticeFun::poly_gaussian(&crate::expr::parse_polyfun(fs, CoordSys::PLANE).unwrap(), params.q).unwrap();
            let std = integrate_out(&f, &volume_pipeline(Space::Plane).unwrap(), &params).unwrap();
            let swp = integrate_out(&f, &plane_volume_swapped(), &params).unwrap();
            if std.value.abs() > 1e-9 {
                assert!((swp.value / std.value - params.q).abs() < 1e-8, "{fs}: {std:?} {swp:?}");
            }
        }
    }

    #[test]
    fn reference_point_moves_whole_line_value() {
        let params = p(1.1, 500);
        let g = LatticeFun::new(1, true, |x| (-x[0] * x[0]).exp());
        let vals = x0_spread(&g, 2, 8, &params).unwrap();
        let lo = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        // The Gaussian is nearly lattice independent; a skewed integrand is not.
        assert!(hi - lo < 1e-8, "{vals:?}");
        let h = LatticeFun::new(1, true, |x| (-(x[0] - 1.0).powi(2) / 0.01).exp());
        let vals = x0_spread(&h, 2, 8, &params).unwrap();
        let lo = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo > 1e-3, "{vals:?}");
    }
}
