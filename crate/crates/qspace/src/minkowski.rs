//! Conjugate-left derivatives on q-deformed Minkowski space, their inverses,
//! whole-space integrals and the ordering-reversal operator.
//!
//! Functions live on `(r², x⁺, x^{3/0}, x⁻)` with `r²` an independent
//! commutative coordinate. Every Jackson derivative here has ratio `q²`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{QError, Result};
use crate::polyfun::{CoordSys, Exps, PolyFun, QExp};
use crate::qint::{Estimate, IntegralParams, LatticeFun, LatticeOps, Limits, Op, SepFun, SepStats};
use crate::qscalar::{qfact, QScalar};

pub const R2: usize = 0;
pub const XP: usize = 1;
pub const X30: usize = 2;
pub const XM: usize = 3;

/// Upper bound on the monomial closure used by the resummed inverse.
const CLOSURE_CAP: usize = 4000;

/// The four derivative directions, `∂̂³`, `∂̂⁺`, `∂̂⁻` and `∂̂²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Direction {
    Three,
    Plus,
    Minus,
    Two,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Three, Direction::Plus, Direction::Minus, Direction::Two];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "3" | "three" => Ok(Direction::Three),
            "+" | "p" | "plus" => Ok(Direction::Plus),
            "-" | "m" | "minus" => Ok(Direction::Minus),
            "2" | "two" | "r2" => Ok(Direction::Two),
            _ => Err(QError::Domain(format!("unknown Minkowski direction `{s}` (use 3, +, -, 2)"))),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Direction::Three => "3",
            Direction::Plus => "+",
            Direction::Minus => "-",
            Direction::Two => "2",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `coef · x^exps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorTerm {
    pub coef: QScalar,
    pub exps: [i32; 4],
}

/// `prefactor · D^{i₁}…D^{i_m} f(q^{s₀}r², q^{s₁}x⁺, q^{s₂}x^{3/0}, q^{s₃}x⁻)`.
///
/// The argument scaling acts first, the derivatives next, the prefactor last.
#[derive(Debug, Clone, PartialEq)]
pub struct Summand {
    pub prefactor: Vec<PrefactorTerm>,
    pub derivs: Vec<usize>,
    pub scaling: [i32; 4],
}

/// A derivative split into its classical part and correction summands.
#[derive(Debug, Clone)]
pub struct MinkOperator {
    pub direction: Direction,
    pub classical: Summand,
    pub corrections: Vec<Summand>,
}

impl MinkOperator {
    pub fn summands(&self) -> impl Iterator<Item = &Summand> {
        std::iter::once(&self.classical).chain(self.corrections.iter())
    }

    pub fn len(&self) -> usize {
        1 + self.corrections.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn pre(coef: QScalar, exps: [i32; 4]) -> PrefactorTerm {
    PrefactorTerm { coef, exps }
}

fn summand(prefactor: Vec<PrefactorTerm>, derivs: &[usize], scaling: [i32; 4]) -> Summand {
    Summand { prefactor, derivs: derivs.to_vec(), scaling }
}

fn qp(n: i32) -> QScalar {
    QScalar::q_pow(n)
}

fn lp_pow(n: i32) -> QScalar {
    QScalar::lambda_plus().pow(n).expect("λ₊ is invertible")
}

/// The summand table of `∂̂ ▷̄ f` for one direction.
pub fn operator(d: Direction) -> MinkOperator {
    let l = QScalar::lambda();
    let lp = QScalar::lambda_plus();
    let one = QScalar::one();
    let c2 = &(&qp(-1) * &lp) * &(&qp(-1) * &lp);
    let (classical, corrections) = match d {
        Direction::Three => (
            summand(vec![pre(one, [0; 4])], &[X30], [2, 0, 0, 0]),
            vec![
                summand(vec![pre(&qp(-1) * &lp, [0, 0, 1, 0])], &[R2], [0, 2, 0, 0]),
                summand(vec![pre(-qp(-2), [1, 0, -1, 0]), pre(-qp(-4), [0, 0, 1, 0])], &[R2], [0; 4]),
                summand(vec![pre(&qp(-2) * &lp, [0, 1, -1, 1])], &[R2], [0, 0, 2, 0]),
                summand(vec![pre(-(&(&qp(1) * &lp_pow(-1)) * &l), [0, 0, 1, 0])], &[XP, XM], [2, 0, 0, 0]),
            ],
        ),
        Direction::Plus => (
            summand(vec![pre(-qp(1), [0; 4])], &[XM], [2, 0, 0, 0]),
            vec![summand(vec![pre(&qp(-1) * &lp, [0, 1, 0, 0])], &[R2], [0; 4])],
        ),
        Direction::Minus => (
            summand(vec![pre(-qp(-1), [0; 4])], &[XP], [0; 4]),
            vec![
                summand(vec![pre(&qp(-1) * &lp, [0, 0, 0, 1])], &[R2], [0, 2, 2, 0]),
                summand(vec![pre(&qp(-2) * &l, [0, 0, 2, 0])], &[XP, R2], [0, 2, 0, 2]),
                summand(vec![pre(-(&qp(-1) * &(&l * &l)), [0, 0, 2, 1])], &[XP, XM, R2], [0, 2, 0, 0]),
            ],
        ),
        Direction::Two => (
            summand(vec![pre(&qp(1) * &lp_pow(3), [0; 4])], &[R2], [0, 2, 2, 2]),
            vec![
                summand(vec![pre(&qp(3) * &lp_pow(3), [1, 0, 0, 0])], &[R2, R2], [0, 2, 2, 2]),
                summand(vec![pre(c2.clone(), [0, 0, 0, 1])], &[XM, R2], [0, 2, 2, 0]),
                summand(vec![pre(c2.clone(), [0, 0, 1, 0])], &[X30, R2], [0, 2, 0, 0]),
                summand(vec![pre(-lp, [0; 4])], &[XP, XM], [2, 0, 0, 0]),
                summand(vec![pre(c2, [0, 1, 0, 0])], &[XP, R2], [0; 4]),
            ],
        ),
    };
    MinkOperator { direction: d, classical, corrections }
}

/// `coef · (D^{coord}_{q²})⁻¹ f(q^{s}x)` inverting the classical summand.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalInverse {
    pub coef: QScalar,
    pub scaling: [i32; 4],
    pub coord: usize,
}

pub fn classical_inverse(d: Direction) -> ClassicalInverse {
    match d {
        Direction::Three => ClassicalInverse { coef: QScalar::one(), scaling: [-2, 0, 0, 0], coord: X30 },
        Direction::Plus => ClassicalInverse { coef: -qp(-1), scaling: [-2, 0, 0, 0], coord: XM },
        Direction::Minus => ClassicalInverse { coef: -qp(1), scaling: [0; 4], coord: XP },
        Direction::Two => ClassicalInverse { coef: &qp(-1) * &lp_pow(-3), scaling: [0, -2, -2, -2], coord: R2 },
    }
}

/// Operations the summand tables need from a function representation.
pub trait MinkTarget: Clone {
    /// `f(…, q^{p} x^i, …)`.
    fn m_scale(&self, i: usize, p: i32, q: f64) -> Self;
    /// `D^i_{q²}`.
    fn m_d(&self, i: usize, q: f64) -> Self;
    fn m_mul(&self, exps: &[i32; 4], coef: &QScalar, q: f64) -> Result<Self>;
    fn m_add(&self, other: &Self) -> Result<Self>;
    fn m_zero_like(&self) -> Self;
    /// Structural zero test; numeric closures report `false`.
    fn m_is_zero(&self) -> bool;
}

impl MinkTarget for PolyFun {
    fn m_scale(&self, i: usize, p: i32, _q: f64) -> Self {
        self.scale_coord(i, QExp::int(p))
    }
    fn m_d(&self, i: usize, _q: f64) -> Self {
        self.jackson_d(i, 2)
    }
    fn m_mul(&self, exps: &[i32; 4], coef: &QScalar, _q: f64) -> Result<Self> {
        Ok(self.shift(exps).scale(coef))
    }
    fn m_add(&self, other: &Self) -> Result<Self> {
        Ok(self + other)
    }
    fn m_zero_like(&self) -> Self {
        PolyFun::zero(self.coords())
    }
    fn m_is_zero(&self) -> bool {
        self.is_zero()
    }
}

impl MinkTarget for LatticeFun {
    fn m_scale(&self, i: usize, p: i32, q: f64) -> Self {
        self.scaled(i, q.powi(p))
    }
    fn m_d(&self, i: usize, q: f64) -> Self {
        self.jackson_d(i, q * q)
    }
    fn m_mul(&self, exps: &[i32; 4], coef: &QScalar, q: f64) -> Result<Self> {
        Ok(self.mul_monomial(exps, coef.eval(q)?))
    }
    fn m_add(&self, other: &Self) -> Result<Self> {
        self.plus(other)
    }
    fn m_zero_like(&self) -> Self {
        self.times(0.0)
    }
    fn m_is_zero(&self) -> bool {
        false
    }
}

impl MinkTarget for SepFun {
    fn m_scale(&self, i: usize, p: i32, q: f64) -> Self {
        self.scaled(i, q.powi(p))
    }
    fn m_d(&self, i: usize, q: f64) -> Self {
        self.jackson_d(i, q * q)
    }
    fn m_mul(&self, exps: &[i32; 4], coef: &QScalar, q: f64) -> Result<Self> {
        Ok(self.mul_monomial(exps, coef.eval(q)?))
    }
    fn m_add(&self, other: &Self) -> Result<Self> {
        self.plus(other)
    }
    fn m_zero_like(&self) -> Self {
        SepFun::zero(self.dim())
    }
    fn m_is_zero(&self) -> bool {
        self.is_zero()
    }
}

fn accumulate<T: MinkTarget>(acc: Option<T>, t: T) -> Result<Option<T>> {
    Ok(Some(match acc {
        None => t,
        Some(a) => a.m_add(&t)?,
    }))
}

impl Summand {
    /// `None` when the derivatives already annihilate `f`.
    pub fn apply<T: MinkTarget>(&self, f: &T, q: f64) -> Result<Option<T>> {
        let mut g = f.clone();
        for (i, &s) in self.scaling.iter().enumerate() {
            if s != 0 {
                g = g.m_scale(i, s, q);
            }
        }
        for &i in &self.derivs {
            g = g.m_d(i, q);
        }
        if g.m_is_zero() {
            return Ok(None);
        }
        let mut out = None;
        for p in &self.prefactor {
            out = accumulate(out, g.m_mul(&p.exps, &p.coef, q)?)?;
        }
        Ok(out)
    }
}

fn apply_summands<'a, T: MinkTarget>(f: &T, summands: impl Iterator<Item = &'a Summand>, q: f64) -> Result<T> {
    let mut out = None;
    for s in summands {
        if let Some(t) = s.apply(f, q)? {
            out = accumulate(out, t)?;
        }
    }
    Ok(out.unwrap_or_else(|| f.m_zero_like()))
}

fn require_minkowski(f: &PolyFun) -> Result<()> {
    if f.coords() != CoordSys::MINKOWSKI {
        return Err(QError::CoordMismatch(f.coords().to_string(), CoordSys::MINKOWSKI.to_string()));
    }
    Ok(())
}

/// `∂̂ ▷̄ f`, exactly.
pub fn mink_deriv(f: &PolyFun, d: Direction) -> Result<PolyFun> {
    require_minkowski(f)?;
    apply_summands(f, operator(d).summands(), 1.0)
}

/// `∂̂ ▷̄ f` on lattice functions.
pub fn mink_deriv_numeric<T: MinkTarget>(f: &T, d: Direction, q: f64) -> Result<T> {
    apply_summands(f, operator(d).summands(), q)
}

fn correction<T: MinkTarget>(f: &T, op: &MinkOperator, q: f64) -> Result<T> {
    apply_summands(f, op.corrections.iter(), q)
}

impl ClassicalInverse {
    pub fn apply_symbolic(&self, f: &PolyFun) -> Result<PolyFun> {
        let mut g = f.clone();
        for (i, &s) in self.scaling.iter().enumerate() {
            if s != 0 {
                g = g.scale_coord(i, QExp::int(s));
            }
        }
        Ok(g.jackson_antideriv(self.coord, 2)?.scale(&self.coef))
    }

    pub fn apply_numeric<T: LatticeOps>(&self, f: &T, limits: Limits, params: &IntegralParams) -> Result<T> {
        let mut g = f.clone();
        for (i, &s) in self.scaling.iter().enumerate() {
            if s != 0 {
                g = g.scaled(i, params.q.powi(s));
            }
        }
        Ok(g.integrate(self.coord, 2, limits, params)?.times(self.coef.eval(params.q)?))
    }
}

/// How the correction series `Σ_k (−1)^k [(∂_cl)⁻¹∂_cor]^k (∂_cl)⁻¹ f` is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InverseMode {
    /// Term by term, failing once more than `deg f + 1` corrections are nonzero.
    Series,
    /// Exact solve of `∂̂F = f` over the monomials the series can reach.
    Resummed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinkInverse {
    pub value: PolyFun,
    pub mode: InverseMode,
    /// Highest nonzero series index (series mode).
    pub max_k: Option<usize>,
    /// Number of monomials in the solve (resummed mode).
    pub basis: Option<usize>,
}

/// `(∂̂)⁻¹ ▷̄ f` with formal Jackson antiderivatives.
pub fn mink_deriv_inverse(f: &PolyFun, d: Direction, mode: InverseMode) -> Result<MinkInverse> {
    require_minkowski(f)?;
    match mode {
        InverseMode::Series => {
            let (value, max_k) = series_inverse(f, d)?;
            Ok(MinkInverse { value, mode, max_k: Some(max_k), basis: None })
        }
        InverseMode::Resummed => {
            let mut value = PolyFun::zero(CoordSys::MINKOWSKI);
            let mut basis = 0;
            for (e, c) in f.terms() {
                let (v, n) = resummed_monomial(e, d)?;
                value = &value + &v.scale(c);
                basis = basis.max(n);
            }
            Ok(MinkInverse { value, mode, max_k: None, basis: Some(basis) })
        }
    }
}

fn series_inverse(f: &PolyFun, d: Direction) -> Result<(PolyFun, usize)> {
    let op = operator(d);
    let ci = classical_inverse(d);
    let bound = f.total_degree().unwrap_or(0).max(0) as usize + 1;
    let mut term = ci.apply_symbolic(f)?;
    let mut total = term.clone();
    let mut k = 0;
    loop {
        let next = -&ci.apply_symbolic(&correction(&term, &op, 1.0)?)?;
        if next.is_zero() {
            return Ok((total, k));
        }
        k += 1;
        if k > bound {
            return Err(QError::NonTermination(bound));
        }
        total = &total + &next;
        term = next;
    }
}

fn support(f: &PolyFun) -> impl Iterator<Item = Exps> + '_ {
    f.terms().map(|(e, _)| e.clone())
}

fn resummed_monomial(e: &Exps, d: Direction) -> Result<(PolyFun, usize)> {
    let op = operator(d);
    let ci = classical_inverse(d);
    let m = PolyFun::monomial(CoordSys::MINKOWSKI, e.clone(), QScalar::one());
    let mut basis: BTreeSet<Exps> = support(&ci.apply_symbolic(&m)?).collect();
    let mut frontier: Vec<Exps> = basis.iter().cloned().collect();
    while !frontier.is_empty() {
        if basis.len() > CLOSURE_CAP {
            return Err(QError::NonTermination(CLOSURE_CAP));
        }
        let mut next = Vec::new();
        for b in frontier {
            let mono = PolyFun::monomial(CoordSys::MINKOWSKI, b, QScalar::one());
            let img = ci.apply_symbolic(&correction(&mono, &op, 1.0)?)?;
            for e2 in support(&img) {
                if basis.insert(e2.clone()) {
                    next.push(e2);
                }
            }
        }
        frontier = next;
    }
    let cols: Vec<Exps> = basis.into_iter().collect();
    let mut rows: BTreeMap<Exps, (BTreeMap<usize, QScalar>, QScalar)> = BTreeMap::new();
    for (j, c) in cols.iter().enumerate() {
        let img = mink_deriv(&PolyFun::monomial(CoordSys::MINKOWSKI, c.clone(), QScalar::one()), d)?;
        for (r, v) in img.terms() {
            rows.entry(r.clone()).or_insert_with(|| (BTreeMap::new(), QScalar::zero())).0.insert(j, v.clone());
        }
    }
    rows.entry(e.clone()).or_insert_with(|| (BTreeMap::new(), QScalar::zero())).1 = QScalar::one();
    let u = solve_sparse(rows.into_values().collect(), cols.len())?;
    let value = PolyFun::from_terms(
        CoordSys::MINKOWSKI,
        cols.iter().zip(u).filter(|(_, v)| !v.is_zero()).map(|(c, v)| (c.clone(), v)),
    );
    if mink_deriv(&value, d)? != m {
        return Err(QError::Domain(format!("no inverse of ∂̂{d} found for exponent {e:?}")));
    }
    Ok((value, cols.len()))
}

type SparseRow = BTreeMap<usize, QScalar>;

/// Solve a sparse linear system over `QScalar`; free unknowns are set to zero.
fn solve_sparse(equations: Vec<(SparseRow, QScalar)>, n: usize) -> Result<Vec<QScalar>> {
    let mut pivots: Vec<(usize, SparseRow, QScalar)> = Vec::new();
    for (mut row, mut rhs) in equations {
        for (pc, prow, prhs) in &pivots {
            let Some(c) = row.get(pc).cloned() else { continue };
            for (j, v) in prow {
                let updated = &row.get(j).cloned().unwrap_or_default() - &(&c * v);
                if updated.is_zero() {
                    row.remove(j);
                } else {
                    row.insert(*j, updated);
                }
            }
            rhs = &rhs - &(&c * prhs);
        }
        match row.iter().next().map(|(j, v)| (*j, v.clone())) {
            None => {
                if !rhs.is_zero() {
                    return Err(QError::Domain("inconsistent linear system".into()));
                }
            }
            Some((col, v)) => {
                let inv = v.inv()?;
                let row = row.into_iter().map(|(j, x)| (j, &x * &inv)).collect();
                pivots.push((col, row, &rhs * &inv));
            }
        }
    }
    let mut u = vec![QScalar::zero(); n];
    for (pc, row, rhs) in pivots.iter().rev() {
        let mut v = rhs.clone();
        for (j, a) in row {
            if j != pc {
                v = &v - &(a * &u[*j]);
            }
        }
        u[*pc] = v;
    }
    Ok(u)
}

/// Bookkeeping of one numerically summed inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesInfo {
    pub direction: Direction,
    /// Number of series terms evaluated.
    pub terms: usize,
    /// The term after the last one evaluated was still structurally nonzero.
    pub truncated: bool,
}

/// `(∂̂)⁻¹ ▷̄ f` on lattice functions, summing at most `max_terms` terms.
pub fn mink_deriv_inverse_numeric<T: LatticeOps + MinkTarget>(
    f: &T,
    d: Direction,
    limits: Limits,
    max_terms: usize,
    params: &IntegralParams,
) -> Result<(T, SeriesInfo)> {
    let op = operator(d);
    let ci = classical_inverse(d);
    let mut term = ci.apply_numeric(f, limits, params)?;
    let mut total = term.clone();
    let mut info = SeriesInfo { direction: d, terms: 1, truncated: false };
    loop {
        if info.terms >= max_terms.max(1) {
            let next = correction(&term, &op, params.q)?;
            info.truncated = !next.m_is_zero();
            return Ok((total, info));
        }
        let cor = correction(&term, &op, params.q)?;
        if cor.m_is_zero() {
            return Ok((total, info));
        }
        let next = ci.apply_numeric(&cor, limits, params)?.times(-1.0);
        if next.m_is_zero() {
            return Ok((total, info));
        }
        total = total.plus(&next)?;
        term = next;
        info.terms += 1;
    }
}

/// Whole-space integral variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MinkVolumeMode {
    /// The simplified closed form.
    ClosedForm,
    /// The unsimplified pipeline on `q⁻²` lattices with prefactor `−qλ₊⁻³`.
    MainText,
    /// Composition of the four inverse series.
    NestedSeries,
}

impl MinkVolumeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed" | "closed_form" | "closed-form" => Ok(MinkVolumeMode::ClosedForm),
            "main" | "main_text" | "main-text" => Ok(MinkVolumeMode::MainText),
            "nested" | "nested_series" | "nested-series" => Ok(MinkVolumeMode::NestedSeries),
            _ => Err(QError::Domain(format!("unknown integration mode `{s}`"))),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            MinkVolumeMode::ClosedForm => "closed_form",
            MinkVolumeMode::MainText => "main_text",
            MinkVolumeMode::NestedSeries => "nested_series",
        }
    }
}

/// Application order used by the nested mode, first entry first:
/// `(∂̂⁺)⁻¹(∂̂³)⁻¹(∂̂⁻)⁻¹(∂̂²)⁻¹ ▷̄ f`.
pub const NESTED_ORDER: [Direction; 4] = [Direction::Two, Direction::Minus, Direction::Three, Direction::Plus];

fn whole(coord: usize, a: i32) -> Op {
    Op::Integral { coord, a, limits: Limits::WholeLine }
}

fn scale(coord: usize, q_power: i32) -> Op {
    Op::Scale { coord, q_power }
}

/// Jackson pipeline of a direct mode, in application order.
///
/// Closed form: `−q⁻¹λ₊⁻³ (D⁻)⁻¹ q^{−2n̂_{r²}} (D^{3/0})⁻¹ q^{−2n̂_{r²}} (D⁺)⁻¹ (D^{r²})⁻¹ q^{−2(n̂₊+n̂₃+n̂₋)} f`.
/// Unsimplified: `−qλ₊⁻³ (D^{r²}_{q⁻²})⁻¹ q^{2(n̂₊+n̂₃+n̂₋)} (D⁺_{q⁻²})⁻¹ (D^{3/0}_{q⁻²})⁻¹ q^{2n̂_{r²}} (D⁻_{q⁻²})⁻¹ q^{2n̂_{r²}} f`.
pub fn volume_ops(mode: MinkVolumeMode, q: f64) -> Result<Vec<Op>> {
    let lp3 = (q + 1.0 / q).powi(3);
    Ok(match mode {
        MinkVolumeMode::ClosedForm => vec![
            scale(XP, -2),
            scale(X30, -2),
            scale(XM, -2),
            whole(R2, 2),
            whole(XP, 2),
            scale(R2, -2),
            whole(X30, 2),
            scale(R2, -2),
            whole(XM, 2),
            Op::Times(-1.0 / (q * lp3)),
        ],
        MinkVolumeMode::MainText => vec![
            scale(R2, 2),
            whole(XM, -2),
            scale(R2, 2),
            whole(X30, -2),
            whole(XP, -2),
            scale(XP, 2),
            scale(X30, 2),
            scale(XM, 2),
            whole(R2, -2),
            Op::Times(-q / lp3),
        ],
        MinkVolumeMode::NestedSeries => {
            return Err(QError::Domain("the nested mode is a series, not a fixed pipeline".into()))
        }
    })
}

/// Result of a Minkowski whole-space integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinkVolume {
    pub mode: MinkVolumeMode,
    pub value: Estimate,
    /// Per-direction series bookkeeping (nested mode).
    pub series: Vec<SeriesInfo>,
    pub stats: SepStats,
}

/// Whole-space integral of a lattice function through a direct pipeline.
pub fn mink_integrate_direct<T: LatticeOps>(f: &T, mode: MinkVolumeMode, params: &IntegralParams) -> Result<Estimate> {
    if f.dim() != 4 {
        return Err(QError::Domain("Minkowski integrals need a function of 4 coordinates".into()));
    }
    crate::qint::integrate_out(f, &volume_ops(mode, params.q)?, params)
}

/// Nested composition of the four inverse series in the given application order.
pub fn mink_integrate_nested(
    f: &SepFun,
    order: [Direction; 4],
    max_terms: usize,
    params: &IntegralParams,
) -> Result<MinkVolume> {
    if f.dim() != 4 {
        return Err(QError::Domain("Minkowski integrals need a function of 4 coordinates".into()));
    }
    let mut g = f.clone();
    let mut series = Vec::new();
    for d in order {
        let (h, info) = mink_deriv_inverse_numeric(&g, d, Limits::WholeLine, max_terms, params)?;
        g = h;
        series.push(info);
    }
    let value = g.value_at(&[1.0; 4])?;
    Ok(MinkVolume { mode: MinkVolumeMode::NestedSeries, value, series, stats: g.stats() })
}

/// Whole-space integral in any mode; the nested mode uses [`NESTED_ORDER`].
pub fn mink_whole_space_integral(
    f: &SepFun,
    mode: MinkVolumeMode,
    max_terms: usize,
    params: &IntegralParams,
) -> Result<MinkVolume> {
    match mode {
        MinkVolumeMode::NestedSeries => mink_integrate_nested(f, NESTED_ORDER, max_terms, params),
        _ => {
            let value = mink_integrate_direct(f, mode, params)?;
            Ok(MinkVolume { mode, value, series: Vec::new(), stats: SepStats::default() })
        }
    }
}

/// `D_x G(x)` where `G(x)` is the whole-line integral on the lattice through `x`.
pub fn derivative_of_whole_line(f: &LatticeFun, a: i32, points: &[f64], params: &IntegralParams) -> Result<Vec<f64>> {
    let step = params.q.powi(a);
    let g = |x: f64| -> Result<f64> {
        let p = params.with_x0(x.abs())?;
        Ok(f.integrate(0, a, Limits::WholeLine, &p)?.value(&[1.0])?)
    };
    points.iter().map(|&x| Ok((g(x)? - g(step * x)?) / ((1.0 - step) * x))).collect()
}

/// `∫_{−∞}^{∞} (D^n f)` for `n = 1..=n_max`.
pub fn whole_line_of_derivatives(f: &LatticeFun, a: i32, n_max: usize, params: &IntegralParams) -> Result<Vec<f64>> {
    let step = params.q.powi(a);
    let mut g = f.clone();
    let mut out = Vec::new();
    for _ in 0..n_max {
        g = g.jackson_d(0, step);
        out.push(g.integrate(0, a, Limits::WholeLine, params)?.value(&[1.0])?);
    }
    Ok(out)
}

/// One `(i, k)` summand of the ordering reversal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseTerm {
    pub i: u32,
    pub k: u32,
    pub value: PolyFun,
}

fn reverse_weight(f: &PolyFun, i: i32) -> PolyFun {
    f.weight_monomials(
        &[(XP, XM, 2), (XP, X30, 2), (XM, X30, 2)],
        &[(XP, QExp::int(i)), (XM, QExp::int(i)), (X30, QExp::int(2 * i))],
    )
}

/// Nonzero summands of `Û⁻¹ f̃`, ordered by `(i, k)`.
pub fn mink_ordering_reverse_terms(ftilde: &PolyFun) -> Result<Vec<ReverseTerm>> {
    require_minkowski(ftilde)?;
    if ftilde.terms().any(|(e, _)| e[XP] < 0 || e[XM] < 0) {
        return Err(QError::Laurent("ordering reversal needs nonnegative powers of x⁺ and x⁻".into()));
    }
    let ratio = &QScalar::lambda() * &lp_pow(-1);
    let mut out = Vec::new();
    let mut dd = ftilde.clone();
    let mut i = 0u32;
    while !dd.is_zero() {
        for k in 0..=i {
            let denom = &qfact(k, 2) * &qfact(i - k, 2);
            let sign = if k % 2 == 0 { QScalar::one() } else { -QScalar::one() };
            let (ii, kk) = (i as i32, k as i32);
            let coef = &(&(&ratio.pow(ii)? * &sign) * &qp(-(ii - kk) - kk * kk)) / &denom;
            let scaled = dd.scale_coord(XM, QExp::int(ii - 2 * kk)).scale_coord(XP, QExp::int(ii - 2 * kk));
            let mut shift = [0; 4];
            shift[R2] = ii - kk;
            shift[X30] = 2 * kk;
            let value = reverse_weight(&scaled, ii).shift(&shift).scale(&coef);
            if !value.is_zero() {
                out.push(ReverseTerm { i, k, value });
            }
        }
        dd = dd.jackson_d(XP, 2).jackson_d(XM, 2);
        i += 1;
    }
    Ok(out)
}

/// `Û⁻¹ f̃`: re-expresses a function of the ordering `r̂²X⁺X^{3/0}X⁻` in the ordering `X⁻X^{3/0}X⁺r̂²`.
pub fn mink_ordering_reverse(ftilde: &PolyFun) -> Result<PolyFun> {
    let mut out = PolyFun::zero(CoordSys::MINKOWSKI);
    for t in mink_ordering_reverse_terms(ftilde)? {
        out = &out + &t.value;
    }
    Ok(out)
}

/// `q^{2n̂₊n̂₋ + 2(n̂₊+n̂₋)n̂_{3/0}} f̃`, the integrand that survives whole-space integration.
pub fn paired_weight(ftilde: &PolyFun) -> Result<PolyFun> {
    require_minkowski(ftilde)?;
    Ok(reverse_weight(ftilde, 0))
}

/// Ten factorized decaying test functions on `(r², x⁺, x^{3/0}, x⁻)`.
pub fn mink_battery() -> Vec<(String, SepFun)> {
    type F = std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>;
    let gauss = |c: f64, w: f64| -> F { std::sync::Arc::new(move |x: f64| (-(x - c) * (x - c) / w).exp()) };
    let tilted = |t: f64| -> F { std::sync::Arc::new(move |x: f64| (1.0 + t * x) * (-x * x).exp()) };
    let quartic = || -> F { std::sync::Arc::new(|x: f64| (-x.powi(4)).exp()) };
    let rows: Vec<(&str, [F; 4])> = vec![
        ("gaussian", [gauss(0.0, 1.0), gauss(0.0, 1.0), gauss(0.0, 1.0), gauss(0.0, 1.0)]),
        ("shifted", [gauss(0.3, 1.0), gauss(-0.2, 1.0), gauss(0.5, 1.0), gauss(0.1, 1.0)]),
        ("widths", [gauss(0.0, 0.5), gauss(0.0, 2.0), gauss(0.0, 1.5), gauss(0.0, 0.7)]),
        ("mixed", [gauss(0.4, 0.6), gauss(0.0, 1.2), gauss(-0.3, 0.9), gauss(0.2, 1.1)]),
        ("tilted", [tilted(0.5), gauss(0.0, 1.0), tilted(-0.3), gauss(0.1, 0.8)]),
        ("quartic", [quartic(), gauss(0.0, 1.0), quartic(), gauss(0.2, 1.0)]),
        ("narrow", [gauss(0.1, 0.3), gauss(0.2, 0.4), gauss(0.0, 0.5), gauss(-0.1, 0.3)]),
        ("broad", [gauss(0.0, 3.0), gauss(0.5, 2.5), gauss(-0.5, 2.0), gauss(0.0, 2.2)]),
        ("offset", [gauss(1.0, 1.0), gauss(-1.0, 1.0), gauss(0.7, 1.0), gauss(-0.4, 1.0)]),
        ("blend", [tilted(0.2), quartic(), gauss(0.3, 0.8), tilted(-0.6)]),
    ];
    rows.into_iter().map(|(name, fs)| (name.to_string(), SepFun::from_fns(fs.to_vec()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_polyfun;

    fn mk(s: &str) -> PolyFun {
        parse_polyfun(s, CoordSys::MINKOWSKI).unwrap()
    }

    #[test]
    fn summand_counts() {
        let counts: Vec<usize> = Direction::ALL.iter().map(|&d| operator(d).len()).collect();
        assert_eq!(counts, vec![5, 2, 4, 6]);
    }

    #[test]
    fn derivative_examples() {
        for d in Direction::ALL {
            assert!(mink_deriv(&mk("7"), d).unwrap().is_zero());
        }
        assert_eq!(mink_deriv(&mk("xm"), Direction::Plus).unwrap(), PolyFun::constant(CoordSys::MINKOWSKI, -QScalar::q()));
        let expected = &QScalar::q() * &lp_pow(3);
        assert_eq!(mink_deriv(&mk("r2"), Direction::Two).unwrap(), PolyFun::constant(CoordSys::MINKOWSKI, expected));
    }

    #[test]
    fn inverse_examples() {
        let inv = mink_deriv_inverse(&mk("1"), Direction::Plus, InverseMode::Series).unwrap();
        assert_eq!(inv.value, mk("xm").scale(&-qp(-1)));
        assert_eq!(inv.max_k, Some(0));
        for d in [Direction::Three, Direction::Plus, Direction::Minus] {
            let s = mink_deriv_inverse(&mk("xp*xm"), d, InverseMode::Series).unwrap();
            assert!(s.max_k.unwrap() <= 2, "{d}: {s:?}");
            assert_eq!(mink_deriv(&s.value, d).unwrap(), mk("xp*xm"));
        }
    }

    #[test]
    fn series_reports_nontermination() {
        // The r²/x^{3/0} summand maps r²x^{3/0} back onto itself.
        let err = mink_deriv_inverse(&mk("r2"), Direction::Three, InverseMode::Series).unwrap_err();
        assert!(matches!(err, QError::NonTermination(_)), "{err:?}");
        // x⁺D⁺D^{r²} maps r²x⁺ back onto x⁺, so the r² series is geometric.
        for s in ["xp", "xp*xm", "x30", "r2^2"] {
            let err = mink_deriv_inverse(&mk(s), Direction::Two, InverseMode::Series).unwrap_err();
            assert!(matches!(err, QError::NonTermination(_)), "{s}: {err:?}");
        }
    }

    #[test]
    fn resummed_round_trips() {
        for s in ["r2", "r2^2*x30", "r2*xp*xm", "x30^2*xm + r2^3", "xp^2*xm - 3*r2"] {
            let f = mk(s);
            for d in Direction::ALL {
                let inv = mink_deriv_inverse(&f, d, InverseMode::Resummed).unwrap();
                assert_eq!(mink_deriv(&inv.value, d).unwrap(), f, "{d} on {s}");
            }
        }
    }

    #[test]
    fn resummed_agrees_with_terminating_series() {
        for s in ["xp*xm", "x30^2 + xp", "xp^2*xm^2*x30"] {
            for d in Direction::ALL {
                let Ok(series) = mink_deriv_inverse(&mk(s), d, InverseMode::Series) else { continue };
                let res = mink_deriv_inverse(&mk(s), d, InverseMode::Resummed).unwrap();
                assert_eq!(mink_deriv(&res.value, d).unwrap(), mink_deriv(&series.value, d).unwrap());
            }
        }
    }

    #[test]
    fn reverse_fixed_points() {
        assert_eq!(mink_ordering_reverse(&mk("xp")).unwrap(), mk("xp"));
        assert_eq!(mink_ordering_reverse(&mk("5")).unwrap(), mk("5"));
        let terms = mink_ordering_reverse_terms(&mk("xp^2*xm^2 + x30*xp*xm")).unwrap();
        assert!(terms.iter().all(|t| t.i <= 2));
        assert!(terms.iter().any(|t| t.i == 2));
    }

    #[test]
    fn reverse_leading_term_is_paired_weight() {
        let f = mk("xp^2*xm^2*x30 + r2*xp*xm + x30^3");
        let lead: Vec<_> = mink_ordering_reverse_terms(&f).unwrap().into_iter().filter(|t| t.i == 0).collect();
        assert_eq!(lead.len(), 1);
        assert_eq!(lead[0].value, paired_weight(&f).unwrap());
    }

    fn params(q: f64) -> IntegralParams {
        IntegralParams::new(q, 800, 1e-10).unwrap()
    }

    #[test]
    fn direct_modes_differ_by_fixed_power() {
        let p = params(1.05);
        for (name, f) in mink_battery().into_iter().take(4) {
            let c = mink_integrate_direct(&f, MinkVolumeMode::ClosedForm, &p).unwrap().value;
            let m = mink_integrate_direct(&f, MinkVolumeMode::MainText, &p).unwrap().value;
            assert!((m / c - p.q.powi(-16)).abs() < 1e-9, "{name}: {c} {m}");
        }
    }

    #[test]
    fn nested_series_is_closed_form_with_opposite_sign() {
        let p = params(1.05);
        for (name, f) in mink_battery().into_iter().take(4) {
            let c = mink_whole_space_integral(&f, MinkVolumeMode::ClosedForm, 8, &p).unwrap();
            let n = mink_whole_space_integral(&f, MinkVolumeMode::NestedSeries, 8, &p).unwrap();
            assert!((n.value.value / c.value.value + 1.0).abs() < 1e-10, "{name}: {c:?} {n:?}");
            assert!(n.stats.boundary_zeros > 0);
            assert_eq!(n.series.iter().map(|s| s.direction).collect::<Vec<_>>(), NESTED_ORDER.to_vec());
        }
    }

    #[test]
    fn volume_is_linear_and_vanishes_on_zero() {
        let p = params(1.05);
        let fs = mink_battery();
        let (f, g) = (&fs[1].1, &fs[4].1);
        let combo = f.times(2.0).plus(&g.times(-0.5)).unwrap();
        for mode in [MinkVolumeMode::ClosedForm, MinkVolumeMode::MainText, MinkVolumeMode::NestedSeries] {
            let i = |h: &SepFun| mink_whole_space_integral(h, mode, 8, &p).unwrap().value.value;
            let lhs = i(&combo);
            let rhs = 2.0 * i(f) - 0.5 * i(g);
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "{mode:?}");
            assert_eq!(i(&SepFun::zero(4)), 0.0);
        }
    }

    #[test]
    fn whole_line_boundary_identities() {
        let p = IntegralParams::new(1.1, 500, 1e-10).unwrap();
        for (c, w) in [(0.0, 1.0), (0.4, 0.6), (-0.7, 2.0)] {
            let f = LatticeFun::new(1, true, move |x| (-(x[0] - c).powi(2) / w).exp());
            for a in [2, -2] {
                for r in derivative_of_whole_line(&f, a, &[0.3, 1.0, 2.7], &p).unwrap() {
                    assert!(r.abs() < 1e-10, "c={c} a={a}: {r}");
                }
                for r in whole_line_of_derivatives(&f, a, 2, &p).unwrap() {
                    assert!(r.abs() < 1e-10, "c={c} a={a}: {r}");
                }
            }
        }
    }

    #[test]
    fn numeric_derivative_matches_symbolic() {
        let q = 1.1;
        let f = mk("r2^2*xp - 3*x30*xm + xp*xm*x30^2 + r2");
        let lf = LatticeFun::from_polyfun(&f, q).unwrap();
        for d in Direction::ALL {
            let sym = mink_deriv(&f, d).unwrap();
            let num = mink_deriv_numeric(&lf, d, q).unwrap();
            for pt in [[0.7, -0.4, 1.3, 0.9], [-1.1, 0.5, -0.6, 2.0]] {
                let (a, b) = (sym.eval(&pt, q).unwrap(), num.value(&pt).unwrap());
                assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{d}: {a} {b}");
            }
        }
    }

    type G<'a> = Box<dyn Fn([f64; 4]) -> f64 + 'a>;

    fn dd(g: G<'_>, i: usize, q2: f64) -> G<'_> {
        Box::new(move |y: [f64; 4]| {
            let mut z = y;
            z[i] *= q2;
            (g(y) - g(z)) / ((1.0 - q2) * y[i])
        })
    }

    /// The four operators expanded by hand on closures.
    fn hand_expanded(d: Direction, f: &dyn Fn([f64; 4]) -> f64, x: [f64; 4], q: f64) -> f64 {
        let q2 = q * q;
        let sc = |s: [i32; 4]| {
            move |y: [f64; 4]| [y[0] * q.powi(s[0]), y[1] * q.powi(s[1]), y[2] * q.powi(s[2]), y[3] * q.powi(s[3])]
        };
        let on = |s: [i32; 4], ds: &[usize]| -> f64 {
            let mut g: G<'_> = Box::new(move |y| f(sc(s)(y)));
            for &i in ds {
                g = dd(g, i, q2);
            }
            g(x)
        };
        let (l, lp) = (q - 1.0 / q, q + 1.0 / q);
        let [r2, xp, x3, xm] = x;
        match d {
            Direction::Three => {
                on([2, 0, 0, 0], &[X30])
                    + lp / q * x3 * on([0, 2, 0, 0], &[R2])
                    + (-r2 / (q2 * x3) - x3 / (q2 * q2)) * on([0; 4], &[R2])
                    + lp / q2 * xp * xm / x3 * on([0, 0, 2, 0], &[R2])
                    - q / lp * l * x3 * on([2, 0, 0, 0], &[XP, XM])
            }
            Direction::Plus => -q * on([2, 0, 0, 0], &[XM]) + lp / q * xp * on([0; 4], &[R2]),
            Direction::Minus => {
                -on([0; 4], &[XP]) / q + lp / q * xm * on([0, 2, 2, 0], &[R2])
                    + l / q2 * x3 * x3 * on([0, 2, 0, 2], &[XP, R2])
                    - l * l / q * x3 * x3 * xm * on([0, 2, 0, 0], &[XP, XM, R2])
            }
            Direction::Two => {
                let c = (lp / q).powi(2);
                q * lp.powi(3) * on([0, 2, 2, 2], &[R2])
                    + q.powi(3) * lp.powi(3) * r2 * on([0, 2, 2, 2], &[R2, R2])
                    + c * xm * on([0, 2, 2, 0], &[XM, R2])
                    + c * x3 * on([0, 2, 0, 0], &[X30, R2])
                    - lp * on([2, 0, 0, 0], &[XP, XM])
                    + c * xp * on([0; 4], &[XP, R2])
            }
        }
    }

    #[test]
    fn operator_tables_match_hand_expansion() {
        let q = 1.1;
        let f = mk("r2^2*xp*x30 - 2*x30^2*xm + xp^2*xm^2 + r2*xm - x30 + 3");
        let g = |y: [f64; 4]| f.eval(&y, q).unwrap();
        for d in Direction::ALL {
            let sym = mink_deriv(&f, d).unwrap();
            for pt in [[0.7, -0.4, 1.3, 0.9], [-1.1, 0.5, -0.6, 2.0], [1.9, 1.2, 0.8, -0.3]] {
                let a = sym.eval(&pt, q).unwrap();
                let b = hand_expanded(d, &g, pt, q);
                assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{d}: {a} {b}");
            }
        }
    }

    /// Direct evaluation of the reversal double sum for `ftilde = Σ c·x^e`.
    fn reverse_oracle(terms: &[([i32; 4], f64)], x: [f64; 4], q: f64) -> f64 {
        let qn = |n: i32| (q.powi(2 * n) - 1.0) / (q * q - 1.0);
        let fact = |n: i32| (1..=n).map(qn).product::<f64>();
        let (l, lp) = (q - 1.0 / q, q + 1.0 / q);
        let mut total = 0.0;
        for &(e, c) in terms {
            let imax = e[XP].min(e[XM]);
            for i in 0..=imax {
                let dcoef: f64 = (0..i).map(|j| qn(e[XP] - j) * qn(e[XM] - j)).product();
                let (np, n3, nm) = (e[XP] - i, e[X30], e[XM] - i);
                for k in 0..=i {
                    let s = q.powi(i - 2 * k);
                    let mono = x[R2].powi(e[R2]) * (s * x[XP]).powi(np) * x[X30].powi(n3) * (s * x[XM]).powi(nm);
                    let w = q.powi(2 * np * nm + (np + nm) * (2 * n3 + i) + 2 * n3 * i);
                    let pre = (l / lp).powi(i) * if k % 2 == 0 { 1.0 } else { -1.0 } * q.powi(-(i - k) - k * k)
                        / (fact(k) * fact(i - k));
                    total += c * dcoef * pre * x[R2].powi(i - k) * x[X30].powi(2 * k) * w * mono;
                }
            }
        }
        total
    }

    #[test]
    fn reverse_matches_direct_double_sum() {
        let q = 1.1;
        let terms = [([0, 2, 0, 2], 1.0), ([1, 1, 1, 1], -2.0), ([0, 3, 2, 1], 0.5), ([2, 0, 1, 0], 4.0)];
        let f = PolyFun::from_terms(
            CoordSys::MINKOWSKI,
            terms.iter().map(|(e, c)| (e.to_vec(), &QScalar::int((*c * 2.0) as i64) / &QScalar::int(2))),
        );
        let r = mink_ordering_reverse(&f).unwrap();
        for pt in [[0.7, -0.4, 1.3, 0.9], [-1.1, 0.5, -0.6, 2.0]] {
            let a = r.eval(&pt, q).unwrap();
            let b = reverse_oracle(&terms, pt, q);
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn reverse_regression() {
        let r = mink_ordering_reverse(&mk("xp^2*xm^2")).unwrap();
        assert_eq!(
            r.to_string(),
            "((q^-4 - 2*q^-2 + 1)/(1 + q^2))*x30^4 + (q - q^5)*xp*x30^2*xm + q^8*xp^2*xm^2 \
             + (-q^-2 + 2 - q^2)*r2*x30^2 + (-q^5 + q^9)*r2*xp*xm + ((q^-2 - 2 + q^2)/(1 + q^2))*r2^2"
        );
    }
}
