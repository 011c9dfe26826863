//! Closed-form calculus on the Manin plane.
//!
//! Functions are commutative polynomials standing for normal-ordered elements.
//! The `L` and `R̄` structures read `x¹` before `x²` (the `W` representation),
//! `L̄` and `R` read `x²` before `x¹` (the `W̃` representation).
//! [`ordering_flip`] converts between the two.
//!
//! Every structure comes in up to three independent forms: a hand-coded closed
//! formula, a form generated from the `L` formula by crossing substitutions, and
//! the rewriting oracle in [`crate::ncalg`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::polyfun::{CoordSys, Exps, PolyFun, QExp, Space, TensorPolyFun};
use crate::qscalar::{qfact, QScalar};

const PLANE: CoordSys = CoordSys::PLANE;
const PARTIAL: CoordSys = CoordSys::PLANE_PARTIAL;

/// The four left/right, plain/conjugate structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    L,
    LBar,
    R,
    RBar,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::L, Variant::LBar, Variant::R, Variant::RBar];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::L => "L",
            Variant::LBar => "Lbar",
            Variant::R => "R",
            Variant::RBar => "Rbar",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "L" | "l" => Ok(Variant::L),
            "Lbar" | "lbar" | "L̄" => Ok(Variant::LBar),
            "R" | "r" => Ok(Variant::R),
            "Rbar" | "rbar" | "R̄" => Ok(Variant::RBar),
            _ => Err(QError::Domain(format!("unknown variant `{s}` (expected L, Lbar, R or Rbar)"))),
        }
    }

    /// Representation of the functions this variant acts on or translates.
    pub fn ordering(self) -> Ordering {
        match self {
            Variant::L | Variant::RBar => Ordering::Standard,
            Variant::LBar | Variant::R => Ordering::Reversed,
        }
    }

    pub fn is_right(self) -> bool {
        matches!(self, Variant::R | Variant::RBar)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Which ordering a commutative function stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ordering {
    /// `x¹` before `x²`.
    Standard,
    /// `x²` before `x¹`.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Standard to reversed representation, `Û`.
    Forward,
    /// Reversed to standard, `Û⁻¹`.
    Inverse,
}

/// The two dual pairings between derivatives and coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairingVariant {
    /// Unhatted lowered derivatives `(∂₁)^{n₁}(∂₂)^{n₂}`.
    LRBar,
    /// Hatted lowered derivatives `(∂̂₂)^{n₂}(∂̂₁)^{n₁}`.
    LBarR,
}

/// The two coordinate-derivative exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpVariant {
    /// `exp(x|∂̂)_{R,L̄}`: standard `x`-slot, hatted `∂̂`-slot read `∂̂₂` before `∂̂₁`.
    RLBar,
    /// `exp(x|∂)_{R̄,L}`: reversed `x`-slot, unhatted `∂`-slot read `∂₁` before `∂₂`.
    RBarL,
}

impl ExpVariant {
    pub fn pairing(self) -> PairingVariant {
        match self {
            ExpVariant::RLBar => PairingVariant::LBarR,
            ExpVariant::RBarL => PairingVariant::LRBar,
        }
    }

    /// Ordering of the coordinate slot.
    pub fn x_ordering(self) -> Ordering {
        match self {
            ExpVariant::RLBar => Ordering::Standard,
            ExpVariant::RBarL => Ordering::Reversed,
        }
    }
}

/// Sign picked up by the inverse-exponential identification.
///
/// The general rule substitutes `∂ → -∂̂`; on the plane the minus sign is absent.
pub fn inverse_exp_sign(space: Space) -> i64 {
    match space {
        Space::Plane => 1,
        _ => -1,
    }
}

fn require_plane(f: &PolyFun) -> Result<()> {
    if f.coords() != PLANE {
        return Err(QError::CoordMismatch(f.coords().to_string(), PLANE.to_string()));
    }
    Ok(())
}

fn q_pow(n: i32) -> QExp {
    QExp::int(n)
}

// ---------------------------------------------------------------------------
// Crossing substitutions

/// `x^i → x^ī` together with `q → 1/q`.
pub fn cross_iq(f: &PolyFun) -> PolyFun {
    f.swap_conjugate().invert_q()
}

/// `x^i → x^ī` alone.
pub fn cross_i(f: &PolyFun) -> PolyFun {
    f.swap_conjugate()
}

/// `q → 1/q` alone.
pub fn cross_q(f: &PolyFun) -> PolyFun {
    f.invert_q()
}

/// Apply index exchange and/or `q`-inversion to every slot of a plane tensor.
pub fn cross_tensor(t: &TensorPolyFun, swap_index: bool, invert_q: bool) -> TensorPolyFun {
    let mut out = TensorPolyFun::zero(t.slots().to_vec());
    for (e, c) in t.terms() {
        let mut e2 = e.clone();
        if swap_index {
            for k in (0..e2.len()).step_by(2) {
                e2.swap(k, k + 1);
            }
        }
        out.add_term(e2, if invert_q { c.invert_q() } else { c.clone() });
    }
    out
}

// ---------------------------------------------------------------------------
// Star products and ordering flips

fn star_weighted(f: &PolyFun, g: &PolyFun, late: usize, early: usize, s: i32) -> PolyFun {
    let mut out = PolyFun::zero(f.coords());
    for (ef, cf) in f.terms() {
        for (eg, cg) in g.terms() {
            let e: Exps = ef.iter().zip(eg).map(|(a, b)| a + b).collect();
            out.add_term(e, (cf * cg).mul_t_pow(4 * s * ef[late] * eg[early]));
        }
    }
    out
}

fn ordering_weight(ordering: Ordering) -> (usize, usize, i32) {
    match ordering {
        Ordering::Standard => (1, 0, -1),
        Ordering::Reversed => (0, 1, 1),
    }
}

/// Star product `f ⊛ g` of two plane functions.
///
/// Standard ordering carries the weight `q^{-n_{x²}n_{y¹}}`, reversed ordering
/// `q^{n_{x¹}n_{y²}}`.
pub fn star(f: &PolyFun, g: &PolyFun, ordering: Ordering) -> Result<PolyFun> {
    require_plane(f)?;
    require_plane(g)?;
    let (late, early, s) = ordering_weight(ordering);
    Ok(star_weighted(f, g, late, early, s))
}

/// Star product in the algebra of lowered derivatives.
///
/// Unhatted `∂₁, ∂₂` are read `∂₁` first and obey `∂₂∂₁ = q∂₁∂₂`; hatted ones
/// are read `∂̂₂` first and obey `∂̂₁∂̂₂ = q⁻¹∂̂₂∂̂₁`.
pub fn star_partial(u: &PolyFun, v: &PolyFun, hatted: bool) -> Result<PolyFun> {
    for w in [u, v] {
        if w.coords() != PARTIAL {
            return Err(QError::CoordMismatch(w.coords().to_string(), PARTIAL.to_string()));
        }
    }
    Ok(if hatted { star_weighted(u, v, 0, 1, -1) } else { star_weighted(u, v, 1, 0, 1) })
}

/// Multiply the two slots of a plane tensor with the star product.
pub fn star_merge(t: &TensorPolyFun, ordering: Ordering) -> Result<PolyFun> {
    if t.slots() != [PLANE, PLANE] {
        return Err(QError::Domain("star merge needs two plane slots".into()));
    }
    let (late, early, s) = ordering_weight(ordering);
    let mut out = PolyFun::zero(PLANE);
    for (e, c) in t.terms() {
        let w = 4 * s * e[late] * e[2 + early];
        out.add_term(vec![e[0] + e[2], e[1] + e[3]], c.mul_t_pow(w));
    }
    Ok(out)
}

/// `Û = q^{n₁n₂}` and its inverse.
pub fn ordering_flip(f: &PolyFun, direction: Direction) -> PolyFun {
    let s = match direction {
        Direction::Forward => 1,
        Direction::Inverse => -1,
    };
    f.weight_monomials(&[(0, 1, s)], &[])
}

/// Convert a function from one representation to another.
pub fn reorder(f: &PolyFun, from: Ordering, to: Ordering) -> PolyFun {
    match (from, to) {
        (Ordering::Standard, Ordering::Reversed) => ordering_flip(f, Direction::Forward),
        (Ordering::Reversed, Ordering::Standard) => ordering_flip(f, Direction::Inverse),
        _ => f.clone(),
    }
}

// ---------------------------------------------------------------------------
// Braided products

/// `⊙_L` on a tensor `f(x) ⊗ g(y)`, returned as `[g-side, f-side]`:
///
/// ```text
/// Σ_i q^{-i²}(-λ)^i/[[i]]_{q⁻²}! (y²)^i ⊗ (x¹)^i
///     q^{-n_{y¹}n_{x²} - n_{y²}n_{x¹} - 2n_{y¹}n_{x¹} - 2n_{y²}n_{x²}}
///     (D¹_{q⁻²})^i g(q^{-i}y) ⊗ (D²_{q⁻²})^i f(q^{-i}x)
/// ```
///
/// The weight acts on the Jackson-derivative factors only.
fn braid_l(t: &TensorPolyFun) -> Result<TensorPolyFun> {
    if !t.is_polynomial() {
        return Err(QError::Laurent("braided product".into()));
    }
    let mut out = TensorPolyFun::zero(vec![PLANE, PLANE]);
    let lam = -QScalar::lambda();
    for (c, blocks) in t.decompose() {
        let f = PolyFun::monomial(PLANE, blocks[0].clone(), QScalar::one());
        let g = PolyFun::monomial(PLANE, blocks[1].clone(), QScalar::one());
        let top = blocks[0][1].min(blocks[1][0]);
        let mut dg = g.clone();
        let mut df = f.clone();
        for i in 0..=top {
            if i > 0 {
                dg = dg.jackson_d(0, -2);
                df = df.jackson_d(1, -2);
            }
            let gi = dg.scale_coord(0, q_pow(-i)).scale_coord(1, q_pow(-i));
            let fi = df.scale_coord(0, q_pow(-i)).scale_coord(1, q_pow(-i));
            let pre = QScalar::q_pow(-i * i) * lam.pow(i)? * qfact(i as u32, -2).inv()?;
            for (eg, cg) in gi.terms() {
                for (ef, cf) in fi.terms() {
                    // n_{y¹}n_{x²} + n_{y²}n_{x¹} + 2n_{y¹}n_{x¹} + 2n_{y²}n_{x²}
                    let w = eg[0] * ef[1] + eg[1] * ef[0] + 2 * eg[0] * ef[0] + 2 * eg[1] * ef[1];
                    let e = vec![eg[0], eg[1] + i, ef[0] + i, ef[1]];
                    out.add_term(e, (&(&c * cg) * &(cf * &pre)).mul_t_pow(-4 * w));
                }
            }
        }
    }
    Ok(out)
}

/// Braided product `f(x) ⊙ g(y)`, returned as `[g-side, f-side]`.
///
/// `⊙_L` uses the closed sum over Jackson derivatives; `⊙_L̄` is obtained from
/// it by crossing. Since `⊙_R̄ = ⊙_L` and `⊙_R = ⊙_L̄`, the right variants are
/// accepted as well.
pub fn braided_product(t: &TensorPolyFun, variant: Variant) -> Result<TensorPolyFun> {
    if t.slots() != [PLANE, PLANE] {
        return Err(QError::Domain("braided product needs two plane slots".into()));
    }
    match variant {
        Variant::L | Variant::RBar => braid_l(t),
        Variant::LBar | Variant::R => Ok(cross_tensor(&braid_l(&cross_tensor(t, true, true))?, true, true)),
    }
}

/// Braided product of two-slot tensors: `(f ⊗ f') ⊙ (g ⊗ g')`.
///
/// `f'` is braided past `g`; the factors sharing a slot are then star multiplied.
pub fn braided_tensor_product(a: &TensorPolyFun, b: &TensorPolyFun, variant: Variant) -> Result<TensorPolyFun> {
    let ordering = match variant {
        Variant::L | Variant::RBar => Ordering::Standard,
        Variant::LBar | Variant::R => Ordering::Reversed,
    };
    let mut out = TensorPolyFun::zero(vec![PLANE, PLANE]);
    for (ca, ba) in a.decompose() {
        let f = PolyFun::monomial(PLANE, ba[0].clone(), ca);
        let f2 = PolyFun::monomial(PLANE, ba[1].clone(), QScalar::one());
        for (cb, bb) in b.decompose() {
            let g = PolyFun::monomial(PLANE, bb[0].clone(), cb);
            let g2 = PolyFun::monomial(PLANE, bb[1].clone(), QScalar::one());
            let braided = braided_product(&TensorPolyFun::product(&f2, &g), variant)?;
            for (cm, bm) in braided.decompose() {
                let gx = PolyFun::monomial(PLANE, bm[0].clone(), cm);
                let fy = PolyFun::monomial(PLANE, bm[1].clone(), QScalar::one());
                let left = star(&f, &gx, ordering)?;
                let right = star(&fy, &g2, ordering)?;
                out = out.add(&TensorPolyFun::product(&left, &right));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Translations and antipodes

fn jackson_power(f: &PolyFun, i: usize, a: i32, k: i32) -> PolyFun {
    let mut g = f.clone();
    for _ in 0..k {
        g = g.jackson_d(i, a);
    }
    g
}

fn degree_bounds(f: &PolyFun) -> (i32, i32) {
    (f.degree_in(0).unwrap_or(0), f.degree_in(1).unwrap_or(0))
}

/// `f(x ⊕_L y)` from the q-Taylor sum over Jackson derivatives `D_{q⁻²}`.
fn translate_l(f: &PolyFun) -> Result<TensorPolyFun> {
    f.require_polynomial("translation")?;
    let (m1, m2) = degree_bounds(f);
    let mut out = TensorPolyFun::zero(vec![PLANE, PLANE]);
    for k1 in 0..=m1 {
        for k2 in 0..=m2 {
            let g = jackson_power(&jackson_power(f, 0, -2, k1), 1, -2, k2);
            if g.is_zero() {
                continue;
            }
            let g = g.scale_coord(0, q_pow(-k2));
            let c = (qfact(k1 as u32, -2) * qfact(k2 as u32, -2)).inv()?;
            let x = PolyFun::monomial(PLANE, vec![k1, k2], c);
            out = out.add(&TensorPolyFun::product(&x, &g));
        }
    }
    Ok(out)
}

/// `f(x ⊕_L̄ y)` on reversed-ordered functions, Jackson derivatives `D_{q²}`.
fn translate_lbar(f: &PolyFun) -> Result<TensorPolyFun> {
    f.require_polynomial("translation")?;
    let (m1, m2) = degree_bounds(f);
    let mut out = TensorPolyFun::zero(vec![PLANE, PLANE]);
    for k1 in 0..=m1 {
        for k2 in 0..=m2 {
            let g = jackson_power(&jackson_power(f, 0, 2, k1), 1, 2, k2);
            if g.is_zero() {
                continue;
            }
            let g = g.scale_coord(1, q_pow(k1));
            let c = (qfact(k1 as u32, 2) * qfact(k2 as u32, 2)).inv()?;
            let x = PolyFun::monomial(PLANE, vec![k1, k2], c);
            out = out.add(&TensorPolyFun::product(&x, &g));
        }
    }
    Ok(out)
}

/// `f(x ⊕_R̄ y)`: the derivative part sits in the `x` slot.
fn translate_rbar(f: &PolyFun) -> Result<TensorPolyFun> {
    f.require_polynomial("translation")?;
    let (m1, m2) = degree_bounds(f);
    let mut out = TensorPolyFun::zero(vec![PLANE, PLANE]);
    for k1 in 0..=m1 {
        for k2 in 0..=m2 {
            let g = jackson_power(&jackson_power(f, 0, -2, k1), 1, -2, k2);
            if g.is_zero() {
                continue;
            }
            let g = g.scale_coord(1, q_pow(-k1));
            let c = (qfact(k1 as u32, -2) * qfact(k2 as u32, -2)).inv()?;
            let y = PolyFun::monomial(PLANE, vec![k1, k2], c);
            out = out.add(&TensorPolyFun::product(&g, &y));
        }
    }
    Ok(out)
}

/// `f(x ⊕ y)` as a tensor `[x, y]`.
///
/// `L`, `L̄` and `R̄` use their closed sums; `R` is generated from `L` by crossing
/// since no separate closed sum is used for it.
pub fn translate(f: &PolyFun, variant: Variant) -> Result<TensorPolyFun> {
    require_plane(f)?;
    match variant {
        Variant::L => translate_l(f),
        Variant::LBar => translate_lbar(f),
        Variant::RBar => translate_rbar(f),
        Variant::R => translate_crossed(f, Variant::R),
    }
}

/// Translations generated from `⊕_L` by the crossing substitutions.
///
/// `L̄`: `x^i ↔ x^ī`, `q ↔ 1/q`. `R`: `q ↔ 1/q`, `x ↔ y`. `R̄`: `x^i ↔ x^ī`, `x ↔ y`.
pub fn translate_crossed(f: &PolyFun, variant: Variant) -> Result<TensorPolyFun> {
    require_plane(f)?;
    Ok(match variant {
        Variant::L => translate_l(f)?,
        Variant::LBar => cross_tensor(&translate_l(&cross_iq(f))?, true, true),
        Variant::R => cross_tensor(&translate_l(&cross_q(f))?, false, true).swap(),
        Variant::RBar => cross_tensor(&translate_l(&cross_i(f))?, true, false).swap(),
    })
}

/// `f(⊖_L x) = q^{-(n₁+n₂)²} f(-qx¹, -qx²)`.
fn antipode_l(f: &PolyFun) -> Result<PolyFun> {
    f.require_polynomial("antipode")?;
    Ok(f.map_terms(|e, c| {
        let n = e[0] + e[1];
        let sign = if n % 2 == 0 { c.clone() } else { -c.clone() };
        Some((e.clone(), sign.mul_t_pow(4 * (n - n * n))))
    }))
}

/// Braided antipode `f(⊖ x)`; `L̄` and `R` follow from `L` by crossing.
pub fn antipode(f: &PolyFun, variant: Variant) -> Result<PolyFun> {
    require_plane(f)?;
    match variant {
        Variant::L => antipode_l(f),
        Variant::RBar => Ok(cross_i(&antipode_l(&cross_i(f))?)),
        Variant::LBar => Ok(cross_iq(&antipode_l(&cross_iq(f))?)),
        Variant::R => Ok(cross_q(&antipode_l(&cross_q(f))?)),
    }
}

/// `f((⊖x) ⊕ x)` (`antipode_first`) or `f(x ⊕ (⊖x))`, slots star-merged.
pub fn antipode_cancel(f: &PolyFun, variant: Variant, antipode_first: bool) -> Result<PolyFun> {
    let t = translate(f, variant)?;
    let k = if antipode_first { 0 } else { 1 };
    let t = t.map_slot(k, PLANE, |m| antipode(m, variant))?;
    star_merge(&t, variant.ordering())
}

/// `(⊕ ⊗ id)∘⊕` and `(id ⊗ ⊕)∘⊕` as three-slot tensors.
pub fn coassociativity_sides(f: &PolyFun, variant: Variant) -> Result<(TensorPolyFun, TensorPolyFun)> {
    let t = translate(f, variant)?;
    let left = t.expand_slot(0, |m| translate(m, variant))?;
    let right = t.expand_slot(1, |m| translate(m, variant))?;
    Ok((left, right))
}

/// `(f ⊛ g)(x ⊕ y)` and `f(x ⊕ y) ⊙ g(x ⊕ y)`.
pub fn homomorphism_sides(f: &PolyFun, g: &PolyFun, variant: Variant) -> Result<(TensorPolyFun, TensorPolyFun)> {
    let lhs = translate(&star(f, g, variant.ordering())?, variant)?;
    let rhs = braided_tensor_product(&translate(f, variant)?, &translate(g, variant)?, variant)?;
    Ok((lhs, rhs))
}

/// `(f ⊛ g)(⊖x)` and `f(⊖x) ⊙ g(⊖x)` with the braided factors star-merged.
pub fn antipode_product_sides(f: &PolyFun, g: &PolyFun, variant: Variant) -> Result<(PolyFun, PolyFun)> {
    let ord = variant.ordering();
    let lhs = antipode(&star(f, g, ord)?, variant)?;
    let braided = braided_product(&TensorPolyFun::product(&antipode(f, variant)?, &antipode(g, variant)?), variant)?;
    Ok((lhs, star_merge(&braided, ord)?))
}

// ---------------------------------------------------------------------------
// Derivatives

fn check_index(i: usize) -> Result<()> {
    if i > 1 {
        return Err(QError::Domain(format!("plane derivative index {} out of range", i + 1)));
    }
    Ok(())
}

fn deriv_l(f: &PolyFun, i: usize) -> PolyFun {
    if i == 0 {
        // ∂¹▷f = -q^{-1/2} D²_{q²} f(qx¹, x²)
        f.scale_coord(0, q_pow(1)).jackson_d(1, 2).scale(&-QScalar::t_pow(-2))
    } else {
        // ∂²▷f = q^{1/2} D¹_{q²} f(x¹, q²x²)
        f.scale_coord(1, q_pow(2)).jackson_d(0, 2).scale(&QScalar::t_pow(2))
    }
}

fn deriv_lbar(f: &PolyFun, i: usize) -> PolyFun {
    if i == 0 {
        // ∂̂¹▷̄f = q^{-1/2} D²_{q⁻²} f(q⁻²x¹, x²)
        f.scale_coord(0, q_pow(-2)).jackson_d(1, -2).scale(&QScalar::t_pow(-2))
    } else {
        // ∂̂²▷̄f = -q^{1/2} D¹_{q⁻²} f(x¹, q⁻¹x²)
        f.scale_coord(1, q_pow(-1)).jackson_d(0, -2).scale(&-QScalar::t_pow(2))
    }
}

fn deriv_rbar(f: &PolyFun, i: usize) -> PolyFun {
    if i == 0 {
        // f◁̄∂¹ = q^{1/2} D²_{q²} f(q²x¹, x²)
        f.scale_coord(0, q_pow(2)).jackson_d(1, 2).scale(&QScalar::t_pow(2))
    } else {
        // f◁̄∂² = -q^{-1/2} D¹_{q²} f(x¹, qx²)
        f.scale_coord(1, q_pow(1)).jackson_d(0, 2).scale(&-QScalar::t_pow(-2))
    }
}

fn deriv_r(f: &PolyFun, i: usize) -> PolyFun {
    if i == 0 {
        // f◁∂̂¹ = -q^{1/2} D²_{q⁻²} f(q⁻¹x¹, x²)
        f.scale_coord(0, q_pow(-1)).jackson_d(1, -2).scale(&-QScalar::t_pow(2))
    } else {
        // f◁∂̂² = q^{-1/2} D¹_{q⁻²} f(x¹, q⁻²x²)
        f.scale_coord(1, q_pow(-2)).jackson_d(0, -2).scale(&QScalar::t_pow(-2))
    }
}

/// Action of one derivative (`i` = 0 for `∂¹`, 1 for `∂²`).
///
/// `L`: `∂^i▷f`; `L̄`: `∂̂^i▷̄f`; `R̄`: `f◁̄∂^i`; `R`: `f◁∂̂^i`. The function is read
/// in the representation given by [`Variant::ordering`].
pub fn qderiv(f: &PolyFun, i: usize, variant: Variant) -> Result<PolyFun> {
    require_plane(f)?;
    check_index(i)?;
    Ok(match variant {
        Variant::L => deriv_l(f, i),
        Variant::LBar => deriv_lbar(f, i),
        Variant::RBar => deriv_rbar(f, i),
        Variant::R => deriv_r(f, i),
    })
}

/// Derivative actions generated from `∂^i▷` by crossing.
///
/// `∂̂^ī▷̄ = C ∂^i▷ C` with `C` exchanging indices and inverting `q`;
/// `◁̄∂^ī` uses the index exchange alone and `◁∂̂^i` the `q`-inversion alone.
pub fn qderiv_crossed(f: &PolyFun, i: usize, variant: Variant) -> Result<PolyFun> {
    require_plane(f)?;
    check_index(i)?;
    Ok(match variant {
        Variant::L => deriv_l(f, i),
        Variant::LBar => cross_iq(&deriv_l(&cross_iq(f), 1 - i)),
        Variant::RBar => cross_i(&deriv_l(&cross_i(f), 1 - i)),
        Variant::R => cross_q(&deriv_l(&cross_q(f), i)),
    })
}

/// Action of a derivative word `∂^{w₁}∂^{w₂}…`; left actions apply the last
/// letter first, right actions the first letter first.
pub fn qderiv_word(f: &PolyFun, word: &[usize], variant: Variant) -> Result<PolyFun> {
    let mut g = f.clone();
    if variant.is_right() {
        for &i in word {
            g = qderiv(&g, i, variant)?;
        }
    } else {
        for &i in word.iter().rev() {
            g = qderiv(&g, i, variant)?;
        }
    }
    Ok(g)
}

/// Formal inverse of `∂^i▷`:
/// `(∂¹)⁻¹▷f = -q^{1/2}(D²_{q²})⁻¹ f(q⁻¹x¹)`, `(∂²)⁻¹▷f = q^{-1/2}(D¹_{q²})⁻¹ f(x¹, q⁻²x²)`.
pub fn qderiv_inverse(f: &PolyFun, i: usize) -> Result<PolyFun> {
    require_plane(f)?;
    check_index(i)?;
    if i == 0 {
        Ok(f.jackson_antideriv(1, 2)?.scale_coord(0, q_pow(-1)).scale(&-QScalar::t_pow(2)))
    } else {
        Ok(f.jackson_antideriv(0, 2)?.scale_coord(1, q_pow(-2)).scale(&QScalar::t_pow(-2)))
    }
}

/// Lowered derivative as a multiple of an upper one: `(j, c)` with `∂_i = c ∂^j`.
///
/// Unhatted derivatives are lowered with `ε^{ij}`, hatted ones with `ε_{ij}`.
pub fn lowered(i: usize, hatted: bool) -> (usize, QScalar) {
    let j = PLANE.conj_index(i);
    let c = if hatted { PLANE.lower_metric(i, j) } else { PLANE.metric(i, j) };
    (j, c.expect("plane metric"))
}

/// Upper derivative `∂^i` as a function of the lowered ones.
pub fn raised(i: usize, hatted: bool) -> Result<PolyFun> {
    let j = PLANE.conj_index(i);
    let (_, c) = lowered(j, hatted);
    let mut e = vec![0, 0];
    e[j] = 1;
    Ok(PolyFun::monomial(PARTIAL, e, c.inv()?))
}

// ---------------------------------------------------------------------------
// Pairings

fn require_partial(u: &PolyFun) -> Result<()> {
    if u.coords() != PARTIAL {
        return Err(QError::CoordMismatch(u.coords().to_string(), PARTIAL.to_string()));
    }
    u.require_polynomial("pairing")
}

/// Dual pairing from the monomial table.
///
/// `u` is a function of the lowered derivatives, `g` a standard-ordered function.
/// For `(L,R̄)` the term `∂₁^{n₁}∂₂^{n₂}` pairs with `(x²)^{m₂}(x¹)^{m₁}` to
/// `δδ [[n₁]]_{q²}! [[n₂]]_{q²}!`, so `g` is first rewritten in reversed order.
/// For `(L̄,R)` the term `∂̂₂^{n₂}∂̂₁^{n₁}` pairs with `(x¹)^{m₁}(x²)^{m₂}` to
/// `δδ [[n₁]]_{q⁻²}! [[n₂]]_{q⁻²}!`.
pub fn pairing(u: &PolyFun, g: &PolyFun, variant: PairingVariant) -> Result<QScalar> {
    require_partial(u)?;
    require_plane(g)?;
    g.require_polynomial("pairing")?;
    let (h, a) = match variant {
        PairingVariant::LRBar => (ordering_flip(g, Direction::Forward), 2),
        PairingVariant::LBarR => (g.clone(), -2),
    };
    let mut acc = QScalar::zero();
    for (e, c) in u.terms() {
        let hc = h.coeff(e);
        if hc.is_zero() {
            continue;
        }
        acc = acc + c * &hc * qfact(e[0] as u32, a) * qfact(e[1] as u32, a);
    }
    Ok(acc)
}

/// `u(∂) ▷ g` for a function `u` of lowered derivatives.
///
/// `g` and the result are standard ordered. `(L,R̄)` reads `u` as
/// `∂₁^{n₁}∂₂^{n₂}` acting by `▷`; `(L̄,R)` reads it as `∂̂₂^{n₂}∂̂₁^{n₁}` acting by `▷̄`.
pub fn apply_partials(u: &PolyFun, g: &PolyFun, variant: PairingVariant) -> Result<PolyFun> {
    require_partial(u)?;
    require_plane(g)?;
    g.require_polynomial("derivative action")?;
    let (hatted, act, start) = match variant {
        PairingVariant::LRBar => (false, Variant::L, g.clone()),
        PairingVariant::LBarR => (true, Variant::LBar, ordering_flip(g, Direction::Forward)),
    };
    let apply = |h: &PolyFun, i: usize, n: i32| -> Result<PolyFun> {
        let (j, c) = lowered(i, hatted);
        let mut h = h.clone();
        for _ in 0..n {
            h = qderiv(&h, j, act)?.scale(&c);
        }
        Ok(h)
    };
    let mut acc = PolyFun::zero(PLANE);
    for (e, c) in u.terms() {
        // The rightmost factor acts first: ∂₂ for (L,R̄), ∂̂₁ for (L̄,R).
        let h = match variant {
            PairingVariant::LRBar => apply(&apply(&start, 1, e[1])?, 0, e[0])?,
            PairingVariant::LBarR => apply(&apply(&start, 0, e[0])?, 1, e[1])?,
        };
        acc = &acc + &h.scale(c);
    }
    Ok(match variant {
        PairingVariant::LRBar => acc,
        PairingVariant::LBarR => ordering_flip(&acc, Direction::Inverse),
    })
}

/// Dual pairing as `(u(∂) ▷ g)|_{x=0}` with the closed-form derivative actions.
pub fn pairing_by_action(u: &PolyFun, g: &PolyFun, variant: PairingVariant) -> Result<QScalar> {
    apply_partials(u, g, variant)?.counit()
}

/// `(L̄,R)` pairing generated from the `(L,R̄)` one by crossing:
/// `∂̂_i ↔ ∂_ī`, `x^i ↔ x^ī`, `q ↔ 1/q`.
pub fn pairing_crossed(u: &PolyFun, g: &PolyFun) -> Result<QScalar> {
    require_partial(u)?;
    require_plane(g)?;
    // The crossed coordinate function is read in reversed order.
    let gc = ordering_flip(&cross_iq(g), Direction::Inverse);
    Ok(pairing(&cross_iq(u), &gc, PairingVariant::LRBar)?.invert_q())
}

// ---------------------------------------------------------------------------
// Exponentials

/// Truncated q-exponential with slots `[x, ∂]`, all terms of `x`-degree `≤ n`.
pub fn qexp(n: u32, variant: ExpVariant) -> Result<TensorPolyFun> {
    let a = match variant {
        ExpVariant::RLBar => -2,
        ExpVariant::RBarL => 2,
    };
    let mut out = TensorPolyFun::zero(vec![PLANE, PARTIAL]);
    let n = n as i32;
    for n1 in 0..=n {
        for n2 in 0..=(n - n1) {
            let c = (qfact(n1 as u32, a) * qfact(n2 as u32, a)).inv()?;
            out.add_term(vec![n1, n2, n1, n2], c);
        }
    }
    Ok(out)
}

/// `exp(x|∂)_{R̄,L}` generated from `exp(x|∂̂)_{R,L̄}` by crossing.
pub fn qexp_crossed(n: u32) -> Result<TensorPolyFun> {
    Ok(cross_tensor(&qexp(n, ExpVariant::RLBar)?, true, true))
}

/// Keep the terms of a tensor whose slot-`k` degree is at most `n`.
pub fn truncate(t: &TensorPolyFun, k: usize, n: i32) -> TensorPolyFun {
    t.truncate_slot(k, n)
}

/// Collect a tensor into per-slot-0-monomial groups of slot-1 functions.
pub fn group_by_first(t: &TensorPolyFun) -> BTreeMap<Exps, PolyFun> {
    let mut out: BTreeMap<Exps, PolyFun> = BTreeMap::new();
    let second = t.slots()[1];
    for (c, b) in t.decompose() {
        out.entry(b[0].clone())
            .or_insert_with(|| PolyFun::zero(second))
            .add_term(b[1].clone(), c);
    }
    out
}

// ---------------------------------------------------------------------------
// Exponential identities

fn exp_hatted(variant: ExpVariant) -> bool {
    variant == ExpVariant::RLBar
}

/// `Σ_a ⟨u, e_a⟩ f^a`, which reproduces `u` when `n` covers its degree.
pub fn completeness(u: &PolyFun, variant: ExpVariant, n: u32) -> Result<PolyFun> {
    let e = qexp(n, variant)?;
    let mut acc = PolyFun::zero(PARTIAL);
    for (c, b) in e.decompose() {
        let ea = reorder(&PolyFun::monomial(PLANE, b[0].clone(), QScalar::one()), variant.x_ordering(), Ordering::Standard);
        let p = pairing(u, &ea, variant.pairing())?;
        if !p.is_zero() {
            acc.add_term(b[1].clone(), &p * &c);
        }
    }
    Ok(acc)
}

/// Both sides of the eigen-equation `∂^i ▷_x exp = exp ⊛_∂ ∂^i`, restricted to
/// `x`-degree `≤ n − 1`.
pub fn eigen_sides(i: usize, variant: ExpVariant, n: u32) -> Result<(TensorPolyFun, TensorPolyFun)> {
    check_index(i)?;
    let e = qexp(n, variant)?;
    let (act, ord) = match variant {
        ExpVariant::RBarL => (Variant::L, Ordering::Standard),
        ExpVariant::RLBar => (Variant::LBar, Ordering::Reversed),
    };
    let xo = variant.x_ordering();
    let lhs = e.map_slot(0, PLANE, |m| Ok(reorder(&qderiv(&reorder(m, xo, ord), i, act)?, ord, xo)))?;
    let d = raised(i, exp_hatted(variant))?;
    let rhs = e.map_slot(1, PARTIAL, |m| star_partial(m, &d, exp_hatted(variant)))?;
    let top = n as i32 - 1;
    Ok((lhs.truncate_slot(0, top), rhs.truncate_slot(0, top)))
}

/// Both sides of the q-Taylor rule: `exp ▷_{∂|y} g(y)` and `g(x ⊕ y)`, with
/// `⊕_L̄` for `exp_{R̄,L}` and `⊕_L` for `exp_{R,L̄}`. `g` is standard ordered.
pub fn taylor_sides(g: &PolyFun, variant: ExpVariant, n: u32) -> Result<(TensorPolyFun, TensorPolyFun)> {
    let e = qexp(n, variant)?;
    let mut lhs = TensorPolyFun::zero(vec![PLANE, PLANE]);
    let (tv, yo) = match variant {
        ExpVariant::RBarL => (Variant::LBar, Ordering::Reversed),
        ExpVariant::RLBar => (Variant::L, Ordering::Standard),
    };
    for (c, b) in e.decompose() {
        let u = PolyFun::monomial(PARTIAL, b[1].clone(), c);
        let y = reorder(&apply_partials(&u, g, variant.pairing())?, Ordering::Standard, yo);
        if y.is_zero() {
            continue;
        }
        let x = PolyFun::monomial(PLANE, b[0].clone(), QScalar::one());
        lhs = lhs.add(&TensorPolyFun::product(&x, &y));
    }
    let rhs = translate(&reorder(g, Ordering::Standard, yo), tv)?;
    Ok((lhs, rhs))
}

/// Both sides of the addition law `exp(x ⊕ y|∂) = exp(x|exp(y|∂) ⊛ ∂)` as
/// `[x, y, ∂]` tensors of total coordinate degree `≤ n`.
pub fn addition_sides(variant: ExpVariant, n: u32) -> Result<(TensorPolyFun, TensorPolyFun)> {
    let e = qexp(n, variant)?;
    let tv = match variant {
        ExpVariant::RBarL => Variant::LBar,
        ExpVariant::RLBar => Variant::L,
    };
    let lhs = e.expand_slot(0, |m| translate(m, tv))?;
    let hatted = exp_hatted(variant);
    let mut rhs = TensorPolyFun::zero(vec![PLANE, PLANE, PARTIAL]);
    let terms = e.decompose();
    for (ca, ba) in &terms {
        for (cb, bb) in &terms {
            let da: i32 = ba[0].iter().sum();
            let db: i32 = bb[0].iter().sum();
            if da + db > n as i32 {
                continue;
            }
            let fa = PolyFun::monomial(PARTIAL, ba[1].clone(), ca.clone());
            let fb = PolyFun::monomial(PARTIAL, bb[1].clone(), cb.clone());
            let prod = star_partial(&fb, &fa, hatted)?;
            let xa = PolyFun::monomial(PLANE, ba[0].clone(), QScalar::one());
            let yb = PolyFun::monomial(PLANE, bb[0].clone(), QScalar::one());
            rhs = rhs.add(&TensorPolyFun::product_many(&[&xa, &yb, &prod]));
        }
    }
    Ok((lhs, rhs))
}

/// Both sides of the inverse-exponential identification.
///
/// For `exp_{R,L̄}`: `exp(⊖_R̄ x|∂̂)_{R,L̄}` against `exp(x|∂)_{R̄,L}` with
/// `∂^j → s∂̂^j`. For `exp_{R̄,L}`: `exp(⊖_L̄ x|∂)_{R̄,L}` against `exp(x|∂̂)_{R,L̄}`
/// with `∂̂^j → s∂^j`. The sign `s` comes from [`inverse_exp_sign`].
pub fn inverse_exp_sides(variant: ExpVariant, n: u32) -> Result<(TensorPolyFun, TensorPolyFun)> {
    let s = QScalar::int(inverse_exp_sign(Space::Plane));
    let (anti, other) = match variant {
        ExpVariant::RLBar => (Variant::RBar, ExpVariant::RBarL),
        ExpVariant::RBarL => (Variant::LBar, ExpVariant::RLBar),
    };
    let lhs = qexp(n, variant)?.map_slot(0, PLANE, |m| antipode(m, anti))?;
    let src = qexp(n, other)?;
    let hatted_src = exp_hatted(other);
    // ∂_i = c_i ∂^{ī} and the target ∂'_i = d_i ∂'^{ī}, so ∂_i → s c_i/d_i ∂'_i.
    let ratio: Vec<QScalar> = (0..2)
        .map(|i| {
            let (_, c) = lowered(i, hatted_src);
            let (_, d) = lowered(i, !hatted_src);
            &(&s * &c) / &d
        })
        .collect();
    let mut rhs = TensorPolyFun::zero(vec![PLANE, PARTIAL]);
    for (c, b) in src.decompose() {
        let x = reorder(&PolyFun::monomial(PLANE, b[0].clone(), c), other.x_ordering(), variant.x_ordering());
        let (n1, n2) = (b[1][0], b[1][1]);
        let mut k = ratio[0].pow(n1)? * ratio[1].pow(n2)?;
        // Swap the reading order of the derivative monomial: ∂̂₁∂̂₂ = q⁻¹∂̂₂∂̂₁ and ∂₂∂₁ = q∂₁∂₂.
        k = k.mul_t_pow(if hatted_src { 4 * n1 * n2 } else { -4 * n1 * n2 });
        let d = PolyFun::monomial(PARTIAL, vec![n1, n2], k);
        rhs = rhs.add(&TensorPolyFun::product(&x, &d));
    }
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// Conjugation

/// Both sides of `conj(f⊛g) = conj(g)⊛conj(f)`.
pub fn conjugation_sides(f: &PolyFun, g: &PolyFun) -> Result<(PolyFun, PolyFun)> {
    let lhs = star(f, g, Ordering::Standard)?.conjugate_fun()?;
    let rhs = star(&g.conjugate_fun()?, &f.conjugate_fun()?, Ordering::Standard)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalg::{self, action_oracle, Side};

    fn x(e: [i32; 2]) -> PolyFun {
        PolyFun::monomial(PLANE, e.to_vec(), QScalar::one())
    }

    fn monomials(deg: i32) -> Vec<PolyFun> {
        let mut v = Vec::new();
        for d in 0..=deg {
            for a in 0..=d {
                v.push(x([a, d - a]));
            }
        }
        v
    }

    #[test]
    fn star_examples() {
        assert_eq!(star(&x([1, 0]), &x([0, 1]), Ordering::Standard).unwrap(), x([1, 1]));
        assert_eq!(
            star(&x([0, 1]), &x([1, 0]), Ordering::Standard).unwrap(),
            x([1, 1]).scale(&QScalar::q_pow(-1))
        );
        assert_eq!(ordering_flip(&x([1, 1]), Direction::Forward), x([1, 1]).scale(&QScalar::q()));
    }

    #[test]
    fn antipode_examples() {
        assert_eq!(antipode(&x([1, 0]), Variant::L).unwrap(), -x([1, 0]));
        assert_eq!(antipode(&x([2, 0]), Variant::L).unwrap(), x([2, 0]).scale(&QScalar::q_pow(-2)));
    }

    #[test]
    fn translate_examples() {
        let t = translate(&x([2, 0]), Variant::L).unwrap();
        assert_eq!(t.coeff(&[1, 0, 1, 0]), QScalar::one() + QScalar::q_pow(-2));
        assert_eq!(t.coeff(&[2, 0, 0, 0]), QScalar::one());
        assert_eq!(t.coeff(&[0, 0, 2, 0]), QScalar::one());
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(qderiv(&x([0, 1]), 0, Variant::L).unwrap(), PolyFun::constant(PLANE, -QScalar::t_pow(-2)));
        assert_eq!(qderiv(&x([1, 1]), 1, Variant::L).unwrap(), x([0, 1]).scale(&QScalar::t_pow(10)));
        assert_eq!(qderiv_inverse(&PolyFun::one(PLANE), 1).unwrap(), x([1, 0]).scale(&QScalar::t_pow(-2)));
        assert_eq!(qderiv_inverse(&PolyFun::one(PLANE), 0).unwrap(), x([0, 1]).scale(&-QScalar::t_pow(2)));
    }

    #[test]
    fn derivatives_match_oracle() {
        let systems = [
            (Variant::L, ncalg::plane_left(), Side::Left),
            (Variant::LBar, ncalg::plane_left_bar(), Side::Left),
            (Variant::RBar, ncalg::plane_right_bar(), Side::Right),
            (Variant::R, ncalg::plane_right(), Side::Right),
        ];
        for (v, rs, side) in &systems {
            for f in monomials(4) {
                for i in 0..2 {
                    let o = action_oracle(&[i], &f, *side, rs).unwrap();
                    assert_eq!(qderiv(&f, i, *v).unwrap(), o, "{v} ∂{} on {f}", i + 1);
                    assert_eq!(qderiv_crossed(&f, i, *v).unwrap(), o, "crossed {v} ∂{} on {f}", i + 1);
                }
            }
        }
    }

    #[test]
    fn braiding_matches_oracle() {
        let pairs = [(Variant::L, ncalg::plane_pair_left()), (Variant::LBar, ncalg::plane_pair_left_bar())];
        for (v, rs) in &pairs {
            for f in monomials(3) {
                for g in monomials(3) {
                    let t = TensorPolyFun::product(&f, &g);
                    let o = ncalg::braid_oracle(&t, rs).unwrap();
                    assert_eq!(braided_product(&t, *v).unwrap(), o, "{v}: {f} ⊙ {g}");
                }
            }
        }
    }

    #[test]
    fn translations_match_oracle() {
        for f in monomials(4) {
            let o = ncalg::translate_oracle(&f, &ncalg::plane_pair_left()).unwrap();
            assert_eq!(translate(&f, Variant::L).unwrap(), o, "L {f}");
            assert_eq!(translate(&f, Variant::RBar).unwrap(), o, "Rbar {f}");
            assert_eq!(translate_crossed(&f, Variant::RBar).unwrap(), o, "crossed Rbar {f}");
            let o = ncalg::translate_oracle(&f, &ncalg::plane_pair_left_bar()).unwrap();
            assert_eq!(translate(&f, Variant::LBar).unwrap(), o, "Lbar {f}");
            assert_eq!(translate_crossed(&f, Variant::LBar).unwrap(), o, "crossed Lbar {f}");
            assert_eq!(translate(&f, Variant::R).unwrap(), o, "R {f}");
        }
    }

    #[test]
    fn pairing_table() {
        for n1 in 0..4 {
            for n2 in 0..4 {
                let u = PolyFun::monomial(PARTIAL, vec![n1, n2], QScalar::one());
                for g in monomials(6) {
                    for v in [PairingVariant::LRBar, PairingVariant::LBarR] {
                        assert_eq!(
                            pairing(&u, &g, v).unwrap(),
                            pairing_by_action(&u, &g, v).unwrap(),
                            "{v:?} {u} {g}"
                        );
                    }
                    assert_eq!(
                        pairing(&u, &g, PairingVariant::LBarR).unwrap(),
                        pairing_crossed(&u, &g).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn hopf_identities() {
        for v in Variant::ALL {
            for f in monomials(3) {
                let f0 = PolyFun::constant(PLANE, f.counit().unwrap());
                assert_eq!(antipode_cancel(&f, v, true).unwrap(), f0, "{v} S⊗id {f}");
                assert_eq!(antipode_cancel(&f, v, false).unwrap(), f0, "{v} id⊗S {f}");
                let (a, b) = coassociativity_sides(&f, v).unwrap();
                assert_eq!(a, b, "{v} coassoc {f}");
                for g in monomials(2) {
                    let (a, b) = homomorphism_sides(&f, &g, v).unwrap();
                    assert_eq!(a, b, "{v} hom {f} {g}");
                    let (a, b) = antipode_product_sides(&f, &g, v).unwrap();
                    assert_eq!(a, b, "{v} S(fg) {f} {g}");
                }
            }
        }
    }

    #[test]
    fn exponential_identities() {
        let n = 4;
        for v in [ExpVariant::RLBar, ExpVariant::RBarL] {
            for u in monomials(3) {
                let u = PolyFun::monomial(PARTIAL, u.terms().next().unwrap().0.clone(), QScalar::one());
                assert_eq!(completeness(&u, v, n).unwrap(), u, "{v:?} completeness {u}");
            }
            for i in 0..2 {
                let (a, b) = eigen_sides(i, v, n).unwrap();
                assert_eq!(a, b, "{v:?} eigen {i}");
            }
            for g in monomials(3) {
                let (a, b) = taylor_sides(&g, v, n).unwrap();
                assert_eq!(a, b, "{v:?} taylor {g}");
            }
            let (a, b) = addition_sides(v, n).unwrap();
            assert_eq!(a, b, "{v:?} addition");
            let (a, b) = inverse_exp_sides(v, n).unwrap();
            assert_eq!(a, b, "{v:?} inverse");
        }
    }

    #[test]
    fn exponential_examples() {
        let e0 = qexp(0, ExpVariant::RLBar).unwrap();
        assert_eq!(e0.len(), 1);
        let e = qexp(2, ExpVariant::RLBar).unwrap();
        assert_eq!(e.coeff(&[2, 0, 2, 0]), (QScalar::one() + QScalar::q_pow(-2)).inv().unwrap());
        assert_eq!(qexp_crossed(5).unwrap(), qexp(5, ExpVariant::RBarL).unwrap());
    }

    #[test]
    fn conjugation_reverses_star() {
        let ms = monomials(3);
        for f in &ms {
            for g in &ms {
                let (a, b) = conjugation_sides(f, g).unwrap();
                assert_eq!(a, b, "{f} {g}");
            }
        }
        let c = x([1, 0]).conjugate_fun().unwrap();
        assert_eq!(c, x([0, 1]).scale(&-QScalar::t_pow(-2)));
    }
}
