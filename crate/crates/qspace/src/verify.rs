//! Invariant suites with machine-readable reports.
//!
//! Each suite runs a fixed list of properties. A property records how many
//! cases it checked, the first counterexample, and optional measured values.
//! Timings live in a separate section so the rest of a report is reproducible
//! byte for byte.

use std::fmt::Display;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{QError, Result};
use crate::expr::parse_polyfun;
use crate::manin::{
    addition_sides, antipode_cancel, antipode_product_sides, braided_product, coassociativity_sides,
    completeness, conjugation_sides, eigen_sides, homomorphism_sides, inverse_exp_sides, pairing,
    pairing_by_action, pairing_crossed, qderiv, qderiv_crossed, qexp, qexp_crossed, reorder, taylor_sides,
    translate, translate_crossed, ExpVariant, Ordering, PairingVariant, Variant,
};
use crate::minkowski::{
    self, mink_battery, mink_deriv, mink_deriv_inverse, mink_ordering_reverse, mink_ordering_reverse_terms,
    mink_whole_space_integral, paired_weight, InverseMode, MinkVolumeMode,
};
use crate::ncalg::{self, action_oracle, Side};
use crate::polyfun::{CoordSys, PolyFun, Space, TensorPolyFun};
use crate::qint::{
    self, conj_integral_sides, fundamental_theorem_residuals, periodicity_sides, simplified_parts_sides,
    stokes_integral, whole_space_integral, x0_spread, IntegralParams, LatticeFun, SepFun,
};
use crate::qscalar::{qfact, QScalar};

/// Seed used when `QSPACE_SEED` is unset.
pub const DEFAULT_SEED: u64 = 1_618_033;

/// Reads `QSPACE_SEED`, falling back to [`DEFAULT_SEED`].
pub fn seed_from_env() -> Result<u64> {
    match std::env::var("QSPACE_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| QError::Domain(format!("QSPACE_SEED must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Oracle,
    Pairing,
    Hopf,
    Duality,
    Crossing,
    Jackson,
    Classical,
    Stokes,
    Parts,
    MinkVolume,
    Conjugation,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Oracle,
        Suite::Pairing,
        Suite::Hopf,
        Suite::Duality,
        Suite::Crossing,
        Suite::Jackson,
        Suite::Classical,
        Suite::Stokes,
        Suite::Parts,
        Suite::MinkVolume,
        Suite::Conjugation,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Pairing => "pairing",
            Suite::Hopf => "hopf",
            Suite::Duality => "duality",
            Suite::Crossing => "crossing",
            Suite::Jackson => "jackson",
            Suite::Classical => "classical",
            Suite::Stokes => "stokes",
            Suite::Parts => "parts",
            Suite::MinkVolume => "mink-volume",
            Suite::Conjugation => "conjugation",
        }
    }

    /// Degree bound used when none is given.
    pub fn default_degree(self) -> i32 {
        match self {
            Suite::Oracle | Suite::Pairing => 6,
            Suite::Hopf | Suite::Crossing => 5,
            Suite::Parts => 4,
            Suite::MinkVolume | Suite::Conjugation => 3,
            Suite::Duality | Suite::Jackson | Suite::Classical | Suite::Stokes => 0,
        }
    }
}

/// Resolves a suite name; `all` expands to every suite.
pub fn parse_suites(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::ALL
        .iter()
        .find(|s| s.tag() == name)
        .map(|s| vec![*s])
        .ok_or_else(|| QError::UnknownSuite(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyParams {
    pub integral: IntegralParams,
    /// Truncation degree of exponentials.
    pub n: u32,
    /// Overrides each suite's default degree bound.
    pub degree: Option<i32>,
    pub seed: u64,
    /// Number of random inputs per random sweep.
    pub samples: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { integral: IntegralParams::default(), n: 8, degree: None, seed: DEFAULT_SEED, samples: 20 }
    }
}

impl VerifyParams {
    fn degree(&self, suite: Suite) -> i32 {
        self.degree.unwrap_or_else(|| suite.default_degree())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "q": self.integral.q,
            "K": self.integral.k,
            "tol": self.integral.tol,
            "x0": self.integral.x0,
            "N": self.n,
            "degree": self.degree,
            "seed": self.seed,
            "samples": self.samples,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub counterexample: Option<Value>,
    pub measured: Option<Value>,
    pub millis: f64,
}

impl Property {
    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), json!(self.name));
        m.insert("passed".into(), json!(self.passed));
        m.insert("cases".into(), json!(self.cases));
        if let Some(c) = &self.counterexample {
            m.insert("counterexample".into(), c.clone());
        }
        if let Some(v) = &self.measured {
            m.insert("measured".into(), v.clone());
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub properties: Vec<Property>,
    pub millis: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub params: VerifyParams,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn to_json(&self) -> Value {
        let suites: Vec<Value> = self
            .suites
            .iter()
            .map(|s| {
                json!({
                    "suite": s.suite.tag(),
                    "passed": s.passed(),
                    "properties": s.properties.iter().map(Property::to_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        let mut timing = Map::new();
        for s in &self.suites {
            let props: Map<String, Value> = s.properties.iter().map(|p| (p.name.clone(), json!(p.millis))).collect();
            timing.insert(s.suite.tag().into(), json!({ "total_ms": s.millis, "properties": props }));
        }
        json!({
            "passed": self.passed(),
            "params": self.params.to_json(),
            "suites": suites,
            "timing": timing,
        })
    }

    /// One line per property, for people rather than programs.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            for p in &s.properties {
                let mark = if p.passed { "PASS" } else { "FAIL" };
                out.push_str(&format!("{mark}  {:<12} {:<36} {:>6} cases\n", s.suite.tag(), p.name, p.cases));
            }
        }
        out
    }
}

/// Runs the named suite (or `all`).
pub fn run(name: &str, params: &VerifyParams) -> Result<Report> {
    let suites = parse_suites(name)?;
    Ok(Report { params: *params, suites: suites.into_iter().map(|s| run_suite(s, params)).collect() })
}

pub fn run_suite(suite: Suite, params: &VerifyParams) -> SuiteReport {
    let start = Instant::now();
    let properties = match suite {
        Suite::Oracle => oracle_suite(params),
        Suite::Pairing => pairing_suite(params),
        Suite::Hopf => hopf_suite(params),
        Suite::Duality => duality_suite(params),
        Suite::Crossing => crossing_suite(params),
        Suite::Jackson => jackson_suite(params),
        Suite::Classical => classical_suite(params),
        Suite::Stokes => stokes_suite(params),
        Suite::Parts => parts_suite(params),
        Suite::MinkVolume => mink_suite(params),
        Suite::Conjugation => conjugation_suite(params),
    };
    SuiteReport { suite, properties, millis: elapsed_ms(start) }
}

// ---------------------------------------------------------------------------
// Property bookkeeping

struct Prop {
    cases: usize,
    failed: bool,
    counterexample: Option<Value>,
    measured: Option<Value>,
}

impl Prop {
    fn check(&mut self, ok: bool, counterexample: impl FnOnce() -> Value) {
        self.cases += 1;
        if !ok && !self.failed {
            self.counterexample = Some(counterexample());
        }
        self.failed |= !ok;
    }

    fn equal<T: PartialEq + Display>(&mut self, input: impl FnOnce() -> Value, lhs: &T, rhs: &T) {
        self.check(lhs == rhs, || json!({ "input": input(), "lhs": lhs.to_string(), "rhs": rhs.to_string() }));
    }

    fn close(&mut self, input: impl FnOnce() -> Value, lhs: f64, rhs: f64, bound: f64) {
        let ok = (lhs - rhs).abs() <= bound;
        self.check(ok, || json!({ "input": input(), "lhs": lhs, "rhs": rhs, "bound": bound }));
    }

    fn measure(&mut self, v: Value) {
        self.measured = Some(v);
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn property(name: impl Into<String>, body: impl FnOnce(&mut Prop) -> Result<()>) -> Property {
    let start = Instant::now();
    let mut p = Prop { cases: 0, failed: false, counterexample: None, measured: None };
    if let Err(e) = body(&mut p) {
        p.failed = true;
        p.counterexample.get_or_insert_with(|| json!({ "error": e.to_string() }));
    }
    if p.cases == 0 && !p.failed {
        p.failed = true;
        p.counterexample = Some(json!({ "error": "no cases were checked" }));
    }
    Property {
        name: name.into(),
        passed: !p.failed,
        cases: p.cases,
        counterexample: p.counterexample,
        measured: p.measured,
        millis: elapsed_ms(start),
    }
}

fn s(f: &impl Display) -> Value {
    json!(f.to_string())
}

// ---------------------------------------------------------------------------
// Inputs

/// All monomials of total degree `≤ deg` with coefficient 1.
pub fn monomials(coords: CoordSys, deg: i32) -> Vec<PolyFun> {
    fn fill(dim: usize, left: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            fill(dim, left - e, cur, out);
            cur.pop();
        }
    }
    let mut exps = Vec::new();
    fill(coords.dim(), deg, &mut Vec::new(), &mut exps);
    exps.sort_by_key(|e| (e.iter().sum::<i32>(), e.clone()));
    exps.into_iter().map(|e| PolyFun::monomial(coords, e, QScalar::one())).collect()
}

/// Pairs of monomials whose degrees add up to at most `deg`.
fn monomial_pairs(coords: CoordSys, deg: i32) -> Vec<(PolyFun, PolyFun)> {
    let ms = monomials(coords, deg);
    let mut out = Vec::new();
    for f in &ms {
        for g in &ms {
            if f.total_degree().unwrap_or(0) + g.total_degree().unwrap_or(0) <= deg {
                out.push((f.clone(), g.clone()));
            }
        }
    }
    out
}

/// A random polynomial with small integer coefficients times powers of `q`.
pub fn random_polyfun(rng: &mut impl Rng, coords: CoordSys, max_deg: i32, max_terms: usize) -> PolyFun {
    let mut f = PolyFun::zero(coords);
    for _ in 0..rng.gen_range(1..=max_terms) {
        let mut e = vec![0; coords.dim()];
        for _ in 0..rng.gen_range(0..=max_deg) {
            e[rng.gen_range(0..coords.dim())] += 1;
        }
        let mut c = rng.gen_range(-3i64..=3);
        if c == 0 {
            c = 1;
        }
        f.add_term(e, QScalar::int(c).mul_t_pow(4 * rng.gen_range(-2..=2)));
    }
    f
}

fn plane_systems() -> [(Variant, ncalg::RewriteSystem, Side); 4] {
    [
        (Variant::L, ncalg::plane_left(), Side::Left),
        (Variant::LBar, ncalg::plane_left_bar(), Side::Left),
        (Variant::RBar, ncalg::plane_right_bar(), Side::Right),
        (Variant::R, ncalg::plane_right(), Side::Right),
    ]
}

fn plane(text: &str) -> PolyFun {
    parse_polyfun(text, CoordSys::PLANE).expect("built-in expression")
}

// ---------------------------------------------------------------------------
// Suites

fn oracle_suite(vp: &VerifyParams) -> Vec<Property> {
    let deg = vp.degree(Suite::Oracle);
    let mons = monomials(CoordSys::PLANE, deg);
    let mut out = Vec::new();
    for (v, rs, side) in plane_systems() {
        out.push(property(format!("derivative-{v}"), |p| {
            for f in &mons {
                for i in 0..2 {
                    let o = action_oracle(&[i], f, side, &rs)?;
                    let input = || json!({ "f": s(f), "i": i + 1, "form": "closed" });
                    p.equal(input, &qderiv(f, i, v)?, &o);
                    let input = || json!({ "f": s(f), "i": i + 1, "form": "crossed" });
                    p.equal(input, &qderiv_crossed(f, i, v)?, &o);
                }
            }
            Ok(())
        }));
    }
    let pairs = monomial_pairs(CoordSys::PLANE, deg);
    for (v, rs) in [(Variant::L, ncalg::plane_pair_left()), (Variant::LBar, ncalg::plane_pair_left_bar())] {
        out.push(property(format!("braided-product-{v}"), |p| {
            for (f, g) in &pairs {
                let t = TensorPolyFun::product(f, g);
                p.equal(|| json!({ "f": s(f), "g": s(g) }), &braided_product(&t, v)?, &ncalg::braid_oracle(&t, &rs)?);
            }
            Ok(())
        }));
        out.push(property(format!("translation-{v}"), |p| {
            for f in &mons {
                p.equal(|| json!({ "f": s(f) }), &translate(f, v)?, &ncalg::translate_oracle(f, &rs)?);
            }
            Ok(())
        }));
    }
    out
}

fn pairing_suite(vp: &VerifyParams) -> Vec<Property> {
    let d = vp.degree(Suite::Pairing);
    let table = |variant: PairingVariant, a: i32, ordering: Ordering| {
        property(
            match variant {
                PairingVariant::LRBar => "table-L-Rbar",
                PairingVariant::LBarR => "table-Lbar-R",
            },
            |p| {
                for n1 in 0..=d {
                    for n2 in 0..=d {
                        let u = PolyFun::monomial(CoordSys::PLANE_PARTIAL, vec![n1, n2], QScalar::one());
                        let full = qfact(n1 as u32, a) * qfact(n2 as u32, a);
                        for m1 in 0..=d {
                            for m2 in 0..=d {
                                let x = PolyFun::monomial(CoordSys::PLANE, vec![m1, m2], QScalar::one());
                                let g = reorder(&x, ordering, Ordering::Standard);
                                let expected = if (n1, n2) == (m1, m2) { full.clone() } else { QScalar::zero() };
                                let input = || json!({ "n": [n1, n2], "m": [m1, m2], "route": "action" });
                                p.equal(input, &pairing_by_action(&u, &g, variant)?, &expected);
                                let input = || json!({ "n": [n1, n2], "m": [m1, m2], "route": "table" });
                                p.equal(input, &pairing(&u, &g, variant)?, &expected);
                            }
                        }
                    }
                }
                Ok(())
            },
        )
    };
    vec![table(PairingVariant::LRBar, 2, Ordering::Reversed), table(PairingVariant::LBarR, -2, Ordering::Standard)]
}

/// `((id⊗ε)Δf, (ε⊗id)Δf)`.
fn counit_sides(t: &TensorPolyFun) -> (PolyFun, PolyFun) {
    let cs = t.slots()[0];
    let mut left = PolyFun::zero(cs);
    let mut right = PolyFun::zero(cs);
    for (c, b) in t.decompose() {
        if b[1].iter().all(|&e| e == 0) {
            left.add_term(b[0].clone(), c.clone());
        }
        if b[0].iter().all(|&e| e == 0) {
            right.add_term(b[1].clone(), c);
        }
    }
    (left, right)
}

fn hopf_suite(vp: &VerifyParams) -> Vec<Property> {
    let deg = vp.degree(Suite::Hopf);
    let mons = monomials(CoordSys::PLANE, deg);
    let pairs = monomial_pairs(CoordSys::PLANE, deg);
    let mut out = Vec::new();
    for v in Variant::ALL {
        out.push(property(format!("counit-{v}"), |p| {
            for f in &mons {
                let (l, r) = counit_sides(&translate(f, v)?);
                p.equal(|| json!({ "f": s(f), "side": "id⊗ε" }), &l, f);
                p.equal(|| json!({ "f": s(f), "side": "ε⊗id" }), &r, f);
            }
            Ok(())
        }));
        out.push(property(format!("antipode-cancel-{v}"), |p| {
            for f in &mons {
                let f0 = PolyFun::constant(CoordSys::PLANE, f.counit()?);
                p.equal(|| json!({ "f": s(f), "side": "S⊗id" }), &antipode_cancel(f, v, true)?, &f0);
                p.equal(|| json!({ "f": s(f), "side": "id⊗S" }), &antipode_cancel(f, v, false)?, &f0);
            }
            Ok(())
        }));
        out.push(property(format!("coassociativity-{v}"), |p| {
            for f in &mons {
                let (a, b) = coassociativity_sides(f, v)?;
                p.equal(|| json!({ "f": s(f) }), &a, &b);
            }
            Ok(())
        }));
        out.push(property(format!("homomorphism-{v}"), |p| {
            for (f, g) in &pairs {
                let (a, b) = homomorphism_sides(f, g, v)?;
                p.equal(|| json!({ "f": s(f), "g": s(g) }), &a, &b);
            }
            Ok(())
        }));
        out.push(property(format!("antipode-product-{v}"), |p| {
            for (f, g) in &pairs {
                let (a, b) = antipode_product_sides(f, g, v)?;
                p.equal(|| json!({ "f": s(f), "g": s(g) }), &a, &b);
            }
            Ok(())
        }));
    }
    out.push(property("random-sums", |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(vp.seed);
        let half = (deg / 2).max(1);
        for _ in 0..vp.samples {
            let f = random_polyfun(&mut rng, CoordSys::PLANE, half, 3);
            let g = random_polyfun(&mut rng, CoordSys::PLANE, deg - half, 3);
            let v = Variant::ALL[rng.gen_range(0..4)];
            let input = || json!({ "f": s(&f), "g": s(&g), "variant": v.tag() });
            let (a, b) = homomorphism_sides(&f, &g, v)?;
            p.equal(input, &a, &b);
            let (a, b) = antipode_product_sides(&f, &g, v)?;
            p.equal(input, &a, &b);
            let f0 = PolyFun::constant(CoordSys::PLANE, f.counit()?);
            p.equal(input, &antipode_cancel(&f, v, true)?, &f0);
        }
        Ok(())
    }));
    out
}

fn duality_suite(vp: &VerifyParams) -> Vec<Property> {
    let n = vp.n;
    let mut out = Vec::new();
    for v in [ExpVariant::RLBar, ExpVariant::RBarL] {
        let tag = match v {
            ExpVariant::RLBar => "R-Lbar",
            ExpVariant::RBarL => "Rbar-L",
        };
        out.push(property(format!("completeness-{tag}"), |p| {
            for u in monomials(CoordSys::PLANE_PARTIAL, n as i32) {
                p.equal(|| json!({ "u": s(&u) }), &completeness(&u, v, n)?, &u);
            }
            Ok(())
        }));
        out.push(property(format!("eigen-{tag}"), |p| {
            for i in 0..2 {
                let (a, b) = eigen_sides(i, v, n)?;
                p.equal(|| json!({ "i": i + 1, "degree": n - 1 }), &a, &b);
            }
            Ok(())
        }));
        out.push(property(format!("taylor-{tag}"), |p| {
            for g in monomials(CoordSys::PLANE, n as i32) {
                let (a, b) = taylor_sides(&g, v, n)?;
                p.equal(|| json!({ "g": s(&g) }), &a, &b);
            }
            Ok(())
        }));
        out.push(property(format!("addition-{tag}"), |p| {
            let (a, b) = addition_sides(v, n)?;
            p.equal(|| json!({ "N": n }), &a, &b);
            Ok(())
        }));
        out.push(property(format!("inverse-exponential-{tag}"), |p| {
            let (a, b) = inverse_exp_sides(v, n)?;
            p.equal(|| json!({ "N": n }), &a, &b);
            Ok(())
        }));
    }
    out
}

fn crossing_suite(vp: &VerifyParams) -> Vec<Property> {
    let deg = vp.degree(Suite::Crossing);
    let mons = monomials(CoordSys::PLANE, deg);
    vec![
        property("derivatives", |p| {
            for v in [Variant::LBar, Variant::R, Variant::RBar] {
                for f in &mons {
                    for i in 0..2 {
                        let input = || json!({ "f": s(f), "i": i + 1, "variant": v.tag() });
                        p.equal(input, &qderiv_crossed(f, i, v)?, &qderiv(f, i, v)?);
                    }
                }
            }
            Ok(())
        }),
        property("translations", |p| {
            for v in [Variant::LBar, Variant::RBar] {
                for f in &mons {
                    p.equal(|| json!({ "f": s(f), "variant": v.tag() }), &translate_crossed(f, v)?, &translate(f, v)?);
                }
            }
            Ok(())
        }),
        property("braided-products", |p| {
            // ⊙_L̄ is generated from ⊙_L by crossing; the rewriting engine is independent.
            let rs = ncalg::plane_pair_left_bar();
            for (f, g) in monomial_pairs(CoordSys::PLANE, deg) {
                let t = TensorPolyFun::product(&f, &g);
                let input = || json!({ "f": s(&f), "g": s(&g) });
                p.equal(input, &braided_product(&t, Variant::LBar)?, &ncalg::braid_oracle(&t, &rs)?);
            }
            Ok(())
        }),
        property("pairings", |p| {
            for u in monomials(CoordSys::PLANE_PARTIAL, deg) {
                for g in &mons {
                    let input = || json!({ "u": s(&u), "g": s(g) });
                    p.equal(input, &pairing_crossed(&u, g)?, &pairing(&u, g, PairingVariant::LBarR)?);
                }
            }
            Ok(())
        }),
        property("exponentials", |p| {
            for n in 0..=vp.n {
                p.equal(|| json!({ "N": n }), &qexp_crossed(n)?, &qexp(n, ExpVariant::RBarL)?);
            }
            Ok(())
        }),
    ]
}

fn gaussian_set() -> Vec<(&'static str, LatticeFun)> {
    vec![
        ("exp(-x^2)", LatticeFun::new(1, true, |x| (-x[0] * x[0]).exp())),
        ("x*exp(-x^2)", LatticeFun::new(1, true, |x| x[0] * (-x[0] * x[0]).exp())),
        ("exp(-2(x-0.5)^2)", LatticeFun::new(1, true, |x| (-(x[0] - 0.5).powi(2) * 2.0).exp())),
        ("(1+x)exp(-x^2)", LatticeFun::new(1, true, |x| (1.0 + x[0]) * (-x[0] * x[0]).exp())),
    ]
}

fn jackson_suite(vp: &VerifyParams) -> Vec<Property> {
    let params = vp.integral;
    let points = [-1.7, -0.4, 0.3, 1.2, 2.2];
    vec![
        property("fundamental-theorem", |p| {
            let mut worst: f64 = 0.0;
            for (name, f) in gaussian_set() {
                for a in [2, -2] {
                    let (r1, r2) = fundamental_theorem_residuals(&f, a, &points, &params)?;
                    worst = worst.max(r1).max(r2);
                    p.close(|| json!({ "f": name, "a": a, "composition": "D D^-1" }), r1, 0.0, params.tol);
                    p.close(|| json!({ "f": name, "a": a, "composition": "D^-1 D" }), r2, 0.0, params.tol);
                }
            }
            p.measure(json!({ "max_residual": worst }));
            Ok(())
        }),
        property("periodicity", |p| {
            for (name, f) in gaussian_set() {
                for (a, c) in [(2, 2), (2, -4), (1, 3), (-2, 2)] {
                    let (l, r) = periodicity_sides(&f, a, c, &params)?;
                    p.close(|| json!({ "f": name, "a": a, "c": c }), l, r, 1e-12 * r.abs().max(1.0));
                }
            }
            Ok(())
        }),
        property("reference-point-spread", |p| {
            let (name, f) = &gaussian_set()[0];
            let vals = x0_spread(f, 2, 8, &params)?;
            let lo = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            let hi = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            p.measure(json!({ "spread": hi - lo }));
            p.close(|| json!({ "f": name, "a": 2 }), hi, lo, 1e-8);
            Ok(())
        }),
    ]
}

/// Plane Gaussian integrals used for the classical limit: `(q, value)`.
pub fn classical_gaussian_values(qs: &[f64], k: u32) -> Result<Vec<(f64, f64)>> {
    qs.iter()
        .map(|&q| {
            let params = IntegralParams::new(q, k, 1e-10)?;
            Ok((q, whole_space_integral(Space::Plane, &SepFun::gaussian(2), &params)?.value))
        })
        .collect()
}

fn classical_suite(_vp: &VerifyParams) -> Vec<Property> {
    let pi = std::f64::consts::PI;
    let values = classical_gaussian_values(&[1.05, 1.02, 1.01], 2000);
    let measured = |vals: &[(f64, f64)]| {
        json!(vals
            .iter()
            .map(|(q, v)| json!({ "q": q, "value": v, "relative_deviation": (v.abs() / pi - 1.0) }))
            .collect::<Vec<_>>())
    };
    vec![
        property("modulus-within-2pct-of-pi", |p| {
            let vals = values.clone()?;
            let (q, v) = vals[2];
            p.measure(measured(&vals));
            p.close(|| json!({ "q": q, "K": 2000, "sign": v.signum() }), v.abs(), pi, 0.02 * pi);
            Ok(())
        }),
        property("monotone-approach", |p| {
            let vals = values.clone()?;
            for w in vals.windows(2) {
                let (a, b) = ((w[0].1.abs() - pi).abs(), (w[1].1.abs() - pi).abs());
                p.check(b < a, || json!({ "q": [w[0].0, w[1].0], "deviation": [a, b] }));
            }
            Ok(())
        }),
    ]
}

fn stokes_functions() -> Vec<(&'static str, LatticeFun)> {
    vec![
        ("(1+x1 x2)exp(-x1^2-2x2^2)", LatticeFun::new(2, true, |x| (1.0 + x[0] * x[1]) * (-x[0] * x[0] - 2.0 * x[1] * x[1]).exp())),
        ("exp(-(x1-0.3)^2-(x2+0.2)^2)", LatticeFun::new(2, true, |x| (-(x[0] - 0.3).powi(2) - (x[1] + 0.2).powi(2)).exp())),
        ("x1^2 x2 exp(-x1^2-x2^2)", LatticeFun::new(2, true, |x| x[0] * x[0] * x[1] * (-x[0] * x[0] - x[1] * x[1]).exp())),
        ("exp(-x1^4-x2^2)", LatticeFun::new(2, true, |x| (-x[0].powi(4) - x[1] * x[1]).exp())),
        ("(x1-2x2)exp(-x1^2/2-3x2^2/2)", LatticeFun::new(2, true, |x| (x[0] - 2.0 * x[1]) * (-0.5 * x[0] * x[0] - 1.5 * x[1] * x[1]).exp())),
    ]
}

fn stokes_suite(vp: &VerifyParams) -> Vec<Property> {
    let params = vp.integral;
    vec![property("total-derivative-integrates-to-zero", |p| {
        let mut worst: f64 = 0.0;
        for (name, f) in stokes_functions() {
            for i in 0..2 {
                let v = stokes_integral(&f, i, &params)?.value;
                let d = qint::numeric_operator_apply(&f, &qint::plane_partial_ops(i, params.q), &params)?;
                let abs = LatticeFun::new(2, true, move |x| d.value(x).map(f64::abs).unwrap_or(f64::NAN));
                let scale = whole_space_integral(Space::Plane, &abs, &params)?.value.abs();
                worst = worst.max(v.abs() / scale);
                p.close(|| json!({ "f": name, "i": i + 1, "scale": scale }), v, 0.0, 1e-8 * scale);
            }
        }
        p.measure(json!({ "max_relative": worst }));
        Ok(())
    })]
}

fn parts_suite(vp: &VerifyParams) -> Vec<Property> {
    let deg = vp.degree(Suite::Parts);
    let params = vp.integral;
    let cases = [("x1", "1 + x1*x2 + x2^2", 1, 1), ("x1*x2", "x1", 0, 2), ("x1^2*x2", "x1*x2", 1, 3)];
    let sides = || -> Result<Vec<(f64, f64)>> {
        cases
            .iter()
            .map(|&(f, g, i, _)| {
                let (l, r) = simplified_parts_sides(&plane(f), &plane(g), i, Variant::RBar, &params)?;
                Ok((l.value, r.value))
            })
            .collect()
    };
    let sides = sides();
    vec![
        property("by-parts-formal-interval", |p| {
            let rs = ncalg::plane_left();
            let mons = monomials(CoordSys::PLANE, deg);
            for f in &mons {
                for g in &mons {
                    for i in 0..2 {
                        let (l, r) = qint::parts_sides(f, g, i, &rs)?;
                        p.equal(|| json!({ "f": s(f), "g": s(g), "i": i + 1 }), &l, &r);
                    }
                }
            }
            Ok(())
        }),
        property("simplified-by-parts-literal", |p| {
            let sides = sides.clone()?;
            for (&(f, g, i, _), &(l, r)) in cases.iter().zip(&sides) {
                p.close(|| json!({ "f": f, "g": g, "i": i + 1, "ratio": l / r }), l, r, 1e-8 * r.abs());
            }
            Ok(())
        }),
        property("simplified-by-parts-degree-scaling", |p| {
            let sides = sides.clone()?;
            let mut ratios = Vec::new();
            for (&(f, g, i, d), &(l, r)) in cases.iter().zip(&sides) {
                let expected = params.q.powi(-(2 * d + 1));
                ratios.push(json!({ "f": f, "ratio": l / r, "log_q_ratio": (l / r).ln() / params.q.ln() }));
                p.close(|| json!({ "f": f, "g": g, "i": i + 1 }), l / r, expected, 1e-8);
            }
            p.measure(json!(ratios));
            Ok(())
        }),
    ]
}

fn mink_suite(vp: &VerifyParams) -> Vec<Property> {
    let params = vp.integral;
    let deg = vp.degree(Suite::MinkVolume);
    let mcs = CoordSys::MINKOWSKI;
    let battery = mink_battery();
    let volumes = || -> Result<Vec<(String, f64, f64, f64)>> {
        battery
            .iter()
            .map(|(name, f)| {
                let c = mink_whole_space_integral(f, MinkVolumeMode::ClosedForm, 8, &params)?.value.value;
                let m = mink_whole_space_integral(f, MinkVolumeMode::MainText, 8, &params)?.value.value;
                let n = mink_whole_space_integral(f, MinkVolumeMode::NestedSeries, 8, &params)?.value.value;
                Ok((name.clone(), c, m, n))
            })
            .collect()
    };
    let volumes = volumes();
    let mons = monomials(mcs, deg);
    vec![
        property("closed-form-vs-nested-series", |p| {
            let vols = volumes.clone()?;
            let mut ratios = Vec::new();
            for (name, c, _, n) in &vols {
                ratios.push(json!({ "f": name, "nested_over_closed": n / c }));
                p.close(|| json!({ "f": name, "closed_form": c, "nested_series": n }), *n, *c, 1e-6 * c.abs());
            }
            p.measure(json!(ratios));
            Ok(())
        }),
        property("main-text-vs-closed-form-constant", |p| {
            let vols = volumes.clone()?;
            let r0 = vols[0].2 / vols[0].1;
            for (name, c, m, _) in &vols {
                p.close(|| json!({ "f": name, "closed_form": c, "main_text": m }), m / c, r0, 1e-9 * r0.abs());
            }
            p.measure(json!({ "ratio": r0, "log_q_ratio": r0.ln() / params.q.ln() }));
            Ok(())
        }),
        property("inverse-round-trip", |p| {
            let mut rng = ChaCha8Rng::seed_from_u64(vp.seed);
            let mut inputs = mons.clone();
            inputs.extend((0..vp.samples).map(|_| random_polyfun(&mut rng, mcs, deg, 4)));
            for f in &inputs {
                for d in minkowski::Direction::ALL {
                    let inv = mink_deriv_inverse(f, d, InverseMode::Resummed)?;
                    p.equal(|| json!({ "f": s(f), "direction": d.tag() }), &mink_deriv(&inv.value, d)?, f);
                }
            }
            Ok(())
        }),
        property("inverse-series-terminates", |p| {
            let mut stuck = Map::new();
            for d in minkowski::Direction::ALL {
                let mut count = 0;
                for f in &mons {
                    let ok = match mink_deriv_inverse(f, d, InverseMode::Series) {
                        Ok(inv) => mink_deriv(&inv.value, d)? == *f,
                        Err(QError::NonTermination(_)) => false,
                        Err(e) => return Err(e),
                    };
                    count += usize::from(!ok);
                    p.check(ok, || json!({ "f": s(f), "direction": d.tag() }));
                }
                stuck.insert(d.tag().into(), json!(count));
            }
            p.measure(json!({ "nonterminating": stuck, "inputs_per_direction": mons.len() }));
            Ok(())
        }),
        property("whole-line-boundary-identities", |p| {
            for (c, w) in [(0.0, 1.0), (0.4, 0.6), (-0.7, 2.0)] {
                let f = LatticeFun::new(1, true, move |x| (-(x[0] - c).powi(2) / w).exp());
                for a in [2, -2] {
                    for r in minkowski::derivative_of_whole_line(&f, a, &[0.3, 1.0, 2.7], &params)? {
                        p.close(|| json!({ "center": c, "width": w, "a": a, "identity": "D of integral" }), r, 0.0, 1e-10);
                    }
                    for r in minkowski::whole_line_of_derivatives(&f, a, 2, &params)? {
                        p.close(|| json!({ "center": c, "width": w, "a": a, "identity": "integral of D^n" }), r, 0.0, 1e-10);
                    }
                }
            }
            Ok(())
        }),
        property("ordering-reverse-termination", |p| {
            for f in monomials(mcs, deg + 1) {
                let e = f.terms().next().map(|(e, _)| e.clone()).unwrap_or_default();
                let bound = e[minkowski::XP].min(e[minkowski::XM]) as u32;
                let top = mink_ordering_reverse_terms(&f)?.iter().map(|t| t.i).max().unwrap_or(0);
                p.check(top == bound, || json!({ "f": s(&f), "levels": top, "bound": bound }));
            }
            Ok(())
        }),
        property("ordering-reverse-fixed-points", |p| {
            for f in monomials(mcs, deg + 1) {
                let e = f.terms().next().map(|(e, _)| e.clone()).unwrap_or_default();
                let (np, n3, nm) = (e[minkowski::XP], e[minkowski::X30], e[minkowski::XM]);
                let reversed = mink_ordering_reverse(&f)?;
                if np * nm == 0 && (np + nm) * n3 == 0 {
                    p.equal(|| json!({ "f": s(&f) }), &reversed, &f);
                }
                let lead: Vec<_> = mink_ordering_reverse_terms(&f)?.into_iter().filter(|t| t.i == 0).collect();
                p.check(lead.len() == 1 && lead[0].value == paired_weight(&f)?, || json!({ "f": s(&f), "check": "leading term" }));
            }
            Ok(())
        }),
    ]
}

fn conjugation_suite(vp: &VerifyParams) -> Vec<Property> {
    let deg = vp.degree(Suite::Conjugation);
    let params = vp.integral;
    vec![
        property("star-reversal", |p| {
            for (f, g) in monomial_pairs(CoordSys::PLANE, 2 * deg) {
                if f.total_degree() > Some(deg) || g.total_degree() > Some(deg) {
                    continue;
                }
                let (a, b) = conjugation_sides(&f, &g)?;
                p.equal(|| json!({ "f": s(&f), "g": s(&g) }), &a, &b);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(vp.seed ^ 0xC0);
            for _ in 0..vp.samples {
                let f = random_polyfun(&mut rng, CoordSys::PLANE, deg, 3);
                let g = random_polyfun(&mut rng, CoordSys::PLANE, deg, 3);
                let (a, b) = conjugation_sides(&f, &g)?;
                p.equal(|| json!({ "f": s(&f), "g": s(&g) }), &a, &b);
            }
            Ok(())
        }),
        property("hatted-is-q3-times-unhatted", |p| {
            let q3 = QScalar::q_pow(3);
            let defects = ncalg::proportionality_defects(&ncalg::plane_right_leib(), &ncalg::plane_left(), &q3)?;
            p.check(defects.is_empty(), || json!({ "factor": "q^3", "defects": defects }));
            Ok(())
        }),
        property("conjugate-integral", |p| {
            for text in ["1", "1 + x1 + 2*x1*x2^2", "x1^2 + x2^2", "3 - x1*x2 + x2^2", "2 + x1^3 + x1^2*x2^2"] {
                let f = LatticeFun::poly_gaussian(&plane(text), params.q)?;
                let (l, r) = conj_integral_sides(&f, &params)?;
                p.close(|| json!({ "f": format!("({text})exp(-|x|^2)") }), l.value, r.value, 1e-8 * l.value.abs());
            }
            Ok(())
        }),
    ]
}

/// The battery used by `mink-volume`, exposed for callers that report per-function values.
pub fn mink_volume_table(params: &IntegralParams) -> Result<Vec<(String, [f64; 3])>> {
    mink_battery()
        .iter()
        .map(|(name, f)| {
            let v = |mode| -> Result<f64> { Ok(mink_whole_space_integral(f, mode, 8, params)?.value.value) };
            Ok((
                name.clone(),
                [v(MinkVolumeMode::ClosedForm)?, v(MinkVolumeMode::MainText)?, v(MinkVolumeMode::NestedSeries)?],
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyParams {
        VerifyParams { degree: Some(2), samples: 4, n: 3, ..VerifyParams::default() }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(parse_suites(s.tag()).unwrap(), vec![s]);
        }
        assert_eq!(parse_suites("all").unwrap().len(), 11);
        assert!(matches!(parse_suites("nope"), Err(QError::UnknownSuite(_))));
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials(CoordSys::PLANE, 3).len(), 10);
        assert_eq!(monomials(CoordSys::MINKOWSKI, 2).len(), 15);
    }

    #[test]
    fn small_algebraic_suites_pass() {
        for s in [Suite::Oracle, Suite::Pairing, Suite::Hopf, Suite::Duality, Suite::Crossing, Suite::Conjugation] {
            let r = run_suite(s, &quick());
            assert!(r.passed(), "{}", Report { params: quick(), suites: vec![r.clone()] }.table());
        }
    }

    #[test]
    fn report_is_deterministic_outside_timing() {
        let strip = |mut v: Value| {
            v.as_object_mut().unwrap().remove("timing");
            v.to_string()
        };
        let a = run("hopf", &quick()).unwrap().to_json();
        let b = run("hopf", &quick()).unwrap().to_json();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn failures_carry_counterexamples() {
        let p = property("demo", |p| {
            p.close(|| json!("x"), 1.0, 2.0, 0.1);
            Ok(())
        });
        assert!(!p.passed);
        assert_eq!(p.counterexample.unwrap()["lhs"], json!(1.0));
        let e = property("err", |_| Err(QError::Numeric("boom".into())));
        assert!(!e.passed && e.counterexample.unwrap()["error"].as_str().unwrap().contains("boom"));
    }
}
