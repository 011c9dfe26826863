//! Normal ordering of noncommutative polynomials by pairwise rewriting.
//!
//! A [`RewriteSystem`] lists its generators in normal order and carries one
//! replacement rule for every out-of-order adjacent pair. Rules are written in
//! the same text grammar as functions, with generator labels as noncommuting
//! atoms. Every rule must lower the degree-lexicographic rank of the word it
//! replaces, which makes rewriting terminate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{QError, Result};
use crate::polyfun::{CoordSys, PolyFun, Space, TensorPolyFun};
use crate::qscalar::QScalar;

/// Kind of a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenKind {
    Coordinate,
    Partial,
    HattedPartial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub label: String,
    pub kind: GenKind,
    /// Tensor slot for coordinates, `None` for derivatives.
    pub slot: Option<usize>,
    /// Coordinate or derivative index (0-based).
    pub index: usize,
}

pub type Word = Vec<u8>;

/// Linear combination of generator words.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct NCPoly {
    terms: BTreeMap<Word, QScalar>,
}

impl NCPoly {
    pub fn zero() -> Self {
        NCPoly::default()
    }

    pub fn one() -> Self {
        Self::word(Vec::new(), QScalar::one())
    }

    pub fn word(w: Word, c: QScalar) -> Self {
        let mut p = Self::zero();
        p.add_term(w, c);
        p
    }

    pub fn add_term(&mut self, w: Word, c: QScalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &NCPoly, c: &QScalar) {
        for (w, k) in &other.terms {
            self.add_term(w.clone(), k * c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &QScalar)> {
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

    pub fn scale(&self, c: &QScalar) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &QScalar::one());
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &-QScalar::one());
        out
    }

    /// Noncommutative product (word concatenation).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(w, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Keep the terms whose words satisfy `keep`.
    pub fn filter(&self, keep: impl Fn(&Word) -> bool) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            if keep(w) {
                out.add_term(w.clone(), c.clone());
            }
        }
        out
    }

    pub fn render(&self, rs: &RewriteSystem) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let labels: Vec<&str> = w.iter().map(|&g| rs.gens[g as usize].label.as_str()).collect();
                let word = labels.join("*");
                match (c.is_one(), word.is_empty()) {
                    (true, true) => "1".to_string(),
                    (true, false) => word,
                    (false, true) => format!("({c})"),
                    (false, false) => format!("({c})*{word}"),
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Debug for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter().map(|(w, c)| (w, c.to_string()))).finish()
    }
}

/// Generators, normal order and rewriting rules of one algebra.
pub struct RewriteSystem {
    name: String,
    space: Space,
    gens: Vec<Generator>,
    rules: HashMap<(u8, u8), NCPoly>,
    slot_coords: Vec<CoordSys>,
    cache: Mutex<HashMap<Word, Arc<NCPoly>>>,
}

impl fmt::Debug for RewriteSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RewriteSystem({})", self.name)
    }
}

/// Which algebra isomorphism maps functions to words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordOrder {
    /// Generators in the system's normal order.
    Normal,
    /// Generators in the opposite order.
    Reversed,
}

impl RewriteSystem {
    /// Start a system whose generators are given in normal order.
    fn build(name: &str, space: Space, gens: Vec<Generator>, slot_coords: Vec<CoordSys>) -> Self {
        RewriteSystem {
            name: name.to_string(),
            space,
            gens,
            rules: HashMap::new(),
            slot_coords,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn slot_coords(&self) -> &[CoordSys] {
        &self.slot_coords
    }

    pub fn gen_id(&self, label: &str) -> Result<u8> {
        self.gens
            .iter()
            .position(|g| g.label == label)
            .map(|i| i as u8)
            .ok_or_else(|| QError::Domain(format!("no generator `{label}` in {}", self.name)))
    }

    /// Generator for coordinate `i` of tensor slot `slot`.
    pub fn coord_gen(&self, slot: usize, i: usize) -> u8 {
        self.gens
            .iter()
            .position(|g| g.kind == GenKind::Coordinate && g.slot == Some(slot) && g.index == i)
            .expect("coordinate generator") as u8
    }

    /// Generator for the derivative with index `i`, if present.
    pub fn partial_gen(&self, i: usize) -> Option<u8> {
        self.gens
            .iter()
            .position(|g| g.kind != GenKind::Coordinate && g.index == i)
            .map(|p| p as u8)
    }

    pub fn has_partials(&self) -> bool {
        self.gens.iter().any(|g| g.kind != GenKind::Coordinate)
    }

    fn is_partial(&self, g: u8) -> bool {
        self.gens[g as usize].kind != GenKind::Coordinate
    }

    pub fn rule(&self, a: u8, b: u8) -> Option<&NCPoly> {
        self.rules.get(&(a, b))
    }

    fn add_rule(&mut self, lhs: &str, rhs: &str) {
        let l = self.parse(lhs).expect("rule lhs");
        let (w, c) = l.terms().next().expect("nonempty lhs");
        assert!(c.is_one() && w.len() == 2 && w[0] > w[1], "rule lhs must be a descent: {lhs}");
        let r = self.parse(rhs).expect("rule rhs");
        let key = (w[0], w[1]);
        assert!(!self.rules.contains_key(&key), "duplicate rule {lhs}");
        self.rules.insert(key, r);
    }

    /// Parse a noncommutative expression over this system's generator labels.
    pub fn parse(&self, text: &str) -> Result<NCPoly> {
        let mut p = NcParser { src: text, pos: 0, rs: self };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(QError::Syntax { offset: p.pos, msg: "trailing input".into() });
        }
        Ok(v)
    }

    /// True when `w` has no adjacent descent.
    pub fn is_normal(&self, w: &[u8]) -> bool {
        w.windows(2).all(|p| p[0] <= p[1])
    }

    /// Every rule replaces a word by strictly smaller words in degree-lexicographic order.
    pub fn check_measure(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (&(a, b), rhs) in &self.rules {
            let lhs = vec![a, b];
            for (w, _) in rhs.terms() {
                let smaller = w.len() < 2 || (w.len() == 2 && w < &lhs);
                if !smaller {
                    bad.push(format!("{}: {:?} -> {:?}", self.name, lhs, w));
                }
            }
        }
        bad
    }

    /// Every out-of-order pair has a rule.
    pub fn check_complete(&self) -> Vec<String> {
        let n = self.gens.len() as u8;
        let mut missing = Vec::new();
        for a in 0..n {
            for b in 0..a {
                if !self.rules.contains_key(&(a, b)) {
                    missing.push(format!("{}{}", self.gens[a as usize].label, self.gens[b as usize].label));
                }
            }
        }
        missing
    }

    fn nf_word(&self, w: &[u8]) -> Arc<NCPoly> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(w) {
            return hit.clone();
        }
        let result = match w.windows(2).position(|p| p[0] > p[1]) {
            None => NCPoly::word(w.to_vec(), QScalar::one()),
            Some(i) => self.rewrite_at(w, i, |v| self.nf_word(v)),
        };
        let result = Arc::new(result);
        self.cache.lock().expect("cache lock").insert(w.to_vec(), result.clone());
        result
    }

    fn rewrite_at(&self, w: &[u8], i: usize, next: impl Fn(&[u8]) -> Arc<NCPoly>) -> NCPoly {
        let rhs = self.rules.get(&(w[i], w[i + 1])).unwrap_or_else(|| {
            panic!("{}: no rule for ({}, {})", self.name, self.gens[w[i] as usize].label, self.gens[w[i + 1] as usize].label)
        });
        let mut out = NCPoly::zero();
        for (r, c) in rhs.terms() {
            let mut v = w[..i].to_vec();
            v.extend_from_slice(r);
            v.extend_from_slice(&w[i + 2..]);
            out.add_scaled(&next(&v), c);
        }
        out
    }

    /// Rewrite to the unique normal form.
    pub fn normal_order(&self, p: &NCPoly) -> NCPoly {
        let mut out = NCPoly::zero();
        for (w, c) in p.terms() {
            out.add_scaled(&self.nf_word(w), c);
        }
        out
    }

    /// Rewrite every length-3 word starting from each of its descents and
    /// report words whose results differ.
    pub fn check_confluence(&self) -> Vec<String> {
        let n = self.gens.len() as u8;
        let mut bad = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let w = [a, b, c];
                    let descents: Vec<usize> = (0..2).filter(|&i| w[i] > w[i + 1]).collect();
                    if descents.len() < 2 {
                        continue;
                    }
                    let r0 = self.rewrite_at(&w, 0, |v| self.nf_word(v));
                    let r1 = self.rewrite_at(&w, 1, |v| self.nf_word(v));
                    if r0 != r1 {
                        bad.push(format!("{}: {}", self.name, NCPoly::word(w.to_vec(), QScalar::one()).render(self)));
                    }
                }
            }
        }
        bad
    }

    /// `W(f)` for a function living in tensor slot `slot`.
    pub fn w_map_slot(&self, f: &PolyFun, slot: usize, order: WordOrder) -> NCPoly {
        let n = f.coords().dim();
        let mut gens: Vec<(u8, usize)> = (0..n).map(|i| (self.coord_gen(slot, i), i)).collect();
        gens.sort();
        if order == WordOrder::Reversed {
            gens.reverse();
        }
        let mut out = NCPoly::zero();
        for (e, c) in f.terms() {
            let mut w = Vec::new();
            for &(g, i) in &gens {
                assert!(e[i] >= 0, "W is defined on polynomials only");
                w.extend(std::iter::repeat(g).take(e[i] as usize));
            }
            out.add_term(w, c.clone());
        }
        out
    }

    /// `W(f)` in the system's normal order.
    pub fn w_map(&self, f: &PolyFun) -> NCPoly {
        self.w_map_slot(f, 0, WordOrder::Normal)
    }

    /// Concatenate the images of the tensor slots, slot 0 leftmost.
    pub fn w_map_tensor(&self, t: &TensorPolyFun, slot_ids: &[usize]) -> NCPoly {
        let mut out = NCPoly::zero();
        for (c, blocks) in t.decompose() {
            let mut acc = NCPoly::one();
            for (k, b) in blocks.iter().enumerate() {
                let m = PolyFun::monomial(t.slots()[k], b.clone(), QScalar::one());
                acc = acc.mul(&self.w_map_slot(&m, slot_ids[k], WordOrder::Normal));
            }
            out.add_scaled(&acc, &c);
        }
        out
    }

    fn exps_of(&self, w: &[u8], slots: &[usize]) -> Result<Vec<i32>> {
        let widths: Vec<usize> = slots.iter().map(|&s| self.slot_coords[s].dim()).collect();
        let mut e = vec![0; widths.iter().sum()];
        for &g in w {
            let gen = &self.gens[g as usize];
            let slot = gen.slot.ok_or_else(|| QError::NotNormalOrdered(format!("derivative {} in word", gen.label)))?;
            let k = slots
                .iter()
                .position(|&s| s == slot)
                .ok_or_else(|| QError::Domain(format!("generator {} outside the requested slots", gen.label)))?;
            let off: usize = widths[..k].iter().sum();
            e[off + gen.index] += 1;
        }
        Ok(e)
    }

    /// Inverse of [`Self::w_map`]; every word must be normal ordered.
    pub fn w_inv(&self, p: &NCPoly) -> Result<PolyFun> {
        let mut f = PolyFun::zero(self.slot_coords[0]);
        for (w, c) in p.terms() {
            if !self.is_normal(w) {
                return Err(QError::NotNormalOrdered(NCPoly::word(w.clone(), QScalar::one()).render(self)));
            }
            f.add_term(self.exps_of(w, &[0])?, c.clone());
        }
        Ok(f)
    }

    /// Read normal-ordered words as tensors, with slots listed in word order.
    pub fn w_inv_tensor(&self, p: &NCPoly, slot_ids: &[usize]) -> Result<TensorPolyFun> {
        let cs: Vec<CoordSys> = slot_ids.iter().map(|&s| self.slot_coords[s]).collect();
        let mut t = TensorPolyFun::zero(cs);
        for (w, c) in p.terms() {
            if !self.is_normal(w) {
                return Err(QError::NotNormalOrdered(NCPoly::word(w.clone(), QScalar::one()).render(self)));
            }
            t.add_term(self.exps_of(w, slot_ids)?, c.clone());
        }
        Ok(t)
    }

    /// Drop every term containing a derivative (the counit on derivatives).
    pub fn counit_partials(&self, p: &NCPoly) -> NCPoly {
        p.filter(|w| w.iter().all(|&g| !self.is_partial(g)))
    }

    fn partial_word(&self, d: &[usize]) -> Result<NCPoly> {
        let mut w = Vec::with_capacity(d.len());
        for &i in d {
            w.push(self.partial_gen(i).ok_or_else(|| QError::NoDerivativeRules(self.space.to_string()))?);
        }
        Ok(NCPoly::word(w, QScalar::one()))
    }
}

/// Side on which a derivative word acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Brute-force derivative action: normal order `∂-word · W(f)` (or `W(f) · ∂-word`)
/// and keep the derivative-free part.
pub fn action_oracle(d: &[usize], f: &PolyFun, side: Side, rs: &RewriteSystem) -> Result<PolyFun> {
    if !rs.has_partials() {
        return Err(QError::NoDerivativeRules(rs.space().to_string()));
    }
    f.require_polynomial("derivative oracle")?;
    let dw = rs.partial_word(d)?;
    let wf = rs.w_map(f);
    let prod = match side {
        Side::Left => dw.mul(&wf),
        Side::Right => wf.mul(&dw),
    };
    let nf = rs.normal_order(&prod);
    rs.w_inv(&rs.counit_partials(&nf))
}

/// `(L_∂)^i_j ▷ f`: the coefficient standing left of `∂^j` once `∂^i W(f)` is normal ordered.
pub fn extract_l_action(i: usize, j: usize, f: &PolyFun, rs: &RewriteSystem) -> Result<PolyFun> {
    if !rs.has_partials() {
        return Err(QError::NoDerivativeRules(rs.space().to_string()));
    }
    let gj = rs.partial_gen(j).ok_or_else(|| QError::NoDerivativeRules(rs.space().to_string()))?;
    let nf = rs.normal_order(&rs.partial_word(&[i])?.mul(&rs.w_map(f)));
    let mut picked = NCPoly::zero();
    for (w, c) in nf.terms() {
        if w.last() == Some(&gj) && w[..w.len() - 1].iter().all(|&g| !rs.is_partial(g)) {
            picked.add_term(w[..w.len() - 1].to_vec(), c.clone());
        }
    }
    rs.w_inv(&picked)
}

/// Brute-force braided product: normal order `W_B(f)·W_A(g)` in a pair system and
/// read the result as `[A-part, B-part]`, i.e. `[g-side, f-side]`.
pub fn braid_oracle(t: &TensorPolyFun, rs: &RewriteSystem) -> Result<TensorPolyFun> {
    if !t.is_polynomial() {
        return Err(QError::Laurent("braided product oracle".into()));
    }
    let mut acc = NCPoly::zero();
    for (c, blocks) in t.decompose() {
        let f = PolyFun::monomial(t.slots()[0], blocks[0].clone(), QScalar::one());
        let g = PolyFun::monomial(t.slots()[1], blocks[1].clone(), QScalar::one());
        let w = rs.w_map_slot(&f, 1, WordOrder::Normal).mul(&rs.w_map_slot(&g, 0, WordOrder::Normal));
        acc.add_scaled(&w, &c);
    }
    rs.w_inv_tensor(&rs.normal_order(&acc), &[0, 1])
}

/// Brute-force coproduct: substitute `X^i → A^i + B^i` into `W(f)` and normal order.
pub fn translate_oracle(f: &PolyFun, rs: &RewriteSystem) -> Result<TensorPolyFun> {
    f.require_polynomial("translation oracle")?;
    let n = f.coords().dim();
    let mut gens: Vec<(u8, usize)> = (0..n).map(|i| (rs.coord_gen(0, i), i)).collect();
    gens.sort();
    let sums: Vec<NCPoly> = (0..n)
        .map(|i| {
            let mut s = NCPoly::word(vec![rs.coord_gen(0, i)], QScalar::one());
            s.add_term(vec![rs.coord_gen(1, i)], QScalar::one());
            s
        })
        .collect();
    let mut acc = NCPoly::zero();
    for (e, c) in f.terms() {
        let mut w = NCPoly::one();
        for &(_, i) in &gens {
            w = w.mul(&sums[i].pow(e[i] as u32));
        }
        acc.add_scaled(&w, c);
    }
    rs.w_inv_tensor(&rs.normal_order(&acc), &[0, 1])
}

/// Rules of `hatted` that fail to hold in `plain` after substituting
/// `∂̂^i → c·∂^i` and keeping coordinates.
///
/// Each rule `lhs → rhs` is mapped into `plain`, both sides are normal ordered
/// there, and the rendered difference is reported when nonzero.
pub fn proportionality_defects(hatted: &RewriteSystem, plain: &RewriteSystem, c: &QScalar) -> Result<Vec<String>> {
    let image = |p: &NCPoly| -> Result<NCPoly> {
        let mut out = NCPoly::zero();
        for (w, coef) in p.terms() {
            let mut word = Vec::with_capacity(w.len());
            let mut k = coef.clone();
            for &g in w {
                let gen = &hatted.gens[g as usize];
                if gen.kind == GenKind::Coordinate {
                    word.push(plain.coord_gen(gen.slot.unwrap_or(0), gen.index));
                } else {
                    word.push(
                        plain.partial_gen(gen.index).ok_or_else(|| QError::NoDerivativeRules(plain.name.clone()))?,
                    );
                    k = k * c;
                }
            }
            out.add_term(word, k);
        }
        Ok(out)
    };
    let mut keys: Vec<_> = hatted.rules.keys().copied().collect();
    keys.sort();
    let mut bad = Vec::new();
    for (a, b) in keys {
        let lhs = NCPoly::word(vec![a, b], QScalar::one());
        let rhs = &hatted.rules[&(a, b)];
        let diff = plain.normal_order(&image(&lhs)?.sub(&image(rhs)?));
        if !diff.is_zero() {
            bad.push(format!("{} -> {}: residue {}", lhs.render(hatted), rhs.render(hatted), diff.render(plain)));
        }
    }
    Ok(bad)
}

struct NcParser<'a> {
    src: &'a str,
    pos: usize,
    rs: &'a RewriteSystem,
}

impl<'a> NcParser<'a> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(QError::Syntax { offset: self.pos, msg: msg.to_string() })
    }

    fn expr(&mut self) -> Result<NCPoly> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<NCPoly> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NCPoly> {
        if self.eat('-') {
            return Ok(self.factor()?.scale(&-QScalar::one()));
        }
        if self.eat('(') {
            let v = self.expr()?;
            if !self.eat(')') {
                return self.err("expected `)`");
            }
            return Ok(v);
        }
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let tok = &self.src[start..self.pos];
        if tok.is_empty() {
            return self.err("expected a factor");
        }
        if tok.chars().all(|c| c.is_ascii_digit()) {
            let n: i64 = tok.parse().map_err(|_| QError::Syntax { offset: start, msg: "bad integer".into() })?;
            return Ok(NCPoly::one().scale(&QScalar::int(n)));
        }
        if tok == "q" || tok == "lambda" {
            let base = if tok == "q" { QScalar::q() } else { QScalar::lambda() };
            if !self.eat('^') {
                return Ok(NCPoly::one().scale(&base));
            }
            let e_start = self.pos;
            let e_text = if self.eat('(') {
                let s = self.pos;
                while self.peek().is_some_and(|c| c != ')') {
                    self.pos += 1;
                }
                let inner = self.src[s..self.pos].to_string();
                self.eat(')');
                format!("q^({inner})")
            } else {
                let neg = self.eat('-');
                self.skip_ws();
                let s = self.pos;
                while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                format!("q^{}{}", if neg { "-" } else { "" }, &self.src[s..self.pos])
            };
            let v = if tok == "q" {
                crate::expr::parse_scalar(&e_text)
            } else {
                let n: i32 = e_text.trim_start_matches("q^").parse().map_err(|_| QError::Syntax {
                    offset: e_start,
                    msg: "lambda takes integer powers".into(),
                })?;
                base.pow(n)
            }
            .map_err(|_| QError::Syntax { offset: e_start, msg: "bad exponent".into() })?;
            return Ok(NCPoly::one().scale(&v));
        }
        let g = self.rs.gen_id(tok)?;
        Ok(NCPoly::word(vec![g], QScalar::one()))
    }
}

fn coord(label: &str, slot: usize, index: usize) -> Generator {
    Generator { label: label.into(), kind: GenKind::Coordinate, slot: Some(slot), index }
}

fn partial(label: &str, index: usize, hatted: bool) -> Generator {
    Generator {
        label: label.into(),
        kind: if hatted { GenKind::HattedPartial } else { GenKind::Partial },
        slot: None,
        index,
    }
}

fn finish(mut rs: RewriteSystem, rules: &[(&str, &str)]) -> RewriteSystem {
    for (l, r) in rules {
        rs.add_rule(l, r);
    }
    debug_assert!(rs.check_complete().is_empty(), "{}: {:?}", rs.name, rs.check_complete());
    debug_assert!(rs.check_measure().is_empty(), "{:?}", rs.check_measure());
    rs
}

/// Manin plane, `X1 < X2`.
pub fn plane_coords() -> RewriteSystem {
    let rs = RewriteSystem::build("plane", Space::Plane, vec![coord("X1", 0, 0), coord("X2", 0, 1)], vec![CoordSys::PLANE]);
    finish(rs, &[("X2*X1", "q^-1*X1*X2")])
}

/// Manin plane with reversed normal order `X2 < X1`.
pub fn plane_coords_reversed() -> RewriteSystem {
    let rs = RewriteSystem::build("plane-rev", Space::Plane, vec![coord("X2", 0, 1), coord("X1", 0, 0)], vec![CoordSys::PLANE]);
    finish(rs, &[("X1*X2", "q*X2*X1")])
}

/// Coordinates and unhatted derivatives, derivatives to the right.
pub fn plane_left() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-L",
        Space::Plane,
        vec![coord("X1", 0, 0), coord("X2", 0, 1), partial("D1", 0, false), partial("D2", 1, false)],
        vec![CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("X2*X1", "q^-1*X1*X2"),
            ("D2*D1", "q^-1*D1*D2"),
            ("D1*X1", "q*X1*D1"),
            ("D1*X2", "-q^(-1/2) + q^2*X2*D1"),
            ("D2*X1", "q^(1/2) + q^2*X1*D2 - q^2*lambda*X2*D1"),
            ("D2*X2", "q*X2*D2"),
        ],
    )
}

/// Coordinates and hatted derivatives both in reversed order, derivatives to the right.
pub fn plane_left_bar() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-Lbar",
        Space::Plane,
        vec![coord("X2", 0, 1), coord("X1", 0, 0), partial("H2", 1, true), partial("H1", 0, true)],
        vec![CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("X1*X2", "q*X2*X1"),
            ("H1*H2", "q*H2*H1"),
            ("H1*X1", "q^-1*X1*H1"),
            ("H1*X2", "q^(-1/2) + q^-2*X2*H1 + q^-2*lambda*X1*H2"),
            ("H2*X1", "-q^(1/2) + q^-2*X1*H2"),
            ("H2*X2", "q^-1*X2*H2"),
        ],
    )
}

/// Unhatted derivatives to the left of standard-ordered coordinates.
pub fn plane_right_bar() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-Rbar",
        Space::Plane,
        vec![partial("D1", 0, false), partial("D2", 1, false), coord("X1", 0, 0), coord("X2", 0, 1)],
        vec![CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("X2*X1", "q^-1*X1*X2"),
            ("D2*D1", "q^-1*D1*D2"),
            ("X1*D1", "q*D1*X1"),
            ("X2*D2", "q*D2*X2"),
            ("X1*D2", "-q^(-1/2) + q^2*D2*X1"),
            ("X2*D1", "q^(1/2) + q^2*D1*X2 - q^2*lambda*D2*X1"),
        ],
    )
}

/// Hatted derivatives to the left of reversed-ordered coordinates.
pub fn plane_right() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-R",
        Space::Plane,
        vec![partial("H1", 0, true), partial("H2", 1, true), coord("X2", 0, 1), coord("X1", 0, 0)],
        vec![CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("X1*X2", "q*X2*X1"),
            ("H2*H1", "q^-1*H1*H2"),
            ("X2*H2", "q^-1*H2*X2"),
            ("X1*H2", "q^(-1/2) + q^-2*H2*X1 + q^-2*lambda*H1*X2"),
            ("X2*H1", "-q^(1/2) + q^-2*H1*X2"),
            ("X1*H1", "q^-1*H1*X1"),
        ],
    )
}

/// Hatted derivatives to the left, with constant terms `-ḡ^{ij}` as in the
/// second-order Leibniz rules `X^i ∂̂^j = -ḡ^{ij} + k^{-1} R̂ ∂̂ X`.
pub fn plane_right_leib() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-R-leib",
        Space::Plane,
        vec![partial("H1", 0, true), partial("H2", 1, true), coord("X1", 0, 0), coord("X2", 0, 1)],
        vec![CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("X2*X1", "q^-1*X1*X2"),
            ("H2*H1", "q^-1*H1*H2"),
            ("X2*H1", "q^(1/2) + q^-2*H1*X2"),
            ("X1*H2", "-q^(-1/2) + q^-2*H2*X1 + q^-2*lambda*H1*X2"),
            ("X1*H1", "q^-1*H1*X1"),
            ("X2*H2", "q^-1*H2*X2"),
        ],
    )
}

/// Two copies of the plane, slot 0 generators `A` before slot 1 generators `B`,
/// linked by the braiding that underlies `⊙_L` and `⊕_L`.
pub fn plane_pair_left() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-pair-L",
        Space::Plane,
        vec![coord("A1", 0, 0), coord("A2", 0, 1), coord("B1", 1, 0), coord("B2", 1, 1)],
        vec![CoordSys::PLANE, CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("A2*A1", "q^-1*A1*A2"),
            ("B2*B1", "q^-1*B1*B2"),
            ("B1*A1", "q^-2*A1*B1"),
            ("B1*A2", "q^-1*A2*B1"),
            ("B2*A1", "q^-1*A1*B2 - q^-1*lambda*A2*B1"),
            ("B2*A2", "q^-2*A2*B2"),
        ],
    )
}

/// Reversed-order pair linked by the braiding that underlies `⊙_L̄` and `⊕_L̄`.
pub fn plane_pair_left_bar() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "plane-pair-Lbar",
        Space::Plane,
        vec![coord("A2", 0, 1), coord("A1", 0, 0), coord("B2", 1, 1), coord("B1", 1, 0)],
        vec![CoordSys::PLANE, CoordSys::PLANE],
    );
    finish(
        rs,
        &[
            ("A1*A2", "q*A2*A1"),
            ("B1*B2", "q*B2*B1"),
            ("B2*A2", "q^2*A2*B2"),
            ("B2*A1", "q*A1*B2"),
            ("B1*A2", "q*A2*B1 + q*lambda*A1*B2"),
            ("B1*A1", "q^2*A1*B1"),
        ],
    )
}

/// Three-dimensional q-Euclidean space, `X+ < X3 < X-`.
pub fn euclid3() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "euclid3",
        Space::Euclid3,
        vec![coord("Xp", 0, 0), coord("X3", 0, 1), coord("Xm", 0, 2)],
        vec![CoordSys::EUCLID3],
    );
    finish(rs, &[("X3*Xp", "q^2*Xp*X3"), ("Xm*X3", "q^2*X3*Xm"), ("Xm*Xp", "Xp*Xm + lambda*X3*X3")])
}

/// Four-dimensional q-Euclidean space, `X4 < X3 < X2 < X1`.
pub fn euclid4() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "euclid4",
        Space::Euclid4,
        vec![coord("X4", 0, 3), coord("X3", 0, 2), coord("X2", 0, 1), coord("X1", 0, 0)],
        vec![CoordSys::EUCLID4],
    );
    finish(
        rs,
        &[
            ("X1*X2", "q*X2*X1"),
            ("X1*X3", "q*X3*X1"),
            ("X3*X4", "q*X4*X3"),
            ("X2*X4", "q*X4*X2"),
            ("X2*X3", "X3*X2"),
            ("X1*X4", "X4*X1 - lambda*X3*X2"),
        ],
    )
}

/// q-Minkowski space, `X- < X0 < X3 < X+`, with `X0` central.
pub fn minkowski() -> RewriteSystem {
    let rs = RewriteSystem::build(
        "minkowski",
        Space::Minkowski,
        vec![coord("Xm", 0, 3), coord("X0", 0, 4), coord("X3", 0, 2), coord("Xp", 0, 1)],
        vec![],
    );
    finish(
        rs,
        &[
            ("X0*Xm", "Xm*X0"),
            ("X3*X0", "X0*X3"),
            ("Xp*X0", "X0*Xp"),
            ("X3*Xm", "q^-2*Xm*X3 + q^-1*lambda*Xm*X0"),
            ("Xp*X3", "q^-2*X3*Xp + q^-1*lambda*X0*Xp"),
            ("Xp*Xm", "Xm*Xp - lambda*X3*X3 + lambda*X0*X3"),
        ],
    )
}

/// Coordinate algebra of a space tag.
pub fn builtin_space(space: Space) -> RewriteSystem {
    match space {
        Space::Plane => plane_coords(),
        Space::Euclid3 => euclid3(),
        Space::Euclid4 => euclid4(),
        Space::Minkowski => minkowski(),
    }
}

/// Every built-in system, for whole-catalogue checks.
pub fn all_systems() -> Vec<RewriteSystem> {
    vec![
        plane_coords(),
        plane_coords_reversed(),
        plane_left(),
        plane_left_bar(),
        plane_right_bar(),
        plane_right(),
        plane_right_leib(),
        plane_pair_left(),
        plane_pair_left_bar(),
        euclid3(),
        euclid4(),
        minkowski(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(rs: &RewriteSystem, s: &str) -> NCPoly {
        rs.parse(s).unwrap()
    }

    #[test]
    fn plane_examples() {
        let rs = plane_coords();
        assert_eq!(rs.normal_order(&p(&rs, "X2*X1")), p(&rs, "q^-1*X1*X2"));
        let l = plane_left();
        assert_eq!(l.normal_order(&p(&l, "D1*X2")), p(&l, "-q^(-1/2) + q^2*X2*D1"));
    }

    #[test]
    fn minkowski_pair() {
        let m = minkowski();
        assert_eq!(m.normal_order(&p(&m, "Xp*Xm")), p(&m, "Xm*Xp - lambda*X3*X3 + lambda*X0*X3"));
        assert_eq!(m.normal_order(&p(&m, "Xm*Xp")), p(&m, "Xm*Xp"));
    }

    #[test]
    fn euclid3_orientation() {
        let e = euclid3();
        assert_eq!(e.normal_order(&p(&e, "Xm*X3")), p(&e, "q^2*X3*Xm"));
    }

    #[test]
    fn catalogue_is_complete_terminating_and_confluent() {
        for rs in all_systems() {
            assert!(rs.check_complete().is_empty(), "{:?}", rs.check_complete());
            assert!(rs.check_measure().is_empty(), "{:?}", rs.check_measure());
            assert!(rs.check_confluence().is_empty(), "{:?}", rs.check_confluence());
        }
    }

    #[test]
    fn w_maps() {
        let rs = plane_coords();
        let f = PolyFun::monomial(CoordSys::PLANE, vec![1, 1], QScalar::one());
        assert_eq!(rs.w_map(&f), p(&rs, "X1*X2"));
        assert_eq!(rs.w_inv(&p(&rs, "X1*X2")).unwrap(), f);
        assert!(matches!(rs.w_inv(&p(&rs, "X2*X1")), Err(QError::NotNormalOrdered(_))));
    }

    #[test]
    fn oracle_examples() {
        let l = plane_left();
        let x2 = PolyFun::var(CoordSys::PLANE, 1);
        let x1x2 = PolyFun::monomial(CoordSys::PLANE, vec![1, 1], QScalar::one());
        let r = action_oracle(&[0], &x2, Side::Left, &l).unwrap();
        assert_eq!(r, PolyFun::constant(CoordSys::PLANE, -QScalar::t_pow(-2)));
        let r = action_oracle(&[1], &x1x2, Side::Left, &l).unwrap();
        assert_eq!(r, x2.scale(&QScalar::t_pow(10)));
        assert!(action_oracle(&[0], &PolyFun::one(CoordSys::PLANE), Side::Left, &l).unwrap().is_zero());
        assert!(matches!(
            action_oracle(&[0], &x2, Side::Left, &euclid3()),
            Err(QError::NoDerivativeRules(_))
        ));
    }

    #[test]
    fn hatted_rules_are_scaled_unhatted_rules() {
        let q3 = QScalar::q_pow(3);
        let defects = proportionality_defects(&plane_right_leib(), &plane_left(), &q3).unwrap();
        assert!(defects.is_empty(), "{defects:?}");
        let defects = proportionality_defects(&plane_right(), &plane_left(), &-q3.clone()).unwrap();
        assert!(defects.is_empty(), "{defects:?}");
        assert!(!proportionality_defects(&plane_right(), &plane_left(), &q3).unwrap().is_empty());
    }

    #[test]
    fn leibniz_completeness() {
        let l = plane_left();
        let star = |f: &PolyFun, g: &PolyFun| l.w_inv(&l.normal_order(&l.w_map(f).mul(&l.w_map(g)))).unwrap();
        let mons: Vec<PolyFun> = (0..=2)
            .flat_map(|a| (0..=2 - a).map(move |b| PolyFun::monomial(CoordSys::PLANE, vec![a, b], QScalar::one())))
            .collect();
        for f in &mons {
            for g in &mons {
                for i in 0..2 {
                    let lhs = action_oracle(&[i], &star(f, g), Side::Left, &l).unwrap();
                    let mut rhs = star(&action_oracle(&[i], f, Side::Left, &l).unwrap(), g);
                    for j in 0..2 {
                        let lf = extract_l_action(i, j, f, &l).unwrap();
                        rhs = &rhs + &star(&lf, &action_oracle(&[j], g, Side::Left, &l).unwrap());
                    }
                    assert_eq!(lhs, rhs, "i={i} f={f} g={g}");
                }
            }
        }
    }

    #[test]
    fn l_action_examples() {
        let l = plane_left();
        let one = PolyFun::one(CoordSys::PLANE);
        for i in 0..2 {
            for j in 0..2 {
                let r = extract_l_action(i, j, &one, &l).unwrap();
                assert_eq!(r.is_zero(), i != j);
            }
        }
        let x1 = PolyFun::var(CoordSys::PLANE, 0);
        assert_eq!(extract_l_action(0, 0, &x1, &l).unwrap(), x1.scale(&QScalar::q()));
        let x2 = PolyFun::var(CoordSys::PLANE, 1);
        let r = extract_l_action(1, 0, &x1, &l).unwrap();
        assert_eq!(r, x2.scale(&(-(QScalar::q_pow(2) * QScalar::lambda()))));
    }
}
