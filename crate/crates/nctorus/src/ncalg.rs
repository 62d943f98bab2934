//! Free noncommutative polynomial algebra over derivative-decorated generators.
//!
//! Generators carry a base name, a frame index, a direction index and a
//! derivative multi-index `(a, b)` recording how many times each of the two
//! commuting derivations has been applied. Words are kept in free form — no
//! commutation relations are ever assumed among generators. The perturbation
//! order of a word is its number of `h`-factors (each `h` carries one power
//! of the deformation parameter), and every polynomial is truncated at a
//! fixed order `T`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::GaussRat;

/// Derivative orders beyond this per generator indicate a recursion bug.
pub const DERIV_GUARD: u8 = 4;

/// A two-valued index (frame slot or derivation direction).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Idx2 {
    One,
    Two,
}

impl Idx2 {
    pub const BOTH: [Idx2; 2] = [Idx2::One, Idx2::Two];

    pub fn as_u8(self) -> u8 {
        match self {
            Idx2::One => 1,
            Idx2::Two => 2,
        }
    }

    pub fn as_usize(self) -> usize {
        self.as_u8() as usize - 1
    }

    pub fn from_u8(v: u8) -> Option<Idx2> {
        match v {
            1 => Some(Idx2::One),
            2 => Some(Idx2::Two),
            _ => None,
        }
    }

    pub fn other(self) -> Idx2 {
        match self {
            Idx2::One => Idx2::Two,
            Idx2::Two => Idx2::One,
        }
    }
}

/// Generator family.
///
/// `H` is a frame-perturbation entry; `FrameE` and `CoframeE` are the
/// abstract frame/inverse-frame entries used by the orientation checks.
/// Only `H` carries a power of the perturbation parameter.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GenBase {
    H,
    FrameE,
    CoframeE,
}

impl GenBase {
    fn tag(self) -> &'static str {
        match self {
            GenBase::H => "h",
            GenBase::FrameE => "e",
            GenBase::CoframeE => "E",
        }
    }

    fn from_tag(s: &str) -> Option<GenBase> {
        match s {
            "h" => Some(GenBase::H),
            "e" => Some(GenBase::FrameE),
            "E" => Some(GenBase::CoframeE),
            _ => None,
        }
    }
}

/// A derivative-decorated generator, e.g. `δ₁²δ₂(h₁²)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Gen {
    pub base: GenBase,
    /// Lower index (frame slot for `h` and `e`, column for `E`).
    pub low: Idx2,
    /// Upper index (direction for `h` and `e`, row for `E`).
    pub up: Idx2,
    /// Derivative multi-index `(a, b)`: δ₁ applied `a` times, δ₂ `b` times.
    pub d: (u8, u8),
}

impl Gen {
    pub fn h(low: Idx2, up: Idx2) -> Gen {
        Gen {
            base: GenBase::H,
            low,
            up,
            d: (0, 0),
        }
    }

    pub fn frame_e(low: Idx2, up: Idx2) -> Gen {
        Gen {
            base: GenBase::FrameE,
            low,
            up,
            d: (0, 0),
        }
    }

    pub fn coframe_e(up: Idx2, low: Idx2) -> Gen {
        Gen {
            base: GenBase::CoframeE,
            low,
            up,
            d: (0, 0),
        }
    }

    pub fn with_deriv(mut self, d1: u8, d2: u8) -> Gen {
        self.d = (d1, d2);
        self
    }

    pub fn total_deriv(&self) -> u8 {
        self.d.0 + self.d.1
    }

    /// One power of the perturbation parameter per `h` factor.
    pub fn eps_degree(&self) -> u8 {
        match self.base {
            GenBase::H => 1,
            _ => 0,
        }
    }

    fn delta(mut self, dir: Idx2) -> Gen {
        match dir {
            Idx2::One => self.d.0 += 1,
            Idx2::Two => self.d.1 += 1,
        }
        self
    }

    fn to_json(self) -> Value {
        json!({
            "base": self.base.tag(),
            "up": self.up.as_u8(),
            "low": self.low.as_u8(),
            "d": [self.d.0, self.d.1],
        })
    }

    fn from_json(v: &Value) -> Result<Gen> {
        let bad = || Error::Fixture(format!("malformed generator: {v}"));
        let base = GenBase::from_tag(v.get("base").and_then(Value::as_str).ok_or_else(bad)?)
            .ok_or_else(bad)?;
        let up = Idx2::from_u8(v.get("up").and_then(Value::as_u64).ok_or_else(bad)? as u8)
            .ok_or_else(bad)?;
        let low = Idx2::from_u8(v.get("low").and_then(Value::as_u64).ok_or_else(bad)? as u8)
            .ok_or_else(bad)?;
        let d = v.get("d").and_then(Value::as_array).ok_or_else(bad)?;
        if d.len() != 2 {
            return Err(bad());
        }
        let d1 = d[0].as_u64().ok_or_else(bad)? as u8;
        let d2 = d[1].as_u64().ok_or_else(bad)? as u8;
        Ok(Gen { base, low, up, d: (d1, d2) })
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.d.0 {
            write!(f, "δ₁")?;
        }
        for _ in 0..self.d.1 {
            write!(f, "δ₂")?;
        }
        if self.total_deriv() > 0 {
            write!(f, "(")?;
        }
        let sub = ["₁", "₂"][self.low.as_usize()];
        let sup = ["¹", "²"][self.up.as_usize()];
        write!(f, "{}{}{}", self.base.tag(), sub, sup)?;
        if self.total_deriv() > 0 {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// An ordered word of generators. Factor order is significant and is never
/// silently permuted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct NCWord {
    factors: Vec<Gen>,
}

impl NCWord {
    pub fn empty() -> NCWord {
        NCWord::default()
    }

    pub fn single(g: Gen) -> NCWord {
        NCWord { factors: vec![g] }
    }

    pub fn from_factors(factors: Vec<Gen>) -> NCWord {
        NCWord { factors }
    }

    pub fn factors(&self) -> &[Gen] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn eps_degree(&self) -> u8 {
        self.factors.iter().map(Gen::eps_degree).sum()
    }

    pub fn total_derivs(&self) -> u8 {
        self.factors.iter().map(Gen::total_deriv).sum()
    }

    /// Number of derivatives in the given direction, summed over factors.
    pub fn deriv_count(&self, dir: Idx2) -> u32 {
        self.factors
            .iter()
            .map(|g| match dir {
                Idx2::One => g.d.0 as u32,
                Idx2::Two => g.d.1 as u32,
            })
            .sum()
    }

    pub fn concat(&self, other: &NCWord) -> NCWord {
        let mut factors = Vec::with_capacity(self.len() + other.len());
        factors.extend_from_slice(&self.factors);
        factors.extend_from_slice(&other.factors);
        NCWord { factors }
    }

    /// Cyclic rotation moving the first factor to the end.
    pub fn rotate(&self) -> NCWord {
        if self.factors.len() < 2 {
            return self.clone();
        }
        let mut factors = self.factors[1..].to_vec();
        factors.push(self.factors[0]);
        NCWord { factors }
    }

    pub fn reversed(&self) -> NCWord {
        let mut factors = self.factors.clone();
        factors.reverse();
        NCWord { factors }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.factors.iter().map(|g| g.to_json()).collect())
    }

    pub fn from_json(v: &Value) -> Result<NCWord> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Fixture(format!("word is not an array: {v}")))?;
        let factors = arr.iter().map(Gen::from_json).collect::<Result<Vec<_>>>()?;
        Ok(NCWord { factors })
    }
}

impl fmt::Display for NCWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, g) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// An exact linear combination of noncommutative words, truncated in the
/// perturbation order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NCPoly {
    terms: BTreeMap<NCWord, GaussRat>,
    trunc: u8,
}

impl NCPoly {
    pub fn zero(trunc: u8) -> NCPoly {
        NCPoly {
            terms: BTreeMap::new(),
            trunc,
        }
    }

    pub fn one(trunc: u8) -> NCPoly {
        Self::from_term(NCWord::empty(), GaussRat::one(), trunc)
    }

    pub fn constant(c: GaussRat, trunc: u8) -> NCPoly {
        Self::from_term(NCWord::empty(), c, trunc)
    }

    pub fn gen(g: Gen, trunc: u8) -> NCPoly {
        Self::from_term(NCWord::single(g), GaussRat::one(), trunc)
    }

    pub fn from_term(word: NCWord, coeff: GaussRat, trunc: u8) -> NCPoly {
        let mut p = NCPoly::zero(trunc);
        p.add_term(word, coeff);
        p
    }

    pub fn trunc(&self) -> u8 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NCWord, &GaussRat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &NCWord) -> GaussRat {
        self.terms.get(w).cloned().unwrap_or_else(GaussRat::zero)
    }

    /// Adds `coeff · word`, dropping the term if it exceeds the truncation
    /// order or cancels to zero.
    pub fn add_term(&mut self, word: NCWord, coeff: GaussRat) {
        if coeff.is_zero() || word.eps_degree() > self.trunc {
            return;
        }
        let entry = self.terms.entry(word);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_trunc(&self, other: &NCPoly) {
        assert_eq!(
            self.trunc, other.trunc,
            "truncation orders differ: {} vs {}",
            self.trunc, other.trunc
        );
    }

    /// Free product with truncation. Errors on mismatched truncation orders;
    /// the `*` operator panics instead.
    pub fn try_mul(&self, other: &NCPoly) -> Result<NCPoly> {
        if self.trunc != other.trunc {
            return Err(Error::TruncationMismatch {
                left: self.trunc,
                right: other.trunc,
            });
        }
        let mut out = NCPoly::zero(self.trunc);
        for (w1, c1) in &self.terms {
            let d1 = w1.eps_degree();
            for (w2, c2) in &other.terms {
                if d1 + w2.eps_degree() > self.trunc {
                    continue;
                }
                out.add_term(w1.concat(w2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &GaussRat) -> NCPoly {
        if c.is_zero() {
            return NCPoly::zero(self.trunc);
        }
        let mut out = NCPoly::zero(self.trunc);
        for (w, a) in &self.terms {
            out.add_term(w.clone(), a * c);
        }
        out
    }

    /// Applies the derivation δᵢ by the Leibniz rule. Panics if a factor
    /// would exceed [`DERIV_GUARD`] derivatives; see
    /// [`NCPoly::apply_delta_with_guard`] for a checked variant.
    pub fn apply_delta(&self, dir: Idx2) -> NCPoly {
        self.apply_delta_with_guard(dir, DERIV_GUARD)
            .expect("derivative guard exceeded; raise the guard if intentional")
    }

    pub fn apply_delta_with_guard(&self, dir: Idx2, limit: u8) -> Result<NCPoly> {
        let mut out = NCPoly::zero(self.trunc);
        for (w, c) in &self.terms {
            for pos in 0..w.len() {
                let mut factors = w.factors().to_vec();
                factors[pos] = factors[pos].delta(dir);
                if factors[pos].total_deriv() > limit {
                    return Err(Error::DerivativeGuard {
                        gen: factors[pos].to_string(),
                        total: factors[pos].total_deriv(),
                        limit,
                    });
                }
                out.add_term(NCWord::from_factors(factors), c.clone());
            }
        }
        Ok(out)
    }

    /// Antilinear involution: reverses each word and conjugates coefficients.
    /// Generators are fixed (they are selfadjoint, and the star of a
    /// derivative-decorated generator is fixed to be itself).
    pub fn star(&self) -> NCPoly {
        let mut out = NCPoly::zero(self.trunc);
        for (w, c) in &self.terms {
            out.add_term(w.reversed(), c.conj());
        }
        out
    }

    /// The part of exact perturbation order `d`.
    pub fn eps_part(&self, d: u8) -> NCPoly {
        let mut out = NCPoly::zero(self.trunc);
        for (w, c) in &self.terms {
            if w.eps_degree() == d {
                out.add_term(w.clone(), c.clone());
            }
        }
        out
    }

    /// Re-truncates to a (possibly lower) order.
    pub fn truncated(&self, trunc: u8) -> NCPoly {
        let mut out = NCPoly::zero(trunc);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    /// Multiplies each term by `c^k` where `k` counts the derivatives in
    /// direction `dir` across the word. This is the substitution
    /// δ_dir → c·δ_dir applied to an already-computed expression.
    pub fn scale_per_delta(&self, dir: Idx2, c: &GaussRat) -> NCPoly {
        let mut out = NCPoly::zero(self.trunc);
        for (w, a) in &self.terms {
            out.add_term(w.clone(), a * &c.pow(w.deriv_count(dir)));
        }
        out
    }

    /// Canonical serialization: terms sorted by the lexicographic order on
    /// factor sequences, rationals rendered as decimal strings.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(w, c)| {
                json!({
                    "coeff": {
                        "re": [c.re().numer().to_string(), c.re().denom().to_string()],
                        "im": [c.im().numer().to_string(), c.im().denom().to_string()],
                    },
                    "word": w.to_json(),
                })
            })
            .collect();
        json!({ "trunc": self.trunc, "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<NCPoly> {
        let bad = |m: &str| Error::Fixture(m.to_string());
        let trunc = v
            .get("trunc")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing trunc"))? as u8;
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing terms"))?;
        let mut out = NCPoly::zero(trunc);
        for t in terms {
            let word = NCWord::from_json(t.get("word").ok_or_else(|| bad("missing word"))?)?;
            let c = t.get("coeff").ok_or_else(|| bad("missing coeff"))?;
            let parse_rat = |v: &Value| -> Result<num_rational::BigRational> {
                let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                    Error::Fixture(format!("rational is not a [num, den] pair: {v}"))
                })?;
                let num = arr[0]
                    .as_str()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("bad numerator"))?;
                let den = arr[1]
                    .as_str()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("bad denominator"))?;
                Ok(num_rational::BigRational::new(num, den))
            };
            let re = parse_rat(c.get("re").ok_or_else(|| bad("missing re"))?)?;
            let im = parse_rat(c.get("im").ok_or_else(|| bad("missing im"))?)?;
            out.add_term(word, GaussRat::new(re, im));
        }
        Ok(out)
    }

    pub fn render_latex(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let coeff = latex_coeff(c, i == 0);
            out.push_str(&coeff);
            if !w.is_empty() {
                for g in w.factors() {
                    out.push_str(&latex_gen(g));
                }
            } else if coeff.is_empty() || coeff == "-" || coeff.ends_with('+') {
                out.push('1');
            }
        }
        out
    }
}

fn latex_gen(g: &Gen) -> String {
    let mut s = String::new();
    if g.d.0 > 0 {
        s.push_str(r"\delta_1");
        if g.d.0 > 1 {
            s.push_str(&format!("^{{{}}}", g.d.0));
        }
    }
    if g.d.1 > 0 {
        s.push_str(r"\delta_2");
        if g.d.1 > 1 {
            s.push_str(&format!("^{{{}}}", g.d.1));
        }
    }
    let core = format!(
        "{}_{{{}}}^{{{}}}",
        g.base.tag(),
        g.low.as_u8(),
        g.up.as_u8()
    );
    if g.total_deriv() > 0 {
        format!("{s}({core})")
    } else {
        core
    }
}

fn latex_coeff(c: &GaussRat, first: bool) -> String {
    let body = if c.is_one() {
        String::new()
    } else if (-c).is_one() {
        "-".to_string()
    } else if c.is_real() {
        let r = c.re();
        if r.denom() == &num_bigint::BigInt::from(1) {
            format!("{}", r.numer())
        } else {
            let sign = if r.numer().sign() == num_bigint::Sign::Minus {
                "-"
            } else {
                ""
            };
            format!(
                "{sign}\\tfrac{{{}}}{{{}}}",
                r.numer().magnitude(),
                r.denom()
            )
        }
    } else {
        format!("({c})").replace('i', "i")
    };
    if first {
        body
    } else if body.starts_with('-') || body.starts_with("(-") {
        body
    } else {
        format!("+{body}")
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.is_one() {
                write!(f, "{w}")?;
            } else if w.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c})·{w}")?;
            }
        }
        Ok(())
    }
}

impl Add for &NCPoly {
    type Output = NCPoly;
    fn add(self, rhs: &NCPoly) -> NCPoly {
        self.check_trunc(rhs);
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl Sub for &NCPoly {
    type Output = NCPoly;
    fn sub(self, rhs: &NCPoly) -> NCPoly {
        self.check_trunc(rhs);
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }
}

impl Mul for &NCPoly {
    type Output = NCPoly;
    fn mul(self, rhs: &NCPoly) -> NCPoly {
        self.try_mul(rhs).expect("truncation mismatch")
    }
}

impl Neg for &NCPoly {
    type Output = NCPoly;
    fn neg(self) -> NCPoly {
        let mut out = NCPoly::zero(self.trunc);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(low: u8, up: u8) -> Gen {
        Gen::h(Idx2::from_u8(low).unwrap(), Idx2::from_u8(up).unwrap())
    }

    #[test]
    fn product_is_concatenation() {
        let p = NCPoly::gen(h(1, 1), 2);
        let q = NCPoly::gen(h(2, 2), 2);
        let pq = &p * &q;
        let expected = NCPoly::from_term(
            NCWord::from_factors(vec![h(1, 1), h(2, 2)]),
            GaussRat::one(),
            2,
        );
        assert_eq!(pq, expected);
    }

    #[test]
    fn product_distributes() {
        let p = &NCPoly::gen(h(1, 1), 2) + &NCPoly::gen(h(2, 2), 2);
        let q = NCPoly::gen(h(1, 1), 2);
        let pq = &p * &q;
        assert_eq!(pq.num_terms(), 2);
        assert_eq!(
            pq.coeff(&NCWord::from_factors(vec![h(2, 2), h(1, 1)])),
            GaussRat::one()
        );
    }

    #[test]
    fn truncation_drops_high_order() {
        let p = NCPoly::gen(h(1, 1), 1);
        let q = NCPoly::gen(h(2, 2), 1);
        assert!((&p * &q).is_zero());
    }

    #[test]
    fn truncation_mismatch_is_an_error() {
        let p = NCPoly::gen(h(1, 1), 1);
        let q = NCPoly::gen(h(2, 2), 2);
        assert!(matches!(
            p.try_mul(&q),
            Err(Error::TruncationMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn delta_is_leibniz() {
        let w = NCWord::from_factors(vec![h(1, 1), h(2, 2)]);
        let p = NCPoly::from_term(w, GaussRat::one(), 2);
        let dp = p.apply_delta(Idx2::One);
        assert_eq!(dp.num_terms(), 2);
        let left = NCWord::from_factors(vec![h(1, 1).with_deriv(1, 0), h(2, 2)]);
        let right = NCWord::from_factors(vec![h(1, 1), h(2, 2).with_deriv(1, 0)]);
        assert_eq!(dp.coeff(&left), GaussRat::one());
        assert_eq!(dp.coeff(&right), GaussRat::one());
    }

    #[test]
    fn delta_kills_unit() {
        assert!(NCPoly::one(2).apply_delta(Idx2::One).is_zero());
    }

    #[test]
    fn deltas_commute_on_a_generator() {
        let p = NCPoly::gen(h(1, 1), 2);
        let a = p.apply_delta(Idx2::One).apply_delta(Idx2::Two);
        let b = p.apply_delta(Idx2::Two).apply_delta(Idx2::One);
        assert_eq!(a, b);
        assert_eq!(
            a.coeff(&NCWord::single(h(1, 1).with_deriv(1, 1))),
            GaussRat::one()
        );
    }

    #[test]
    fn deriv_guard_fires() {
        let p = NCPoly::gen(h(1, 1).with_deriv(2, 0), 2);
        let err = p
            .apply_delta_with_guard(Idx2::One, 2)
            .expect_err("guard should fire");
        assert!(matches!(err, Error::DerivativeGuard { total: 3, limit: 2, .. }));
    }

    #[test]
    fn star_reverses_and_conjugates() {
        let w = NCWord::from_factors(vec![h(1, 1), h(2, 2)]);
        let p = NCPoly::from_term(w, GaussRat::i(), 2);
        let s = p.star();
        let rev = NCWord::from_factors(vec![h(2, 2), h(1, 1)]);
        assert_eq!(s.coeff(&rev), -GaussRat::i());
    }

    #[test]
    fn json_roundtrip() {
        let mut p = NCPoly::zero(2);
        p.add_term(NCWord::single(h(1, 2).with_deriv(0, 2)), GaussRat::ratio(3, 4));
        p.add_term(
            NCWord::from_factors(vec![h(2, 1), h(1, 1)]),
            GaussRat::ratio_i(-1, 2),
        );
        let v = p.to_json();
        assert_eq!(NCPoly::from_json(&v).unwrap(), p);
    }
}
