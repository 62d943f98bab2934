//! Exact ξ-integrals of symbols over the plane and the unit circle.
//!
//! Plane integrals of `ξ₁^{2p} ξ₂^{2q} (1+|ξ|²)^{−m}` factor in polar
//! coordinates into a trigonometric moment and a radial Beta value, both
//! exact rationals times π. Odd exponents integrate to zero by parity.
//! The measure is the plain `dξ` — every 2π surfaces explicitly in results
//! and is reconciled once in the curvature normalization.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::clifford::Mat2;
use crate::error::{Error, Result};
use crate::ncalg::NCPoly;
use crate::scalar::GaussRat;
use crate::symcalc::Symbol;

/// A polynomial result carrying an explicit power of π.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiValue {
    pub poly: NCPoly,
    pub pi_power: i32,
}

impl PiValue {
    pub fn zero(trunc: u8, pi_power: i32) -> PiValue {
        PiValue {
            poly: NCPoly::zero(trunc),
            pi_power,
        }
    }

    pub fn try_add(&self, other: &PiValue) -> Result<PiValue> {
        if self.pi_power != other.pi_power && !self.poly.is_zero() && !other.poly.is_zero() {
            return Err(Error::PiPowerMismatch {
                left: self.pi_power,
                right: other.pi_power,
            });
        }
        Ok(PiValue {
            poly: &self.poly + &other.poly,
            pi_power: if self.poly.is_zero() {
                other.pi_power
            } else {
                self.pi_power
            },
        })
    }

    /// Multiplies by an exact `c·π^k`.
    pub fn scale(&self, c: &GaussRat, pi_power: i32) -> PiValue {
        PiValue {
            poly: self.poly.scale(c),
            pi_power: self.pi_power + pi_power,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "poly": self.poly.to_json(), "pi_power": self.pi_power })
    }
}

/// Which spinor trace to apply to matrix coefficients before integrating.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceKind {
    Plain,
    Chiral,
}

impl TraceKind {
    fn apply(self, m: &Mat2) -> NCPoly {
        match self {
            TraceKind::Plain => m.trace2(),
            TraceKind::Chiral => m.chiral_trace2(),
        }
    }
}

fn double_factorial(n: i64) -> BigInt {
    // (−1)!! = 1 by convention.
    let mut acc = BigInt::from(1);
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

fn factorial(n: i64) -> BigInt {
    let mut acc = BigInt::from(1);
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Full-circle moment `∫ ξ₁^{k₁} ξ₂^{k₂} dΩ` as a rational multiple of π.
/// Zero when either exponent is odd.
pub fn circle_moment(k1: u32, k2: u32) -> BigRational {
    if k1 % 2 == 1 || k2 % 2 == 1 {
        return BigRational::from_integer(BigInt::from(0));
    }
    let num =
        BigInt::from(2) * double_factorial(k1 as i64 - 1) * double_factorial(k2 as i64 - 1);
    let den = double_factorial((k1 + k2) as i64);
    BigRational::new(num, den)
}

/// `∫_{ℝ²} ξ₁^{2p} ξ₂^{2q} (1+|ξ|²)^{−m} dξ` as a rational multiple of π.
/// Requires `m ≥ p + q + 2` for convergence.
pub fn plane_integral_term(p: u32, q: u32, m: u32) -> Result<BigRational> {
    if m < p + q + 2 {
        return Err(Error::DivergentTerm {
            k1: 2 * p,
            k2: 2 * q,
            m,
            need: p + q + 2,
        });
    }
    // Angular factor: circle moment of cos^{2p} sin^{2q}.
    let angular = circle_moment(2 * p, 2 * q);
    // Radial factor: ∫₀^∞ r^{2p+2q+1}(1+r²)^{−m} dr = ½·B(p+q+1, m−p−q−1)
    //              = ½·(p+q)!·(m−p−q−2)!/(m−1)!.
    let s = (p + q) as i64;
    let radial = BigRational::new(
        factorial(s) * factorial(m as i64 - s - 2),
        BigInt::from(2) * factorial(m as i64 - 1),
    );
    Ok(angular * radial)
}

/// Integrates a symbol over the plane after applying the chosen spinor
/// trace to each coefficient. Terms with an odd ξ-exponent vanish by
/// parity; every even term must satisfy the convergence bound.
pub fn integrate_plane(s: &Symbol, trace: TraceKind) -> Result<PiValue> {
    let mut poly = NCPoly::zero(s.trunc());
    for (k, c) in s.terms() {
        if k.k1 % 2 == 1 || k.k2 % 2 == 1 {
            continue;
        }
        let value = plane_integral_term(k.k1 / 2, k.k2 / 2, k.m)?;
        let traced = trace.apply(c);
        poly = &poly + &traced.scale(&GaussRat::from_rational(value));
    }
    Ok(PiValue { poly, pi_power: 1 })
}

/// Integrates the plain spinor trace of a symbol over the unit circle:
/// `u` restricts to ½ and the ξ-monomials reduce to trigonometric moments.
pub fn integrate_circle(s: &Symbol) -> PiValue {
    let mut poly = NCPoly::zero(s.trunc());
    for (k, c) in s.terms() {
        let moment = circle_moment(k.k1, k.k2);
        if moment == BigRational::from_integer(BigInt::from(0)) {
            continue;
        }
        let u_factor = BigRational::new(BigInt::from(1), BigInt::from(2u64.pow(k.m)));
        poly = &poly
            + &c
                .trace2()
                .scale(&GaussRat::from_rational(moment * u_factor));
    }
    PiValue { poly, pi_power: 1 }
}

/// A matrix-valued trigonometric polynomial on the unit circle, reduced by
/// `ξ₂² = 1 − ξ₁²`: keys are `(k₁, k₂)` with `k₂ ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CirclePoly {
    terms: BTreeMap<(u32, u32), Mat2>,
    trunc: u8,
}

impl CirclePoly {
    pub fn zero(trunc: u8) -> CirclePoly {
        CirclePoly {
            terms: BTreeMap::new(),
            trunc,
        }
    }

    pub fn identity(trunc: u8) -> CirclePoly {
        let mut p = CirclePoly::zero(trunc);
        p.add_term(0, 0, Mat2::identity(trunc));
        p
    }

    fn add_term(&mut self, k1: u32, k2: u32, c: Mat2) {
        if c.is_zero() {
            return;
        }
        // Reduce ξ₂-powers via ξ₂² = 1 − ξ₁².
        if k2 >= 2 {
            self.add_term(k1, k2 - 2, c.clone());
            self.add_term(k1 + 2, k2 - 2, c.scale(&GaussRat::from_int(-1)));
            return;
        }
        match self.terms.entry((k1, k2)) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let merged = &*o.get() + &c;
                if merged.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = merged;
                }
            }
        }
    }

    /// Restriction of a symbol to the unit circle: `u ↦ ½` with the
    /// ξ-monomials reduced to the canonical basis.
    pub fn restrict(s: &Symbol) -> CirclePoly {
        let mut p = CirclePoly::zero(s.trunc());
        for (k, c) in s.terms() {
            let u_factor = GaussRat::from_rational(BigRational::new(
                BigInt::from(1),
                BigInt::from(2u64.pow(k.m)),
            ));
            p.add_term(k.k1, k.k2, c.scale(&u_factor));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eps_part(&self, d: u8) -> CirclePoly {
        let mut out = CirclePoly::zero(self.trunc);
        for (k, c) in &self.terms {
            out.add_term(k.0, k.1, c.eps_part(d));
        }
        out
    }

    pub fn mul(&self, other: &CirclePoly) -> CirclePoly {
        let mut out = CirclePoly::zero(self.trunc);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                out.add_term(k1.0 + k2.0, k1.1 + k2.1, c1 * c2);
            }
        }
        out
    }

    pub fn add(&self, other: &CirclePoly) -> CirclePoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.0, k.1, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &GaussRat) -> CirclePoly {
        let mut out = CirclePoly::zero(self.trunc);
        for (k, m) in &self.terms {
            out.add_term(k.0, k.1, m.scale(c));
        }
        out
    }

    /// Neumann inverse for a restricted symbol whose order-0 part is the
    /// identity: `(1 + X)⁻¹ = 1 − X + X² − …` truncated at the
    /// perturbation order.
    pub fn neumann_inverse(&self) -> Result<CirclePoly> {
        if self.eps_part(0) != CirclePoly::identity(self.trunc) {
            return Err(Error::NotNormalized);
        }
        let mut x = CirclePoly::zero(self.trunc);
        for d in 1..=self.trunc {
            x = x.add(&self.eps_part(d));
        }
        let mut out = CirclePoly::identity(self.trunc);
        let mut power = CirclePoly::identity(self.trunc);
        for _ in 1..=self.trunc {
            power = power.mul(&x).scale(&GaussRat::from_int(-1));
            out = out.add(&power);
        }
        Ok(out)
    }

    /// Circle integral of the plain spinor trace.
    pub fn integrate(&self) -> PiValue {
        let mut poly = NCPoly::zero(self.trunc);
        for (k, c) in &self.terms {
            let moment = circle_moment(k.0, k.1);
            if moment == BigRational::from_integer(BigInt::from(0)) {
                continue;
            }
            poly = &poly + &c.trace2().scale(&GaussRat::from_rational(moment));
        }
        PiValue { poly, pi_power: 1 }
    }
}
