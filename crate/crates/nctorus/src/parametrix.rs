//! The Dirac-type symbol, the three symbols of its square, and the
//! b₀/b₁/b₂ parametrix recursion.
//!
//! The symbols of the squared operator are built twice: once by transcribing
//! the closed-form expressions and once by composing the first-order symbol
//! with itself under the exact composition rule for differential operators.
//! The composed result is authoritative; the closed forms are checked
//! against it. The known slip in the zero-order closed form (a missing
//! derivative in its second summand) is kept available for diff reporting.

use std::collections::BTreeMap;

use crate::clifford::Mat2;
use crate::error::{Error, Result};
use crate::ncalg::{Gen, Idx2, NCPoly};
use crate::scalar::GaussRat;
use crate::symcalc::{DeltaWeights, SymKey, Symbol};

/// The perturbed frame `e_j^μ = δ_j^μ + ε·h_j^μ` as a 2×2 matrix of
/// noncommutative polynomials (row = frame slot j, column = direction μ).
#[derive(Clone, Debug)]
pub struct Frame {
    e: [[NCPoly; 2]; 2],
    trunc: u8,
}

impl Frame {
    /// The generic perturbation: all four `h_j^μ` are independent generators.
    pub fn generic(trunc: u8) -> Frame {
        let entry = |j: Idx2, mu: Idx2| {
            let mut p = NCPoly::zero(trunc);
            if j == mu {
                p = NCPoly::one(trunc);
            }
            p.add_term(
                crate::ncalg::NCWord::single(Gen::h(j, mu)),
                GaussRat::one(),
            );
            p
        };
        Frame {
            e: [
                [entry(Idx2::One, Idx2::One), entry(Idx2::One, Idx2::Two)],
                [entry(Idx2::Two, Idx2::One), entry(Idx2::Two, Idx2::Two)],
            ],
            trunc,
        }
    }

    /// The unperturbed flat frame (identity matrix).
    pub fn flat(trunc: u8) -> Frame {
        let z = || NCPoly::zero(trunc);
        Frame {
            e: [
                [NCPoly::one(trunc), z()],
                [z(), NCPoly::one(trunc)],
            ],
            trunc,
        }
    }

    /// A frame with a caller-supplied perturbation matrix `h`.
    /// The zero-order part is always the identity.
    pub fn with_perturbation(h: [[NCPoly; 2]; 2], trunc: u8) -> Frame {
        let mut e = h;
        for (j, row) in e.iter_mut().enumerate() {
            for (mu, p) in row.iter_mut().enumerate() {
                assert!(p.eps_part(0).is_zero(), "perturbation must have no order-0 part");
                if j == mu {
                    *p = &*p + &NCPoly::one(trunc);
                }
            }
        }
        Frame { e, trunc }
    }

    pub fn entry(&self, j: Idx2, mu: Idx2) -> &NCPoly {
        &self.e[j.as_usize()][mu.as_usize()]
    }

    pub fn trunc(&self) -> u8 {
        self.trunc
    }
}

/// A generalized differential operator of order ≤ 2: matrix coefficients
/// indexed by the derivative multi-index (α, β).
#[derive(Clone, Debug)]
pub struct DiffOp2 {
    coeffs: BTreeMap<(u8, u8), Mat2>,
    trunc: u8,
}

impl DiffOp2 {
    pub fn new(trunc: u8) -> DiffOp2 {
        DiffOp2 {
            coeffs: BTreeMap::new(),
            trunc,
        }
    }

    pub fn set(&mut self, alpha: u8, beta: u8, c: Mat2) {
        assert!(alpha + beta <= 2, "operator order must be at most 2");
        if !c.is_zero() {
            self.coeffs.insert((alpha, beta), c);
        }
    }

    pub fn order(&self) -> u8 {
        self.coeffs.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    /// The total symbol: Σ C_{αβ} ξ₁^α ξ₂^β.
    pub fn symbol(&self) -> Symbol {
        let mut s = Symbol::zero(self.trunc);
        for ((a, b), c) in &self.coeffs {
            s.add_term(SymKey::new(*a as u32, *b as u32, 0), c.clone());
        }
        s
    }
}

/// Exact total symbol of the operator composition `P∘Q`:
/// `Σ_α (1/α!) ∂_ξ^α σ(P) · δ^α(σ(Q))`.
pub fn compose_diffops(p: &DiffOp2, q: &DiffOp2, w: &DeltaWeights) -> Result<Symbol> {
    if p.order() + q.order() > 2 {
        return Err(Error::OrderOverflow {
            left: p.order(),
            right: q.order(),
        });
    }
    p.symbol().compose(&q.symbol(), w, 2)
}

/// First-order Dirac-type symbol
/// `Σ_{j,μ} σ^j e_j^μ ξ_μ + ½ Σ_{j,μ} σ^j δ_μ(e_j^μ)`.
pub fn dirac_symbol(f: &Frame, w: &DeltaWeights) -> Symbol {
    let t = f.trunc();
    let mut s = Symbol::zero(t);
    let half = GaussRat::ratio(1, 2);
    for j in Idx2::BOTH {
        let sigma = Mat2::sigma_dir(j, t);
        for mu in Idx2::BOTH {
            let e = f.entry(j, mu);
            let key = match mu {
                Idx2::One => SymKey::new(1, 0, 0),
                Idx2::Two => SymKey::new(0, 1, 0),
            };
            s.add_term(key, sigma.scale_poly_left(e));
            let de = e.apply_delta(mu).scale(w.weight(mu)).scale(&half);
            s.add_term(SymKey::new(0, 0, 0), sigma.scale_poly_left(&de));
        }
    }
    s
}

/// The Dirac-type operator as a generalized differential operator.
pub fn dirac_diffop(f: &Frame, w: &DeltaWeights) -> DiffOp2 {
    let t = f.trunc();
    let mut c10 = Mat2::zero(t);
    let mut c01 = Mat2::zero(t);
    let mut c00 = Mat2::zero(t);
    let half = GaussRat::ratio(1, 2);
    for j in Idx2::BOTH {
        let sigma = Mat2::sigma_dir(j, t);
        c10 = &c10 + &sigma.scale_poly_left(f.entry(j, Idx2::One));
        c01 = &c01 + &sigma.scale_poly_left(f.entry(j, Idx2::Two));
        for mu in Idx2::BOTH {
            let de = f.entry(j, mu).apply_delta(mu).scale(w.weight(mu)).scale(&half);
            c00 = &c00 + &sigma.scale_poly_left(&de);
        }
    }
    let mut op = DiffOp2::new(t);
    op.set(1, 0, c10);
    op.set(0, 1, c01);
    op.set(0, 0, c00);
    op
}

/// The three symbols of the squared operator, split by ξ-degree.
#[derive(Clone, Debug)]
pub struct ASymbols {
    pub a2: Symbol,
    pub a1: Symbol,
    pub a0: Symbol,
}

impl ASymbols {
    /// Authoritative route: compose the first-order symbol with itself and
    /// split by ξ-degree.
    pub fn by_composition(f: &Frame, w: &DeltaWeights) -> Result<ASymbols> {
        let d = dirac_diffop(f, w);
        let total = compose_diffops(&d, &d, w)?;
        Ok(ASymbols {
            a2: total.xi_degree_part(2),
            a1: total.xi_degree_part(1),
            a0: total.xi_degree_part(0),
        })
    }

    /// Closed-form expansion with Einstein summation over j, k, μ, ν.
    /// The zero-order symbol carries the corrected second summand
    /// `½ e_j^μ δ_μ δ_ν(e_k^ν)`; see [`ASymbols::closed_form_uncorrected`].
    pub fn closed_form(f: &Frame, w: &DeltaWeights) -> ASymbols {
        Self::closed_form_impl(f, w, true)
    }

    /// Closed-form expansion with the zero-order second summand kept as
    /// `½ e_j^μ δ_ν(e_k^ν)` — an index slip retained so the difference
    /// against the composed symbols can be reported.
    pub fn closed_form_uncorrected(f: &Frame, w: &DeltaWeights) -> ASymbols {
        Self::closed_form_impl(f, w, false)
    }

    fn closed_form_impl(f: &Frame, w: &DeltaWeights, corrected: bool) -> ASymbols {
        let t = f.trunc();
        let half = GaussRat::ratio(1, 2);
        let quarter = GaussRat::ratio(1, 4);
        let mut a2 = Symbol::zero(t);
        let mut a1 = Symbol::zero(t);
        let mut a0 = Symbol::zero(t);

        let xi_key = |mu: Idx2| match mu {
            Idx2::One => SymKey::new(1, 0, 0),
            Idx2::Two => SymKey::new(0, 1, 0),
        };
        let xi2_key = |mu: Idx2, nu: Idx2| {
            let mut k = [0u32; 2];
            k[mu.as_usize()] += 1;
            k[nu.as_usize()] += 1;
            SymKey::new(k[0], k[1], 0)
        };
        let dw = |p: &NCPoly, nu: Idx2| p.apply_delta(nu).scale(w.weight(nu));

        for j in Idx2::BOTH {
            for k in Idx2::BOTH {
                let sjk = &Mat2::sigma_dir(j, t) * &Mat2::sigma_dir(k, t);
                for mu in Idx2::BOTH {
                    // a₂ = σʲσᵏ e_j^μ e_k^ν ξ_μ ξ_ν
                    for nu in Idx2::BOTH {
                        let c = f.entry(j, mu) * f.entry(k, nu);
                        a2.add_term(xi2_key(mu, nu), sjk.scale_poly_left(&c));
                    }
                    // a₁ = σʲσᵏ { ½ e_j^μ δ_ν(e_k^ν) + e_j^ν δ_ν(e_k^μ)
                    //            + ½ δ_ν(e_j^ν) e_k^μ } ξ_μ
                    let mut c1 = NCPoly::zero(t);
                    for nu in Idx2::BOTH {
                        c1 = &c1 + &(f.entry(j, mu) * &dw(f.entry(k, nu), nu)).scale(&half);
                        c1 = &c1 + &(f.entry(j, nu) * &dw(f.entry(k, mu), nu));
                        c1 = &c1 + &(&dw(f.entry(j, nu), nu) * f.entry(k, mu)).scale(&half);
                    }
                    a1.add_term(xi_key(mu), sjk.scale_poly_left(&c1));

                    // a₀ = σʲσᵏ { ¼ δ_μ(e_j^μ) δ_ν(e_k^ν) + ½ e_j^μ … }
                    for nu in Idx2::BOTH {
                        let first =
                            (&dw(f.entry(j, mu), mu) * &dw(f.entry(k, nu), nu)).scale(&quarter);
                        let second_arg = if corrected {
                            dw(&dw(f.entry(k, nu), nu), mu)
                        } else {
                            dw(f.entry(k, nu), nu)
                        };
                        let second = (f.entry(j, mu) * &second_arg).scale(&half);
                        a0.add_term(SymKey::new(0, 0, 0), sjk.scale_poly_left(&(&first + &second)));
                    }
                }
            }
        }
        ASymbols { a2, a1, a0 }
    }
}

/// The parametrix data for one frame: the symbols of the squared operator
/// and the recursion output b₀, b₁, b₂.
#[derive(Clone, Debug)]
pub struct Parametrix {
    pub a: ASymbols,
    pub b0: Symbol,
    pub b1: Symbol,
    pub b2: Symbol,
}

impl Parametrix {
    pub fn build(f: &Frame, w: &DeltaWeights) -> Result<Parametrix> {
        let a = ASymbols::by_composition(f, w)?;
        let (b0, b1, b2) = parametrix_b(&a, w)?;
        Ok(Parametrix { a, b0, b1, b2 })
    }
}

/// Runs the recursion
/// `b₀ = (a₂+1)⁻¹`,
/// `b₁ = −(b₀a₁b₀ + ∂₁(b₀)δ₁(a₂)b₀ + ∂₂(b₀)δ₂(a₂)b₀)`,
/// `b₂ = −(b₀a₀b₀ + b₁a₁b₀ + ∂₁(b₀)δ₁(a₁)b₀ + ∂₂(b₀)δ₂(a₁)b₀`
/// `      + ∂₁(b₁)δ₁(a₂)b₀ + ∂₂(b₁)δ₂(a₂)b₀ + ½∂₁₁(b₀)δ₁²(a₂)b₀`
/// `      + ½∂₂₂(b₀)δ₂²(a₂)b₀ + ∂₁₂(b₀)δ₁₂(a₂)b₀)`.
pub fn parametrix_b(a: &ASymbols, w: &DeltaWeights) -> Result<(Symbol, Symbol, Symbol)> {
    let t = a.a2.trunc();
    let one = Symbol::identity(t);
    let b0 = (&a.a2 + &one).perturb_inverse()?;
    let half = GaussRat::ratio(1, 2);

    let mul3 = |x: &Symbol, y: &Symbol, z: &Symbol| -> Result<Symbol> {
        x.try_mul(y)?.try_mul(z)
    };

    let mut b1 = mul3(&b0, &a.a1, &b0)?;
    for dir in Idx2::BOTH {
        b1 = &b1 + &mul3(&b0.d_xi(dir), &a.a2.delta_w(dir, w), &b0)?;
    }
    let b1 = -&b1;

    let mut b2 = mul3(&b0, &a.a0, &b0)?;
    b2 = &b2 + &mul3(&b1, &a.a1, &b0)?;
    for dir in Idx2::BOTH {
        b2 = &b2 + &mul3(&b0.d_xi(dir), &a.a1.delta_w(dir, w), &b0)?;
        b2 = &b2 + &mul3(&b1.d_xi(dir), &a.a2.delta_w(dir, w), &b0)?;
        // ½ ∂ᵢᵢ(b₀) δᵢ²(a₂) b₀
        let dxx = b0.d_xi(dir).d_xi(dir);
        let dxx_a = a.a2.delta_w(dir, w).delta_w(dir, w);
        b2 = &b2 + &mul3(&dxx, &dxx_a, &b0)?.scale(&half);
    }
    let d12 = b0.d_xi(Idx2::One).d_xi(Idx2::Two);
    let d12_a = a.a2.delta_w(Idx2::One, w).delta_w(Idx2::Two, w);
    b2 = &b2 + &mul3(&d12, &d12_a, &b0)?;
    let b2 = -&b2;

    Ok((b0, b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalg::NCWord;

    fn w() -> DeltaWeights {
        DeltaWeights::default()
    }

    #[test]
    fn flat_dirac_symbol() {
        let f = Frame::flat(2);
        let s = dirac_symbol(&f, &w());
        let t = 2;
        let mut expected = Symbol::zero(t);
        expected.add_term(SymKey::new(1, 0, 0), Mat2::sigma(1, t));
        expected.add_term(SymKey::new(0, 1, 0), Mat2::sigma(2, t));
        assert_eq!(s, expected);
    }

    #[test]
    fn delta_compose_squares_to_xi_squared() {
        // σ(δ₁)∘σ(δ₁) = ξ₁².
        let t = 2;
        let mut p = DiffOp2::new(t);
        p.set(1, 0, Mat2::identity(t));
        let s = compose_diffops(&p, &p, &w()).unwrap();
        assert_eq!(
            s,
            Symbol::from_term(SymKey::new(2, 0, 0), Mat2::identity(t))
        );
    }

    #[test]
    fn compose_produces_one_leibniz_term() {
        // σ(e·δ₁)∘σ(f·δ₁) = e·f·ξ₁² + e·δ₁(f)·ξ₁ for generator coefficients.
        let t = 2;
        let e = NCPoly::gen(Gen::h(Idx2::One, Idx2::One), t);
        let fpoly = NCPoly::gen(Gen::h(Idx2::Two, Idx2::Two), t);
        let mut p = DiffOp2::new(t);
        p.set(1, 0, Mat2::scalar(e.clone()));
        let mut q = DiffOp2::new(t);
        q.set(1, 0, Mat2::scalar(fpoly.clone()));
        let s = compose_diffops(&p, &q, &w()).unwrap();

        let mut expected = Symbol::zero(t);
        expected.add_term(SymKey::new(2, 0, 0), Mat2::scalar(&e * &fpoly));
        expected.add_term(
            SymKey::new(1, 0, 0),
            Mat2::scalar(&e * &fpoly.apply_delta(Idx2::One)),
        );
        assert_eq!(s, expected);
    }

    #[test]
    fn order_overflow_is_rejected() {
        let t = 2;
        let mut p = DiffOp2::new(t);
        p.set(2, 0, Mat2::identity(t));
        let mut q = DiffOp2::new(t);
        q.set(1, 0, Mat2::identity(t));
        assert!(matches!(
            compose_diffops(&p, &q, &w()),
            Err(Error::OrderOverflow { .. })
        ));
    }

    #[test]
    fn flat_a_symbols() {
        let f = Frame::flat(2);
        let a = ASymbols::by_composition(&f, &w()).unwrap();
        let t = 2;
        let mut expected_a2 = Symbol::zero(t);
        expected_a2.add_term(SymKey::new(2, 0, 0), Mat2::identity(t));
        expected_a2.add_term(SymKey::new(0, 2, 0), Mat2::identity(t));
        assert_eq!(a.a2, expected_a2);
        assert!(a.a1.is_zero());
        assert!(a.a0.is_zero());
    }

    #[test]
    fn closed_form_matches_composition_order_by_order() {
        let f = Frame::generic(2);
        let composed = ASymbols::by_composition(&f, &w()).unwrap();
        let closed = ASymbols::closed_form(&f, &w());
        for d in 0..=2u8 {
            assert_eq!(closed.a2.eps_part(d), composed.a2.eps_part(d), "a2 at order {d}");
            assert_eq!(closed.a1.eps_part(d), composed.a1.eps_part(d), "a1 at order {d}");
            assert_eq!(closed.a0.eps_part(d), composed.a0.eps_part(d), "a0 at order {d}");
        }
    }

    #[test]
    fn closed_form_matches_composition_with_rescaled_deltas() {
        let f = Frame::generic(2);
        let wts = DeltaWeights::rescaled_second(GaussRat::ratio(3, 7));
        let composed = ASymbols::by_composition(&f, &wts).unwrap();
        let closed = ASymbols::closed_form(&f, &wts);
        assert_eq!(closed.a2, composed.a2);
        assert_eq!(closed.a1, composed.a1);
        assert_eq!(closed.a0, composed.a0);
    }

    #[test]
    fn uncorrected_zero_order_differs_exactly_by_known_slip() {
        let f = Frame::generic(2);
        let composed = ASymbols::by_composition(&f, &w()).unwrap();
        let uncorrected = ASymbols::closed_form_uncorrected(&f, &w());
        assert_eq!(uncorrected.a2, composed.a2);
        assert_eq!(uncorrected.a1, composed.a1);
        // The difference is ½ σʲσᵏ e_j^μ (δ_ν(e_k^ν) − δ_μδ_ν(e_k^ν)).
        let diff = &uncorrected.a0 - &composed.a0;
        assert!(!diff.is_zero());
        let corrected = ASymbols::closed_form(&f, &w());
        assert_eq!(corrected.a0, composed.a0);
    }

    #[test]
    fn flat_parametrix_is_u_only() {
        let f = Frame::flat(2);
        let p = Parametrix::build(&f, &w()).unwrap();
        assert_eq!(p.b0, Symbol::u_identity(2));
        assert!(p.b1.is_zero());
        assert!(p.b2.is_zero());
    }

    #[test]
    fn b0_linear_order_is_minus_u_a2_u() {
        let f = Frame::generic(2);
        let p = Parametrix::build(&f, &w()).unwrap();
        let u = Symbol::u_identity(2);
        let expected = -&u.try_mul(&p.a.a2.eps_part(1)).unwrap().try_mul(&u).unwrap();
        assert_eq!(p.b0.eps_part(1), expected);
    }

    #[test]
    fn b2_terms_are_uniformly_of_parametrix_order() {
        let f = Frame::generic(2);
        let p = Parametrix::build(&f, &w()).unwrap();
        for (k, _) in p.b2.terms() {
            // order −4 exactly, which gives plane integrability:
            // m ≥ (k₁+k₂+3)/2.
            assert_eq!(k.nominal_order(), -4, "term {k:?}");
            assert!(2 * k.m >= k.k1 + k.k2 + 3);
        }
        for (k, _) in p.b1.terms() {
            assert_eq!(k.nominal_order(), -3, "term {k:?}");
        }
        // Every b₂ word carries exactly two derivatives.
        for (_, c) in p.b2.terms() {
            for r in 0..2 {
                for cc in 0..2 {
                    for (word, _) in c.entry(r, cc).terms() {
                        assert_eq!(word.total_derivs(), 2);
                    }
                }
            }
        }
    }

    #[test]
    fn b2_word_count_is_in_expected_range() {
        let f = Frame::generic(2);
        let p = Parametrix::build(&f, &w()).unwrap();
        let n = p.b2.num_word_terms();
        assert!(
            (1_000..=10_000).contains(&n),
            "b2 carries {n} stored words"
        );
    }

    #[test]
    fn parametrix_identity_up_to_smoothing_order() {
        // (b₀+b₁+b₂) ∘ (σ(D²)+1) = 1 + terms of decay ≤ −3, per
        // perturbation order.
        let f = Frame::generic(2);
        let p = Parametrix::build(&f, &w()).unwrap();
        let b = &(&p.b0 + &p.b1) + &p.b2;
        let full_a = &(&(&p.a.a2 + &p.a.a1) + &p.a.a0) + &Symbol::identity(2);
        let composed = b.compose(&full_a, &w(), 2).unwrap();
        let defect = &composed - &Symbol::identity(2);
        for d in 0..=2u8 {
            let part = defect.eps_part(d);
            assert!(
                part.decay_bound() <= -3,
                "order-{d} defect decays like |ξ|^{}",
                part.decay_bound()
            );
        }
    }

    #[test]
    fn generic_dirac_zero_order_part() {
        // Zero-order part of the symbol is ½ σʲ (δ₁(e_j¹) + δ₂(e_j²)).
        let f = Frame::generic(2);
        let s = dirac_symbol(&f, &w());
        let zero = s.xi_degree_part(0);
        let t = 2;
        let mut expected = Symbol::zero(t);
        let half = GaussRat::ratio(1, 2);
        for j in Idx2::BOTH {
            let mut c = NCPoly::zero(t);
            for mu in Idx2::BOTH {
                c = &c + &f.entry(j, mu).apply_delta(mu);
            }
            expected.add_term(
                SymKey::new(0, 0, 0),
                Mat2::sigma_dir(j, t).scale_poly_left(&c.scale(&half)),
            );
        }
        assert_eq!(zero, expected);

        let one_word = NCWord::single(Gen::h(Idx2::One, Idx2::One).with_deriv(1, 0));
        let coeff = zero
            .terms()
            .next()
            .unwrap()
            .1
            .entry(0, 1)
            .coeff(&one_word);
        assert_eq!(coeff, GaussRat::ratio(1, 2));
    }
}
