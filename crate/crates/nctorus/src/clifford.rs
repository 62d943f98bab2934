//! 2×2 matrix layer over the free algebra: Pauli matrices, spinor traces and
//! the grading.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde_json::{json, Value};

use crate::error::Result;
use crate::ncalg::{Idx2, NCPoly};
use crate::scalar::GaussRat;

/// Dense 2×2 matrix with noncommutative-polynomial entries.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Mat2 {
    e: [[NCPoly; 2]; 2],
}

impl Mat2 {
    pub fn new(e: [[NCPoly; 2]; 2]) -> Mat2 {
        let t = e[0][0].trunc();
        assert!(
            e.iter().flatten().all(|p| p.trunc() == t),
            "matrix entries must share a truncation order"
        );
        Mat2 { e }
    }

    pub fn zero(trunc: u8) -> Mat2 {
        Mat2 {
            e: [
                [NCPoly::zero(trunc), NCPoly::zero(trunc)],
                [NCPoly::zero(trunc), NCPoly::zero(trunc)],
            ],
        }
    }

    pub fn identity(trunc: u8) -> Mat2 {
        let mut m = Mat2::zero(trunc);
        m.e[0][0] = NCPoly::one(trunc);
        m.e[1][1] = NCPoly::one(trunc);
        m
    }

    /// Scalar matrix `p·1`.
    pub fn scalar(p: NCPoly) -> Mat2 {
        let t = p.trunc();
        let mut m = Mat2::zero(t);
        m.e[0][0] = p.clone();
        m.e[1][1] = p;
        m
    }

    /// The hermitian Pauli matrix σ¹, σ² or σ³ (`σ³ = diag(1, −1)`).
    pub fn sigma(j: u8, trunc: u8) -> Mat2 {
        let one = NCPoly::one(trunc);
        let i = NCPoly::constant(GaussRat::i(), trunc);
        let zero = || NCPoly::zero(trunc);
        match j {
            1 => Mat2 {
                e: [[zero(), one.clone()], [one, zero()]],
            },
            2 => Mat2 {
                e: [[zero(), -&i], [i, zero()]],
            },
            3 => Mat2 {
                e: [[one.clone(), zero()], [zero(), -&one]],
            },
            _ => panic!("sigma index must be 1, 2 or 3"),
        }
    }

    pub fn sigma_dir(j: Idx2, trunc: u8) -> Mat2 {
        Mat2::sigma(j.as_u8(), trunc)
    }

    pub fn trunc(&self) -> u8 {
        self.e[0][0].trunc()
    }

    pub fn entry(&self, r: usize, c: usize) -> &NCPoly {
        &self.e[r][c]
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().flatten().all(NCPoly::is_zero)
    }

    pub fn num_word_terms(&self) -> usize {
        self.e.iter().flatten().map(NCPoly::num_terms).sum()
    }

    /// Spinor trace `M₁₁ + M₂₂`.
    pub fn trace2(&self) -> NCPoly {
        &self.e[0][0] + &self.e[1][1]
    }

    /// Chiral trace: trace of `σ³·M`, i.e. `M₁₁ − M₂₂`.
    pub fn chiral_trace2(&self) -> NCPoly {
        &self.e[0][0] - &self.e[1][1]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2 {
            e: [
                [self.e[0][0].clone(), self.e[1][0].clone()],
                [self.e[0][1].clone(), self.e[1][1].clone()],
            ],
        }
    }

    /// Left-multiplies every entry by `p` (entry order: `p` first).
    pub fn scale_poly_left(&self, p: &NCPoly) -> Mat2 {
        self.map(|q| p * q)
    }

    pub fn scale(&self, c: &GaussRat) -> Mat2 {
        self.map(|q| q.scale(c))
    }

    pub fn map(&self, f: impl Fn(&NCPoly) -> NCPoly) -> Mat2 {
        Mat2::new([
            [f(&self.e[0][0]), f(&self.e[0][1])],
            [f(&self.e[1][0]), f(&self.e[1][1])],
        ])
    }

    pub fn try_map(&self, f: impl Fn(&NCPoly) -> Result<NCPoly>) -> Result<Mat2> {
        Ok(Mat2::new([
            [f(&self.e[0][0])?, f(&self.e[0][1])?],
            [f(&self.e[1][0])?, f(&self.e[1][1])?],
        ]))
    }

    pub fn apply_delta(&self, dir: Idx2) -> Mat2 {
        self.map(|p| p.apply_delta(dir))
    }

    pub fn eps_part(&self, d: u8) -> Mat2 {
        self.map(|p| p.eps_part(d))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "entries": [
                [self.e[0][0].to_json(), self.e[0][1].to_json()],
                [self.e[1][0].to_json(), self.e[1][1].to_json()],
            ]
        })
    }
}

impl Add for &Mat2 {
    type Output = Mat2;
    fn add(self, rhs: &Mat2) -> Mat2 {
        Mat2::new([
            [&self.e[0][0] + &rhs.e[0][0], &self.e[0][1] + &rhs.e[0][1]],
            [&self.e[1][0] + &rhs.e[1][0], &self.e[1][1] + &rhs.e[1][1]],
        ])
    }
}

impl Sub for &Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: &Mat2) -> Mat2 {
        Mat2::new([
            [&self.e[0][0] - &rhs.e[0][0], &self.e[0][1] - &rhs.e[0][1]],
            [&self.e[1][0] - &rhs.e[1][0], &self.e[1][1] - &rhs.e[1][1]],
        ])
    }
}

impl Neg for &Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.map(|p| -p)
    }
}

/// Matrix product; the left factor's entries multiply from the left.
impl Mul for &Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: &Mat2) -> Mat2 {
        let mut out = Mat2::zero(self.trunc());
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = NCPoly::zero(self.trunc());
                for k in 0..2 {
                    acc = &acc + &(&self.e[r][k] * &rhs.e[k][c]);
                }
                out.e[r][c] = acc;
            }
        }
        out
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1]
        )
    }
}
