//! Exact symbolic engine for the spectral geometry of the noncommutative
//! 2-torus with a perturbed frame.
//!
//! The engine reproduces, order by order in the perturbation parameter, the
//! parametrix symbols of the squared Dirac-type operator, the volume
//! functional, the local and chiral curvature elements, the trace identity
//! behind the Gauss–Bonnet statement, and the orientation-cycle checks — all
//! in exact Gaussian-rational arithmetic, cross-validated against the
//! commutative torus.

#![forbid(unsafe_code)]

pub mod classical;
pub mod clifford;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod integrals;
pub mod ncalg;
pub mod orientation;
pub mod parametrix;
pub mod scalar;
pub mod symcalc;
pub mod tracecheck;

pub use clifford::Mat2;
pub use error::{Error, Result};
pub use ncalg::{Gen, GenBase, Idx2, NCPoly, NCWord};
pub use scalar::GaussRat;
pub use symcalc::{DeltaWeights, SymKey, Symbol};
