use thiserror::Error;

/// Errors surfaced by the symbolic engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("truncation orders differ: {left} vs {right}")]
    TruncationMismatch { left: u8, right: u8 },

    #[error("derivative guard exceeded on {gen}: total order {total} > limit {limit}")]
    DerivativeGuard { gen: String, total: u8, limit: u8 },

    #[error("leading part is not (1+|xi|^2)·1; normalize the symbol before inverting")]
    NotNormalized,

    #[error("divergent plane integral for term xi1^{k1} xi2^{k2} u^{m}: need m >= {need}")]
    DivergentTerm { k1: u32, k2: u32, m: u32, need: u32 },

    #[error("operator order overflow: composition of orders {left} and {right} exceeds 2")]
    OrderOverflow { left: u8, right: u8 },

    #[error("graded component (eps {eps}, derivs {derivs}) not covered by built relators")]
    ComponentNotCovered { eps: u8, derivs: u8 },

    #[error("relator dimension guard exceeded: component (eps {eps}, derivs {derivs}) has dimension {dim} > cap {cap}")]
    DimensionGuard { eps: u8, derivs: u8, dim: usize, cap: usize },

    #[error("pi powers differ: {left} vs {right}")]
    PiPowerMismatch { left: i32, right: i32 },

    #[error("frame is singular at grid point ({i}, {j})")]
    SingularFrame { i: usize, j: usize },

    #[error("calibration failed: computed linear term is not proportional to the reference expression")]
    Calibration,

    #[error("{0}")]
    Config(String),

    #[error("invalid fixture data: {0}")]
    Fixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
