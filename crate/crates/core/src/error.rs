use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("problem size must be at least 1")]
    EmptyProblem,
    #[error("invalid state ({i}, {j}) for n = {n}")]
    InvalidState { n: usize, i: usize, j: usize },
    #[error("radius {k} outside [1..{n}]")]
    InvalidRadius { n: usize, k: usize },
    #[error("ill-formed ratio: a denominator binomial is zero")]
    ZeroDenominator,
    #[error("ratio {0} exceeds 1 and is not a probability")]
    NotAProbability(f64),
    #[error("bit string length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid bit string: {0}")]
    InvalidBits(String),
    #[error("portfolio is empty for n = {0}")]
    EmptyPortfolio(usize),
    #[error("unsupported setting: {0}")]
    UnsupportedSetting(String),
    #[error("policy has no radius for {0}")]
    MissingPolicyEntry(String),
    #[error("policy over {found} states cannot drive {expected}")]
    PolicyMismatch { expected: String, found: String },
    #[error("n = {n} exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("matrix is singular (no pivot above {0:e})")]
    SingularMatrix(f64),
    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("level {level} did not converge within {max_sweeps} sweeps")]
    NoConvergence { level: usize, max_sweeps: usize },
    #[error("no radius in the portfolio can leave level {0}")]
    NoImprovingRadius(usize),
    #[error("total expected runtime is infinite although the portfolio contains radius 1")]
    InfiniteTotal,
    #[error("{0}")]
    Unsupported(String),
}
