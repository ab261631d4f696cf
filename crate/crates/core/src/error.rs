use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bound undefined: discriminant {0} is negative")]
    BoundUndefined(f64),

    #[error("cheap-talk cutoff outside the support: c1 = {c1}, c2 = {c2}")]
    CutoffOutOfSupport { c1: f64, c2: f64 },

    #[error("profile count {count} exceeds cap {cap}; coarsen the grid or lower N")]
    ProfileCapExceeded { count: u128, cap: usize },

    #[error("count vector sums to {got}, expected {expected}")]
    CountMismatch { got: u64, expected: u64 },

    #[error("LP solver returned status {0}")]
    Solver(String),

    #[error("no real cutoffs: quadratic discriminant {0} is negative")]
    NoRealCutoffs(f64),

    #[error("root bracket failed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("variance mismatch: distribution {dist}, mechanism {mech}")]
    VarianceMismatch { dist: f64, mech: f64 },

    #[error("tensor quadrature limited to M <= 3 classes (got {0}); use Monte Carlo mode")]
    QuadratureDimension(usize),

    #[error("Newton failed to converge; best residual norms by start: {0}")]
    NoConvergence(String),

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("requested standard error unreachable: {0}")]
    SampleBudget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
