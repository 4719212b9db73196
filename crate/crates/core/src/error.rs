use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("linear program infeasible or unbounded: {0}")]
    Infeasible(String),

    #[error("transport solver did not converge after {0} pivots")]
    NoConvergence(usize),

    #[error("test function is not 1-Lipschitz: |phi(a)-phi(b)| = {gap} > |a-b| = {distance}")]
    NotLipschitz { gap: f64, distance: f64 },

    #[error("first marginals of the couplings differ")]
    MarginalMismatch,

    #[error("time {0} outside the horizon")]
    TimeOutOfRange(f64),

    #[error("node {node} outside the grid with {steps} steps")]
    NodeOutOfRange { node: usize, steps: usize },

    #[error("tuple enumeration of {work} terms exceeds the cap of {cap}")]
    CombinatorialCap { work: u128, cap: u128 },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("invalid needle package: {0}")]
    InvalidNeedle(String),

    #[error("multiplier arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("multiplier atom at t = {0} does not lie on a grid node")]
    OffGridAtom(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
