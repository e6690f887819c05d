use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("SEM is not solvable: 1 - kappa * f.tau = {det:e}")]
    Unsolvable { det: f64 },
    #[error("SEM is not stable for iterative sampling: |kappa * f.tau| = {gain} >= 1")]
    Unstable { gain: f64 },
    #[error("fixed-point iteration did not converge after {iters} iterations")]
    NonConvergence {
        iters: usize,
        last_x: Vec<f64>,
        last_y: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("the zero vector has no null-space basis")]
    ZeroVector,
    #[error("matrix is not symmetric positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("augmentation is not outcome invariant (relative deviation {deviation:e})")]
    NotInvariant { deviation: f64 },
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("need at least two distinct levels, found {0}")]
    TooFewLevels(usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("discrete SEM did not reach a fixed point within {0} iterations (label function depends on color?)")]
    NoFixedPoint(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
