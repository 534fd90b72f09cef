use thiserror::Error;

use crate::stationary::ParticleMeasure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular (|det| = {det:e} below tolerance)")]
    SingularMatrix { det: f64 },

    #[error("alphabet sizes differ: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("window [{start}, {end}] is outside the sampled range 0..{len}")]
    OutOfRange { start: i64, end: i64, len: usize },

    #[error("matrix {index} is not diagonal (off-diagonal mass {off_diagonal:e})")]
    NotDiagonal { index: usize, off_diagonal: f64 },

    #[error("enumeration needs {needed} word evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("measure is not normalized (total mass {total})")]
    UnnormalizedMeasure { total: f64 },

    #[error(
        "stationary solver did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NotConverged {
        best: Box<ParticleMeasure>,
        residual: f64,
        iterations: usize,
    },

    #[error("singular value gap too small to resolve a direction (ratio {ratio})")]
    DegenerateGap { ratio: f64 },

    #[error("word does not lie in the cylinder Z_n at the given origin")]
    WordNotInCylinder,

    #[error("only {returns} returns to the cylinder observed (need at least {required})")]
    InsufficientReturns { returns: usize, required: usize },

    #[error("perturbation leaves GL(2): atom {index} has |det| = {det:e}")]
    PerturbationLeavesGL { index: usize, det: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numeric failures as opposed to malformed input or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::NotConverged { .. }
                | Error::DegenerateGap { .. }
                | Error::InsufficientReturns { .. }
                | Error::PerturbationLeavesGL { .. }
                | Error::BudgetExceeded { .. }
        )
    }
}
