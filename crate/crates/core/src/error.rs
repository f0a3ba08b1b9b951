use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in block ({row}, {col}): {detail}")]
    Dimension {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("matrix is singular at shift {re:+.6e}{im:+.6e}i")]
    Singular { re: f64, im: f64 },

    #[error(
        "eigensolver did not converge after {iterations} restarts (best residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("continuation break: nearest candidate is {distance:.3e} hartree away")]
    ContinuationBreak { distance: f64 },

    #[error("found {found} bound states, need {needed}")]
    TooFewBoundStates { found: usize, needed: usize },

    #[error("missing orbital {0}")]
    MissingOrbital(String),

    #[error("potential evaluation failed at r = {r}: {detail}")]
    Potential { r: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
