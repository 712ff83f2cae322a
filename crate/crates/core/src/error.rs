use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis dimension {dim} exceeds the limit of {limit} states")]
    BasisTooLarge { dim: usize, limit: usize },

    #[error("state {0} is not part of the basis")]
    StateOutOfRange(String),

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("rotation angle undefined: both couplings {0} vanish")]
    UndefinedAngle(String),

    #[error("matrix is not hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("photon cutoff did not converge below nmax = {cap}")]
    NonConvergence { cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures caused by the numerics rather than by the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
