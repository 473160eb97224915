use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value while evaluating {0}")]
    NumericalOverflow(&'static str),
    #[error("smoothness estimate is zero (all rows are zero and lambda = 0)")]
    DegenerateSmoothness,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("iterate diverged at iteration {iteration}")]
    Divergence { iteration: u64 },
    #[error("enumeration of {outcomes} outcomes exceeds the guard of {limit}")]
    InstanceTooLarge { outcomes: u128, limit: u128 },
    #[error("empty history")]
    EmptyHistory,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
