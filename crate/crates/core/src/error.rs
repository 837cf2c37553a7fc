use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("argument outside the valid domain: {0}")]
    OutOfDomain(String),

    #[error("unsupported circuit: {0}")]
    Unsupported(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A requested measurement branch has (numerically) zero probability.
    #[error("impossible branch (probability {0:e})")]
    ImpossibleBranch(f64),

    /// No shot survived postselection, so nothing can be estimated.
    #[error("estimation impossible: no postselected shots out of {0}")]
    EstimationImpossible(u64),

    /// Every qubit of a lossy region was lost.
    #[error("cannot disconnect region: no qubit survived")]
    DisconnectImpossible,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
