//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by dataset ingestion, criterion evaluation and fitting.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument was rejected during validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector dimensions are inconsistent with each other.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The sample covariance cannot be inverted, so the classical SIR
    /// criterion (and estimator) is undefined.
    #[error("SIR criterion undefined: covariance not invertible ({0})")]
    SingularCovariance(String),

    /// The loading update of the alternating least-squares iteration hit a
    /// singular normal matrix. This is the expected terminal state of the
    /// degenerate ridge iteration once the basis has collapsed.
    #[error("C-update singular: A has collapsed or the whitened basis is rank-deficient")]
    CUpdateSingular,

    /// The ridge minimizer exists (it is the zero matrix), so no strictly
    /// better pair can be constructed.
    #[error("minimizer exists; no counterexample")]
    MinimizerExists,

    /// The covariance does not have enough positive eigenvalues to build a
    /// rank-d basis.
    #[error("insufficient covariance rank: rank {rank} < requested dimension {d}")]
    InsufficientRank { rank: usize, d: usize },

    /// A basis argument does not have full column rank where one is required.
    #[error("rank-deficient basis: {0}")]
    RankDeficientBasis(String),

    /// Failure while reading or writing a file.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV content; `line` is 1-based and includes the header.
    #[error("CSV error at line {line}: {msg}")]
    Csv { line: u64, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
