//! Error types shared across the pipeline.

use std::path::PathBuf;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-contract input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Iterative linear algebra failed to converge.
    #[error("eigendecomposition did not converge within {iterations} iterations")]
    NumericalFailure { iterations: usize },

    /// An SPD operation met an eigenvalue at or below the singularity cutoff.
    #[error("singular matrix: eigenvalue {value:.6e} at or below tolerance {tolerance:.6e}")]
    SingularMatrix { value: f64, tolerance: f64 },

    /// A planted effect drives the case-group covariance out of the SPD cone.
    #[error("planted effect at region pair ({i}, {j}) makes the case covariance non-SPD")]
    InvalidEffect { i: usize, j: usize },

    /// A stratified split or fold assignment cannot satisfy its contract.
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// A metric is undefined for the given inputs (e.g. single-class AUROC).
    #[error("undefined: {0}")]
    Undefined(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    /// All raw importances are identical; z-scores are undefined.
    #[error("degenerate importances: zero variance across features")]
    DegenerateImportances,

    /// Filesystem failure, tagged with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but does not match its expected format.
    #[error("malformed file {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
