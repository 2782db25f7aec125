use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{algorithm} did not converge within {iterations} iterations")]
    ConvergenceFailure {
        algorithm: &'static str,
        iterations: usize,
    },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("eigenvector entry {index} is not strictly positive")]
    NonpositiveEigenvector { index: usize },

    #[error("vector is not unit length (norm {norm})")]
    NonUnitVector { norm: f64 },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("graph has no edges")]
    NoEdges,

    #[error("every edge has a zero-norm endpoint")]
    AllEdgesSkipped,

    #[error("column {column} is not strictly positive")]
    NonpositiveColumn { column: usize },

    #[error("cone vector entry {index} is not strictly positive")]
    NonpositiveEntry { index: usize },

    #[error("vector is not an eigenvector of the matrix (residual {residual})")]
    EigenvectorMismatch { residual: f64 },

    #[error("all {samples} samples were degenerate")]
    AllSamplesDegenerate { samples: usize },

    #[error("series has {len} entries, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("feature ratio underflowed before a rate could be fitted")]
    RatioUnderflow,

    #[error("feature entry exceeded 1e300 at layer {layer}")]
    NumericalOverflow { layer: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("insufficient runs: {0}")]
    InsufficientRuns(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// Process exit code used by the command-line tool.
    ///
    /// 2 for parse/shape problems, 3 for numerical failures, 4 for
    /// insufficient input.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            ShapeMismatch(_)
            | NonFinite { .. }
            | InvalidParameter(_)
            | Parse { .. }
            | LengthMismatch { .. }
            | NonUnitVector { .. }
            | NonpositiveEigenvector { .. }
            | NonpositiveColumn { .. }
            | NonpositiveEntry { .. }
            | DisconnectedGraph
            | Io { .. } => 2,
            ConvergenceFailure { .. }
            | DegenerateSpectrum(_)
            | NumericalOverflow { .. }
            | RatioUnderflow
            | EigenvectorMismatch { .. }
            | ZeroMatrix
            | AllSamplesDegenerate { .. }
            | DegenerateInput(_) => 3,
            NoEdges | AllEdgesSkipped | SeriesTooShort { .. } | InsufficientRuns(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
