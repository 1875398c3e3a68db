use thiserror::Error;

/// Errors raised by the pigment model, solvers and edits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate mixture: all mixing weights are zero")]
    DegenerateMixture,

    /// Fewer than four affinely independent colors. Carries the distinct colors found.
    #[error("degenerate convex hull ({} distinct colors)", .colors.len())]
    DegenerateHull { colors: Vec<[f64; 3]> },

    #[error("dictionary has {available} entries but {requested} pigments were requested")]
    InsufficientDictionary { requested: usize, available: usize },

    /// The bounded minimizer could not make progress. `best` is the best iterate seen.
    #[error("solver failure: {reason}")]
    SolverFailure {
        reason: String,
        best: Vec<f64>,
        value: f64,
    },

    #[error("dictionary format: {0}")]
    Dictionary(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
