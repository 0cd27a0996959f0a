use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value violates the invariant of the type it populates.
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },

    /// The gradient is undefined where a Fisher term vanishes.
    #[error("CRLB is singular at ({x}, {y}): {axis} Fisher information is zero")]
    Singular { x: f64, y: f64, axis: char },

    #[error("no convergence within {iterations} iterations (bracket width {width})")]
    NoConvergence { iterations: usize, width: f64 },
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
