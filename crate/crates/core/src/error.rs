use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A named field violates its domain constraint.
    #[error("invalid `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("beta = {beta} must exceed L_f / 2 = {half_lipschitz}")]
    BetaTooSmall { beta: f64, half_lipschitz: f64 },

    #[error("negative threshold {value} at index {index}")]
    NegativeThreshold { index: usize, value: f64 },

    #[error("power iteration did not converge after {iterations} iterations")]
    PowerIterationDiverged { iterations: usize },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("trace record {k} is inconsistent: {reason}")]
    InconsistentRecord { k: usize, reason: String },

    #[error("trace too short: {len} records, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("support has not stabilized within the recorded trace")]
    NotStabilized,

    #[error("epsilon schedule is not exactly geometric at iteration {k}")]
    NonGeometricSchedule { k: usize },

    #[error("parse error in {source_name} at line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}
