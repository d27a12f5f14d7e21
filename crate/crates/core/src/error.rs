use thiserror::Error;

#[derive(Debug, Error)]
pub enum HaisError {
    /// A vector or matrix had the wrong size for the model it was given to.
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// The leapfrog integrator produced a non-finite gradient.
    #[error("non-finite gradient at position {position:?}")]
    NonFiniteDynamics { position: Vec<f64> },

    #[error("chain for particle {particle} failed at beta = {beta}: {source}")]
    ChainFailure {
        particle: usize,
        beta: f64,
        #[source]
        source: Box<HaisError>,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model file: {0}")]
    ModelFormat(String),
}

impl HaisError {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Self::DimensionMismatch {
            what: what.into(),
            expected,
            found,
        }
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Self::NonFiniteDynamics { .. } | Self::ChainFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, HaisError>;
