use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {position} in {field}: {message}")]
    Syntax {
        field: String,
        position: usize,
        message: String,
    },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("resource bound exceeded: {bound} (limit {limit})")]
    Resource { bound: String, limit: u64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("no surviving ray reaches depth {depth}")]
    NoSurvivingRay { depth: u32 },

    #[error("source is not connected to the sink set")]
    Disconnected,
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn syntax(field: impl Into<String>, position: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            field: field.into(),
            position,
            message: message.into(),
        }
    }

    /// Resource and convergence failures are distinguished from bad input
    /// so callers can map them to different exit statuses.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
