//! Error types shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A value violated an operation's preconditions (non-finite input,
    /// empty stage list, bad grid, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A mathematically undefined request (fs > fp, f <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The network solve has no finite solution at the requested point.
    #[error("singular network: {0}")]
    Singular(String),

    /// An admittance extremum fell on the grid boundary or was not found.
    #[error("extremum detection failed: {0}")]
    Extremum(String),

    /// Passband/metrics extraction failed.
    #[error("band extraction failed: {0}")]
    Band(String),

    /// Fit initialization could not locate both resonances.
    #[error("fit initialization failed: {0}")]
    InitFailure(String),

    /// Synthesis found no usable passband from any start.
    #[error("synthesis failed: {0}")]
    SynthesisFailure(String),

    /// Text input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A config document violated the schema.
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input text or configs, as opposed
    /// to domain failures on well-formed input. CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Schema { .. })
    }
}
