use std::path::PathBuf;

/// Errors raised by the estimation pipeline and its I/O layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: LoadError,
    },

    #[error("ground truth has {actual} values but the recording yields {expected} windows")]
    Alignment { expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Problems found while parsing a recording, truth, or config file.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("missing `# fs=<hz>` metadata line before the header")]
    MissingSampleRate,

    #[error("line {line}: bad sample rate `{value}`")]
    BadSampleRate { line: usize, value: String },

    #[error("missing column `{0}`")]
    MissingColumn(&'static str),

    #[error("line {line}: non-numeric value `{value}` in column `{column}`")]
    NotNumeric {
        line: usize,
        column: String,
        value: String,
    },

    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("no samples")]
    Empty,

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
