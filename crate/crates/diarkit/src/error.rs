use std::path::PathBuf;

/// A type alias for `Result<T, Error>`.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the diarization engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying file I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Structurally valid input that violates a format invariant
    /// (inconsistent dimensions, unordered offsets, unknown labels).
    #[error("format error: {0}")]
    Format(String),

    /// An input that must be non-empty was empty.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Not enough data points to estimate the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Degenerate input (zero vector, constant scores, single class).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Dimension mismatch between model and data.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Numerical failure (non-finite likelihood, singular system).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid configuration detected before any processing.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code class for the CLI: 1 config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
