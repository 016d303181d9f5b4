use thiserror::Error;

/// Errors raised by the simulator and the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is outside its physical range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data does not satisfy an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    /// A byte buffer ended before a full record could be read.
    #[error("truncated record: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    /// The file does not start with the expected magic bytes.
    #[error("bad file header: {0}")]
    Header(String),

    /// A tag stream was not time ordered.
    #[error("stream out of order at record {index}: {timestamp} ps after {previous} ps")]
    Unordered {
        index: u64,
        previous: u64,
        timestamp: u64,
    },

    /// Least-squares fit could not be solved.
    #[error("fit failed: {reason} (residual rms {residual_rms})")]
    Fit { reason: String, residual_rms: f64 },

    /// Not enough photons were collected for a meaningful result.
    #[error("insufficient data: {0}")]
    Insufficient(String),

    /// An internal invariant (dead time, ordering) was violated.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
