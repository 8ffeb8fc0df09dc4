use std::io;
use std::path::PathBuf;

/// Errors raised by the radiomap library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input bytes do not follow the expected file layout.
    #[error("format error: {0}")]
    Format(String),

    /// A file payload is shorter or longer than its header declares.
    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    /// Numeric content is unusable (NaN, infinity, out of range).
    #[error("data error: {0}")]
    Data(String),

    /// An operation was applied in the wrong state (e.g. normalizing twice).
    #[error("state error: {0}")]
    State(String),

    /// Tensor or raster dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than bad arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_) | Error::Length { .. } | Error::Data(_) | Error::Io { .. }
        )
    }
}

macro_rules! bail_arg {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::Argument(format!($($arg)*)))
    };
}
pub(crate) use bail_arg;
