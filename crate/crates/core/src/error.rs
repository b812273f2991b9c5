use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("invalid `{field}`: {message}")]
    Validation { field: &'static str, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cannot parse figure filename {0:?}")]
    FigureName(String),

    #[error("image decode failed: {0}")]
    Decode(String),

    #[error("bad tensor file: {0}")]
    Format(String),

    #[error("{predictions} prediction lines for {gold} gold records")]
    Alignment { predictions: usize, gold: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(field: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            field,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
