use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no reference translation for sentence {0}")]
    MissingReference(u64),

    #[error("n-best list for sentence {0} is empty")]
    EmptyList(u64),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("weight vector has {found} entries, feature index has {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite objective or gradient at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
