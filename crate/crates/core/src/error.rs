use thiserror::Error;

/// Errors raised by the hashing pipeline.
///
/// The variants are grouped by who is at fault: [`Error::Input`] and
/// [`Error::Format`] point at bad data or files, [`Error::Contract`] and
/// [`Error::NotSubmodular`] at a caller breaking an operation's
/// preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("block energy is not submodular: pairwise term ({i}, {j}) = {value} > 0")]
    NotSubmodular { i: u32, j: u32, value: i64 },

    #[error("objective undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for errors caused by bad user data rather than misuse of the API.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Parse { .. } | Error::Format(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
