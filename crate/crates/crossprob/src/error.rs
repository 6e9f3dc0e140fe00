use thiserror::Error;

/// Library error type.
///
/// The two variants mirror the failure classes the command-line tool
/// reports: malformed or inconsistent input versus a numerical failure
/// inside a computation. An impossible boundary configuration is *not*
/// an error; it yields an exact zero probability.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
